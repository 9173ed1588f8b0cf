"""
Generational search loop: seed, evaluate, mutate, merge, refill by fronts,
then re-train the surviving non-dominated set
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .archive import ParetoArchive
from .evaluation import EvaluationResult, EvaluationTask, run_tasks
from .individual import Individual
from .scenario import ScenarioPolicy
from .sorting import crowding_distance, crowding_reduce, dominates, non_dominated_sort
from ..cgpnet.mutation import mutate
from ..cgpnet.template import Template, default_template, seed_from_template
from ..multsim.library import MultiplierLibrary
from ..qengine.trainer import LabeledImages, TrainConfig
from ..utils.config import config
from ..utils.errors import ConfigurationError, IntegrityError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class SearchData:
    train: LabeledImages
    test: LabeledImages
    retrain: Optional[LabeledImages] = None

    def as_mapping(self) -> Dict[str, LabeledImages]:
        return {"train": self.train, "test": self.test, "retrain": self.retrain or self.train}

    @property
    def input_shape(self):
        return tuple(int(d) for d in self.train.features().shape[1:])

    @property
    def num_classes(self) -> int:
        return int(self.train.num_classes)


@dataclass(frozen=True)
class EvolutionSettings:
    pop_size: int = config.POP_SIZE
    generations: int = config.GENERATIONS
    p_arch: float = config.P_ARCH
    p_mult: float = config.P_MULT
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    retrain_cfg: Optional[TrainConfig] = field(
        default_factory=lambda: TrainConfig(epochs=config.EPOCHS_RETRAIN))
    train_subset: Optional[int] = None
    retrain_top_k: Optional[int] = config.RETRAIN_TOP_K
    workers: int = config.WORKERS
    seed: int = config.SEED
    template: Optional[Template] = None

    def validate(self) -> List[str]:
        problems = []
        if self.pop_size < 1:
            problems.append(f"pop_size must be >= 1, got {self.pop_size}")
        if self.generations < 0:
            problems.append(f"generations must be >= 0, got {self.generations}")
        for name in ("p_arch", "p_mult"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                problems.append(f"{name} must lie in [0, 1], got {value}")
        if self.train_subset is not None and self.train_subset < 1:
            problems.append(f"train_subset must be >= 1, got {self.train_subset}")
        if self.retrain_top_k is not None and self.retrain_top_k < 1:
            problems.append(f"retrain_top_k must be >= 1, got {self.retrain_top_k}")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        return problems


def select_survivors(merged: Sequence[Individual], size: int, objectives) -> List[Individual]:
    """Fill front by front; the front that does not fit is thinned by crowding distance.
    Every merged member gets its current rank and crowding, kept or not."""
    fronts = non_dominated_sort(merged, objectives)
    for rank, front in enumerate(fronts):
        for member, distance in zip(front, crowding_distance(front, objectives)):
            member.rank, member.crowding = rank, distance
    survivors: List[Individual] = []
    for front in fronts:
        if len(survivors) >= size:
            break
        if len(survivors) + len(front) <= size:
            survivors.extend(front)
        else:
            survivors.extend(crowding_reduce(front, len(survivors) + len(front) - size, objectives))
    return survivors


def check_elitism(merged: Sequence[Individual], survivors: Sequence[Individual], objectives) -> None:
    kept = {member.uid for member in survivors}
    for dropped in (m for m in merged if m.uid not in kept):
        for member in survivors:
            if dominates(dropped, member, objectives):
                logger.error(f"Refill discarded {dropped.label} which dominates survivor {member.label}")
                raise IntegrityError(f"{dropped.label} dominates kept {member.label}")


class Evolution:
    """One search run; `run()` returns the archive"""

    def __init__(self, settings: EvolutionSettings, policy: ScenarioPolicy, data: SearchData,
                 library: MultiplierLibrary, rng: np.random.Generator):
        problems = settings.validate()
        if problems:
            raise ConfigurationError("invalid evolution settings: " + "; ".join(problems))
        self.settings = settings
        self.policy = policy
        self.data = data
        self.library = library
        self.rng = rng
        self.template = settings.template or default_template(num_classes=data.num_classes)
        if self.template.num_classes != data.num_classes:
            raise ConfigurationError(f"template has {self.template.num_classes} classes, "
                                     f"dataset has {data.num_classes}")
        self.archive = ParetoArchive(objectives=policy.objectives)
        self.p_mult = policy.effective_p_mult(settings.p_mult)
        self._input_shape = data.input_shape
        self._datasets = data.as_mapping()
        self._next_uid = 0

    def _new_uid(self) -> int:
        uid = self._next_uid
        self._next_uid += 1
        return uid

    def _draw_subset(self) -> Optional[np.ndarray]:
        """One training subset shared by every candidate of a generation"""
        size, total = self.settings.train_subset, len(self.data.train.labels)
        if size is None or size >= total:
            return None
        return np.sort(self.rng.choice(total, size=size, replace=False))

    def _task(self, individual: Individual, subset, parent: Optional[Individual]) -> EvaluationTask:
        return EvaluationTask(
            uid=individual.uid, genotype=individual.genotype,
            model=self.library[individual.genotype.mult_index], train_cfg=self.settings.train_cfg,
            input_shape=self._input_shape, num_classes=self.data.num_classes, seed=self.settings.seed,
            subset=subset, start_weights=parent.weights if parent is not None else None,
            fresh_nodes=individual.genotype.reinit,
        )

    def _apply(self, individual: Individual, result: EvaluationResult) -> None:
        model = self.library[individual.genotype.mult_index]
        individual.fitness = result.fitness
        individual.mults = result.mults
        individual.mult_id = model.id
        individual.energy_pj = model.energy_per_op
        individual.weights = result.weights
        individual.layer_text = result.layer_text
        individual.failure = result.failure

    def _evaluate(self, individuals: List[Individual], parents: Dict[int, Individual]) -> None:
        subset = self._draw_subset()
        tasks = [self._task(ind, subset, parents.get(ind.parent_uid)) for ind in individuals]
        for individual, result in zip(individuals, run_tasks(tasks, self._datasets, self.settings.workers)):
            self._apply(individual, result)
            self.archive.add(individual)

    def _seed_population(self) -> List[Individual]:
        population = []
        for _ in range(self.settings.pop_size):
            uid = self._new_uid()
            genotype = seed_from_template(self.template, self.rng, len(self.library),
                                          mult_index=self.policy.fixed_index, lineage=f"c{uid}")
            population.append(Individual(uid=uid, genotype=genotype, generation=0))
        return population

    def _offspring(self, population: List[Individual], generation: int) -> List[Individual]:
        children = []
        for parent in population:
            uid = self._new_uid()
            genotype = mutate(parent.genotype, self.p_mult, self.rng, p_arch=self.settings.p_arch,
                              lineage=f"c{uid}")
            children.append(Individual(uid=uid, genotype=genotype, generation=generation,
                                       parent_uid=parent.uid))
        return children

    def retrain(self, front: List[Individual]) -> None:
        """Fine-tune the chosen members on the re-training set and record final accuracy"""
        cfg = self.settings.retrain_cfg
        if cfg is None:
            return
        chosen = [m for m in front if m.failure is None and m.weights is not None]
        chosen.sort(key=lambda m: -m.fitness.f1)
        if self.settings.retrain_top_k is not None:
            chosen = chosen[:self.settings.retrain_top_k]
        logger.info(f"Re-training {len(chosen)} of {len(front)} final candidates for {cfg.epochs} epochs")

        tasks = [EvaluationTask(
            uid=m.uid, genotype=m.genotype, model=self.library[m.genotype.mult_index], train_cfg=cfg,
            input_shape=self._input_shape, num_classes=self.data.num_classes, seed=self.settings.seed,
            data_key="retrain", start_weights=m.weights, stream=1,
        ) for m in chosen]
        for member, result in zip(chosen, run_tasks(tasks, self._datasets, self.settings.workers)):
            if result.failure is None:
                member.final_f1 = result.fitness.f1
                member.weights = result.weights
            else:
                logger.warning(f"[{member.label}] re-training failed: {result.failure}")

    def run(self) -> ParetoArchive:
        settings, objectives = self.settings, self.policy.objectives
        logger.info(f"Starting {self.policy.scenario.value} search: pop={settings.pop_size} "
                    f"generations={settings.generations} objectives={','.join(objectives)} "
                    f"library={len(self.library)}")

        population = self._seed_population()
        self._evaluate(population, {})
        population = select_survivors(population, settings.pop_size, objectives)
        self.archive.snapshot(0, [m for m in population if m.rank == 0])

        for generation in range(1, settings.generations + 1):
            parents = {member.uid: member for member in population}
            offspring = self._offspring(population, generation)
            self._evaluate(offspring, parents)

            merged = population + offspring
            survivors = select_survivors(merged, settings.pop_size, objectives)
            check_elitism(merged, survivors, objectives)
            kept = {member.uid for member in survivors}
            for member in merged:
                if member.uid not in kept:
                    member.weights = None
            population = survivors
            front = [m for m in population if m.rank == 0]
            self.archive.snapshot(generation, front)
            best = max(m.fitness.f1 for m in front)
            logger.info(f"Generation {generation}/{settings.generations}: front={len(front)} "
                        f"best f1={best:.4f} evaluated={len(self.archive)}")

        final = non_dominated_sort(population, objectives)[0]
        self.retrain(final)
        self.archive.finalize(final)
        logger.info(f"Search finished: {len(self.archive)} candidates evaluated, "
                    f"{len(final)} non-dominated")
        return self.archive


def evolve(settings: EvolutionSettings, policy: ScenarioPolicy, data: SearchData,
           library: MultiplierLibrary, rng: np.random.Generator) -> ParetoArchive:
    return Evolution(settings, policy, data, library, rng).run()
