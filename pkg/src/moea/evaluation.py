"""
Candidate evaluation: compile, train, score. Runs in-process or in a process pool.
"""
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .individual import WORST_FITNESS, Fitness, fitness_f3
from ..cgpnet.genotype import Coord, Genotype, extract_active
from ..multsim.models import MultiplierModel
from ..netir import compile, count_mults, count_params, format_graph
from ..qengine.trainer import LabeledImages, TrainConfig, evaluate_accuracy, train
from ..qengine.weights import WeightStore
from ..utils.errors import CompileError, IntegrityError, NumericError, TrainingError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class EvaluationTask:
    uid: int
    genotype: Genotype
    model: MultiplierModel
    train_cfg: TrainConfig
    input_shape: Tuple[int, int, int]
    num_classes: int
    seed: int
    data_key: str = "train"
    subset: Optional[np.ndarray] = None
    start_weights: Optional[WeightStore] = None
    fresh_nodes: FrozenSet[Coord] = frozenset()
    stream: int = 0  # 0 search-time training, 1 final re-training


@dataclass
class EvaluationResult:
    uid: int
    fitness: Fitness
    mults: int = 0
    weights: Optional[WeightStore] = None
    layer_text: str = ""
    final_loss: Optional[float] = None
    failure: Optional[str] = None


def candidate_rng(seed: int, uid: int, stream: int = 0) -> np.random.Generator:
    """Random stream of one candidate; independent of worker count and order"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(uid), int(stream)]))


def evaluate_candidate(task: EvaluationTask, datasets: Dict[str, LabeledImages]) -> EvaluationResult:
    """Worst-case fitness instead of an exception when compilation or training fails"""
    label = f"c{task.uid}"
    try:
        graph = compile(extract_active(task.genotype), task.input_shape, task.num_classes)
    except (CompileError, IntegrityError) as e:
        logger.warning(f"[{label}] compile failed: {e}")
        return EvaluationResult(task.uid, WORST_FITNESS, failure=f"compile: {e}")

    mults, params = count_mults(graph), count_params(graph)
    data = datasets[task.data_key]
    if task.subset is not None:
        data = data.subset(task.subset)
    if task.start_weights is not None:
        start = task.start_weights.inherit(label, task.fresh_nodes)
    else:
        start = WeightStore(owner=label)

    rng = candidate_rng(task.seed, task.uid, task.stream)
    try:
        weights, history = train(graph, start, data, task.train_cfg, task.model, rng)
        accuracy = evaluate_accuracy(graph, weights, datasets["test"], task.model)
    except (TrainingError, NumericError) as e:
        logger.warning(f"[{label}] training failed: {e}")
        return EvaluationResult(task.uid, WORST_FITNESS, mults=mults, layer_text=format_graph(graph),
                                failure=f"training: {e}")

    fitness = Fitness(accuracy, float(params), fitness_f3(mults, task.model.energy_per_op))
    logger.info(f"[{label}] f1={fitness.f1:.4f} f2={int(fitness.f2)} f3={fitness.f3:.4f}uJ "
                f"multiplier={task.model.id}")
    return EvaluationResult(task.uid, fitness, mults=mults, weights=weights,
                            layer_text=format_graph(graph), final_loss=history.final_loss)


_WORKER_DATASETS: Dict[str, LabeledImages] = {}


def _init_worker(datasets: Dict[str, LabeledImages]) -> None:
    _WORKER_DATASETS.clear()
    _WORKER_DATASETS.update(datasets)


def _evaluate_in_worker(task: EvaluationTask) -> EvaluationResult:
    return evaluate_candidate(task, _WORKER_DATASETS)


def run_tasks(tasks: Sequence[EvaluationTask], datasets: Dict[str, LabeledImages], workers: int = 1,
              on_result: Optional[Callable[[EvaluationResult], None]] = None) -> List[EvaluationResult]:
    """Evaluate tasks, returning results in task order"""
    results: Dict[int, EvaluationResult] = {}
    if workers <= 1 or len(tasks) <= 1:
        for task in tasks:
            results[task.uid] = evaluate_candidate(task, datasets)
            if on_result:
                on_result(results[task.uid])
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(datasets,)) as pool:
            futures = [pool.submit(_evaluate_in_worker, task) for task in tasks]
            for future in as_completed(futures):
                result = future.result()
                results[result.uid] = result
                if on_result:
                    on_result(result)
    return [results[task.uid] for task in tasks]
