"""
Run orchestration and artifact writing
"""
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from .datasets import resolve_dataset, split_for_run
from .runconfig import RunConfig
from ..cgpnet.genotype import genotype_to_dict
from ..cgpnet.template import default_template
from ..moea.archive import ParetoArchive
from ..moea.evolution import EvolutionSettings, SearchData, evolve
from ..moea.individual import Individual
from ..moea.scenario import ScenarioPolicy
from ..multsim.library import MultiplierLibrary, default_library
from ..qengine.trainer import TrainConfig
from ..qengine.weights import save_checkpoint
from ..utils.errors import ConfigurationError, FormatError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

MANIFEST_FILE = "manifest.json"
GENERATIONS_FILE = "generations.csv"
ARCHIVE_FILE = "archive.json"
PLOT_DATA_FILE = "plot_data.csv"
CHECKPOINT_DIR = "checkpoints"

GENERATION_COLUMNS = ["id", "generation", "parent_id", "f1", "f2", "f3", "mult_id", "energy_pj",
                      "mults", "rank", "crowding", "final_f1", "failure"]
PLOT_COLUMNS = ["snapshot", "id", "generation", "f1", "f2", "f3", "mult_id", "status", "on_front"]


@dataclass
class RunResult:
    output_dir: Path
    archive: ParetoArchive
    library: MultiplierLibrary


def build_settings(cfg: RunConfig, num_classes: int) -> EvolutionSettings:
    train_cfg = TrainConfig(epochs=cfg.epochs_train, batch_size=cfg.batch_size,
                            learning_rate=cfg.learning_rate, l2_coefficient=cfg.l2_coefficient,
                            flip=cfg.augment, shift=cfg.augment)
    retrain_cfg = None
    if cfg.epochs_retrain > 0:
        retrain_cfg = TrainConfig(epochs=cfg.epochs_retrain, batch_size=cfg.batch_size,
                                  learning_rate=cfg.learning_rate, l2_coefficient=cfg.l2_coefficient,
                                  flip=cfg.augment, shift=cfg.augment)
    template = default_template(rows=cfg.rows, columns=cfg.columns, levels_back=cfg.levels_back,
                                num_classes=num_classes)
    return EvolutionSettings(pop_size=cfg.pop_size, generations=cfg.generations, p_arch=cfg.p_arch,
                             p_mult=cfg.p_mult, train_cfg=train_cfg, retrain_cfg=retrain_cfg,
                             train_subset=cfg.train_subset, retrain_top_k=cfg.retrain_top_k,
                             workers=cfg.workers, seed=cfg.seed, template=template)


def _finite(value):
    """JSON-safe number: infinities become None"""
    if value is None or (isinstance(value, float) and math.isinf(value)):
        return None
    return value


def candidate_record(member: Individual) -> Dict[str, Any]:
    fitness = member.fitness
    return {
        "id": member.label,
        "generation": member.generation,
        "parent_id": f"c{member.parent_uid}" if member.parent_uid is not None else None,
        "f1": fitness.f1 if fitness else None,
        "f2": _finite(fitness.f2) if fitness else None,
        "f3": _finite(fitness.f3) if fitness else None,
        "mult_id": member.mult_id,
        "energy_pj": member.energy_pj,
        "mults": member.mults,
        "rank": member.rank,
        "crowding": _finite(member.crowding),
        "final_f1": member.final_f1,
        "failure": member.failure,
    }


def generations_frame(archive: ParetoArchive) -> pd.DataFrame:
    rows = [candidate_record(member) for member in archive.evaluated]
    return pd.DataFrame(rows, columns=GENERATION_COLUMNS)


def plot_frame(archive: ParetoArchive) -> pd.DataFrame:
    """Accuracy/energy points per generation: the current generation vs. all earlier candidates"""
    rows = []
    for snapshot in sorted(archive.snapshots):
        front = set(archive.snapshots[snapshot])
        for member in archive.evaluated:
            if member.generation > snapshot:
                continue
            record = candidate_record(member)
            rows.append({
                "snapshot": snapshot, "id": record["id"], "generation": member.generation,
                "f1": record["f1"], "f2": record["f2"], "f3": record["f3"], "mult_id": member.mult_id,
                "status": "current" if member.generation == snapshot else "previous",
                "on_front": member.uid in front,
            })
    return pd.DataFrame(rows, columns=PLOT_COLUMNS)


def archive_document(archive: ParetoArchive, cfg: RunConfig) -> Dict[str, Any]:
    candidates = []
    for member in archive.evaluated:
        record = candidate_record(member)
        record["genotype"] = genotype_to_dict(member.genotype)
        record["layers"] = member.layer_text
        candidates.append(record)
    return {
        "scenario": str(cfg.scenario).lower(),
        "objectives": list(archive.objectives),
        "seed": cfg.seed,
        "candidates": candidates,
        "snapshots": {str(g): [f"c{uid}" for uid in uids] for g, uids in sorted(archive.snapshots.items())},
        "final": [member.label for member in archive.final],
    }


def write_json(path: Path, document: Dict[str, Any]) -> None:
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_artifacts(archive: ParetoArchive, cfg: RunConfig, library: MultiplierLibrary,
                    output_dir: Path) -> None:
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": cfg.to_manifest(),
        "library": [{"id": m.id, "energy_pj": m.energy_per_op, "mae": m.mae, "wce": m.wce}
                    for m in library],
        "evaluations": len(archive),
        "written_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    write_json(output_dir / MANIFEST_FILE, manifest)
    generations_frame(archive).to_csv(output_dir / GENERATIONS_FILE, index=False)
    plot_frame(archive).to_csv(output_dir / PLOT_DATA_FILE, index=False)
    write_json(output_dir / ARCHIVE_FILE, archive_document(archive, cfg))
    for member in archive.final:
        if member.weights is not None:
            save_checkpoint(member.weights, output_dir / CHECKPOINT_DIR / member.label)
    logger.info(f"Run artifacts written to {output_dir}")


def run(cfg: RunConfig) -> RunResult:
    problems = cfg.validate()
    if problems:
        raise ConfigurationError("invalid run configuration: " + "; ".join(problems))

    library = default_library(cfg.lut_dir)
    policy = ScenarioPolicy.for_scenario(cfg.scenario, library, cfg.fixed_multiplier)
    train, test = resolve_dataset(cfg.dataset)
    search_train, retrain, test = split_for_run(train, test, (cfg.train_size, cfg.retrain_size, cfg.test_size))
    data = SearchData(train=search_train, test=test, retrain=retrain)
    settings = build_settings(cfg, data.num_classes)

    logger.info(f"Run {cfg.scenario} seed={cfg.seed} dataset={cfg.dataset}: "
                f"{len(search_train)} train, {len(test)} test images")
    archive = evolve(settings, policy, data, library, np.random.default_rng(cfg.seed))
    output_dir = cfg.default_output_dir()
    write_artifacts(archive, cfg, library, output_dir)
    return RunResult(output_dir=output_dir, archive=archive, library=library)


def load_archive(path) -> Dict[str, Any]:
    path = Path(path)
    if path.is_dir():
        path = path / ARCHIVE_FILE
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"archive is not valid JSON: {e.msg}", path=str(path), offset=e.pos) from e
    for key in ("candidates", "final", "objectives"):
        if key not in document:
            raise FormatError(f"archive lacks '{key}'", path=str(path))
    return document


def final_candidates(document: Dict[str, Any]) -> List[Dict[str, Any]]:
    by_id = {record["id"]: record for record in document["candidates"]}
    return [by_id[cid] for cid in document["final"] if cid in by_id]
