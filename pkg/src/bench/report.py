"""
Human-readable summary of a run's final non-dominated set, or of the
combined front of several runs
"""
import math
from typing import Any, Dict, List, Sequence

import pandas as pd
from jinja2 import Template

from .runner import final_candidates, load_archive
from ..moea.individual import Fitness, Individual, check_objectives
from ..moea.sorting import non_dominated_sort
from ..utils.errors import FormatError, ParameterError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

MISSING = "-"

REPORT_TEMPLATE = """\
# Search report: scenario {{ scenario }}

Objectives: {{ objectives }}
Candidates evaluated: {{ evaluated }}
Non-dominated candidates: {{ rows | length }}

| Candidate | Final accuracy | Estimated accuracy | Energy (uJ) | Mults (x10^6) | Multiplier | Energy/mult (pJ) |
|---|---|---|---|---|---|---|
{% for row in rows %}
| {{ row.id }} | {{ row.final }} | {{ row.estimated }} | {{ row.energy }} | {{ row.mults }} | {{ row.mult_id }} | {{ row.energy_pj }} |
{% endfor %}
"""

COMBINED_TEMPLATE = """\
# Combined report: {{ runs | length }} runs

Runs: {{ runs | join(", ") }}
Objectives: {{ objectives }}
Candidates considered: {{ considered }}
Non-dominated candidates: {{ rows | length }}

| Run | Candidate | Final accuracy | Estimated accuracy | Energy (uJ) | Mults (x10^6) | Multiplier | Energy/mult (pJ) |
|---|---|---|---|---|---|---|---|
{% for row in rows %}
| {{ row.run }} | {{ row.id }} | {{ row.final }} | {{ row.estimated }} | {{ row.energy }} | {{ row.mults }} | {{ row.mult_id }} | {{ row.energy_pj }} |
{% endfor %}
"""


def _fmt(value, digits: int) -> str:
    if value is None or pd.isna(value):
        return MISSING
    return f"{value:.{digits}f}"


def report_rows(candidates: List[Dict[str, Any]]) -> List[Dict[str, str]]:
    frame = pd.DataFrame(candidates, columns=["id", "run", "final_f1", "f1", "f3", "mults", "mult_id",
                                              "energy_pj"])
    frame["mults_m"] = frame["mults"] / 1e6
    return [{
        "id": row.id,
        "run": row.run if isinstance(row.run, str) else MISSING,
        "final": _fmt(row.final_f1, 4),
        "estimated": _fmt(row.f1, 4),
        "energy": _fmt(row.f3, 2),
        "mults": _fmt(row.mults_m, 2),
        "mult_id": row.mult_id,
        "energy_pj": _fmt(row.energy_pj, 2),
    } for row in frame.itertuples(index=False)]


def render_report(document: Dict[str, Any]) -> str:
    template = Template(REPORT_TEMPLATE, trim_blocks=True)
    return template.render(
        scenario=document.get("scenario", MISSING),
        objectives=", ".join(document["objectives"]),
        evaluated=len(document["candidates"]),
        rows=report_rows(final_candidates(document)),
    )


def run_tag(document: Dict[str, Any]) -> str:
    return f"{document.get('scenario', MISSING)}/seed{document.get('seed', MISSING)}"


def shared_objectives(documents: Sequence[Dict[str, Any]]) -> List[str]:
    """Objectives every run optimized, in the first run's order"""
    common = [name for name in documents[0]["objectives"]
              if all(name in document["objectives"] for document in documents[1:])]
    if not common:
        raise FormatError("archives share no objective")
    return list(check_objectives(common))


def _objective(record: Dict[str, Any], name: str) -> float:
    # None is how archives store an infinite objective
    value = record.get(name)
    return math.inf if value is None else float(value)


def combined_front(documents: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Non-dominated subset of the union of every run's final set, each record tagged with its run"""
    objectives = shared_objectives(documents)
    pool = []
    for document in documents:
        tag = run_tag(document)
        for record in final_candidates(document):
            tagged = dict(record, run=tag, scenario=document.get("scenario"), seed=document.get("seed"))
            accuracy = record.get("f1")
            fitness = Fitness(0.0 if accuracy is None else float(accuracy),
                              _objective(record, "f2"), _objective(record, "f3"))
            pool.append((Individual(uid=len(pool), genotype=None, generation=record.get("generation", 0),
                                    fitness=fitness), tagged))
    if not pool:
        return []
    records = {member.uid: tagged for member, tagged in pool}
    front = non_dominated_sort([member for member, _ in pool], objectives)[0]
    return [records[member.uid] for member in front]


def render_combined_report(documents: Sequence[Dict[str, Any]]) -> str:
    template = Template(COMBINED_TEMPLATE, trim_blocks=True)
    return template.render(
        runs=[run_tag(document) for document in documents],
        objectives=", ".join(shared_objectives(documents)),
        considered=sum(len(document["final"]) for document in documents),
        rows=report_rows(combined_front(documents)),
    )


def report(*archive_paths) -> str:
    if not archive_paths:
        raise ParameterError("report needs at least one archive")
    documents = [load_archive(path) for path in archive_paths]
    if len(documents) == 1:
        logger.info(f"Rendering report for {archive_paths[0]}")
        return render_report(documents[0])
    logger.info(f"Rendering combined report for {len(documents)} archives")
    return render_combined_report(documents)
