"""
Mutation operator: rewire nodes until an active one changes, then maybe redraw
the multiplier-index gene
"""
from dataclasses import replace
from typing import Optional

import numpy as np

from .genotype import INPUT_COORD, Coord, Genotype, arity, extract_active
from .template import random_inputs
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

RETRY_FACTOR = 10


def mutate(g: Genotype, p_mult: float, rng: np.random.Generator,
           p_arch: float = 1.0, lineage: Optional[str] = None) -> Genotype:
    """Return a child whose active subgraph differs from the parent's.

    Node kinds and parameters never change. Inactive nodes hit on the way stay
    rewired. Newly activated nodes are listed in the child's `reinit` set.
    """
    parent_active = set(extract_active(g).coords)
    grid = [list(column) for column in g.grid]
    output_gene = Coord(*g.output_gene)
    output_candidates = g.output_candidates()
    choices = g.rows * g.columns + 1

    if rng.random() < p_arch:
        changed = False
        for _ in range(RETRY_FACTOR * g.rows * g.columns):
            choice = int(rng.integers(choices))
            if choice == choices - 1:
                target = output_candidates[int(rng.integers(len(output_candidates)))]
                if target != output_gene:
                    output_gene = target
                    changed = True
                    break
                continue

            column, row = choice // g.rows + 1, choice % g.rows
            node = grid[column - 1][row]
            rewired = random_inputs(g.source_candidates(column), arity(node.kind), rng)
            grid[column - 1][row] = node.with_inputs(rewired)
            if Coord(column, row) in parent_active and rewired != node.inputs:
                changed = True
                break

        if not changed:
            alternatives = [c for c in output_candidates if c != output_gene]
            if alternatives:
                output_gene = alternatives[int(rng.integers(len(alternatives)))]
            else:
                logger.warning(f"Mutation of {g.lineage or 'genotype'} left the phenotype unchanged")

    mult_index = g.mult_index
    if rng.random() < p_mult:
        mult_index = int(rng.integers(g.library_size))

    child = replace(g, grid=tuple(tuple(column) for column in grid), output_gene=output_gene,
                    mult_index=mult_index, lineage=lineage if lineage is not None else g.lineage,
                    reinit=frozenset())
    newly_active = set(extract_active(child).coords) - parent_active
    newly_active -= {INPUT_COORD, child.output_coord}
    return replace(child, reinit=frozenset(newly_active))
