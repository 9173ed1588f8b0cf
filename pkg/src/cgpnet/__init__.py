# CGP genotype encoding, seeding and mutation
from .genotype import (INPUT_COORD, ActiveSubgraph, Coord, Genotype, NodeGene, NodeKind,
                       active_signature, arity, extract_active, genotype_from_dict,
                       genotype_to_dict, validate)
from .template import ColumnSpec, ParameterPools, Template, default_template, seed_from_template
from .mutation import mutate

__all__ = [
    "INPUT_COORD", "ActiveSubgraph", "Coord", "Genotype", "NodeGene", "NodeKind",
    "active_signature", "arity", "extract_active", "genotype_from_dict", "genotype_to_dict",
    "validate", "ColumnSpec", "ParameterPools", "Template", "default_template",
    "seed_from_template", "mutate",
]
