"""
CGP genotype: a grid of typed layer nodes, an output gene and a multiplier-index gene
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, List, NamedTuple, Tuple

from ..utils.errors import FormatError, IntegrityError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


class NodeKind(Enum):
    CONV = "CONV"
    FC = "FC"
    MAX = "MAX"
    AVG = "AVG"
    SUM = "SUM"
    INC = "INC"
    RES = "RES"
    RES_B = "RES_B"
    INPUT = "INPUT"
    OUTPUT = "OUTPUT"


GRID_KINDS = frozenset(kind for kind in NodeKind if kind not in (NodeKind.INPUT, NodeKind.OUTPUT))


def arity(kind: NodeKind) -> int:
    if kind is NodeKind.INPUT:
        return 0
    if kind is NodeKind.SUM:
        return 2
    return 1


class Coord(NamedTuple):
    column: int
    row: int


INPUT_COORD = Coord(0, 0)


@dataclass(frozen=True)
class NodeGene:
    kind: NodeKind
    params: Dict[str, int]
    inputs: Tuple[Coord, ...] = ()

    def with_inputs(self, inputs) -> "NodeGene":
        return replace(self, inputs=tuple(Coord(*c) for c in inputs))


INPUT_NODE = NodeGene(NodeKind.INPUT, {}, ())


@dataclass(frozen=True)
class Genotype:
    """Immutable CGP individual; grid[column - 1][row] is the node at (column, row)"""
    rows: int
    columns: int
    levels_back: int
    grid: Tuple[Tuple[NodeGene, ...], ...]
    output_gene: Coord
    mult_index: int
    library_size: int
    lineage: str = ""
    reinit: FrozenSet[Coord] = field(default_factory=frozenset, compare=False)

    @property
    def output_coord(self) -> Coord:
        return Coord(self.columns + 1, 0)

    def node(self, coord) -> NodeGene:
        column, row = coord
        if column == 0:
            if row != 0:
                raise IntegrityError(f"input column has a single row, got {tuple(coord)}")
            return INPUT_NODE
        if column == self.columns + 1:
            return NodeGene(NodeKind.OUTPUT, {}, (self.output_gene,))
        return self.grid[column - 1][row]

    def coords(self):
        for column in range(1, self.columns + 1):
            for row in range(self.rows):
                yield Coord(column, row)

    def last_fc_column(self) -> int:
        """Index of the last column containing FC nodes, 0 if none"""
        for column in range(self.columns, 0, -1):
            if any(node.kind is NodeKind.FC for node in self.grid[column - 1]):
                return column
        return 0

    def output_candidates(self) -> List[Coord]:
        column = self.last_fc_column()
        if column == 0:
            return []
        return [Coord(column, row) for row, node in enumerate(self.grid[column - 1])
                if node.kind is NodeKind.FC]

    def source_candidates(self, column: int) -> List[Coord]:
        """Every coordinate a node in `column` may read from under the L-back rule"""
        sources = []
        for source_column in range(max(0, column - self.levels_back), column):
            if source_column == 0:
                sources.append(INPUT_COORD)
            else:
                sources.extend(Coord(source_column, row) for row in range(self.rows))
        return sources


@dataclass(frozen=True)
class ActiveSubgraph:
    """Active nodes in topological order, INPUT first and OUTPUT last"""
    nodes: Tuple[Tuple[Coord, NodeGene], ...]
    output_gene: Coord

    @property
    def coords(self) -> Tuple[Coord, ...]:
        return tuple(coord for coord, _ in self.nodes)

    def edges(self) -> FrozenSet[Tuple[Coord, Coord, int]]:
        """(source, destination, input slot) over all active nodes"""
        return frozenset((source, coord, slot)
                         for coord, node in self.nodes
                         for slot, source in enumerate(node.inputs))

    def __len__(self) -> int:
        return len(self.nodes)


def extract_active(g: Genotype) -> ActiveSubgraph:
    """Backward reachability from the output gene, sorted by column then row"""
    reached = set()
    pending = [Coord(*g.output_gene)]
    while pending:
        coord = pending.pop()
        if coord in reached:
            continue
        reached.add(coord)
        pending.extend(g.node(coord).inputs)

    if INPUT_COORD not in reached:
        raise IntegrityError(f"input node unreachable from output gene {tuple(g.output_gene)}")

    ordered = sorted(reached)
    nodes = tuple((coord, g.node(coord)) for coord in ordered)
    nodes += ((g.output_coord, g.node(g.output_coord)),)
    return ActiveSubgraph(nodes=nodes, output_gene=Coord(*g.output_gene))


def active_signature(g: Genotype) -> FrozenSet:
    """Connection-level fingerprint of the phenotype, used to compare parents and children"""
    return extract_active(g).edges()


def validate(g: Genotype) -> List[str]:
    """Collect every invariant violation; an empty list means the genotype is valid"""
    violations = []
    if g.levels_back < 1:
        violations.append(f"levels_back must be >= 1, got {g.levels_back}")
    if len(g.grid) != g.columns or any(len(column) != g.rows for column in g.grid):
        violations.append(f"grid is not {g.rows}x{g.columns}")
        return violations

    for coord in g.coords():
        node = g.node(coord)
        label = f"node {tuple(coord)}"
        if node.kind not in GRID_KINDS:
            violations.append(f"{label}: kind {node.kind.value} not allowed inside the grid")
            continue
        if len(node.inputs) != arity(node.kind):
            violations.append(f"{label}: {node.kind.value} needs {arity(node.kind)} inputs, has {len(node.inputs)}")
        for source in node.inputs:
            source_column, source_row = source
            if not max(0, coord.column - g.levels_back) <= source_column <= coord.column - 1:
                violations.append(f"{label}: input {tuple(source)} outside columns "
                                  f"[{max(0, coord.column - g.levels_back)}, {coord.column - 1}]")
            elif source_column == 0 and source_row != 0:
                violations.append(f"{label}: input {tuple(source)} is not the input node")
            elif source_column > 0 and not 0 <= source_row < g.rows:
                violations.append(f"{label}: input row {source_row} outside grid")

    candidates = g.output_candidates()
    if not candidates:
        violations.append("grid has no FC column for the output gene")
    elif Coord(*g.output_gene) not in candidates:
        violations.append(f"output gene {tuple(g.output_gene)} is not an FC node of column {g.last_fc_column()}")

    if not 0 <= g.mult_index < g.library_size:
        violations.append(f"mult_index {g.mult_index} outside library of {g.library_size}")
    return violations


def genotype_to_dict(g: Genotype) -> Dict[str, Any]:
    return {
        "rows": g.rows,
        "columns": g.columns,
        "levels_back": g.levels_back,
        "library_size": g.library_size,
        "mult_index": g.mult_index,
        "lineage": g.lineage,
        "output_gene": list(g.output_gene),
        "reinit": sorted(list(c) for c in g.reinit),
        "nodes": [
            {
                "column": coord.column,
                "row": coord.row,
                "kind": g.node(coord).kind.value,
                "params": dict(sorted(g.node(coord).params.items())),
                "inputs": [list(source) for source in g.node(coord).inputs],
            }
            for coord in g.coords()
        ],
    }


def genotype_from_dict(data: Dict[str, Any]) -> Genotype:
    try:
        rows, columns = int(data["rows"]), int(data["columns"])
        cells = [[None] * rows for _ in range(columns)]
        for entry in data["nodes"]:
            cells[entry["column"] - 1][entry["row"]] = NodeGene(
                kind=NodeKind(entry["kind"]),
                params={key: int(value) for key, value in entry["params"].items()},
                inputs=tuple(Coord(*source) for source in entry["inputs"]),
            )
        if any(cell is None for column in cells for cell in column):
            raise FormatError("genotype document does not cover every grid cell")
        return Genotype(
            rows=rows,
            columns=columns,
            levels_back=int(data["levels_back"]),
            grid=tuple(tuple(column) for column in cells),
            output_gene=Coord(*data["output_gene"]),
            mult_index=int(data["mult_index"]),
            library_size=int(data["library_size"]),
            lineage=data.get("lineage", ""),
            reinit=frozenset(Coord(*c) for c in data.get("reinit", [])),
        )
    except (KeyError, IndexError, TypeError, ValueError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"malformed genotype document: {e}")
