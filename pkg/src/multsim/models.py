"""
8-bit unsigned approximate multipliers modeled as exhaustive lookup tables
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..utils.errors import FormatError, ParameterError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

OPERAND_VALUES = 256
TABLE_SIZE = OPERAND_VALUES * OPERAND_VALUES
MAX_PRODUCT = 0xFFFF
METADATA_TOLERANCE = 0.5

# Only this id may carry zero energy; it exists for unit tests.
ZERO_ENERGY_SENTINEL_ID = "mul8u_ZERO"

_A, _B = np.divmod(np.arange(TABLE_SIZE, dtype=np.int64), OPERAND_VALUES)
EXACT_PRODUCTS = _A * _B
EXACT_PRODUCTS.flags.writeable = False


def _metrics_of(table: np.ndarray) -> Tuple[float, int]:
    deviation = np.abs(table.astype(np.int64) - EXACT_PRODUCTS)
    return float(deviation.mean()), int(deviation.max())


@dataclass(frozen=True, eq=False)
class MultiplierModel:
    """Lookup-table multiplier; entry a*256+b holds the product of (a, b)"""
    id: str
    table: np.ndarray = field(repr=False)
    energy_per_op: float  # pJ
    mae: float
    wce: int
    is_exact: bool

    @classmethod
    def from_table(cls, model_id: str, table, energy_per_op: float,
                   stored_mae: Optional[float] = None,
                   stored_wce: Optional[float] = None) -> "MultiplierModel":
        """Build a model, recomputing the error metadata from the table"""
        values = np.asarray(table, dtype=np.int64).reshape(-1)
        if values.size != TABLE_SIZE:
            raise FormatError(f"multiplier table must have {TABLE_SIZE} entries, got {values.size}")
        bad = np.flatnonzero((values < 0) | (values > MAX_PRODUCT))
        if bad.size:
            raise FormatError(f"product value {values[bad[0]]} out of 16-bit range", offset=int(bad[0]))

        energy = float(energy_per_op)
        if not np.isfinite(energy) or energy < 0 or (energy == 0 and model_id != ZERO_ENERGY_SENTINEL_ID):
            raise ParameterError(f"energy_per_op must be positive for {model_id}, got {energy_per_op}")

        frozen = values.astype(np.uint16)
        frozen.flags.writeable = False
        mae, wce = _metrics_of(frozen)
        if stored_mae is not None and abs(stored_mae - mae) > METADATA_TOLERANCE:
            raise FormatError(f"{model_id}: stored MAE {stored_mae} disagrees with table MAE {mae}")
        if stored_wce is not None and abs(stored_wce - wce) > METADATA_TOLERANCE:
            raise FormatError(f"{model_id}: stored WCE {stored_wce} disagrees with table WCE {wce}")

        return cls(id=model_id, table=frozen, energy_per_op=energy,
                   mae=mae, wce=wce, is_exact=wce == 0)

    def product_table(self) -> np.ndarray:
        """Table as a signed 64-bit array for vectorized gathers"""
        return self.table.astype(np.int64)


def build_exact(energy_per_op: float = 0.56, model_id: str = "mul8u_exact") -> MultiplierModel:
    """Exact 8-bit reference multiplier"""
    return MultiplierModel.from_table(model_id, EXACT_PRODUCTS, energy_per_op)


def build_truncated(k: int, energy: float, model_id: Optional[str] = None) -> MultiplierModel:
    """Multiplier that zeroes the k least-significant bits of both operands"""
    if not isinstance(k, (int, np.integer)) or not 0 <= k <= 7:
        raise ParameterError(f"operand truncation must be in 0..7, got {k}")
    mask = (0xFF >> k) << k
    table = (_A & mask) * (_B & mask)
    return MultiplierModel.from_table(model_id or f"mul8u_trunc{k}", table, energy)


def build_product_truncated(bits: int, energy: float, model_id: Optional[str] = None) -> MultiplierModel:
    """Multiplier that zeroes the `bits` low bits of the exact product"""
    if not isinstance(bits, (int, np.integer)) or not 0 <= bits <= 16:
        raise ParameterError(f"product truncation must be in 0..16, got {bits}")
    mask = (MAX_PRODUCT >> bits) << bits
    return MultiplierModel.from_table(model_id or f"mul8u_ptrunc{bits}", EXACT_PRODUCTS & mask, energy)


def multiply(model: MultiplierModel, a: int, b: int) -> int:
    """Table lookup; never computes the product arithmetically"""
    if not (0 <= a < OPERAND_VALUES and 0 <= b < OPERAND_VALUES):
        raise ParameterError(f"operands must be in 0..255, got ({a}, {b})")
    return int(model.table[a * OPERAND_VALUES + b])


def error_metrics(model: MultiplierModel) -> Tuple[float, int]:
    """Mean and worst-case absolute error over all 65536 operand pairs"""
    return _metrics_of(model.table)
