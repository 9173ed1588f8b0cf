# Approximate multiplier simulation
from .models import (MultiplierModel, ZERO_ENERGY_SENTINEL_ID, build_exact,
                     build_product_truncated, build_truncated, error_metrics,
                     multiply)
from .lut_file import load_lut_file, save_lut_file
from .library import MultiplierLibrary, default_library

__all__ = [
    "MultiplierModel", "MultiplierLibrary", "ZERO_ENERGY_SENTINEL_ID",
    "build_exact", "build_truncated", "build_product_truncated",
    "multiply", "error_metrics", "load_lut_file", "save_lut_file", "default_library",
]
