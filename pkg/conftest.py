"""
Shared pytest setup: console-only logging and small fixtures used across test modules
"""
import os

# Must run before any src module creates its logger
os.environ.setdefault("APPROX_NAS_LOG_TO_FILE", "0")
os.environ.setdefault("APPROX_NAS_LOG_LEVEL", "WARNING")

import numpy as np
import pytest

from src.bench.datasets import make_micro_dataset
from src.cgpnet.genotype import NodeKind
from src.cgpnet.template import ColumnSpec, ParameterPools, Template

TINY_POOLS = ParameterPools(conv_filters=(2, 4), conv_kernels=(1, 3), conv_strides=(1, 2),
                            fc_widths=(6, 8), inception_channels=(2,), residual_kernels=(3,),
                            residual_strides=(1, 2), pool_sizes=(2,))


def tiny_template(num_classes: int = 4, rows: int = 2, columns: int = 5, levels_back: int = 3) -> Template:
    """Small grid with every layer kind, sized for 8x8 images"""
    conv = ColumnSpec((NodeKind.CONV,))
    middle = ColumnSpec((NodeKind.CONV, NodeKind.SUM, NodeKind.MAX, NodeKind.AVG,
                         NodeKind.RES, NodeKind.RES_B, NodeKind.INC))
    fc = ColumnSpec((NodeKind.FC,))
    specs = (conv,) + (middle,) * (columns - 3) + (fc, fc)
    return Template(rows=rows, columns=columns, levels_back=levels_back, column_specs=specs,
                    pools=TINY_POOLS, num_classes=num_classes)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def template():
    return tiny_template()


@pytest.fixture(scope="session")
def tiny_data():
    """(train, test) micro split: 8x8 grayscale, 4 classes"""
    return make_micro_dataset(seed=7, train_count=24, test_count=12, image_size=8, num_classes=4)
