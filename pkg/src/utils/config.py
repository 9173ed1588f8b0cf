import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    """Configuration management for the search engine"""

    # Output and data locations
    OUTPUT_ROOT = os.getenv('APPROX_NAS_OUTPUT_ROOT', 'data/runs')
    DATA_DIR = os.getenv('APPROX_NAS_DATA_DIR', 'data')
    LUT_DIR = os.getenv('APPROX_NAS_LUT_DIR')  # directory of external <id>.lut tables

    # CGP grid
    ROWS = 6
    COLUMNS = 23
    LEVELS_BACK = 5

    # Search
    POP_SIZE = 8
    GENERATIONS = 10
    P_ARCH = 1.0
    P_MULT = 1.0

    # Data set sizes; None means the whole split
    TRAIN_SIZE = 50000
    RETRAIN_SIZE = 50000
    TEST_SIZE = 10000

    # Learning
    EPOCHS_TRAIN = 20
    EPOCHS_RETRAIN = 200
    BATCH_SIZE = 32
    LEARNING_RATE = 0.001
    L2_COEFFICIENT = 1e-4
    AUGMENT = True

    # Batch normalization running statistics
    BN_MOMENTUM = 0.9
    BN_EPSILON = 1e-5

    # Adam
    ADAM_BETA1 = 0.9
    ADAM_BETA2 = 0.999
    ADAM_EPSILON = 1e-8

    # Scenario defaults
    SCENARIO = "s1"
    FIXED_MULTIPLIER = "mul8u_85Q"  # used by S3 unless overridden
    SEED = 1
    WORKERS = 1
    RETRAIN_TOP_K = None  # None re-trains the whole non-dominated set

    # Desk-scale data set
    DATASET = "micro"
    MICRO_TRAIN_COUNT = 2000
    MICRO_TEST_COUNT = 500
    MICRO_IMAGE_SIZE = 16
    MICRO_CLASSES = 10
    MICRO_SEED = 2020

    # Layer parameter pools for the default template
    CONV_FILTERS = (16, 32, 64)
    CONV_KERNELS = (1, 3, 5)
    CONV_STRIDES = (1, 2)
    FC_WIDTHS = (64, 128, 256)
    INCEPTION_CHANNELS = (8, 16, 32)
    RESIDUAL_KERNELS = (3, 5)
    RESIDUAL_STRIDES = (1, 2)
    POOL_SIZE = 2

    # Published per-operation energies of the 8-bit unsigned multiplier catalog (pJ).
    # Stand-in describes the parametric family used when no external table is found:
    # ("exact", 0), ("operand", k) or ("product", bits).
    MULTIPLIER_CATALOG = (
        ("mul8u_JFF", 0.56, ("exact", 0)),
        ("mul8u_JD", 0.48, ("product", 4)),
        ("mul8u_C1", 0.45, ("product", 6)),
        ("mul8u_GR", 0.38, ("product", 8)),
        ("mul8u_M1", 0.30, ("operand", 1)),
        ("mul8u_85Q", 0.29, ("operand", 2)),
        ("mul8u_2N4", 0.15, ("operand", 3)),
        ("mul8u_8DU", 0.02, ("operand", 5)),
        ("mul8u_KX", 0.01, ("operand", 6)),
    )


config = Config()
