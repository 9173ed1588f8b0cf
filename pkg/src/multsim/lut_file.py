"""
Binary LUT file format for external multiplier tables.

Layout (little-endian, 131120 bytes):
    8 bytes   magic b"AXMULT8\\0"
    32 bytes  zero-padded ASCII id
    8 bytes   IEEE-754 double, energy per operation in pJ
    131072    65536 uint16 products ordered by a*256+b
"""
import os
import struct

import numpy as np

from .models import MAX_PRODUCT, TABLE_SIZE, MultiplierModel
from ..utils.errors import FormatError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

MAGIC = b"AXMULT8\0"
ID_BYTES = 32
HEADER_SIZE = len(MAGIC) + ID_BYTES + 8
FILE_SIZE = HEADER_SIZE + 2 * TABLE_SIZE


def load_lut_file(path) -> MultiplierModel:
    """Load a multiplier model from a LUT file, adopting the header id and energy"""
    path = os.fspath(path)
    with open(path, 'rb') as handle:
        raw = handle.read()

    if raw[:len(MAGIC)] != MAGIC:
        raise FormatError("wrong magic, expected AXMULT8", path=path, offset=0)
    if len(raw) != FILE_SIZE:
        raise FormatError(f"expected {FILE_SIZE} bytes, found {len(raw)}",
                          path=path, offset=min(len(raw), FILE_SIZE))

    id_field = raw[len(MAGIC):len(MAGIC) + ID_BYTES]
    try:
        model_id = id_field.rstrip(b"\0").decode('ascii')
    except UnicodeDecodeError:
        raise FormatError("id is not ASCII", path=path, offset=len(MAGIC))
    if not model_id:
        raise FormatError("empty multiplier id", path=path, offset=len(MAGIC))

    (energy,) = struct.unpack_from('<d', raw, len(MAGIC) + ID_BYTES)
    products = np.frombuffer(raw, dtype='<u2', offset=HEADER_SIZE)

    model = MultiplierModel.from_table(model_id, products, energy)
    logger.info(f"Loaded multiplier {model.id} from {path} (mae={model.mae:.3f}, wce={model.wce})")
    return model


def save_lut_file(model: MultiplierModel, path) -> None:
    """Write a multiplier model in the LUT file format"""
    encoded_id = model.id.encode('ascii')
    if len(encoded_id) > ID_BYTES:
        raise FormatError(f"id longer than {ID_BYTES} bytes: {model.id}")
    values = np.asarray(model.table, dtype=np.int64)
    if values.max() > MAX_PRODUCT:
        raise FormatError("product does not fit 16 bits", offset=HEADER_SIZE + 2 * int(values.argmax()))

    with open(os.fspath(path), 'wb') as handle:
        handle.write(MAGIC)
        handle.write(encoded_id.ljust(ID_BYTES, b"\0"))
        handle.write(struct.pack('<d', model.energy_per_op))
        handle.write(values.astype('<u2').tobytes())
