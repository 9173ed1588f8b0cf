"""
Tests for the multiplier models, the LUT file format and the multiplier library
"""
import numpy as np
import pytest

from src.multsim.library import MultiplierLibrary, default_library
from src.multsim.lut_file import FILE_SIZE, HEADER_SIZE, MAGIC, load_lut_file, save_lut_file
from src.multsim.models import (MultiplierModel, build_exact, build_product_truncated,
                                build_truncated, error_metrics, multiply)
from src.utils.config import config
from src.utils.errors import ConfigurationError, FormatError, ParameterError


def brute_force_metrics(product):
    """Reference MAE/WCE by plain iteration over every operand pair"""
    total, worst = 0, 0
    for a in range(256):
        for b in range(256):
            error = abs(product(a, b) - a * b)
            total += error
            worst = max(worst, error)
    return total / 65536, worst


def test_exact_model_is_exhaustively_exact():
    model = build_exact()
    a, b = np.divmod(np.arange(65536), 256)
    assert np.array_equal(model.table.astype(np.int64), a * b)
    assert model.is_exact
    assert (model.mae, model.wce) == (0.0, 0)
    assert multiply(model, 0, 200) == 0
    assert multiply(model, 255, 255) == 65025
    assert multiply(model, 12, 11) == 132


def test_truncated_examples():
    assert multiply(build_truncated(2, 0.3), 7, 5) == 16
    assert multiply(build_truncated(4, 0.3), 200, 100) == 18432
    zero_trunc = build_truncated(0, 0.3)
    assert np.array_equal(zero_trunc.table, build_exact().table)
    assert zero_trunc.is_exact


@pytest.mark.parametrize("k", [1, 2])
def test_truncated_metrics_match_brute_force(k):
    mask = (0xFF >> k) << k
    expected_mae, expected_wce = brute_force_metrics(lambda a, b: (a & mask) * (b & mask))
    model = build_truncated(k, 0.3)
    assert model.mae == pytest.approx(expected_mae)
    assert model.wce == expected_wce
    assert error_metrics(model) == (model.mae, model.wce)


def test_product_truncation_zeroes_low_bits():
    model = build_product_truncated(4, 0.48)
    assert multiply(model, 13, 7) == (13 * 7) & ~0xF
    assert model.wce == 15
    assert not model.is_exact


@pytest.mark.parametrize("k", [-1, 8])
def test_truncation_out_of_range(k):
    with pytest.raises(ParameterError):
        build_truncated(k, 0.3)


def test_multiply_reads_table_not_arithmetic():
    table = np.full(65536, 3)
    model = MultiplierModel.from_table("mul8u_const", table, 0.1)
    assert multiply(model, 0, 0) == 3

    rng = np.random.default_rng(5)
    models = [build_exact(), build_truncated(3, 0.15), build_product_truncated(6, 0.45), model]
    for _ in range(10_000):
        m = models[rng.integers(len(models))]
        a, b = (int(v) for v in rng.integers(0, 256, size=2))
        assert multiply(m, a, b) == int(m.table[a * 256 + b])

    with pytest.raises(ParameterError):
        multiply(model, 256, 0)


def test_single_entry_corruption_sets_wce():
    table = build_exact().table.astype(np.int64)
    table[255 * 256 + 255] -= 100
    model = MultiplierModel.from_table("mul8u_bad", table, 0.5)
    assert model.wce == 100
    assert not model.is_exact


def test_from_table_rejects_bad_tables():
    with pytest.raises(FormatError):
        MultiplierModel.from_table("short", np.zeros(65535), 0.1)
    with pytest.raises(FormatError):
        MultiplierModel.from_table("wide", np.full(65536, 65536), 0.1)
    with pytest.raises(FormatError):
        MultiplierModel.from_table("meta", build_truncated(2, 0.3).table, 0.3, stored_mae=0.0)
    with pytest.raises(ParameterError):
        MultiplierModel.from_table("free", build_exact().table, 0.0)
    sentinel = MultiplierModel.from_table("mul8u_ZERO", np.zeros(65536), 0.0)
    assert sentinel.energy_per_op == 0.0


def test_lut_round_trip(tmp_path):
    original = build_truncated(3, 0.15, "mul8u_2N4")
    path = tmp_path / "mul8u_2N4.lut"
    save_lut_file(original, path)
    assert path.stat().st_size == FILE_SIZE

    loaded = load_lut_file(path)
    assert loaded.id == "mul8u_2N4"
    assert loaded.energy_per_op == 0.15
    assert np.array_equal(loaded.table, original.table)
    assert (loaded.mae, loaded.wce) == (original.mae, original.wce)

    save_lut_file(build_exact(0.56, "mul8u_JFF"), path)
    assert load_lut_file(path).is_exact


def test_lut_format_errors(tmp_path):
    path = tmp_path / "broken.lut"
    save_lut_file(build_exact(), path)
    raw = path.read_bytes()

    path.write_bytes(raw[:-2])
    with pytest.raises(FormatError):
        load_lut_file(path)

    path.write_bytes(b"NOTAMULT" + raw[len(MAGIC):])
    with pytest.raises(FormatError) as excinfo:
        load_lut_file(path)
    assert excinfo.value.offset == 0

    assert HEADER_SIZE == 48


def test_default_library_catalog_order():
    library = default_library(lut_dir="")
    assert library.ids == tuple(entry[0] for entry in config.MULTIPLIER_CATALOG)
    assert library.exact_index() == library.index_of("mul8u_JFF")
    assert library.by_id("mul8u_KX").energy_per_op == 0.01
    energies = [m.energy_per_op for m in library]
    maes = [m.mae for m in library]
    assert maes[library.exact_index()] == 0 and min(maes) == 0
    assert energies == sorted(energies, reverse=True)

    again = default_library(lut_dir="")
    assert again.ids == library.ids
    for first, second in zip(library, again):
        assert np.array_equal(first.table, second.table)
        assert error_metrics(first) == (first.mae, first.wce)

    with pytest.raises(ConfigurationError):
        library.index_of("mul8u_NOPE")
    with pytest.raises(ParameterError):
        library[len(library)]


def test_default_library_prefers_external_tables(tmp_path):
    save_lut_file(build_truncated(1, 0.48, "mul8u_JD"), tmp_path / "mul8u_JD.lut")
    library = default_library(lut_dir=str(tmp_path))
    assert np.array_equal(library.by_id("mul8u_JD").table, build_truncated(1, 0.48).table)

    save_lut_file(build_truncated(1, 0.45, "mul8u_other"), tmp_path / "mul8u_C1.lut")
    with pytest.raises(ConfigurationError):
        default_library(lut_dir=str(tmp_path))


def test_library_invariants():
    exact = build_exact()
    with pytest.raises(ConfigurationError):
        MultiplierLibrary(())
    with pytest.raises(ConfigurationError):
        MultiplierLibrary((exact, build_exact()))
    with pytest.raises(ConfigurationError):
        MultiplierLibrary((build_truncated(2, 0.3),))
