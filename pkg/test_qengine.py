"""
Tests for quantization, approximate convolution, the float backward pass and training
"""
import numpy as np
import pytest

from src.bench.datasets import Dataset
from src.cgpnet.genotype import INPUT_COORD, Coord, Genotype, NodeGene, NodeKind, extract_active
from src.multsim.models import MultiplierModel, build_exact, build_truncated
from src.netir import compile
from src.qengine.engine import (backward, conv_layer_backward, conv_layer_forward, cross_entropy,
                               forward, run_forward)
from src.qengine.ops import conv_forward_approx, conv_forward_float
from src.qengine.quant import QuantTensor, quantize, quantize_activations
from src.qengine.trainer import Adam, TrainConfig, augment, evaluate_accuracy, predict, train
from src.qengine.weights import WeightStore, load_checkpoint, save_checkpoint
from src.utils.errors import FormatError, NumericError, ParameterError, ShapeError

EXACT = build_exact()
TRUNC3 = build_truncated(3, 0.15)


def chain_graph(input_shape, num_classes, *nodes):
    """Compile a one-row chain of (kind, params) nodes ending in FC"""
    cells = []
    for column, (kind, params) in enumerate(nodes, start=1):
        source = INPUT_COORD if column == 1 else Coord(column - 1, 0)
        cells.append((NodeGene(kind, params, (source,)),))
    g = Genotype(rows=1, columns=len(nodes), levels_back=1, grid=tuple(cells),
                 output_gene=Coord(len(nodes), 0), mult_index=0, library_size=1)
    return compile(extract_active(g), input_shape, num_classes)


def small_net():
    return chain_graph((6, 6, 1), 3, (NodeKind.CONV, {"filters": 3, "kernel": 3, "stride": 1}),
                       (NodeKind.AVG, {"size": 2}), (NodeKind.FC, {"units": 3}))


def residual_net():
    return chain_graph((4, 4, 2), 3, (NodeKind.RES, {"n_kernel": 3, "m_kernel": 3, "stride": 2, "filters": 2}),
                       (NodeKind.FC, {"units": 3}))


def prepared(graph, seed=0):
    return WeightStore(owner="test").prepare(graph, np.random.default_rng(seed))


def test_quantize_examples():
    zero = quantize(np.zeros((2, 3)))
    assert zero.scale == 1.0
    assert not zero.magnitudes.any()

    q = quantize(np.array([2.55, -1.27, 1.27, 0.0]))
    assert q.scale == pytest.approx(0.01)
    assert q.magnitudes.tolist() == [255, 127, 127, 0]
    assert q.signs.tolist() == [1, -1, 1, 1]

    with pytest.raises(NumericError):
        quantize(np.array([1.0, np.nan]))
    with pytest.raises(ParameterError):
        quantize(np.array([-1.0]), non_negative=True)
    with pytest.raises(ParameterError):
        QuantTensor(np.zeros(2, dtype=np.uint8), None, 0.0)


def test_quantize_round_trip_bound():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        x = rng.normal(0, rng.uniform(0.01, 10), size=rng.integers(1, 40))
        q = quantize(x)
        assert np.all(np.abs(q.dequantize() - x) <= q.scale / 2 + 1e-12)


def test_activation_scales_are_per_sample():
    rng = np.random.default_rng(1)
    batch = rng.uniform(0, 1, size=(3, 4, 4, 2))
    batch[1] *= 10
    q = quantize_activations(batch)
    assert q.signs is None
    assert q.scale.shape == (3, 1, 1, 1)
    single = quantize_activations(batch[:1])
    assert np.array_equal(single.magnitudes[0], q.magnitudes[0])
    assert np.all(np.abs(q.dequantize() - batch) <= q.scale / 2 + 1e-12)


def test_one_by_one_convolution():
    inputs = QuantTensor(np.array([[[[7]]]], dtype=np.uint8), None, 0.1)
    weights = QuantTensor(np.array([[[[5]]]], dtype=np.uint8), np.array([[[[-1]]]], dtype=np.int8), 0.2)
    assert conv_forward_approx(inputs, weights, EXACT, 1)[0, 0, 0, 0] == pytest.approx(-0.7)
    # truncating one bit turns 7*5 into 6*4
    assert conv_forward_approx(inputs, weights, build_truncated(1, 0.3), 1)[0, 0, 0, 0] == pytest.approx(-0.48)


def test_zero_table_gives_bias_only():
    zero_model = MultiplierModel.from_table("mul8u_ZERO", np.zeros(65536), 0.0)
    rng = np.random.default_rng(2)
    inputs = quantize_activations(rng.uniform(0, 1, size=(2, 5, 5, 3)))
    weights = quantize(rng.normal(size=(3, 3, 3, 4)))
    out = conv_forward_approx(inputs, weights, zero_model, 1)
    assert out.shape == (2, 5, 5, 4)
    assert not out.any()
    bias = np.array([0.5, -1.0, 2.0, 0.0])
    assert np.array_equal(conv_forward_approx(inputs, weights, zero_model, 2, bias),
                          np.broadcast_to(bias, (2, 3, 3, 4)))


def test_channel_mismatch_is_a_shape_error():
    inputs = quantize_activations(np.ones((1, 4, 4, 2)))
    weights = quantize(np.ones((3, 3, 3, 1)))
    with pytest.raises(ShapeError):
        conv_forward_approx(inputs, weights, EXACT, 1)


def test_exact_model_within_quantization_bound():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        x = rng.uniform(0, 2, size=(1, 4, 4, 2))
        w = rng.normal(size=(3, 3, 2, 3))
        xq, wq = quantize(x, non_negative=True), quantize(w)
        approx = conv_forward_approx(xq, wq, EXACT, 1)

        # exact table reproduces float arithmetic on the dequantized operands
        assert np.allclose(approx, conv_forward_float(xq.dequantize(), wq.dequantize(), 1), atol=1e-9)

        # |x'w' - xw| <= |x| sw/2 + (|w| + sw/2) sx/2 per product, summed over the window
        half_w, half_x = wq.scale / 2, xq.scale / 2
        bound = (conv_forward_float(np.abs(x), np.full(w.shape, half_w), 1)
                 + conv_forward_float(np.full(x.shape, half_x), np.abs(w) + half_w, 1))
        assert np.all(np.abs(approx - conv_forward_float(x, w, 1)) <= bound + 1e-9)


def test_approximate_path_matches_table_reference():
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 1, size=(1, 3, 3, 2))
    w = rng.normal(size=(1, 1, 2, 2))
    xq, wq = quantize(x, non_negative=True), quantize(w)
    out = conv_forward_approx(xq, wq, TRUNC3, 1)
    table = TRUNC3.table.astype(np.int64)
    for i in range(3):
        for j in range(3):
            for o in range(2):
                acc = sum(int(wq.signs[0, 0, c, o]) * int(table[int(xq.magnitudes[0, i, j, c]) * 256
                                                                 + int(wq.magnitudes[0, 0, c, o])])
                          for c in range(2))
                assert out[0, i, j, o] == pytest.approx(acc * xq.scale * wq.scale)


def test_forward_probabilities():
    graph = small_net()
    store = prepared(graph)
    batch = np.random.default_rng(5).uniform(0, 1, size=(5, 6, 6, 1))
    for model in (EXACT, TRUNC3, None):
        probs = forward(graph, store, batch, model)
        assert probs.shape == (5, 3)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
        single = forward(graph, store, batch[:1], model)
        assert np.allclose(single[0], probs[0], atol=1e-12)

    drift = np.abs(forward(graph, store, batch, EXACT) - forward(graph, store, batch, None)).max()
    assert drift < 0.05


def numeric_gradient(loss, tensor, index, eps=1e-6):
    original = tensor[index]
    tensor[index] = original + eps
    up = loss()
    tensor[index] = original - eps
    down = loss()
    tensor[index] = original
    return (up - down) / (2 * eps)


@pytest.mark.parametrize("build,training", [(small_net, False), (residual_net, True)])
def test_backward_matches_finite_differences(build, training):
    graph = build()
    store = prepared(graph, seed=6)
    rng = np.random.default_rng(7)
    batch = rng.uniform(0, 1, size=(4,) + tuple(graph.input_shape))
    labels = np.array([0, 1, 2, 1])

    def loss():
        return cross_entropy(run_forward(graph, store, batch, None, training=training).output, labels)

    grads = backward(graph, run_forward(graph, store, batch, None, training=training), labels=labels)
    checked = 0
    for name, tensors in grads.items():
        for key, grad in tensors.items():
            for flat in rng.choice(grad.size, size=min(4, grad.size), replace=False):
                index = np.unravel_index(flat, grad.shape)
                expected = numeric_gradient(loss, store[name][key], index)
                assert abs(grad[index] - expected) <= 1e-4 * max(1.0, abs(expected))
                checked += 1
    assert checked > 0


def test_gradient_operator_ignores_the_multiplier():
    rng = np.random.default_rng(8)
    x = rng.uniform(0, 1, size=(2, 5, 5, 2))
    entry = {"kernel": rng.normal(size=(3, 3, 2, 4)), "bias": np.zeros(4)}
    out_exact, cache_exact = conv_layer_forward(x, entry, 1, EXACT)
    out_trunc, cache_trunc = conv_layer_forward(x, entry, 1, TRUNC3)
    assert not np.allclose(out_exact, out_trunc)

    dout = rng.normal(size=out_exact.shape)
    for first, second in zip(conv_layer_backward(dout, cache_exact, 1), conv_layer_backward(dout, cache_trunc, 1)):
        assert np.array_equal(first, second)


def test_adam_with_zero_rate_keeps_weights():
    graph = small_net()
    store = prepared(graph)
    before = store.checksum()
    batch = np.random.default_rng(9).uniform(0, 1, size=(3, 6, 6, 1))
    trace = run_forward(graph, store, batch, EXACT)
    Adam(0.0).step(store, backward(graph, trace, labels=np.array([0, 1, 2])))
    assert store.checksum() == before


def test_training_loss_decreases_on_separable_pair():
    images = np.array([np.zeros((2, 2, 1)), np.full((2, 2, 1), 255)], dtype=np.uint8)
    data = Dataset(images, np.array([0, 1]), 2)
    graph = chain_graph((2, 2, 1), 2, (NodeKind.FC, {"units": 2}))
    cfg = TrainConfig(epochs=60, batch_size=2, learning_rate=0.05, l2_coefficient=0.0, flip=False, shift=False)
    store, history = train(graph, WeightStore(), data, cfg, EXACT, np.random.default_rng(10))
    losses = history.epoch_losses
    assert len(losses) == 60 and history.steps == 60
    assert losses[1] < losses[0] and losses[-1] < losses[0]
    assert evaluate_accuracy(graph, store, data, EXACT) == 1.0


def test_training_is_deterministic(tiny_data):
    train_set, test_set = tiny_data
    graph = chain_graph((8, 8, 1), 4, (NodeKind.CONV, {"filters": 4, "kernel": 3, "stride": 2}),
                        (NodeKind.MAX, {"size": 2}), (NodeKind.FC, {"units": 6}))
    cfg = TrainConfig(epochs=2, batch_size=8)
    runs = [train(graph, WeightStore(), train_set, cfg, TRUNC3, np.random.default_rng(11)) for _ in range(2)]
    (first, first_history), (second, second_history) = runs
    assert first.checksum() == second.checksum()
    assert first_history.epoch_losses == second_history.epoch_losses
    assert first_history.steps == 2 * 3
    assert (evaluate_accuracy(graph, first, test_set, TRUNC3)
            == evaluate_accuracy(graph, second, test_set, TRUNC3))


def test_accuracy_of_a_perfect_labeling(tiny_data):
    _, test_set = tiny_data
    graph = chain_graph((8, 8, 1), 4, (NodeKind.FC, {"units": 6}))
    store = prepared(graph)
    predicted = predict(graph, store, test_set.features(), EXACT)
    relabeled = Dataset(test_set.images, predicted, 4)
    assert evaluate_accuracy(graph, store, relabeled, EXACT) == 1.0
    wrong = Dataset(test_set.images, (predicted + 1) % 4, 4)
    assert evaluate_accuracy(graph, store, wrong, EXACT) == 0.0


def test_train_config_validation():
    for bad in ({"epochs": 0}, {"batch_size": 0}, {"learning_rate": 0.0}, {"l2_coefficient": -1.0}):
        with pytest.raises(ParameterError):
            TrainConfig(**bad)


def test_augment_flips_and_shifts():
    rng = np.random.default_rng(12)
    images = rng.uniform(0, 1, size=(6, 5, 5, 1))
    assert np.array_equal(augment(images, rng, flip=False, max_shift=0), images)
    flipped = augment(images, rng, flip=True, max_shift=0)
    for original, out in zip(images, flipped):
        assert np.array_equal(out, original) or np.array_equal(out, original[:, ::-1, :])
    shifted = augment(images, rng, flip=False, max_shift=2)
    assert shifted.shape == images.shape


def test_weight_inheritance_and_reinit(tiny_data):
    train_set, _ = tiny_data
    graph = chain_graph((8, 8, 1), 4, (NodeKind.CONV, {"filters": 4, "kernel": 3, "stride": 1}),
                        (NodeKind.FC, {"units": 6}))
    parent, _ = train(graph, WeightStore(owner="c0"), train_set, TrainConfig(epochs=1, batch_size=12),
                      None, np.random.default_rng(13))

    kept = parent.inherit("c1", reinit=[]).prepare(graph, np.random.default_rng(14))
    assert kept.fresh == set()
    assert np.array_equal(kept["n1_0.conv"]["kernel"], parent["n1_0.conv"]["kernel"])

    flagged = parent.inherit("c2", reinit=[Coord(1, 0)]).prepare(graph, np.random.default_rng(14))
    assert flagged.fresh == {"n1_0.conv"}
    assert not np.array_equal(flagged["n1_0.conv"]["kernel"], parent["n1_0.conv"]["kernel"])
    assert np.array_equal(flagged["n2_0.dense"]["kernel"], parent["n2_0.dense"]["kernel"])

    trained, _ = train(graph, flagged, train_set, TrainConfig(epochs=1, batch_size=12), None,
                       np.random.default_rng(15))
    assert trained.reinit == set() and trained.fresh == set()

    wider = chain_graph((8, 8, 1), 4, (NodeKind.CONV, {"filters": 8, "kernel": 3, "stride": 1}),
                        (NodeKind.FC, {"units": 6}))
    reshaped = parent.inherit("c3", reinit=[]).prepare(wider, np.random.default_rng(16))
    assert reshaped.fresh == {"n1_0.conv", "n2_0.dense"}


def test_checkpoint_round_trip(tmp_path):
    graph = residual_net()
    store = prepared(graph)
    manifest, blob = save_checkpoint(store, tmp_path / "ckpt" / "c7")
    assert manifest.exists() and blob.exists()

    loaded = load_checkpoint(tmp_path / "ckpt" / "c7")
    assert loaded.checksum() == store.checksum()
    assert loaded.owner == "test"
    assert set(loaded.tensors) == set(store.tensors)

    blob.write_bytes(blob.read_bytes()[:-4])
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "ckpt" / "c7")
