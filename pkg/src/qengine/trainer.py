"""
Mini-batch Adam training with L2 regularization and augmentation, plus accuracy
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Tuple

import numpy as np

from .engine import backward, cross_entropy, forward, run_forward
from .weights import REGULARIZED_KEYS, WeightStore
from ..multsim.models import MultiplierModel
from ..netir.graph import LayerGraph
from ..utils.config import config
from ..utils.errors import ParameterError, TrainingError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

MAX_SHIFT = 4
EVAL_BATCH_SIZE = 256


class LabeledImages(Protocol):
    labels: np.ndarray
    num_classes: int

    def features(self) -> np.ndarray:
        """Float images in [0, 1], NHWC"""

    def subset(self, indices) -> "LabeledImages":
        ...


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = config.EPOCHS_TRAIN
    batch_size: int = config.BATCH_SIZE
    learning_rate: float = config.LEARNING_RATE
    l2_coefficient: float = config.L2_COEFFICIENT
    flip: bool = config.AUGMENT
    shift: bool = config.AUGMENT
    max_shift: int = MAX_SHIFT

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.l2_coefficient < 0:
            raise ParameterError(f"l2_coefficient must be >= 0, got {self.l2_coefficient}")
        if self.max_shift < 0:
            raise ParameterError(f"max_shift must be >= 0, got {self.max_shift}")


@dataclass
class TrainHistory:
    epoch_losses: List[float] = field(default_factory=list)
    steps: int = 0

    @property
    def final_loss(self) -> Optional[float]:
        return self.epoch_losses[-1] if self.epoch_losses else None


class Adam:
    def __init__(self, learning_rate: float, beta1: float = config.ADAM_BETA1,
                 beta2: float = config.ADAM_BETA2, epsilon: float = config.ADAM_EPSILON):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m: Dict[Tuple[str, str], np.ndarray] = {}
        self.v: Dict[Tuple[str, str], np.ndarray] = {}

    def step(self, store: WeightStore, grads: Dict[str, Dict[str, np.ndarray]]) -> None:
        self.t += 1
        correction1 = 1 - self.beta1 ** self.t
        correction2 = 1 - self.beta2 ** self.t
        for name, tensors in grads.items():
            for key, grad in tensors.items():
                slot = (name, key)
                m = self.m.get(slot)
                if m is None or m.shape != grad.shape:
                    m = self.m[slot] = np.zeros_like(grad)
                    self.v[slot] = np.zeros_like(grad)
                v = self.v[slot]
                m *= self.beta1
                m += (1 - self.beta1) * grad
                v *= self.beta2
                v += (1 - self.beta2) * grad * grad
                update = self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.epsilon)
                store[name][key] = store[name][key] - update


def augment(images: np.ndarray, rng: np.random.Generator, flip: bool = True,
            max_shift: int = MAX_SHIFT) -> np.ndarray:
    """Random horizontal flips and zero-padded shifts of up to `max_shift` pixels"""
    out = images.copy()
    n, h, w, _ = out.shape
    if flip:
        flipped = rng.random(n) < 0.5
        out[flipped] = out[flipped, :, ::-1, :]
    if max_shift > 0:
        padded = np.pad(out, ((0, 0), (max_shift, max_shift), (max_shift, max_shift), (0, 0)))
        offsets = rng.integers(0, 2 * max_shift + 1, size=(n, 2))
        for i, (dy, dx) in enumerate(offsets):
            out[i] = padded[i, dy:dy + h, dx:dx + w, :]
    return out


def l2_penalty(store: WeightStore, coefficient: float) -> float:
    if coefficient == 0:
        return 0.0
    total = sum(float(np.sum(entry[key] ** 2)) for entry in store.tensors.values()
                for key in REGULARIZED_KEYS if key in entry)
    return 0.5 * coefficient * total


def add_l2_gradients(grads: Dict[str, Dict[str, np.ndarray]], store: WeightStore,
                     coefficient: float) -> None:
    if coefficient == 0:
        return
    for name, tensors in grads.items():
        for key in REGULARIZED_KEYS:
            if key in tensors:
                tensors[key] = tensors[key] + coefficient * store[name][key]


def train(graph: LayerGraph, weights: WeightStore, dataset: LabeledImages, cfg: TrainConfig,
          model: Optional[MultiplierModel], rng: np.random.Generator) -> Tuple[WeightStore, TrainHistory]:
    """Train a copy of `weights`; forward convolutions go through `model`"""
    store = weights.copy().prepare(graph, rng)
    images, labels = dataset.features(), np.asarray(dataset.labels)
    if len(images) == 0:
        raise TrainingError("cannot train on an empty dataset")

    optimizer = Adam(cfg.learning_rate)
    history = TrainHistory()
    model_id = model.id if model is not None else "float"
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(images))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            index = order[start:start + cfg.batch_size]
            batch = images[index]
            if cfg.flip or cfg.shift:
                batch = augment(batch, rng, flip=cfg.flip, max_shift=cfg.max_shift if cfg.shift else 0)
            trace = run_forward(graph, store, batch, model, training=True)
            loss = cross_entropy(trace.output, labels[index]) + l2_penalty(store, cfg.l2_coefficient)
            if not np.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch + 1}, step {history.steps + 1}")

            grads = backward(graph, trace, labels=labels[index])
            add_l2_gradients(grads, store, cfg.l2_coefficient)
            optimizer.step(store, grads)
            if history.steps == 0:
                store.clear_reinit()
            history.steps += 1
            losses.append(loss)

        history.epoch_losses.append(float(np.mean(losses)))
        logger.debug(f"[{store.owner or '-'}] epoch {epoch + 1}/{cfg.epochs} "
                     f"loss={history.epoch_losses[-1]:.4f} multiplier={model_id}")
    return store, history


def predict(graph: LayerGraph, weights: WeightStore, images: np.ndarray,
            model: Optional[MultiplierModel], batch_size: int = EVAL_BATCH_SIZE) -> np.ndarray:
    chunks = [forward(graph, weights, images[start:start + batch_size], model).argmax(axis=1)
              for start in range(0, len(images), batch_size)]
    return np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)


def evaluate_accuracy(graph: LayerGraph, weights: WeightStore, dataset: LabeledImages,
                      model: Optional[MultiplierModel]) -> float:
    """Top-1 accuracy in inference mode"""
    labels = np.asarray(dataset.labels)
    if labels.size == 0:
        return 0.0
    predictions = predict(graph, weights, dataset.features(), model)
    return float(np.mean(predictions == labels))

