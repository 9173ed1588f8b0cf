"""
Image classification datasets: CIFAR-10 binary batches, IDX files and the
generated micro set
"""
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from ..utils.config import config
from ..utils.errors import ConfigurationError, FormatError, ParameterError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

CIFAR_SIDE = 32
CIFAR_RECORD = 1 + 3 * CIFAR_SIDE * CIFAR_SIDE
CIFAR_CLASSES = 10
CIFAR_TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
CIFAR_TEST_FILE = "test_batch.bin"

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
IDX_TRAIN_IMAGES = "train-images-idx3-ubyte"
IDX_TRAIN_LABELS = "train-labels-idx1-ubyte"
IDX_TEST_IMAGES = "t10k-images-idx3-ubyte"
IDX_TEST_LABELS = "t10k-labels-idx1-ubyte"


@dataclass(eq=False)
class Dataset:
    images: np.ndarray  # uint8, (count, h, w, c)
    labels: np.ndarray
    num_classes: int
    split: str = "train"
    _features: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise ParameterError(f"images must be (count, h, w, c), got shape {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ParameterError(f"{len(self.images)} images but {len(self.labels)} labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ParameterError(f"labels must lie in [0, {self.num_classes})")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.images.shape[1:])

    def features(self) -> np.ndarray:
        """Pixels mapped to [0, 1]; computed once"""
        if self._features is None:
            self._features = self.images.astype(np.float64) / 255.0
        return self._features

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[indices], self.labels[indices], self.num_classes, self.split)

    def head(self, count: Optional[int]) -> "Dataset":
        if count is None or count >= len(self):
            return self
        return self.subset(np.arange(count))


def read_cifar10_batch(path) -> Dataset:
    """One binary batch: per record a label byte then 3072 channel-planar pixels"""
    raw = np.fromfile(path, dtype=np.uint8)
    complete = raw.size // CIFAR_RECORD
    if raw.size % CIFAR_RECORD:
        raise FormatError(f"truncated record ({raw.size % CIFAR_RECORD} of {CIFAR_RECORD} bytes)",
                          path=str(path), offset=complete * CIFAR_RECORD, record=complete)
    records = raw.reshape(complete, CIFAR_RECORD)
    labels = records[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels >= CIFAR_CLASSES)
    if bad.size:
        raise FormatError(f"label {labels[bad[0]]} exceeds {CIFAR_CLASSES - 1}",
                          path=str(path), offset=int(bad[0]) * CIFAR_RECORD, record=int(bad[0]))
    images = records[:, 1:].reshape(complete, 3, CIFAR_SIDE, CIFAR_SIDE).transpose(0, 2, 3, 1)
    return Dataset(np.ascontiguousarray(images), labels, CIFAR_CLASSES)


def load_cifar10_binary(directory) -> Tuple[Dataset, Dataset]:
    """(train, test) from the five training batches and the test batch"""
    directory = Path(directory)
    missing = [name for name in CIFAR_TRAIN_FILES + (CIFAR_TEST_FILE,) if not (directory / name).is_file()]
    if missing:
        raise ConfigurationError(f"CIFAR-10 directory {directory} lacks {', '.join(missing)}")
    batches = [read_cifar10_batch(directory / name) for name in CIFAR_TRAIN_FILES]
    train = Dataset(np.concatenate([b.images for b in batches]),
                    np.concatenate([b.labels for b in batches]), CIFAR_CLASSES, "train")
    test = read_cifar10_batch(directory / CIFAR_TEST_FILE)
    test.split = "test"
    logger.info(f"Loaded CIFAR-10 from {directory}: {len(train)} train, {len(test)} test")
    return train, test


def _read_idx(path, magic: int, dims: int) -> np.ndarray:
    raw = Path(path).read_bytes()
    header = 4 + 4 * dims
    if len(raw) < header:
        raise FormatError("file shorter than its IDX header", path=str(path), offset=len(raw))
    found = int.from_bytes(raw[:4], "big")
    if found != magic:
        raise FormatError(f"bad IDX magic 0x{found:08x}, expected 0x{magic:08x}", path=str(path), offset=0)
    shape = tuple(int.from_bytes(raw[4 + 4 * i:8 + 4 * i], "big") for i in range(dims))
    expected = header + int(np.prod(shape, dtype=np.int64))
    if len(raw) != expected:
        raise FormatError(f"payload holds {len(raw) - header} bytes, dims {shape} need {expected - header}",
                          path=str(path), offset=min(len(raw), expected))
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(shape)


def load_idx(path_images, path_labels, num_classes: Optional[int] = None, split: str = "train") -> Dataset:
    """Grayscale IDX images (n, h, w) with their labels; images get c = 1"""
    images = _read_idx(path_images, IDX_IMAGES_MAGIC, 3)
    labels = _read_idx(path_labels, IDX_LABELS_MAGIC, 1).astype(np.int64)
    if len(images) != len(labels):
        raise FormatError(f"{len(images)} images but {len(labels)} labels", path=str(path_labels))
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 1
    if labels.size and labels.max() >= num_classes:
        record = int(np.argmax(labels >= num_classes))
        raise FormatError(f"label {labels[record]} exceeds {num_classes - 1}", path=str(path_labels),
                          offset=8 + record, record=record)
    return Dataset(images[..., None].copy(), labels, num_classes, split)


def write_idx(dataset: Dataset, path_images, path_labels) -> None:
    if dataset.images.shape[3] != 1:
        raise ParameterError(f"IDX files hold grayscale images, got {dataset.images.shape[3]} channels")
    n, h, w, _ = dataset.images.shape
    header = b"".join(v.to_bytes(4, "big") for v in (IDX_IMAGES_MAGIC, n, h, w))
    Path(path_images).write_bytes(header + dataset.images[..., 0].tobytes())
    header = b"".join(v.to_bytes(4, "big") for v in (IDX_LABELS_MAGIC, n))
    Path(path_labels).write_bytes(header + dataset.labels.astype(np.uint8).tobytes())


def load_idx_dir(directory, num_classes: Optional[int] = None) -> Tuple[Dataset, Dataset]:
    """(train, test) from MNIST-style file names"""
    directory = Path(directory)
    train = load_idx(directory / IDX_TRAIN_IMAGES, directory / IDX_TRAIN_LABELS, num_classes, "train")
    test = load_idx(directory / IDX_TEST_IMAGES, directory / IDX_TEST_LABELS,
                    num_classes or train.num_classes, "test")
    if test.num_classes != train.num_classes:
        test = Dataset(test.images, test.labels, train.num_classes, "test")
    logger.info(f"Loaded IDX data from {directory}: {len(train)} train, {len(test)} test")
    return train, test


def _micro_images(labels: np.ndarray, size: int, num_classes: int, rng: np.random.Generator) -> np.ndarray:
    """Oriented stripe patterns; the class sets angle and frequency"""
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    images = np.empty((len(labels), size, size), dtype=np.uint8)
    for i, label in enumerate(labels):
        angle = np.pi * label / num_classes
        cycles = 2.0 + (label % 2)
        phase = rng.uniform(0, 2 * np.pi)
        wave = np.sin(2 * np.pi * cycles * (xs * np.cos(angle) + ys * np.sin(angle)) / size + phase)
        pixels = 128 + rng.uniform(60, 110) * wave + rng.normal(0, 20, size=(size, size))
        images[i] = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
    return images[..., None]


def make_micro_dataset(seed: int = config.MICRO_SEED, train_count: int = config.MICRO_TRAIN_COUNT,
                       test_count: int = config.MICRO_TEST_COUNT, image_size: int = config.MICRO_IMAGE_SIZE,
                       num_classes: int = config.MICRO_CLASSES) -> Tuple[Dataset, Dataset]:
    """Balanced grayscale set, deterministic in `seed`"""
    if min(train_count, test_count) < 1 or image_size < 4 or num_classes < 2:
        raise ParameterError("micro dataset needs positive counts, image_size >= 4 and >= 2 classes")
    rng = np.random.default_rng(seed)
    splits = []
    for name, count in (("train", train_count), ("test", test_count)):
        labels = rng.permutation(np.arange(count) % num_classes)
        splits.append(Dataset(_micro_images(labels, image_size, num_classes, rng), labels, num_classes, name))
    return splits[0], splits[1]


def save_micro_dataset(directory, **kwargs) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    train, test = make_micro_dataset(**kwargs)
    write_idx(train, directory / IDX_TRAIN_IMAGES, directory / IDX_TRAIN_LABELS)
    write_idx(test, directory / IDX_TEST_IMAGES, directory / IDX_TEST_LABELS)
    logger.info(f"Wrote micro dataset ({len(train)} train, {len(test)} test) to {directory}")
    return directory


def resolve_dataset(spec: str, seed: int = config.MICRO_SEED) -> Tuple[Dataset, Dataset]:
    """`micro`, `idx:<dir>` or `cifar10:<dir>`"""
    kind, _, location = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "micro" and not location:
        return make_micro_dataset(seed=seed)
    if kind in ("idx", "cifar10"):
        if not location or not os.path.isdir(location):
            raise ConfigurationError(f"dataset directory '{location}' does not exist")
        return load_idx_dir(location) if kind == "idx" else load_cifar10_binary(location)
    raise ConfigurationError(f"unknown dataset spec '{spec}'; use micro, idx:<dir> or cifar10:<dir>")


def split_for_run(train: Dataset, test: Dataset, sizes: Sequence[Optional[int]]) -> Tuple[Dataset, Dataset, Dataset]:
    """(search train, re-train, test) truncated to the configured sizes"""
    train_size, retrain_size, test_size = sizes
    return train.head(train_size), train.head(retrain_size), test.head(test_size)
