"""
Per-layer weight tensors with inheritance from a parent and binary checkpoints
"""
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Set, Tuple

import numpy as np

from ..cgpnet.genotype import Coord
from ..netir.graph import Layer, LayerGraph
from ..netir.shapes import LayerOp
from ..utils.errors import FormatError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

REGULARIZED_KEYS = ("kernel",)
CHECKPOINT_VERSION = 1


def tensor_shapes(layer: Layer) -> Dict[str, Tuple[int, ...]]:
    """Tensor shapes a trainable layer needs, keyed by tensor name"""
    if layer.op is LayerOp.CONV:
        k, cin, cout = layer.params["kernel"], layer.in_shapes[0].channels, layer.out_shape.channels
        return {"kernel": (k, k, cin, cout), "bias": (cout,)}
    if layer.op is LayerOp.DENSE:
        return {"kernel": (layer.in_shapes[0].size, layer.out_shape.channels),
                "bias": (layer.out_shape.channels,)}
    if layer.op is LayerOp.BATCH_NORM:
        c = layer.out_shape.channels
        return {"gamma": (c,), "beta": (c,), "mean": (c,), "var": (c,)}
    return {}


def initial_tensors(layer: Layer, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    """He-uniform kernels, zero biases, identity batch normalization"""
    shapes = tensor_shapes(layer)
    if layer.op is LayerOp.BATCH_NORM:
        c = shapes["gamma"][0]
        return {"gamma": np.ones(c), "beta": np.zeros(c), "mean": np.zeros(c), "var": np.ones(c)}
    kernel_shape = shapes["kernel"]
    fan_in = int(np.prod(kernel_shape[:-1]))
    limit = np.sqrt(6.0 / fan_in)
    return {"kernel": rng.uniform(-limit, limit, size=kernel_shape),
            "bias": np.zeros(shapes["bias"])}


@dataclass
class WeightStore:
    """Float64 tensors keyed by layer name; names carry the node coordinate"""
    tensors: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)
    owner: str = ""
    reinit: Set[Coord] = field(default_factory=set)
    fresh: Set[str] = field(default_factory=set)

    def copy(self, owner: Optional[str] = None) -> "WeightStore":
        return WeightStore(
            tensors={name: {key: value.copy() for key, value in entry.items()}
                     for name, entry in self.tensors.items()},
            owner=self.owner if owner is None else owner,
            reinit=set(self.reinit),
            fresh=set(self.fresh),
        )

    def inherit(self, owner: str, reinit: Iterable[Coord]) -> "WeightStore":
        """Child store starting from these weights; layers of `reinit` nodes get fresh values"""
        child = self.copy(owner)
        child.reinit = {Coord(*coord) for coord in reinit}
        child.fresh = set()
        return child

    def prepare(self, graph: LayerGraph, rng: np.random.Generator) -> "WeightStore":
        """Make every trainable layer present with the right shapes.

        Missing layers, layers whose shapes changed and layers of flagged nodes are
        initialized; entries for layers absent from the graph are dropped.
        """
        wanted = {}
        for layer in graph.trainable_layers():
            shapes = tensor_shapes(layer)
            entry = self.tensors.get(layer.name)
            stale = (entry is None
                     or (layer.origin is not None and layer.origin in self.reinit)
                     or any(key not in entry or entry[key].shape != shape for key, shape in shapes.items()))
            if stale:
                entry = initial_tensors(layer, rng)
                self.fresh.add(layer.name)
            wanted[layer.name] = entry
        dropped = set(self.tensors) - set(wanted)
        self.tensors = wanted
        if self.fresh or dropped:
            logger.debug(f"Weights {self.owner or '-'}: {len(self.fresh)} initialized, {len(dropped)} dropped")
        return self

    def clear_reinit(self) -> None:
        self.reinit.clear()
        self.fresh.clear()

    def __getitem__(self, name: str) -> Dict[str, np.ndarray]:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def parameter_count(self) -> int:
        return sum(value.size for entry in self.tensors.values()
                   for key, value in entry.items() if key not in ("mean", "var"))

    def checksum(self) -> str:
        """sha256 over name-ordered float32 tensors"""
        digest = hashlib.sha256()
        for name in sorted(self.tensors):
            for key in sorted(self.tensors[name]):
                digest.update(f"{name}/{key}".encode("utf-8"))
                digest.update(np.ascontiguousarray(self.tensors[name][key], dtype="<f4").tobytes())
        return digest.hexdigest()


def save_checkpoint(store: WeightStore, path) -> Tuple[Path, Path]:
    """Write `<path>.json` (layer order and dims) and `<path>.bin` (little-endian float32)"""
    base = Path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    manifest_path, blob_path = base.with_suffix(".json"), base.with_suffix(".bin")

    entries, offset, chunks = [], 0, []
    for name in sorted(store.tensors):
        for key in sorted(store.tensors[name]):
            data = np.ascontiguousarray(store.tensors[name][key], dtype="<f4")
            entries.append({"layer": name, "tensor": key, "shape": list(data.shape),
                            "offset": offset, "count": int(data.size)})
            chunks.append(data.tobytes())
            offset += data.size
    blob_path.write_bytes(b"".join(chunks))
    manifest = {"version": CHECKPOINT_VERSION, "owner": store.owner, "dtype": "float32-le",
                "total": offset, "tensors": entries}
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    logger.info(f"Saved checkpoint with {len(entries)} tensors to {blob_path}")
    return manifest_path, blob_path


def load_checkpoint(path) -> WeightStore:
    base = Path(path)
    manifest_path, blob_path = base.with_suffix(".json"), base.with_suffix(".bin")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"checkpoint manifest is not valid JSON: {e}", path=str(manifest_path)) from e

    if manifest.get("version") != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {manifest.get('version')}", path=str(manifest_path))
    blob = np.frombuffer(blob_path.read_bytes(), dtype="<f4")
    if blob.size != manifest.get("total"):
        raise FormatError(f"checkpoint holds {blob.size} floats, manifest lists {manifest.get('total')}",
                          path=str(blob_path), offset=int(blob.size) * 4)

    tensors: Dict[str, Dict[str, np.ndarray]] = {}
    for index, entry in enumerate(manifest["tensors"]):
        start, count = int(entry["offset"]), int(entry["count"])
        shape = tuple(entry["shape"])
        if start + count > blob.size or int(np.prod(shape, dtype=np.int64)) != count:
            raise FormatError(f"tensor {entry['layer']}/{entry['tensor']} does not fit the blob",
                              path=str(blob_path), offset=start * 4, record=index)
        tensors.setdefault(entry["layer"], {})[entry["tensor"]] = \
            blob[start:start + count].astype(np.float64).reshape(shape)
    return WeightStore(tensors=tensors, owner=manifest.get("owner", ""))
