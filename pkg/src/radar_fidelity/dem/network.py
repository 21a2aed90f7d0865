"""Point-set classifier: one set-abstraction stage and hand-written backprop.

Layout: farthest-point-sampled centroids -> ball-query groups in the raw
(x, y) plane -> shared per-point MLP on scale-normalized centroid-relative
offsets plus standardized Doppler -> per-group max-pool -> global max-pool
over centroids -> global MLP -> two-way head -> softmax. Class order of the
head is (simulated, real).

Backprop runs through every stage; the max-pools route their subgradient to
the argmax element with ties resolved to the lowest index, which keeps
gradients deterministic and finite-difference checkable. Hidden activations
are tanh, so the loss is smooth almost everywhere.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..core import PointCloud
from ..metrics import EmptyCloudError
from .sampling import ball_query, farthest_point_sampling

MODEL_FORMAT = "radar-fidelity-classifier"
MODEL_VERSION = 1

# head class indices
CLASS_SIMULATED = 0
CLASS_REAL = 1


@dataclass
class ClassifierModel:
    sa_centroids: int = 16
    sa_radius: float = 2.0
    sa_max_neighbors: int = 32
    sa_mlp_widths: tuple[int, ...] = (3, 32, 64)
    global_mlp_widths: tuple[int, ...] = (64, 64)
    head_widths: tuple[int, ...] = (64, 32, 2)
    weights: dict[str, np.ndarray] = field(default_factory=dict)
    norm_mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    norm_scale: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        self.sa_mlp_widths = tuple(self.sa_mlp_widths)
        self.global_mlp_widths = tuple(self.global_mlp_widths)
        self.head_widths = tuple(self.head_widths)
        if self.sa_mlp_widths[0] != 3:
            raise ValueError("set-abstraction MLP must take 3 input features")
        if self.global_mlp_widths[0] != self.sa_mlp_widths[-1]:
            raise ValueError("global MLP input width must match pooled group features")
        if self.head_widths[0] != self.global_mlp_widths[-1]:
            raise ValueError("head input width must match global MLP output")
        if self.head_widths[-1] != 2:
            raise ValueError("head must end in the two classes (simulated, real)")
        if self.sa_centroids < 1 or self.sa_max_neighbors < 1 or self.sa_radius <= 0:
            raise ValueError("invalid set-abstraction configuration")

    def layer_names(self) -> list[str]:
        names = []
        for prefix, widths in (
            ("sa", self.sa_mlp_widths),
            ("global", self.global_mlp_widths),
            ("head", self.head_widths),
        ):
            for k in range(len(widths) - 1):
                names.append(f"{prefix}{k}")
        return names

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        for prefix, widths in (
            ("sa", self.sa_mlp_widths),
            ("global", self.global_mlp_widths),
            ("head", self.head_widths),
        ):
            for k, (w_in, w_out) in enumerate(zip(widths, widths[1:])):
                shapes[f"{prefix}{k}_W"] = (w_in, w_out)
                shapes[f"{prefix}{k}_b"] = (w_out,)
        return shapes

    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights.values())


def init_model(rng: np.random.Generator, **arch) -> ClassifierModel:
    """Fresh model with Glorot-uniform weights and zero biases."""
    model = ClassifierModel(**arch)
    for name, shape in model.expected_shapes().items():
        if name.endswith("_W"):
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            model.weights[name] = rng.uniform(-limit, limit, size=shape)
        else:
            model.weights[name] = np.zeros(shape)
    return model


def _group_cloud(model: ClassifierModel, pts: np.ndarray):
    """Centroid selection and grouping in the raw (x, y) plane.

    The FPS start point is the lexicographically smallest (x, y, doppler)
    row, so group structure depends only on the point multiset. Clouds with
    fewer points than ``sa_centroids`` use every point's budget they have.
    """
    n = len(pts)
    start = int(np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))[0])
    k = min(model.sa_centroids, n)
    centroid_idx = farthest_point_sampling(pts[:, :2], k, start)
    groups = [
        ball_query(pts[:, :2], pts[c, :2], model.sa_radius, model.sa_max_neighbors)
        for c in centroid_idx
    ]
    return centroid_idx, groups


def _forward_cached(model: ClassifierModel, pts: np.ndarray):
    """Forward pass keeping every intermediate needed by the backward pass."""
    centroid_idx, groups = _group_cloud(model, pts)
    scale = model.norm_scale
    mean = model.norm_mean

    rows = np.concatenate(groups)
    centroid_of_row = np.concatenate([np.full(len(g), gi) for gi, g in enumerate(groups)])
    feats = np.empty((len(rows), 3))
    feats[:, 0] = (pts[rows, 0] - pts[centroid_idx[centroid_of_row], 0]) / scale[0]
    feats[:, 1] = (pts[rows, 1] - pts[centroid_idx[centroid_of_row], 1]) / scale[1]
    feats[:, 2] = (pts[rows, 2] - mean[2]) / scale[2]

    w = model.weights
    cache = {"feats": feats, "groups": groups}

    sa_acts = [feats]
    h = feats
    for k in range(len(model.sa_mlp_widths) - 1):
        h = np.tanh(h @ w[f"sa{k}_W"] + w[f"sa{k}_b"])
        sa_acts.append(h)
    cache["sa_acts"] = sa_acts

    # per-group max-pool; argmax keeps the lowest row (= lowest point index,
    # ball_query returns ascending indices)
    width = h.shape[1]
    pooled = np.empty((len(groups), width))
    group_arg = np.empty((len(groups), width), dtype=int)
    offset = 0
    for gi, g in enumerate(groups):
        block = h[offset : offset + len(g)]
        local = np.argmax(block, axis=0)
        group_arg[gi] = local + offset
        pooled[gi] = block[local, np.arange(width)]
        offset += len(g)
    cache["pooled"] = pooled
    cache["group_arg"] = group_arg

    global_arg = np.argmax(pooled, axis=0)  # ties -> lowest centroid
    g_vec = pooled[global_arg, np.arange(width)]
    cache["global_arg"] = global_arg
    cache["g_vec"] = g_vec

    glob_acts = [g_vec]
    h = g_vec
    for k in range(len(model.global_mlp_widths) - 1):
        h = np.tanh(h @ w[f"global{k}_W"] + w[f"global{k}_b"])
        glob_acts.append(h)
    cache["glob_acts"] = glob_acts

    head_acts = [h]
    n_head = len(model.head_widths) - 1
    for k in range(n_head):
        h = h @ w[f"head{k}_W"] + w[f"head{k}_b"]
        if k < n_head - 1:
            h = np.tanh(h)
        head_acts.append(h)
    cache["head_acts"] = head_acts

    logits = head_acts[-1]
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    probs = exp / exp.sum()
    cache["probs"] = probs
    return logits, probs, cache


def forward(model: ClassifierModel, cloud: PointCloud) -> tuple[float, float, float]:
    """(logit_simulated, logit_real, confidence_real) for one cloud.

    Permutation-invariant in the input points; raises on empty clouds.
    """
    pts = cloud.as_array()
    if len(pts) == 0:
        raise EmptyCloudError("cannot classify an empty cloud")
    logits, probs, _ = _forward_cached(model, pts)
    return float(logits[CLASS_SIMULATED]), float(logits[CLASS_REAL]), float(probs[CLASS_REAL])


def loss_and_grads(model: ClassifierModel, pts: np.ndarray, label: int):
    """Cross-entropy loss of one cloud and its gradient for every parameter."""
    logits, probs, cache = _forward_cached(model, pts)
    loss = -float(np.log(max(probs[label], 1e-300)))

    w = model.weights
    grads = {name: np.zeros_like(arr) for name, arr in w.items()}

    dlogits = probs.copy()
    dlogits[label] -= 1.0

    # head (last layer linear, earlier ones tanh)
    head_acts = cache["head_acts"]
    delta = dlogits
    for k in range(len(model.head_widths) - 2, -1, -1):
        grads[f"head{k}_W"] += np.outer(head_acts[k], delta)
        grads[f"head{k}_b"] += delta
        delta = w[f"head{k}_W"] @ delta
        if k > 0:
            delta = delta * (1.0 - head_acts[k] ** 2)

    glob_acts = cache["glob_acts"]
    for k in range(len(model.global_mlp_widths) - 2, -1, -1):
        delta = delta * (1.0 - glob_acts[k + 1] ** 2)
        grads[f"global{k}_W"] += np.outer(glob_acts[k], delta)
        grads[f"global{k}_b"] += delta
        delta = w[f"global{k}_W"] @ delta

    # route through the global max-pool to the winning centroids
    pooled = cache["pooled"]
    width = pooled.shape[1]
    d_pooled = np.zeros_like(pooled)
    d_pooled[cache["global_arg"], np.arange(width)] = delta

    # route through the per-group max-pools to the winning rows; the same
    # row can win for several groups, so contributions accumulate
    sa_acts = cache["sa_acts"]
    d_rows = np.zeros_like(sa_acts[-1])
    group_arg = cache["group_arg"]
    cols = np.broadcast_to(np.arange(width), group_arg.shape)
    np.add.at(d_rows, (group_arg, cols), d_pooled)

    delta_rows = d_rows
    for k in range(len(model.sa_mlp_widths) - 2, -1, -1):
        delta_rows = delta_rows * (1.0 - sa_acts[k + 1] ** 2)
        grads[f"sa{k}_W"] += sa_acts[k].T @ delta_rows
        grads[f"sa{k}_b"] += delta_rows.sum(axis=0)
        delta_rows = delta_rows @ w[f"sa{k}_W"].T

    return loss, grads


def flatten_params(tensors: dict[str, np.ndarray], names: list[str]) -> np.ndarray:
    parts = []
    for name in names:
        parts.append(tensors[f"{name}_W"].ravel())
        parts.append(tensors[f"{name}_b"].ravel())
    return np.concatenate(parts)


def save_model(path, model: ClassifierModel) -> None:
    """Single self-describing file: JSON header line, then all tensors
    (norm stats first, weights in layer order) as little-endian float64."""
    tensor_order = ["norm_mean", "norm_scale"]
    shapes = model.expected_shapes()
    for name in model.layer_names():
        tensor_order += [f"{name}_W", f"{name}_b"]
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "sa_centroids": model.sa_centroids,
        "sa_radius": model.sa_radius,
        "sa_max_neighbors": model.sa_max_neighbors,
        "sa_mlp_widths": list(model.sa_mlp_widths),
        "global_mlp_widths": list(model.global_mlp_widths),
        "head_widths": list(model.head_widths),
        "tensors": [[t, list(_tensor_shape(model, t, shapes))] for t in tensor_order],
    }
    buf = io.BytesIO()
    buf.write(json.dumps(header, sort_keys=True).encode())
    buf.write(b"\n")
    for t in tensor_order:
        arr = model.weights[t] if t in model.weights else getattr(model, t)
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def _tensor_shape(model, name, shapes):
    if name in ("norm_mean", "norm_scale"):
        return (3,)
    return shapes[name]


def load_model(path) -> ClassifierModel:
    """Load and validate a saved model; dimension mismatches are rejected."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        blob = fh.read()
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not a model file: {exc}") from exc
    if header.get("format") != MODEL_FORMAT:
        raise ValueError("unrecognized model format tag")
    if header.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {header.get('version')}")

    model = ClassifierModel(
        sa_centroids=header["sa_centroids"],
        sa_radius=header["sa_radius"],
        sa_max_neighbors=header["sa_max_neighbors"],
        sa_mlp_widths=tuple(header["sa_mlp_widths"]),
        global_mlp_widths=tuple(header["global_mlp_widths"]),
        head_widths=tuple(header["head_widths"]),
    )
    expected = model.expected_shapes()
    expected["norm_mean"] = (3,)
    expected["norm_scale"] = (3,)

    listed = {name: tuple(shape) for name, shape in header["tensors"]}
    if set(listed) != set(expected):
        raise ValueError("model file tensor list does not match the architecture")
    for name, shape in listed.items():
        if shape != expected[name]:
            raise ValueError(f"dimension mismatch for {name}: {shape} vs {expected[name]}")

    total = sum(int(np.prod(shape)) for shape in listed.values())
    if len(blob) != 8 * total:
        raise ValueError("model file payload size does not match declared shapes")

    offset = 0
    for name, shape in header["tensors"]:
        size = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f8", count=size, offset=8 * offset).reshape(shape).copy()
        offset += size
        if name == "norm_mean":
            model.norm_mean = arr
        elif name == "norm_scale":
            model.norm_scale = arr
        else:
            model.weights[name] = arr
    return model
