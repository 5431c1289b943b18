"""The L-layer sign-aware spectral convolutional network with explicit gradients.

Layer ell+1 (1-indexed) applies the order-(ell+1) polynomial filter of the
normalized positive and negative adjacencies to the previous embeddings,
passes each branch and a plain linear branch through PReLU, concatenates the
three branches in the fixed order (pos, neg, org), and mixes them with one
linear map. Backpropagation is hand-written; filters are symmetric, so each
polynomial application is its own adjoint.
"""

from __future__ import annotations

import copy
import dataclasses
import itertools
import json
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .filters import FIRST_ORDER_CHOICES, GegenbauerParams, gegenbauer_apply
from .graph import SignedBipartiteGraph, EdgeSplit, build_sign_matrices, \
    normalize_adjacency, symmetrize
from .metrics import evaluate
from .validation import check_dense, check_pairs

_SCORE_EPS = 1e-7
_CKPT_MAGIC = b"GGNETCKP"
_CKPT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """Training hit a non-finite loss; carries the last finite state."""

    def __init__(self, message, params=None, history=None):
        super().__init__(message)
        self.params = params
        self.history = history or []


@dataclass(frozen=True)
class ModelConfig:
    layers: int = 3
    embed_dim: int = 32
    feature_dim: int = 32
    alpha: float = 1.5
    delta: float = 1.0
    mu: float = 0.3
    dropout: float = 0.5
    learning_rate: float = 0.01
    weight_decay: float = 1e-5
    max_epochs: int = 300
    patience: int = 50
    seed: int = 0
    first_order_coefficient: str = "alpha_plus_half"

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.embed_dim < 1 or self.feature_dim < 1:
            raise ValueError("dimensions must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        if self.learning_rate <= 0 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("learning_rate, max_epochs, patience must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.first_order_coefficient not in FIRST_ORDER_CHOICES:
            raise ValueError(f"first_order_coefficient must be one of {FIRST_ORDER_CHOICES}")

    def gegenbauer(self) -> GegenbauerParams:
        return GegenbauerParams(alpha=self.alpha, first_order=self.first_order_coefficient)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class LayerParams:
    w_pos: np.ndarray
    w_neg: np.ndarray
    w_org: np.ndarray
    w_cat: np.ndarray
    slope_pos: np.ndarray  # 0-d learnable PReLU slopes, one per branch
    slope_neg: np.ndarray
    slope_org: np.ndarray


@dataclass
class PredictorParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass
class ModelParams:
    w0: np.ndarray
    layers: list[LayerParams]
    predictor: PredictorParams

    def named_arrays(self):
        """All learnable tensors in a fixed, documented order."""
        yield "w0", self.w0
        for i, lp in enumerate(self.layers):
            yield f"layer{i}.w_pos", lp.w_pos
            yield f"layer{i}.w_neg", lp.w_neg
            yield f"layer{i}.w_org", lp.w_org
            yield f"layer{i}.w_cat", lp.w_cat
            yield f"layer{i}.slope_pos", lp.slope_pos
            yield f"layer{i}.slope_neg", lp.slope_neg
            yield f"layer{i}.slope_org", lp.slope_org
        yield "predictor.w1", self.predictor.w1
        yield "predictor.b1", self.predictor.b1
        yield "predictor.w2", self.predictor.w2
        yield "predictor.b2", self.predictor.b2

    def copy(self) -> "ModelParams":
        return copy.deepcopy(self)

    def zeros_like(self) -> "ModelParams":
        out = self.copy()
        for _, arr in out.named_arrays():
            arr[...] = 0.0
        return out

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(arr)) for _, arr in self.named_arrays())


def is_decayed(name: str) -> bool:
    """Weight decay applies to weight matrices, not biases or PReLU slopes."""
    return "slope" not in name and name not in ("predictor.b1", "predictor.b2")


def init_params(cfg: ModelConfig, rng: np.random.Generator | None = None) -> ModelParams:
    """Fan-in-scaled symmetric uniform init, PReLU slopes at 0.25, seeded."""
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
    e = cfg.embed_dim

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    w0 = uniform((cfg.feature_dim, e), cfg.feature_dim)
    layers = []
    for _ in range(cfg.layers):
        layers.append(LayerParams(
            w_pos=uniform((e, e), e),
            w_neg=uniform((e, e), e),
            w_org=uniform((e, e), e),
            w_cat=uniform((3 * e, e), 3 * e),
            slope_pos=np.array(0.25),
            slope_neg=np.array(0.25),
            slope_org=np.array(0.25),
        ))
    predictor = PredictorParams(
        w1=uniform((2 * e, e), 2 * e),
        b1=uniform((e,), 2 * e),
        w2=uniform((e,), e),
        b2=np.array(float(uniform((), e))),
    )
    return ModelParams(w0=w0, layers=layers, predictor=predictor)


@dataclass
class _LayerCache:
    dropped: np.ndarray
    mask: np.ndarray | None
    p_pos: np.ndarray
    p_neg: np.ndarray
    pre_pos: np.ndarray
    pre_neg: np.ndarray
    pre_org: np.ndarray
    hcat: np.ndarray


@dataclass
class ForwardCache:
    x: np.ndarray
    a_pos: sp.csr_matrix
    a_neg: sp.csr_matrix
    h_list: list[np.ndarray]
    layers: list[_LayerCache]
    # filled by predict_scores when given a cache
    pairs: np.ndarray | None = None
    scatter_u: sp.csr_matrix | None = None
    scatter_v: sp.csr_matrix | None = None
    e_in: np.ndarray | None = None
    hidden_pre: np.ndarray | None = None
    hidden: np.ndarray | None = None
    scores: np.ndarray | None = None


def _prelu(x, slope):
    return np.where(x > 0, x, slope * x)


def _prelu_grad_x(x, slope):
    return np.where(x > 0, 1.0, float(slope))


def forward(params: ModelParams, x: np.ndarray, a_pos_hat: sp.spmatrix,
            a_neg_hat: sp.spmatrix, cfg: ModelConfig, training: bool = False,
            rng: np.random.Generator | None = None):
    """Run the network; returns (z, cache). The cache is None outside training."""
    x = check_dense(x, "x")
    if x.shape[1] != cfg.feature_dim:
        raise ValueError(f"x has {x.shape[1]} columns, config expects {cfg.feature_dim}")
    if a_pos_hat.shape[0] != x.shape[0] or a_neg_hat.shape[0] != x.shape[0]:
        raise ValueError("adjacency size does not match feature rows")
    if training and cfg.dropout > 0 and rng is None:
        raise ValueError("training with dropout requires an rng")
    geg = cfg.gegenbauer()
    e = cfg.embed_dim

    h = x @ params.w0
    h_list = [h]
    layer_caches: list[_LayerCache] = []
    for ell, lp in enumerate(params.layers):
        order = ell + 1
        if training and cfg.dropout > 0:
            mask = (rng.random(h.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
            dropped = h * mask
        else:
            mask = None
            dropped = h
        p_pos = gegenbauer_apply(a_pos_hat, dropped, order, geg)
        p_neg = gegenbauer_apply(a_neg_hat, dropped, order, geg)
        pre_pos = cfg.delta * (p_pos @ lp.w_pos)
        pre_neg = cfg.delta * (p_neg @ lp.w_neg)
        pre_org = dropped @ lp.w_org
        h_pos = _prelu(pre_pos, lp.slope_pos)
        h_neg = _prelu(pre_neg, lp.slope_neg)
        h_org = _prelu(pre_org, lp.slope_org)
        for branch, hb in (("pos", h_pos), ("neg", h_neg), ("org", h_org)):
            if not np.all(np.isfinite(hb)):
                raise FloatingPointError(f"non-finite activation in layer {order} branch {branch}")
        hcat = np.concatenate([h_pos, h_neg, h_org], axis=1)
        h = hcat @ lp.w_cat
        h_list.append(h)
        if training:
            layer_caches.append(_LayerCache(
                dropped=dropped, mask=mask, p_pos=p_pos, p_neg=p_neg,
                pre_pos=pre_pos, pre_neg=pre_neg, pre_org=pre_org, hcat=hcat))
    if not training:
        return h, None
    cache = ForwardCache(x=x, a_pos=a_pos_hat, a_neg=a_neg_hat,
                         h_list=h_list, layers=layer_caches)
    return h, cache


def _scatter_matrix(rows, n, m):
    return sp.csr_matrix((np.ones(m), (rows, np.arange(m))), shape=(n, m))


def predict_scores(params: ModelParams, z: np.ndarray, pairs,
                   cache: ForwardCache | None = None) -> np.ndarray:
    """Sigmoid 2-layer MLP score for joint-index (u_row, v_row) pairs."""
    pairs = check_pairs(pairs, z.shape[0])
    pp = params.predictor
    e_in = np.concatenate([z[pairs[:, 0]], z[pairs[:, 1]]], axis=1)
    hidden_pre = e_in @ pp.w1 + pp.b1
    hidden = np.maximum(hidden_pre, 0.0)
    out = hidden @ pp.w2 + float(pp.b2)
    scores = expit(out)
    if cache is not None:
        m, n = pairs.shape[0], z.shape[0]
        cache.pairs = pairs
        cache.scatter_u = _scatter_matrix(pairs[:, 0], n, m)
        cache.scatter_v = _scatter_matrix(pairs[:, 1], n, m)
        cache.e_in = e_in
        cache.hidden_pre = hidden_pre
        cache.hidden = hidden
        cache.scores = scores
    return scores


def _clip_scores(scores):
    return np.clip(scores, _SCORE_EPS, 1.0 - _SCORE_EPS)


def bce_loss(scores, labels) -> float:
    """Mean cross-entropy with labels in {0, 1}; scores clamped away from 0/1."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape:
        raise ValueError(f"length mismatch: {scores.shape} scores vs {labels.shape} labels")
    s = _clip_scores(scores)
    return float(np.mean(-labels * np.log(s) - (1.0 - labels) * np.log(1.0 - s)))


def bce_loss_grad(scores, labels):
    """(loss, d loss / d scores) for the mean cross-entropy."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    loss = bce_loss(scores, labels)
    s = _clip_scores(scores)
    d_scores = (s - labels) / (s * (1.0 - s)) / len(scores)
    return loss, d_scores


def signs_to_labels(signs) -> np.ndarray:
    """Map signs {-1, +1} to labels {0, 1}."""
    signs = np.asarray(signs, dtype=np.int64)
    return ((signs + 1) // 2).astype(np.float64)


def backward(cache: ForwardCache, params: ModelParams, d_scores,
             cfg: ModelConfig, weight_decay: float = 0.0) -> ModelParams:
    """Exact reverse-mode gradients for every parameter, PReLU slopes included.

    Expects a training-mode cache whose predictor fields were filled by
    predict_scores. When weight_decay is positive, lam * w is added to the
    gradient of every decayed tensor.
    """
    if cache.scores is None:
        raise ValueError("cache has no predictor state; call predict_scores with cache")
    d_scores = np.asarray(d_scores, dtype=np.float64)
    if d_scores.shape != cache.scores.shape:
        raise ValueError("stale cache: d_scores shape mismatch")
    grads = params.zeros_like()
    pp = params.predictor
    e = cfg.embed_dim

    s = _clip_scores(cache.scores)
    d_out = d_scores * s * (1.0 - s)
    grads.predictor.b2[...] = d_out.sum()
    grads.predictor.w2[...] = cache.hidden.T @ d_out
    d_hidden = np.outer(d_out, pp.w2)
    d_hidden_pre = d_hidden * (cache.hidden_pre > 0)
    grads.predictor.w1[...] = cache.e_in.T @ d_hidden_pre
    grads.predictor.b1[...] = d_hidden_pre.sum(axis=0)
    d_e = d_hidden_pre @ pp.w1.T
    d_h = cache.scatter_u @ d_e[:, :e] + cache.scatter_v @ d_e[:, e:]

    geg = cfg.gegenbauer()
    for ell in reversed(range(len(params.layers))):
        lp = params.layers[ell]
        lc = cache.layers[ell]
        glp = grads.layers[ell]
        order = ell + 1

        grads_wcat = lc.hcat.T @ d_h
        glp.w_cat[...] = grads_wcat
        d_hcat = d_h @ lp.w_cat.T
        d_hpos, d_hneg, d_horg = d_hcat[:, :e], d_hcat[:, e:2 * e], d_hcat[:, 2 * e:]

        glp.slope_pos[...] = np.sum(d_hpos * np.where(lc.pre_pos > 0, 0.0, lc.pre_pos))
        glp.slope_neg[...] = np.sum(d_hneg * np.where(lc.pre_neg > 0, 0.0, lc.pre_neg))
        glp.slope_org[...] = np.sum(d_horg * np.where(lc.pre_org > 0, 0.0, lc.pre_org))

        d_pre_pos = d_hpos * _prelu_grad_x(lc.pre_pos, lp.slope_pos)
        d_pre_neg = d_hneg * _prelu_grad_x(lc.pre_neg, lp.slope_neg)
        d_pre_org = d_horg * _prelu_grad_x(lc.pre_org, lp.slope_org)

        glp.w_pos[...] = cfg.delta * (lc.p_pos.T @ d_pre_pos)
        glp.w_neg[...] = cfg.delta * (lc.p_neg.T @ d_pre_neg)
        glp.w_org[...] = lc.dropped.T @ d_pre_org

        d_p_pos = cfg.delta * (d_pre_pos @ lp.w_pos.T)
        d_p_neg = cfg.delta * (d_pre_neg @ lp.w_neg.T)
        # the polynomial of a symmetric operator is symmetric: self-adjoint pullback
        d_dropped = gegenbauer_apply(cache.a_pos, d_p_pos, order, geg)
        d_dropped += gegenbauer_apply(cache.a_neg, d_p_neg, order, geg)
        d_dropped += d_pre_org @ lp.w_org.T
        d_h = d_dropped * lc.mask if lc.mask is not None else d_dropped

    grads.w0[...] = cache.x.T @ d_h

    if weight_decay > 0:
        params_by_name = dict(params.named_arrays())
        for name, garr in grads.named_arrays():
            if is_decayed(name):
                garr += weight_decay * params_by_name[name]
    return grads


def linearized_forward(params: ModelParams, x: np.ndarray, a_pos_hat, a_neg_hat,
                       cfg: ModelConfig) -> np.ndarray:
    """Sum-of-operator-products expansion of the linear network.

    Enumerates all 3^L assignments of {pos filter, neg filter, identity} to
    the layers and sums the corresponding operator product applied to x with
    its per-term weight chain. Equals forward() with PReLU slopes 1 and no
    dropout. Test oracle; L is capped at 6.
    """
    if cfg.layers > 6:
        raise ValueError(f"expansion limited to 6 layers, got {cfg.layers}")
    geg = cfg.gegenbauer()
    e = cfg.embed_dim
    base = check_dense(x, "x") @ params.w0
    total = np.zeros((x.shape[0], e))
    for combo in itertools.product(("pos", "neg", "org"), repeat=cfg.layers):
        term = base
        for ell, branch in enumerate(combo):
            lp = params.layers[ell]
            order = ell + 1
            if branch == "pos":
                term = cfg.delta * gegenbauer_apply(a_pos_hat, term, order, geg)
                term = term @ (lp.w_pos @ lp.w_cat[:e])
            elif branch == "neg":
                term = cfg.delta * gegenbauer_apply(a_neg_hat, term, order, geg)
                term = term @ (lp.w_neg @ lp.w_cat[e:2 * e])
            else:
                term = term @ (lp.w_org @ lp.w_cat[2 * e:])
        total += term
    return total


def linearized_term_count(layers: int) -> int:
    return 3 ** layers


@dataclass
class TrainResult:
    params: ModelParams
    history: list[dict]
    best_epoch: int

    @property
    def epochs_run(self) -> int:
        return len(self.history)


def _adam_step(params, grads, state, t, lr, weight_decay,
               beta1=0.9, beta2=0.999, eps=1e-8):
    """Adaptive-moment update with decoupled weight decay."""
    params_named = dict(params.named_arrays())
    for name, g in grads.named_arrays():
        m, v = state[name]
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * np.square(g)
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        w = params_named[name]
        w -= lr * m_hat / (np.sqrt(v_hat) + eps)
        if weight_decay > 0 and is_decayed(name):
            w -= lr * weight_decay * w


def train(g: SignedBipartiteGraph, split: EdgeSplit, features: np.ndarray,
          cfg: ModelConfig, log=None) -> TrainResult:
    """Full-batch training with validation-AUC checkpointing and patience.

    The positive/negative adjacencies are built from the train split alone.
    Retains the parameters of the best validation epoch; when the validation
    part is empty or single-class, early stopping is disabled and the final
    parameters are kept.
    """
    matrices = build_sign_matrices(g, split.train)
    a_pos_hat = normalize_adjacency(symmetrize(matrices.a_pos))
    a_neg_hat = normalize_adjacency(symmetrize(matrices.a_neg))
    x = check_dense(features, "features")

    train_pairs = g.joint_pairs(split.train)
    train_labels = signs_to_labels(g.edge_signs(split.train))
    val_pairs = g.joint_pairs(split.validation)
    val_signs = g.edge_signs(split.validation)
    val_usable = len(val_signs) > 0 and len(np.unique(val_signs)) == 2

    seq = np.random.SeedSequence(cfg.seed)
    init_seq, dropout_seq = seq.spawn(2)
    params = init_params(cfg, np.random.Generator(np.random.PCG64(init_seq)))
    dropout_rng = np.random.Generator(np.random.PCG64(dropout_seq))

    state = {name: (np.zeros_like(arr), np.zeros_like(arr))
             for name, arr in params.named_arrays()}
    history: list[dict] = []
    best_params = params.copy()
    best_auc = -np.inf
    best_epoch = 0
    stale = 0

    for epoch in range(1, cfg.max_epochs + 1):
        try:
            z, cache = forward(params, x, a_pos_hat, a_neg_hat, cfg,
                               training=True, rng=dropout_rng)
        except FloatingPointError as exc:
            raise TrainingDivergedError(
                f"divergence at epoch {epoch}: {exc}",
                params=best_params, history=history) from exc
        scores = predict_scores(params, z, train_pairs, cache=cache)
        loss, d_scores = bce_loss_grad(scores, train_labels)
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite loss at epoch {epoch}", params=best_params, history=history)
        grads = backward(cache, params, d_scores, cfg)
        _adam_step(params, grads, state, epoch, cfg.learning_rate, cfg.weight_decay)

        record = {"epoch": epoch, "train_loss": loss, "val_auc": None, "val_macro_f1": None}
        if not params.all_finite():
            history.append(record)
            raise TrainingDivergedError(
                f"non-finite parameters at epoch {epoch}", params=best_params, history=history)
        if val_usable:
            z_eval, _ = forward(params, x, a_pos_hat, a_neg_hat, cfg, training=False)
            val_scores = predict_scores(params, z_eval, val_pairs)
            val_metrics = evaluate(val_scores, val_signs)
            record["val_auc"] = val_metrics.auc
            record["val_macro_f1"] = val_metrics.macro_f1
            if val_metrics.auc > best_auc:
                best_auc = val_metrics.auc
                best_params = params.copy()
                best_epoch = epoch
                stale = 0
            else:
                stale += 1
        history.append(record)
        if log is not None:
            log(record)
        if val_usable and stale >= cfg.patience:
            break

    if not val_usable:
        best_params = params.copy()
        best_epoch = len(history)
    return TrainResult(params=best_params, history=history, best_epoch=best_epoch)


def score_edges(g: SignedBipartiteGraph, split: EdgeSplit, features: np.ndarray,
                params: ModelParams, cfg: ModelConfig, edge_indices) -> np.ndarray:
    """Inference scores for a set of edge indices, matrices from the train split."""
    matrices = build_sign_matrices(g, split.train)
    a_pos_hat = normalize_adjacency(symmetrize(matrices.a_pos))
    a_neg_hat = normalize_adjacency(symmetrize(matrices.a_neg))
    z, _ = forward(params, features, a_pos_hat, a_neg_hat, cfg, training=False)
    return predict_scores(params, z, g.joint_pairs(edge_indices))


def save_checkpoint(path, cfg: ModelConfig, params: ModelParams) -> None:
    """Versioned binary checkpoint: config, then named tensors (shape + LE float64)."""
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<I", _CKPT_VERSION))
        cfg_bytes = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")
        f.write(struct.pack("<I", len(cfg_bytes)))
        f.write(cfg_bytes)
        tensors = list(params.named_arrays())
        f.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors:
            name_bytes = name.encode("utf-8")
            f.write(struct.pack("<I", len(name_bytes)))
            f.write(name_bytes)
            f.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<I", dim))
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ModelConfig, ModelParams]:
    with open(path, "rb") as f:
        if f.read(len(_CKPT_MAGIC)) != _CKPT_MAGIC:
            raise ValueError(f"{path} is not a model checkpoint")
        (version,) = struct.unpack("<I", f.read(4))
        if version != _CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (cfg_len,) = struct.unpack("<I", f.read(4))
        cfg = ModelConfig.from_dict(json.loads(f.read(cfg_len).decode("utf-8")))
        (count,) = struct.unpack("<I", f.read(4))
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", f.read(4))
            name = f.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<I", f.read(4))
            shape = tuple(struct.unpack("<I", f.read(4))[0] for _ in range(ndim))
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(f.read(size * 8), dtype="<f8").reshape(shape).copy()
            tensors[name] = data if shape else np.array(float(data))
    params = init_params(cfg)
    for name, arr in params.named_arrays():
        if name not in tensors:
            raise ValueError(f"checkpoint missing tensor {name}")
        if tensors[name].shape != arr.shape:
            raise ValueError(f"checkpoint tensor {name} has shape {tensors[name].shape}, "
                             f"expected {arr.shape}")
        arr[...] = tensors[name]
    return cfg, params
