"""Self-contained oracle property suite over synthetic graphs.

Each check re-derives an expected result through an independent route (dense
decompositions, term expansions, finite differences) and compares it to the
fast production path. Used by the ``selftest`` CLI subcommand.
"""

from __future__ import annotations

import numpy as np

from .features import spectral_features
from .filters import GegenbauerParams, gegenbauer_apply, gegenbauer_scalar
from .graph import build_sign_matrices, cosine_block_matrix, laplacian, \
    normalize_adjacency, split_edges, symmetrize
from .linalg import dense_eig, top_left_singular_vectors
from .model import ModelConfig, backward, bce_loss, bce_loss_grad, forward, \
    init_params, linearized_forward, predict_scores, signs_to_labels
from .synthetic import planted_graph


def _random_symmetric_contraction(rng, n):
    m = rng.standard_normal((n, n))
    m = 0.5 * (m + m.T)
    return m / (np.abs(np.linalg.eigvalsh(m)).max() + 1e-9)


def check_spectral_equivalence(seed=0, n=60, max_k=8) -> float:
    """gegenbauer_apply against U diag(J_k(lambda)) U^T h."""
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for alpha in (0.5, 1.0, 1.5):
        params = GegenbauerParams(alpha=alpha)
        a = _random_symmetric_contraction(rng, n)
        h = rng.standard_normal((n, 3))
        pairs = dense_eig(a)
        for k in range(max_k + 1):
            fast = gegenbauer_apply(a, h, k, params)
            filt = gegenbauer_scalar(pairs.values, k, params)
            slow = (pairs.vectors * filt) @ (pairs.vectors.T @ h)
            worst = max(worst, float(np.abs(fast - slow).max()))
    return worst


def check_svd_subspace(seed=0) -> float:
    """Top-d left singular subspace against the dense Gram eigenbasis."""
    g = planted_graph(30, 40, 220, seed=seed)
    b = cosine_block_matrix(build_sign_matrices(g).a_all)
    d = 6
    _, u = top_left_singular_vectors(b, d, seed=seed)
    gram = (b @ b.T).toarray()
    dense = dense_eig(gram).vectors[:, ::-1][:, :d]
    gap = np.linalg.norm(u @ u.T - dense @ dense.T)
    return float(gap)


def check_ky_fan(seed=0) -> int:
    """Both trace bounds against random orthonormal bases; returns violations."""
    g = planted_graph(25, 30, 180, seed=seed)
    matrices = build_sign_matrices(g)
    lap = laplacian(symmetrize(matrices.a_all))
    b = cosine_block_matrix(matrices.a_all)
    feats = spectral_features(g, d=5, mu=0.3, seed=seed)
    gram = (b @ b.T).toarray()
    lap_d = lap.toarray()
    t_phi = np.trace(feats.phi.T @ lap_d @ feats.phi)
    t_psi = np.trace(feats.psi.T @ gram @ feats.psi)
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    violations = 0
    for _ in range(100):
        q, _ = np.linalg.qr(rng.standard_normal((g.n_nodes, 5)))
        if t_phi > np.trace(q.T @ lap_d @ q) + 1e-8:
            violations += 1
        if t_psi < np.trace(q.T @ gram @ q) - 1e-8:
            violations += 1
    return violations


def check_linearization(seed=0) -> float:
    """Slope-1, dropout-0 forward against the 3^L term expansion."""
    rng = np.random.Generator(np.random.PCG64(seed))
    g = planted_graph(8, 9, 30, seed=seed)
    matrices = build_sign_matrices(g)
    a_pos = normalize_adjacency(symmetrize(matrices.a_pos))
    a_neg = normalize_adjacency(symmetrize(matrices.a_neg))
    worst = 0.0
    for layers in (1, 2):
        cfg = ModelConfig(layers=layers, embed_dim=5, feature_dim=4, dropout=0.0,
                          delta=1.3, seed=seed)
        params = init_params(cfg, rng)
        for lp in params.layers:
            lp.slope_pos[...] = 1.0
            lp.slope_neg[...] = 1.0
            lp.slope_org[...] = 1.0
        x = rng.standard_normal((g.n_nodes, cfg.feature_dim))
        z, _ = forward(params, x, a_pos, a_neg, cfg, training=False)
        z_lin = linearized_forward(params, x, a_pos, a_neg, cfg)
        worst = max(worst, float(np.linalg.norm(z - z_lin)))
    return worst


def gradient_check(seed=0, h=1e-4, samples_per_group=50):
    """Central finite differences of the mean BCE against backward().

    Returns the max relative error over sampled coordinates of every
    parameter group.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    g = planted_graph(5, 5, 14, seed=seed)
    matrices = build_sign_matrices(g)
    a_pos = normalize_adjacency(symmetrize(matrices.a_pos))
    a_neg = normalize_adjacency(symmetrize(matrices.a_neg))
    cfg = ModelConfig(layers=2, embed_dim=4, feature_dim=4, dropout=0.0, seed=seed)
    params = init_params(cfg, rng)
    x = rng.standard_normal((g.n_nodes, cfg.feature_dim))
    pairs = g.joint_pairs(np.arange(g.n_edges))
    labels = signs_to_labels(g.edge_signs(np.arange(g.n_edges)))

    def loss_at():
        z, _ = forward(params, x, a_pos, a_neg, cfg, training=False)
        return bce_loss(predict_scores(params, z, pairs), labels)

    z, cache = forward(params, x, a_pos, a_neg, cfg, training=True, rng=rng)
    scores = predict_scores(params, z, pairs, cache=cache)
    _, d_scores = bce_loss_grad(scores, labels)
    grads = backward(cache, params, d_scores, cfg)
    grads_named = dict(grads.named_arrays())

    worst = 0.0
    for name, arr in params.named_arrays():
        flat = arr.reshape(-1)
        gflat = grads_named[name].reshape(-1)
        n_coords = min(samples_per_group, flat.size)
        coords = rng.choice(flat.size, size=n_coords, replace=False)
        for c in coords:
            orig = float(flat[c])
            flat[c] = orig + h
            up = loss_at()
            flat[c] = orig - h
            down = loss_at()
            flat[c] = orig
            fd = (up - down) / (2 * h)
            an = float(gflat[c])
            rel = abs(fd - an) / max(abs(fd), abs(an), 1e-6)
            worst = max(worst, rel)
    return worst


def check_split_determinism(seed=0) -> bool:
    g = planted_graph(20, 25, 140, seed=seed)
    a = split_edges(g, (0.8, 0.1, 0.1), seed=seed)
    b = split_edges(g, (0.8, 0.1, 0.1), seed=seed)
    return (np.array_equal(a.train, b.train)
            and np.array_equal(a.validation, b.validation)
            and np.array_equal(a.test, b.test))


def run_selftest(seed: int = 0, emit=print) -> int:
    """Run every check; returns the number of failures."""
    checks = [
        ("spectral-equivalence <= 1e-8",
         lambda: check_spectral_equivalence(seed) <= 1e-8),
        ("svd-subspace <= 1e-5", lambda: check_svd_subspace(seed) <= 1e-5),
        ("ky-fan violations == 0", lambda: check_ky_fan(seed) == 0),
        ("linearization <= 1e-6", lambda: check_linearization(seed) <= 1e-6),
        ("gradient-check <= 1e-4", lambda: gradient_check(seed) <= 1e-4),
        ("split-determinism", lambda: check_split_determinism(seed)),
    ]
    failures = 0
    for name, fn in checks:
        try:
            ok = bool(fn())
        except Exception as exc:  # surface, keep running remaining checks
            emit(f"FAIL {name} ({type(exc).__name__}: {exc})")
            failures += 1
            continue
        emit(f"{'PASS' if ok else 'FAIL'} {name}")
        failures += 0 if ok else 1
    return failures
