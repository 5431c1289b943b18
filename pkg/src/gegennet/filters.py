"""Gegenbauer polynomial filters and classic spectral filtering functions.

The polynomial family is defined by the three-term recursion

    J_0(x) = 1,   J_1(x) = c1 * x,
    J_k(x) = w_k * x * J_{k-1}(x) - w'_k * J_{k-2}(x)   for k >= 2,

with w_k = (2k+2a-1)(k+a-1) / (k(k+2a-1)) and
w'_k = (k+a-1/2)(k+a-3/2) / (k(k+2a-1)). Two first-order coefficients c1 are
supported: a+1/2 (default; reduces to the Legendre recurrence at a=0.5) and
a+1. The closed-form Pochhammer sum in :func:`gegenbauer_closed_form` follows
the standard convention (c1 = 2a) and is kept as an independent oracle; the
three first-order conventions agree only at a=0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .linalg import dense_eig
from .validation import as_csr, check_matching_rows, check_square

FIRST_ORDER_CHOICES = ("alpha_plus_half", "alpha_plus_one")
CURVE_NAMES = ("k_hop", "ppr", "hkpr", "gnn_lf", "gnn_hf", "gegenbauer")
PROXIMITY_NAMES = ("common_neighbors", "k_hop", "ppr", "hkpr")

#: Filter settings used for the spectral curve-fitting study, one entry per
#: classic filter plus the order-3 polynomial at alpha=1.5.
STUDY_FILTERS: tuple[tuple[str, dict], ...] = (
    ("k_hop", {"K": 3}),
    ("ppr", {"alpha": 0.9, "K": 7}),
    ("hkpr", {"alpha": 2.0, "K": 7}),
    ("gnn_lf", {"alpha": 0.1, "beta": 0.75}),
    ("gnn_hf", {"alpha": 0.1, "beta": 1.0}),
    ("gegenbauer", {"alpha": 1.5, "k": 3}),
)


@dataclass(frozen=True)
class GegenbauerParams:
    """Family coefficient and first-order convention for the recursion."""

    alpha: float = 1.5
    first_order: str = "alpha_plus_half"

    def __post_init__(self):
        if self.alpha < -0.5:
            raise ValueError(f"alpha must be >= -0.5, got {self.alpha}")
        if self.first_order not in FIRST_ORDER_CHOICES:
            raise ValueError(f"first_order must be one of {FIRST_ORDER_CHOICES}")

    @property
    def first_order_coefficient(self) -> float:
        return self.alpha + (0.5 if self.first_order == "alpha_plus_half" else 1.0)


def recurrence_weights(k: int, alpha: float) -> tuple[float, float]:
    """Recursion weights (w_k, w'_k) for order k >= 2."""
    if k < 2:
        raise ValueError(f"recursion weights defined for k >= 2, got {k}")
    den = k * (k + 2.0 * alpha - 1.0)
    if abs(den) < 1e-12:
        raise ValueError(f"vanishing recursion denominator at k={k}, alpha={alpha}")
    omega = (2.0 * k + 2.0 * alpha - 1.0) * (k + alpha - 1.0) / den
    omega_prime = (k + alpha - 0.5) * (k + alpha - 1.5) / den
    return omega, omega_prime


def gegenbauer_scalar(lam, k: int, params: GegenbauerParams | None = None):
    """Evaluate the order-k polynomial at scalar or array lambda."""
    params = params or GegenbauerParams()
    if k < 0:
        raise ValueError(f"order must be non-negative, got {k}")
    lam = np.asarray(lam, dtype=np.float64)
    p_prev = np.ones_like(lam)
    if k == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p_cur = params.first_order_coefficient * lam
    for j in range(2, k + 1):
        omega, omega_prime = recurrence_weights(j, params.alpha)
        p_cur, p_prev = omega * lam * p_cur - omega_prime * p_prev, p_cur
    return p_cur if p_cur.ndim else float(p_cur)


def _pochhammer(x: float, k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= x + j
    return out


def gegenbauer_closed_form(lam, k: int, alpha: float):
    """Standard-convention polynomial via the Pochhammer sum. Requires alpha != 0.

    Evaluates sum_{i=0}^{floor(k/2)} (-1)^i (a)_{k-i} / ((1)_i (1)_{k-2i}) * (2x)^{k-2i}.
    """
    if alpha == 0:
        raise ValueError("closed form is not defined for alpha = 0")
    if k < 0:
        raise ValueError(f"order must be non-negative, got {k}")
    lam = np.asarray(lam, dtype=np.float64)
    out = np.zeros_like(lam)
    for i in range(k // 2 + 1):
        coeff = ((-1.0) ** i) * _pochhammer(alpha, k - i) / (
            _pochhammer(1.0, i) * _pochhammer(1.0, k - 2 * i))
        out = out + coeff * (2.0 * lam) ** (k - 2 * i)
    return out if out.ndim else float(out)


def gegenbauer_apply(a_hat: sp.spmatrix, h: np.ndarray, k: int,
                     params: GegenbauerParams | None = None) -> np.ndarray:
    """Apply the order-k polynomial of a_hat to h matrix-free.

    Runs the vector recursion P_0 = h, P_1 = c1 * a_hat h,
    P_j = w_j a_hat P_{j-1} - w'_j P_{j-2}, costing k sparse products and
    never materializing the polynomial of the operator.
    """
    params = params or GegenbauerParams()
    if k < 0:
        raise ValueError(f"order must be non-negative, got {k}")
    a_hat = as_csr(a_hat)
    check_square(a_hat, "a_hat")
    h = np.asarray(h, dtype=np.float64)
    work = h[:, np.newaxis] if h.ndim == 1 else h
    check_matching_rows(a_hat, work)
    p_prev = work.copy()
    if k == 0:
        return p_prev[:, 0] if h.ndim == 1 else p_prev
    p_cur = params.first_order_coefficient * (a_hat @ work)
    for j in range(2, k + 1):
        omega, omega_prime = recurrence_weights(j, params.alpha)
        p_cur, p_prev = omega * (a_hat @ p_cur) - omega_prime * p_prev, p_cur
    return p_cur[:, 0] if h.ndim == 1 else p_cur


@dataclass(frozen=True)
class FilterCurve:
    """A spectral filtering function sampled on [-1, 1]."""

    name: str
    hyperparameters: Mapping[str, float]
    lambdas: np.ndarray
    values: np.ndarray
    skipped_lambdas: tuple[float, ...] = ()

    def __post_init__(self):
        if self.lambdas.size > 1 and not np.all(np.diff(self.lambdas) > 0):
            raise ValueError("curve lambdas must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values must be finite")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("lambda,value\n")
            for lam, val in zip(self.lambdas, self.values):
                f.write(f"{lam:.17g},{val:.17g}\n")


def default_grid(n: int = 201) -> np.ndarray:
    """Uniform sampling grid on [-1, 1]."""
    return np.linspace(-1.0, 1.0, n)


def _require(hyper, *names):
    missing = [n for n in names if n not in hyper]
    if missing:
        raise ValueError(f"missing hyperparameters {missing}")
    return [float(hyper[n]) for n in names]


def classic_filter_curve(name: str, lambdas=None, hyperparameters=None) -> FilterCurve:
    """Sample a named spectral filtering function on a lambda grid.

    Supported: k_hop (lambda^K), ppr (sum_k alpha^k lambda^k), hkpr
    (sum_k exp(-alpha) alpha^k / k! * lambda^k), the two rational gnn_lf /
    gnn_hf forms, and the order-k gegenbauer polynomial. Rational samples with
    a singular denominator are dropped and reported in ``skipped_lambdas``.
    """
    if name not in CURVE_NAMES:
        raise ValueError(f"unknown filter {name!r}, expected one of {CURVE_NAMES}")
    lambdas = default_grid() if lambdas is None else np.asarray(lambdas, dtype=np.float64)
    hyper = dict(hyperparameters or {})
    skipped: list[float] = []

    if name == "k_hop":
        (big_k,) = _require(hyper, "K")
        values = lambdas ** int(big_k)
    elif name == "ppr":
        alpha, big_k = _require(hyper, "alpha", "K")
        values = sum(alpha ** k * lambdas ** k for k in range(int(big_k) + 1))
    elif name == "hkpr":
        alpha, big_k = _require(hyper, "alpha", "K")
        values = sum(math.exp(-alpha) * alpha ** k / math.factorial(k) * lambdas ** k
                     for k in range(int(big_k) + 1))
    elif name == "gegenbauer":
        if "alpha" not in hyper or "k" not in hyper:
            raise ValueError("gegenbauer curve needs hyperparameters alpha and k")
        params = GegenbauerParams(
            alpha=float(hyper["alpha"]),
            first_order=str(hyper.get("first_order", "alpha_plus_half")),
        )
        values = gegenbauer_scalar(lambdas, int(hyper["k"]), params)
    else:
        alpha, beta = _require(hyper, "alpha", "beta")
        one_minus = 1.0 - lambdas
        if name == "gnn_lf":
            num = 1.0 - (1.0 - beta) * one_minus
            den = 1.0 - (2.0 - beta + 1.0 / alpha) * one_minus
        else:
            num = 1.0 + beta * one_minus
            den = 1.0 - (1.0 - beta - 1.0 / alpha) * one_minus
        keep = np.abs(den) > 1e-9
        skipped = [float(l) for l in lambdas[~keep]]
        lambdas = lambdas[keep]
        values = num[keep] / den[keep]

    return FilterCurve(name=name, hyperparameters=hyper, lambdas=lambdas,
                       values=np.asarray(values, dtype=np.float64),
                       skipped_lambdas=tuple(skipped))


def study_curves(lambdas=None) -> list[FilterCurve]:
    """All curves of the spectral-fit study at their stock hyperparameters."""
    return [classic_filter_curve(name, lambdas, hyper) for name, hyper in STUDY_FILTERS]


def _proximity_series(name, a_hat, hyper):
    a_dense = a_hat.toarray()
    n = a_dense.shape[0]
    if name == "common_neighbors":
        return a_dense @ a_dense
    if name == "k_hop":
        (big_k,) = _require(hyper, "K")
        return np.linalg.matrix_power(a_dense, int(big_k))
    alpha, big_k = _require(hyper, "alpha", "K")
    out = np.zeros_like(a_dense)
    power = np.eye(n)
    for k in range(int(big_k) + 1):
        if name == "ppr":
            coeff = (1.0 - alpha) * alpha ** k
        else:
            coeff = math.exp(-alpha) * alpha ** k / math.factorial(k)
        out += coeff * power
        if k < int(big_k):
            power = power @ a_dense
    return out


def _proximity_spectral(name, a_hat, hyper):
    pairs = dense_eig(a_hat)
    lam = pairs.values
    if name == "common_neighbors":
        f = lam ** 2
    elif name == "k_hop":
        (big_k,) = _require(hyper, "K")
        f = lam ** int(big_k)
    elif name == "ppr":
        alpha, big_k = _require(hyper, "alpha", "K")
        f = sum((1.0 - alpha) * alpha ** k * lam ** k for k in range(int(big_k) + 1))
    else:
        alpha, big_k = _require(hyper, "alpha", "K")
        f = sum(math.exp(-alpha) * alpha ** k / math.factorial(k) * lam ** k
                for k in range(int(big_k) + 1))
    return (pairs.vectors * f[np.newaxis, :]) @ pairs.vectors.T


def proximity_matrix(name: str, a_hat: sp.spmatrix, hyperparameters=None,
                     max_size: int = 2000, check_tol: float = 1e-6) -> np.ndarray:
    """Truncated-series proximity matrix, cross-checked against its spectral form.

    Both routes evaluate the same truncated polynomial, once as a matrix
    series and once as U f(Lambda) U^T through a dense eigendecomposition, and
    must agree within ``check_tol`` in Frobenius norm. Oracle-scale tool only.
    """
    if name not in PROXIMITY_NAMES:
        raise ValueError(f"unknown proximity {name!r}, expected one of {PROXIMITY_NAMES}")
    a_hat = as_csr(a_hat)
    check_square(a_hat, "a_hat")
    if a_hat.shape[0] > max_size:
        raise ValueError(f"proximity matrices limited to {max_size} nodes")
    hyper = dict(hyperparameters or {})
    series = _proximity_series(name, a_hat, hyper)
    spectral = _proximity_spectral(name, a_hat, hyper)
    gap = np.linalg.norm(series - spectral)
    if gap > check_tol * max(1.0, np.linalg.norm(series)):
        raise ArithmeticError(f"series and spectral proximity disagree by {gap:.3e}")
    return series
