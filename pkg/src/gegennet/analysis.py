"""Spectral curve-fitting study: per-frequency signal targets and filter residuals.

For a training adjacency with eigenpairs (lambda_i, u_i) and a held-out edge
indicator Y, the per-frequency target is the quadratic form u_i^T Y u_i. A
candidate filtering function fits well when its curve, after one least-squares
gain, tracks those targets across the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import dense_eig
from .validation import as_csr, check_symmetric

SIGN_NAMES = ("pos", "neg")


@dataclass(frozen=True)
class SpectralSignal:
    source_sign: str
    target_sign: str
    lambdas: np.ndarray
    rayleigh: np.ndarray

    def __post_init__(self):
        if self.source_sign not in SIGN_NAMES or self.target_sign not in SIGN_NAMES:
            raise ValueError(f"signs must be one of {SIGN_NAMES}")
        if self.lambdas.shape != self.rayleigh.shape:
            raise ValueError("lambdas and rayleigh must align")
        if self.lambdas.size and (self.lambdas.min() < -1 - 1e-9 or self.lambdas.max() > 1 + 1e-9):
            raise ValueError("eigenvalues outside [-1, 1]")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("lambda,rayleigh\n")
            for lam, ray in zip(self.lambdas, self.rayleigh):
                f.write(f"{lam:.17g},{ray:.17g}\n")


def spectral_signal(a_train_hat: sp.spmatrix, y_heldout: sp.spmatrix,
                    source_sign: str = "pos", target_sign: str = "pos",
                    max_size: int = 2000) -> SpectralSignal:
    """Quadratic forms of the held-out indicator against every train eigenvector.

    Points are (lambda_i, u_i^T Y u_i), sorted by eigenvalue ascending. The
    full dense eigendecomposition makes this an analysis-scale tool.
    """
    a_train_hat = as_csr(a_train_hat)
    y_heldout = as_csr(y_heldout)
    check_symmetric(a_train_hat, tol=1e-8, name="a_train_hat")
    check_symmetric(y_heldout, tol=1e-8, name="y_heldout")
    if a_train_hat.shape != y_heldout.shape:
        raise ValueError("train and held-out matrices must share a shape")
    pairs = dense_eig(a_train_hat, max_size=max_size)
    rayleigh = np.einsum("ij,ij->j", pairs.vectors, y_heldout @ pairs.vectors)
    return SpectralSignal(source_sign=source_sign, target_sign=target_sign,
                          lambdas=pairs.values, rayleigh=rayleigh)


def fit_report(signal: SpectralSignal, curves) -> dict[str, float]:
    """Sum of squared residuals per curve after one least-squares gain.

    Curves are compared up to amplitude: each is rescaled by the scalar c
    minimizing sum (c * g(lambda_i) - rayleigh_i)^2 before the residual is
    taken, so differently scaled filters compete on shape alone.
    """
    if signal.lambdas.size == 0:
        raise ValueError("empty spectral signal")
    report: dict[str, float] = {}
    for curve in curves:
        g = np.interp(signal.lambdas, curve.lambdas, curve.values)
        denom = float(g @ g)
        gain = float(g @ signal.rayleigh) / denom if denom > 0 else 0.0
        resid = gain * g - signal.rayleigh
        report[curve.name] = float(resid @ resid)
    return report


def write_fit_report(report: dict[str, float], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("curve,residual\n")
        for name, value in report.items():
            f.write(f"{name},{value:.17g}\n")
