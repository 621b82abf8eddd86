"""Heat-diffusion solvers.

heat_smooth is the production path: truncated polynomial expansion of the
heat weight applied through sparse matvecs. fem_euler_smooth (explicit
forward Euler) and eigen_smooth (dense eigenfunction expansion) are the
reference solvers used for benchmarking and as oracles, and
cosine_diffusion_1d is an independent 1D oracle for the expansion machinery.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .expansion import (
    PolynomialFamily,
    apply_expansion,
    estimate_lambda_max,
    heat_coefficients,
)
from .mesh import apply_lb

_DENSE_EIGEN_LIMIT = 5000
# Hermite/Laguerre terms grow before they decay once sigma*lambda_max is
# large; warn past this product.
_UNSCALED_CAUTION = 30.0


@dataclass(frozen=True)
class EigenSystem:
    """Generalized eigenpairs of C psi = lambda A psi, A-orthonormalized."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        psi = np.asarray(self.eigenvectors, dtype=float)
        if lam.ndim != 1 or psi.ndim != 2 or psi.shape[1] != lam.size:
            raise ValueError("eigenvalues must be (k,), eigenvectors (N, k)")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", psi)

    @property
    def k(self):
        return self.eigenvalues.size


def _check_field(op, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (op.n_vertices,):
        raise ValueError(
            f"field length {f.shape} does not match operator size {op.n_vertices}"
        )
    return f


def _resolve_family(op, family, sigma):
    if family is None:
        family = PolynomialFamily.chebyshev()
    if family.scaled and family.b is None:
        b = estimate_lambda_max(op)
        family = family.with_b(b if b > 0 else 1.0)
    if not family.scaled and sigma > 0:
        product = estimate_lambda_max(op) * sigma
        if product > _UNSCALED_CAUTION:
            warnings.warn(
                f"{family.kind} expansion with sigma*lambda_max = {product:.3g} "
                "grows before it decays; expect slow or failing convergence",
                RuntimeWarning,
                stacklevel=3,
            )
    return family


def heat_smooth(op, f, sigma, family=None, m=1000):
    """Heat kernel convolution of f at diffusion time sigma.

    family defaults to Chebyshev with b auto-set to the spectral bound of
    the operator. sigma = 0 returns a copy of f.
    """
    f = _check_field(op, f)
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return f.copy()
    family = _resolve_family(op, family, sigma)
    coeffs = heat_coefficients(family, sigma, m)
    return apply_expansion(op, coeffs, f)


def iterative_smooth(op, f, sigma_step, k, family=None, m=1000):
    """k repeated convolutions with step sigma_step (semigroup property).

    The expansion coefficients are computed once and reused for every step.
    Returns the list of k fields after 1, 2, ..., k steps.
    """
    f = _check_field(op, f)
    if not sigma_step > 0:
        raise ValueError(f"sigma_step must be positive, got {sigma_step}")
    k = int(k)
    if k < 1:
        raise ValueError(f"step count must be >= 1, got {k}")
    family = _resolve_family(op, family, sigma_step)
    coeffs = heat_coefficients(family, sigma_step, m)
    out = []
    cur = f
    for _ in range(k):
        cur = apply_expansion(op, coeffs, cur)
        out.append(cur)
    return out

def fem_euler_smooth(op, f, sigma, n_iter):
    """Reference solver: explicit forward Euler g <- (I - delta Delta)^n f.

    delta = sigma / n_iter must satisfy delta < 2 / lambda_max or the scheme
    is unstable; violations raise before any iteration runs.
    """
    f = _check_field(op, f)
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    n_iter = int(n_iter)
    if n_iter < 1:
        raise ValueError(f"n_iter must be >= 1, got {n_iter}")
    if sigma == 0.0:
        return f.copy()
    delta = sigma / n_iter
    lam_max = estimate_lambda_max(op)
    if delta * lam_max >= 2.0:
        raise ValueError(
            f"forward Euler unstable: delta*lambda_max = {delta * lam_max:.6g} >= 2 "
            f"(sigma={sigma}, n_iter={n_iter})"
        )
    g = f.copy()
    for _ in range(n_iter):
        g -= delta * apply_lb(op, g)
    return g


def eigen_reference(op, k):
    """k smallest generalized eigenpairs of C psi = lambda A psi (dense path).

    Solved on the symmetrized A^-1/2 C A^-1/2 and mapped back, which makes
    the eigenvectors A-orthonormal. Guarded to meshes of at most 5000
    vertices; this path exists as oracle and baseline only.
    """
    n = op.n_vertices
    k = int(k)
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if n > _DENSE_EIGEN_LIMIT:
        raise ValueError(
            f"dense eigensolver limited to {_DENSE_EIGEN_LIMIT} vertices, mesh has {n}"
        )
    d = 1.0 / np.sqrt(op.A)
    B = (d[:, None] * op.C.toarray()) * d[None, :]
    B = 0.5 * (B + B.T)
    lam, U = scipy.linalg.eigh(B, subset_by_index=[0, k - 1])
    return EigenSystem(lam, d[:, None] * U)


def eigen_smooth(es, op, f, sigma):
    """Spectral reference solution Psi diag(e^(-lambda sigma)) Psi^T A f."""
    f = _check_field(op, f)
    if es.eigenvectors.shape[0] != op.n_vertices:
        raise ValueError("eigen system does not match operator size")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    proj = es.eigenvectors.T @ (op.A * f)
    return es.eigenvectors @ (np.exp(-es.eigenvalues * sigma) * proj)


def cosine_diffusion_1d(samples, sigma, k_max):
    """1D heat diffusion on [0, 1] by the weighted cosine series.

    samples live on the uniform inclusive grid; coefficients use trapezoid
    quadrature against psi_0 = 1, psi_j = sqrt(2) cos(j pi p), and each mode
    decays by e^(-j^2 pi^2 sigma).
    """
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise ValueError("need at least 2 samples on the unit interval")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    k_max = int(k_max)
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    n = f.size
    p = np.linspace(0.0, 1.0, n)
    w = np.full(n, 1.0 / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    j = np.arange(k_max + 1)
    psi = np.sqrt(2.0) * np.cos(np.outer(j, np.pi * p))
    psi[0] = 1.0
    coeffs = psi @ (w * f)
    decay = np.exp(-(j.astype(float) ** 2) * np.pi**2 * sigma)
    return psi.T @ (decay * coeffs)


def mse(a, b):
    """Mean squared error between two fields."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(d @ d / a.size)
