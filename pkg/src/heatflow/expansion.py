"""Polynomial expansion of spectral weights and its application to fields.

The heat weight e^(-lambda*sigma) (or any bounded spectral weight) is expanded
in one of four orthogonal polynomial families. Chebyshev and Jacobi run in the
shifted/scaled variable 2*lambda/b - 1 so the expansion covers the operator
spectrum [0, b]; Hermite and Laguerre are applied unscaled. Applying the
expansion to a field costs exactly one sparse matvec per degree through the
three-term recurrence.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special as _sp

from .mesh import apply_lb
from .special import kummer_1f1_log, log_gamma, scaled_bessel_i

_KINDS = ("chebyshev", "jacobi", "hermite", "laguerre")
_NAN_CHECK_EVERY = 64


@dataclass(frozen=True)
class PolynomialFamily:
    """Orthogonal polynomial family with optional domain scale b.

    kind is one of chebyshev, jacobi, hermite, laguerre. alpha/beta apply to
    Jacobi only (both > -1); b > 0 is the shift/scale of the Chebyshev and
    Jacobi domains and is unused by Hermite/Laguerre.
    """

    kind: str
    alpha: float | None = None
    beta: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown polynomial family {self.kind!r}")
        if self.kind == "jacobi":
            if self.alpha is None or self.beta is None:
                raise ValueError("jacobi family requires alpha and beta")
            if self.alpha <= -1 or self.beta <= -1:
                raise ValueError("jacobi requires alpha > -1 and beta > -1")
        if self.b is not None and not self.b > 0:
            raise ValueError(f"domain scale b must be positive, got {self.b}")

    @property
    def scaled(self):
        """True for the families run in the transformed variable 2*lam/b - 1."""
        return self.kind in ("chebyshev", "jacobi")

    def with_b(self, b):
        return replace(self, b=float(b))

    @classmethod
    def chebyshev(cls, b=None):
        return cls("chebyshev", b=b)

    @classmethod
    def jacobi(cls, alpha, beta, b=None):
        return cls("jacobi", alpha=float(alpha), beta=float(beta), b=b)

    @classmethod
    def hermite(cls):
        return cls("hermite")

    @classmethod
    def laguerre(cls):
        return cls("laguerre")


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Spectral-weight expansion: family, diffusion time and coefficient vector.

    sigma is None for generic (non-heat) weights such as wavelet kernels.
    """

    family: PolynomialFamily
    sigma: float | None
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a nonempty 1-d vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def to_json_dict(self):
        f = self.family
        return {
            "family": f.kind,
            "alpha": f.alpha,
            "beta": f.beta,
            "sigma": self.sigma,
            "b": f.b,
            "degree": self.degree,
            "coeffs": [float(c) for c in self.coeffs],
        }


def coefficients_from_json(d):
    fam = PolynomialFamily(d["family"], alpha=d.get("alpha"), beta=d.get("beta"), b=d.get("b"))
    return ExpansionCoefficients(fam, d.get("sigma"), np.asarray(d["coeffs"], dtype=float))


def recurrence_params(family, n):
    """(A_n, B_n, C_n) of P_{n+1} = (A_n x + B_n) P_n + C_n P_{n-1}."""
    if n < 0:
        raise ValueError("recurrence index must be >= 0")
    if family.kind == "chebyshev":
        return (1.0 if n == 0 else 2.0, 0.0, -1.0)
    if family.kind == "hermite":
        return (2.0, 0.0, -2.0 * n)
    if family.kind == "laguerre":
        return (-1.0 / (n + 1.0), (2.0 * n + 1.0) / (n + 1.0), -n / (n + 1.0))
    a, b = family.alpha, family.beta
    if n == 0:
        # limit of the general formulas; avoids the 0/0 at alpha + beta = 0
        return ((a + b + 2.0) / 2.0, (a - b) / 2.0, 0.0)
    s = a + b
    den = 2.0 * (n + 1.0) * (n + s + 1.0)
    A = (2.0 * n + s + 1.0) * (2.0 * n + s + 2.0) / den
    B = (a * a - b * b) * (2.0 * n + s + 1.0) / (den * (2.0 * n + s))
    C = -2.0 * (n + a) * (n + b) * (2.0 * n + s + 2.0) / (den * (2.0 * n + s))
    return (A, B, C)


def _check_sigma_degree(sigma, m):
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if m < 0:
        raise ValueError(f"degree must be >= 0, got {m}")


def chebyshev_coefficients(sigma, b, m):
    """Heat-weight Chebyshev coefficients (2 - delta_n0)(-1)^n e^(-b*sigma/2) I_n(b*sigma/2)."""
    _check_sigma_degree(sigma, m)
    if not b > 0:
        raise ValueError(f"b must be positive, got {b}")
    x = 0.5 * b * sigma
    sbi = scaled_bessel_i(m, x)
    signs = np.where(np.arange(m + 1) % 2 == 0, 1.0, -1.0)
    factor = np.full(m + 1, 2.0)
    factor[0] = 1.0
    c = factor * signs * sbi
    return ExpansionCoefficients(PolynomialFamily.chebyshev(b=float(b)), float(sigma), c)


def jacobi_coefficients(sigma, b, alpha, beta, m):
    """Heat-weight Jacobi coefficients.

    c_n = Gamma(a+b+n+1)/Gamma(a+b+2n+1) * (-b*sigma)^n
          * 1F1(beta+n+1; alpha+beta+2n+2; -b*sigma),
    with the n = 0 gamma ratio fixed to 1. Assembled in log space so large
    b*sigma neither overflows nor cancels.
    """
    _check_sigma_degree(sigma, m)
    family = PolynomialFamily.jacobi(alpha, beta, b=float(b))
    c = np.zeros(m + 1)
    if sigma == 0.0:
        c[0] = 1.0
        return ExpansionCoefficients(family, 0.0, c)
    bs = float(b) * float(sigma)
    log_bs = math.log(bs)
    s = alpha + beta
    for n in range(m + 1):
        log_ratio = 0.0 if n == 0 else log_gamma(s + n + 1.0) - log_gamma(s + 2.0 * n + 1.0)
        sign_f, log_f = kummer_1f1_log(beta + n + 1.0, s + 2.0 * n + 2.0, -bs)
        log_mag = log_ratio + n * log_bs + log_f
        if log_mag < -745.0:
            continue  # underflows to zero; the tail is negligible by then
        c[n] = (1.0 if n % 2 == 0 else -1.0) * sign_f * math.exp(log_mag)
    return ExpansionCoefficients(family, float(sigma), c)


def hermite_coefficients(sigma, m):
    """Heat-weight Hermite coefficients (1/n!) (-sigma/2)^n e^(sigma^2/4)."""
    _check_sigma_degree(sigma, m)
    c = np.zeros(m + 1)
    if sigma == 0.0:
        c[0] = 1.0
        return ExpansionCoefficients(PolynomialFamily.hermite(), 0.0, c)
    lead = sigma * sigma / 4.0
    if lead > 709.0:
        raise RuntimeError(f"hermite coefficients overflow at sigma={sigma}")
    log_half = math.log(sigma / 2.0)
    for n in range(m + 1):
        log_mag = n * log_half - log_gamma(n + 1.0) + lead
        if log_mag < -745.0:
            continue
        c[n] = (1.0 if n % 2 == 0 else -1.0) * math.exp(log_mag)
    return ExpansionCoefficients(PolynomialFamily.hermite(), float(sigma), c)


def laguerre_coefficients(sigma, m):
    """Heat-weight Laguerre coefficients sigma^n / (sigma+1)^(n+1)."""
    _check_sigma_degree(sigma, m)
    c = np.zeros(m + 1)
    if sigma == 0.0:
        c[0] = 1.0
        return ExpansionCoefficients(PolynomialFamily.laguerre(), 0.0, c)
    ratio = sigma / (sigma + 1.0)
    val = 1.0 / (sigma + 1.0)
    for n in range(m + 1):
        c[n] = val
        val *= ratio
    return ExpansionCoefficients(PolynomialFamily.laguerre(), float(sigma), c)


def heat_coefficients(family, sigma, m):
    """Closed-form heat-weight coefficients for any family (b required if scaled)."""
    if family.kind == "chebyshev":
        if family.b is None:
            raise ValueError("chebyshev heat coefficients need the domain scale b")
        return chebyshev_coefficients(sigma, family.b, m)
    if family.kind == "jacobi":
        if family.b is None:
            raise ValueError("jacobi heat coefficients need the domain scale b")
        return jacobi_coefficients(sigma, family.b, family.alpha, family.beta, m)
    if family.kind == "hermite":
        return hermite_coefficients(sigma, m)
    return laguerre_coefficients(sigma, m)


def _polynomial_table(family, m, x):
    """P_n(x) for n = 0..m on the (already transformed) grid x."""
    x = np.asarray(x, dtype=float)
    table = np.empty((m + 1,) + x.shape)
    table[0] = 1.0
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for n in range(m):
        A, B, C = recurrence_params(family, n)
        nxt = (A * x + B) * cur + C * prev
        table[n + 1] = nxt
        prev, cur = cur, nxt
    return table


def _jacobi_norm_log(alpha, beta, n):
    """log of the [-1,1] orthogonality constant h_n of P_n^(alpha,beta)."""
    if n == 0:
        return (
            (alpha + beta + 1.0) * math.log(2.0)
            + log_gamma(alpha + 1.0)
            + log_gamma(beta + 1.0)
            - log_gamma(alpha + beta + 2.0)
        )
    return (
        (alpha + beta + 1.0) * math.log(2.0)
        + log_gamma(n + alpha + 1.0)
        + log_gamma(n + beta + 1.0)
        - log_gamma(n + alpha + beta + 1.0)
        - log_gamma(n + 1.0)
        - math.log(2.0 * n + alpha + beta + 1.0)
    )


def _eval_weight(weight, lam):
    vals = np.asarray(weight(lam), dtype=float)
    if vals.shape != lam.shape:
        vals = np.array([float(weight(v)) for v in lam])
    return vals


def numeric_coefficients(weight, family, m, nodes=None):
    """Expansion coefficients of an arbitrary bounded weight by Gauss quadrature.

    Chebyshev/Jacobi only (the finite domain [0, b]). Uses at least 2(m+1)
    nodes; pass `nodes` to raise the count for stiff weights.
    """
    if not family.scaled:
        raise ValueError("numeric coefficients support chebyshev/jacobi families only")
    if family.b is None:
        raise ValueError("numeric coefficients need the domain scale b")
    if m < 0:
        raise ValueError(f"degree must be >= 0, got {m}")
    K = int(nodes) if nodes is not None else max(2 * (m + 1), 128)
    K = max(K, 2 * (m + 1))
    b = family.b
    if family.kind == "chebyshev":
        # c_0 = mean, c_n = (2/K) sum W cos(n theta); accumulated in node
        # blocks so large K never materializes an (m+1) x K matrix
        n = np.arange(m + 1)[:, None]
        c = np.zeros(m + 1)
        block = 8192
        for start in range(0, K, block):
            idx = np.arange(start + 1, min(start + block, K) + 1)
            theta = (2.0 * idx - 1.0) * math.pi / (2.0 * K)
            lam = 0.5 * b * (np.cos(theta) + 1.0)
            W = _eval_weight(weight, lam)
            c += np.cos(n * theta[None, :]) @ W
        c *= 2.0 / K
        c[0] *= 0.5
    else:
        x, w = _sp.roots_jacobi(K, family.alpha, family.beta)
        lam = 0.5 * b * (x + 1.0)
        W = _eval_weight(weight, lam)
        table = _polynomial_table(family, m, x)
        raw = table @ (w * W)
        norms = np.array(
            [math.exp(_jacobi_norm_log(family.alpha, family.beta, n)) for n in range(m + 1)]
        )
        c = raw / norms
    return ExpansionCoefficients(family, None, c)


def evaluate_expansion(coeffs, lam):
    """Reconstruct the scalar weight sum_n c_n P_n at eigenvalue(s) lam."""
    lam = np.asarray(lam, dtype=float)
    fam = coeffs.family
    x = 2.0 * lam / fam.b - 1.0 if fam.scaled else lam
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    out = coeffs.coeffs[0] * cur
    for n in range(coeffs.degree):
        A, B, C = recurrence_params(fam, n)
        nxt = (A * x + B) * cur + C * prev
        out = out + coeffs.coeffs[n + 1] * nxt
        prev, cur = cur, nxt
    return out


def estimate_lambda_max(op, use_cache=True):
    """Upper bound on the largest eigenvalue of Delta = A^-1 C.

    Block power iteration on the symmetrized A^-1/2 C A^-1/2 (a small
    orthonormalized subspace survives clustered top eigenvalues that stall a
    single power vector), run to a relative Ritz-value tolerance and then
    multiplied by a 1.01 safety factor. The result is cached on the operator.
    """
    if use_cache and op.lambda_max_hint is not None:
        return op.lambda_max_hint
    if op.C.nnz == 0 or np.abs(op.C.data).max() == 0.0:
        op.lambda_max_hint = 0.0
        return 0.0
    n = op.n_vertices
    d = 1.0 / np.sqrt(op.A)
    block = min(8, n)
    rng = np.random.default_rng(0)
    V = np.linalg.qr(rng.standard_normal((n, block)))[0]
    ray_prev = 0.0
    steady = 0
    for it in range(5000):
        W = d[:, None] * op.C.dot(d[:, None] * V)
        ray = float(np.linalg.eigvalsh(V.T @ W).max())
        V, _ = np.linalg.qr(W)
        if it >= 10:
            if abs(ray - ray_prev) <= 1e-5 * max(abs(ray), 1e-30):
                steady += 1
                if steady >= 3:
                    break
            else:
                steady = 0
        ray_prev = ray
    else:
        raise RuntimeError("power iteration for lambda_max did not converge")
    bound = 1.01 * ray
    op.lambda_max_hint = bound
    return bound


def apply_expansion(op, coeffs, f):
    """sum_n c_n P_n(Delta) f through the three-term recurrence.

    Runs in the transformed operator (2/b) Delta - I for scaled families.
    Costs exactly `degree` applications of the operator; raises if the
    recurrence leaves the finite range (checked every 64 degrees).
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (op.n_vertices,):
        raise ValueError(
            f"field length {f.shape} does not match operator size {op.n_vertices}"
        )
    fam = coeffs.family
    if fam.scaled and fam.b is None:
        raise ValueError("scaled families need the domain scale b to be set")
    c = coeffs.coeffs
    out = c[0] * f
    prev = np.zeros_like(f)
    cur = f.copy()
    scratch = np.empty_like(f)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(coeffs.degree):
            A, B, C = recurrence_params(fam, n)
            nxt = apply_lb(op, cur)
            # nxt <- (A x + B) cur + C prev with x the (transformed) operator,
            # built in place to keep the per-degree cost at one matvec plus
            # a few vector passes
            if fam.scaled:
                nxt *= 2.0 * A / fam.b
                cur_weight = B - A
            else:
                nxt *= A
                cur_weight = B
            if cur_weight != 0.0:
                np.multiply(cur, cur_weight, out=scratch)
                nxt += scratch
            if C != 0.0:
                np.multiply(prev, C, out=scratch)
                nxt += scratch
            if (n + 1) % _NAN_CHECK_EVERY == 0 and not np.all(np.isfinite(nxt)):
                raise RuntimeError(
                    f"expansion recurrence diverged at degree {n + 1} "
                    f"(family={fam.kind}, sigma={coeffs.sigma})"
                )
            np.multiply(nxt, c[n + 1], out=scratch)
            out += scratch
            prev, cur = cur, nxt
    if not np.all(np.isfinite(out)):
        raise RuntimeError(
            f"expansion produced non-finite values (family={fam.kind}, "
            f"degree={coeffs.degree})"
        )
    return out
