"""Classical weights, their orthogonal polynomials, and special functions.

Covers the Gaussian, Laguerre and Jacobi families in the normalizations
H_j(x), L_j^(a)(x) and P_j^(a,b)(1-2x), plus parameter-shifted variants,
squared-norm constants, the orthonormal functions eta_k, and the Airy and
Bessel-J evaluations needed by the scaling kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

GAUSSIAN = "gaussian"
LAGUERRE = "laguerre"
JACOBI = "jacobi"
KINDS = (GAUSSIAN, LAGUERRE, JACOBI)

# exponents a, b must stay this far above -1 or the norm constants blow up
PARAM_FLOOR = 1e-8

_LOG_DBL_MAX = math.log(np.finfo(float).max)

__all__ = [
    "GAUSSIAN",
    "LAGUERRE",
    "JACOBI",
    "EnsembleSpec",
    "ShiftedFamily",
    "RodriguesData",
    "eval_weight",
    "log_weight",
    "eval_poly",
    "norm_constant",
    "log_norm_constant",
    "rodrigues_constants",
    "eval_eta",
    "eta_table",
    "airy",
    "bessel_j",
]


@dataclass(frozen=True)
class EnsembleSpec:
    """One of the classical weights: which family plus its exponents.

    ``a`` is the Laguerre/Jacobi exponent, ``b`` the second Jacobi exponent;
    both are ignored for the Gaussian family.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.kind in (LAGUERRE, JACOBI) and self.a < -1.0 + PARAM_FLOOR:
            raise ValueError(f"exponent a={self.a} must be >= -1 + {PARAM_FLOOR}")
        if self.kind == JACOBI and self.b < -1.0 + PARAM_FLOOR:
            raise ValueError(f"exponent b={self.b} must be >= -1 + {PARAM_FLOOR}")

    def support(self) -> tuple[float, float]:
        if self.kind == GAUSSIAN:
            return (-math.inf, math.inf)
        if self.kind == LAGUERRE:
            return (0.0, math.inf)
        return (0.0, 1.0)


@dataclass(frozen=True)
class ShiftedFamily:
    """A classical family with its exponents shifted by a nonnegative integer.

    Shift s sends a -> a+s (Laguerre), and a -> a+s, b -> b+s (Jacobi); it has
    no effect on the Gaussian family.  Shift 0 is the base family.
    """

    base: EnsembleSpec
    shift: int = 0

    def __post_init__(self):
        if self.shift < 0 or self.shift != int(self.shift):
            raise ValueError(f"shift must be a nonnegative integer, got {self.shift}")

    @property
    def kind(self) -> str:
        return self.base.kind

    def params(self) -> tuple[float, float]:
        """Effective (a, b) after the shift."""
        if self.base.kind == GAUSSIAN:
            return (0.0, 0.0)
        return (self.base.a + self.shift, self.base.b + self.shift)

    def support(self) -> tuple[float, float]:
        return self.base.support()


@dataclass(frozen=True)
class RodriguesData:
    """The constant e_j and the polynomial Q(y) of a Rodrigues representation.

    ``q_coeffs`` are (c0, c1, c2) with Q(y) = c0 + c1*y + c2*y**2.
    """

    e_j: float
    q_coeffs: tuple[float, float, float]

    def q(self, y):
        c0, c1, c2 = self.q_coeffs
        return c0 + y * (c1 + y * c2)


def _as_family(fam) -> ShiftedFamily:
    if isinstance(fam, EnsembleSpec):
        return ShiftedFamily(fam, 0)
    return fam


def eval_weight(fam, x: float) -> float:
    """Weight w(x) of the (shifted) family; exactly 0 outside the support."""
    fam = _as_family(fam)
    a, b = fam.params()
    if fam.kind == GAUSSIAN:
        return math.exp(-x * x)
    if fam.kind == LAGUERRE:
        if x < 0.0:
            return 0.0
        return _power(x, a) * math.exp(-x)
    if x < 0.0 or x > 1.0:
        return 0.0
    return _power(x, a) * _power(1.0 - x, b)


def _power(x: float, p: float) -> float:
    if x == 0.0:
        if p > 0.0:
            return 0.0
        if p == 0.0:
            return 1.0
        return math.inf
    return x**p


def log_weight(fam, x: float) -> float:
    """log w(x), with -inf outside the support."""
    fam = _as_family(fam)
    a, b = fam.params()
    if fam.kind == GAUSSIAN:
        return -x * x
    if fam.kind == LAGUERRE:
        if x < 0.0:
            return -math.inf
        if x == 0.0:
            return 0.0 if a == 0.0 else -math.copysign(math.inf, a)
        return a * math.log(x) - x
    if x < 0.0 or x > 1.0:
        return -math.inf
    la = a * math.log(x) if x > 0.0 else (0.0 if a == 0.0 else -math.copysign(math.inf, a))
    lb = b * math.log(1.0 - x) if x < 1.0 else (0.0 if b == 0.0 else -math.copysign(math.inf, b))
    return la + lb


def eval_poly(fam, j: int, x):
    """p_j(x) by three-term recurrence: H_j, L_j^(a) or P_j^(a,b)(1-2x)."""
    fam = _as_family(fam)
    if j < 0:
        raise ValueError("polynomial degree must be >= 0")
    x = np.asarray(x, dtype=float)
    a, b = fam.params()
    if fam.kind == GAUSSIAN:
        p_prev, p = np.ones_like(x), 2.0 * x
    elif fam.kind == LAGUERRE:
        p_prev, p = np.ones_like(x), 1.0 + a - x
    else:
        u = 1.0 - 2.0 * x
        p_prev, p = np.ones_like(x), 0.5 * ((a + b + 2.0) * u + (a - b))
    if j == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    for k in range(1, j):
        p_prev, p = p, _step(fam.kind, a, b, k, x, p, p_prev)
    return p if p.ndim else float(p)


def _step(kind, a, b, k, x, p_k, p_km1):
    """One recurrence step: returns p_{k+1} from p_k, p_{k-1}."""
    if kind == GAUSSIAN:
        return 2.0 * x * p_k - 2.0 * k * p_km1
    if kind == LAGUERRE:
        return ((2.0 * k + 1.0 + a - x) * p_k - (k + a) * p_km1) / (k + 1.0)
    u = 1.0 - 2.0 * x
    s = 2.0 * k + a + b
    c1 = 2.0 * (k + 1.0) * (k + a + b + 1.0) * s
    c2 = (s + 1.0) * (a * a - b * b)
    c3 = (s + 1.0) * (s + 2.0) * s
    c4 = 2.0 * (k + a) * (k + b) * (s + 2.0)
    return ((c2 + c3 * u) * p_k - c4 * p_km1) / c1


def log_norm_constant(fam, j: int) -> float:
    """log of the squared norm N_j = integral of w * p_j**2 over the support."""
    fam = _as_family(fam)
    if j < 0:
        raise ValueError("degree must be >= 0")
    a, b = fam.params()
    if fam.kind == GAUSSIAN:
        return j * math.log(2.0) + math.lgamma(j + 1.0) + 0.5 * math.log(math.pi)
    if fam.kind == LAGUERRE:
        return math.lgamma(j + a + 1.0) - math.lgamma(j + 1.0)
    return (
        math.lgamma(j + a + 1.0)
        + math.lgamma(j + b + 1.0)
        - math.lgamma(j + 1.0)
        - math.log(2.0 * j + a + b + 1.0)
        - math.lgamma(j + a + b + 1.0)
    )


def norm_constant(fam, j: int) -> float:
    """N_j in linear scale; raises OverflowError once it exceeds double range."""
    lg = log_norm_constant(fam, j)
    if lg > _LOG_DBL_MAX:
        raise OverflowError(
            f"norm constant overflows double precision at degree {j}; "
            "use log_norm_constant"
        )
    return math.exp(lg)


def rodrigues_constants(spec: EnsembleSpec, j: int) -> RodriguesData:
    """The pair (e_j, Q) with p_j = (e_j w)^{-1} d^j/dy^j (w Q^j).

    On [0,1] the Jacobi constant is j! (the extra 2^j of the [-1,1]
    convention cancels against the argument substitution); this is the value
    consistent with p_j = P_j^(a,b)(1-2y) and the norms of this module.
    """
    if j < 0:
        raise ValueError("degree must be >= 0")
    if spec.kind == GAUSSIAN:
        return RodriguesData(float((-1) ** j), (1.0, 0.0, 0.0))
    if spec.kind == LAGUERRE:
        return RodriguesData(math.factorial(j), (0.0, 1.0, 0.0))
    return RodriguesData(math.factorial(j), (0.0, 1.0, -1.0))


def log_abs_e(kind: str, j: int) -> float:
    """log |e_j| for the Rodrigues constant of the family."""
    if kind == GAUSSIAN:
        return 0.0
    return math.lgamma(j + 1.0)


def sign_e(kind: str, j: int) -> float:
    return -1.0 if (kind == GAUSSIAN and j % 2) else 1.0


def eta_table(fam, kmax: int, x) -> np.ndarray:
    """All eta_k(x) = sqrt(w(x)/N_k) p_k(x) for k = 0..kmax.

    Runs the orthonormal-function recurrence directly on the eta values, so no
    norm constant is ever formed in linear scale; safe for kmax in the
    hundreds.  Returns an array of shape (kmax+1,) + shape(x).
    """
    fam = _as_family(fam)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    a, b = fam.params()
    logn = [log_norm_constant(fam, k) for k in range(kmax + 2)]
    if scalar:
        return _eta_scalar(fam, kmax, float(x), a, b, logn)
    logw = np.array([log_weight(fam, xi) for xi in np.atleast_1d(x)])
    xs = np.atleast_1d(x)
    out = np.zeros((kmax + 1, xs.size))
    offset = 0.5 * (logw - logn[0])
    offset = np.where(np.isfinite(offset), offset, -np.inf)
    eta = np.where(np.isfinite(offset), 1.0, 0.0)
    out[0] = _exp_or_zero_vec(offset, eta)
    if kmax > 0:
        # first step, then the generic recurrence rescaled by the norm ratios
        if fam.kind == GAUSSIAN:
            p1 = 2.0 * xs
        elif fam.kind == LAGUERRE:
            p1 = 1.0 + a - xs
        else:
            u = 1.0 - 2.0 * xs
            p1 = 0.5 * ((a + b + 2.0) * u + (a - b))
        eta_prev, eta = eta, p1 * eta * math.exp(0.5 * (logn[0] - logn[1]))
        out[1] = _exp_or_zero_vec(offset, eta)
        for k in range(1, kmax):
            r1 = math.exp(0.5 * (logn[k] - logn[k + 1]))
            r2 = math.exp(0.5 * (logn[k - 1] - logn[k + 1]))
            nxt = _step_scaled(fam.kind, a, b, k, xs, eta, eta_prev, r1, r2)
            eta_prev, eta = eta, nxt
            mag = np.maximum(np.abs(eta), np.abs(eta_prev))
            fix = (mag > 1e250) | ((mag != 0.0) & (mag < 1e-250))
            if np.any(fix):
                shift = np.where(fix, np.log(np.where(mag > 0, mag, 1.0)), 0.0)
                offset = offset + shift
                scale = np.exp(-shift)
                eta = eta * scale
                eta_prev = eta_prev * scale
            out[k + 1] = _exp_or_zero_vec(offset, eta)
    return out.reshape((kmax + 1,) + x.shape)


def _exp_or_zero_vec(offset, val):
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = offset + np.log(np.abs(np.where(val == 0.0, 1.0, val)))
        res = np.where((val != 0.0) & (lg > -745.0), np.sign(val) * np.exp(np.minimum(lg, 709.0)), 0.0)
    return res


def _eta_scalar(fam, kmax, x, a, b, logn):
    """Plain-float recurrence with a running log offset.

    The offset keeps the working pair representable even when eta_0 itself
    is far below double range (deep weight tail, high-degree families), so
    the later entries come out right; entries below double range emerge as 0.
    """
    out = np.zeros(kmax + 1)
    lw = log_weight(fam, x)
    if lw == -math.inf:
        return out
    offset = 0.5 * (lw - logn[0])
    eta = 1.0
    out[0] = _exp_or_zero(offset)
    if kmax == 0:
        return out
    if fam.kind == GAUSSIAN:
        p1 = 2.0 * x
    elif fam.kind == LAGUERRE:
        p1 = 1.0 + a - x
    else:
        p1 = 0.5 * ((a + b + 2.0) * (1.0 - 2.0 * x) + (a - b))
    eta_prev, eta = eta, p1 * eta * math.exp(0.5 * (logn[0] - logn[1]))
    out[1] = _exp_or_zero(offset, eta)
    for k in range(1, kmax):
        r1 = math.exp(0.5 * (logn[k] - logn[k + 1]))
        r2 = math.exp(0.5 * (logn[k - 1] - logn[k + 1]))
        eta_prev, eta = eta, _step_scaled(fam.kind, a, b, k, x, eta * r1, eta_prev * r2, 1.0, 1.0)
        mag = max(abs(eta), abs(eta_prev))
        if mag > 1e250 or (mag != 0.0 and mag < 1e-250):
            shift = math.log(mag)
            offset += shift
            scale = math.exp(-shift)
            eta *= scale
            eta_prev *= scale
        out[k + 1] = _exp_or_zero(offset, eta)
    return out


def _exp_or_zero(offset, val=1.0):
    if val == 0.0:
        return 0.0
    lg = offset + math.log(abs(val))
    if lg < -745.0:
        return 0.0
    return math.copysign(math.exp(lg), val)


def _step_scaled(kind, a, b, k, x, u_k, u_km1, r1, r2):
    """Recurrence step for eta: like _step but with norm-ratio rescaling."""
    if kind == GAUSSIAN:
        return 2.0 * x * u_k * r1 - 2.0 * k * u_km1 * r2
    if kind == LAGUERRE:
        return ((2.0 * k + 1.0 + a - x) * u_k * r1 - (k + a) * u_km1 * r2) / (k + 1.0)
    u = 1.0 - 2.0 * x
    s = 2.0 * k + a + b
    c1 = 2.0 * (k + 1.0) * (k + a + b + 1.0) * s
    c2 = (s + 1.0) * (a * a - b * b)
    c3 = (s + 1.0) * (s + 2.0) * s
    c4 = 2.0 * (k + a) * (k + b) * (s + 2.0)
    return ((c2 + c3 * u) * u_k * r1 - c4 * u_km1 * r2) / c1


def log_poly(fam, j: int, x: float) -> tuple[float, float]:
    """(sign, log|p_j(x)|) by a signed-log recurrence; immune to overflow.

    Used where polynomial values exceed double range (high degree far out in
    the weight's tail).  Inside the oscillatory region prefer eta-based paths.
    """
    fam = _as_family(fam)
    a, b = fam.params()
    x = float(x)

    def combine(c1, v1, c2, v2):
        # signed-log evaluation of c1*v1 + c2*v2 with v in (sign, log) form
        terms = []
        for c, (s, lg) in ((c1, v1), (c2, v2)):
            if c != 0.0 and s != 0.0:
                terms.append((math.copysign(1.0, c) * s, math.log(abs(c)) + lg))
        if not terms:
            return (0.0, -math.inf)
        m = max(t[1] for t in terms)
        tot = sum(s * math.exp(lg - m) for s, lg in terms)
        if tot == 0.0:
            return (0.0, -math.inf)
        return (math.copysign(1.0, tot), m + math.log(abs(tot)))

    prev = (1.0, 0.0)
    if j == 0:
        return prev
    if fam.kind == GAUSSIAN:
        cur = slog_of(2.0 * x)
    elif fam.kind == LAGUERRE:
        cur = slog_of(1.0 + a - x)
    else:
        cur = slog_of(0.5 * ((a + b + 2.0) * (1.0 - 2.0 * x) + (a - b)))
    for k in range(1, j):
        if fam.kind == GAUSSIAN:
            nxt = combine(2.0 * x, cur, -2.0 * k, prev)
        elif fam.kind == LAGUERRE:
            nxt = combine((2.0 * k + 1.0 + a - x) / (k + 1.0), cur, -(k + a) / (k + 1.0), prev)
        else:
            u = 1.0 - 2.0 * x
            s = 2.0 * k + a + b
            c1 = 2.0 * (k + 1.0) * (k + a + b + 1.0) * s
            nxt = combine(((s + 1.0) * (a * a - b * b) + (s + 1.0) * (s + 2.0) * s * u) / c1,
                          cur, -2.0 * (k + a) * (k + b) * (s + 2.0) / c1, prev)
        prev, cur = cur, nxt
    return cur


def slog_of(v: float) -> tuple[float, float]:
    if v == 0.0:
        return (0.0, -math.inf)
    return (math.copysign(1.0, v), math.log(abs(v)))


def eval_eta(fam, k: int, x):
    """Orthonormal function eta_k(x) = sqrt(w(x)/N_k) p_k(x)."""
    if k < 0:
        raise ValueError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    val = eta_table(fam, k, x)[k]
    return val if val.ndim else float(val)


def gauss_weight_nodes(fam, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes/weights for the family's weight on its natural support.

    Exact for polynomial integrands of degree <= 2m-1 against w(x)dx.
    """
    fam = _as_family(fam)
    a, b = fam.params()
    if fam.kind == GAUSSIAN:
        x, w = special.roots_hermite(m)
        return x, w
    if fam.kind == LAGUERRE:
        x, w = special.roots_genlaguerre(m, a)
        return x, w
    u, w = special.roots_jacobi(m, a, b)
    return (1.0 - u) / 2.0, w * 2.0 ** (-a - b - 1.0)


def airy(x: float) -> tuple[float, float]:
    """(Ai(x), Ai'(x)); |x| must be <= 50."""
    if abs(x) > 50.0:
        raise ValueError(f"airy argument {x} outside [-50, 50]")
    ai, aip, _, _ = special.airy(x)
    return float(ai), float(aip)


def bessel_j(nu: float, x: float) -> float:
    """Bessel J_nu(x) for nu >= 0, x >= 0."""
    if nu < 0.0:
        raise ValueError("order nu must be >= 0")
    if x < 0.0:
        raise ValueError("argument x must be >= 0")
    return float(special.jv(nu, x))
