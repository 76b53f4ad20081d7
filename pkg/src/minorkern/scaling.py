"""Limit kernels (Airy, extended Airy, bulk bead, hard-edge Bessel) and
gauge-free evaluation of the finite-N kernel under the edge/bulk scalings.

Conjugation prefactors of the finite-N statements blow up in double precision
and cancel in every determinant, so convergence checks work exclusively with
gauge-invariant combinations: diagonals, (j,k)(k,j) products, and small
determinants.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import orthopoly as op
from .kernel import ProcessSpec, SpeciesPoint, _kernel_slog
from .numerics import gl_nodes, oscillatory_tail, slog_to_float

__all__ = [
    "SOFT_FIXED",
    "BULK",
    "HARD_EDGE",
    "SOFT_DRIFT",
    "LimitQuery",
    "airy_kernel",
    "extended_airy",
    "bead_kernel",
    "bead_kernel_alt",
    "hard_edge_kernel",
    "scaled_finite_kernel",
    "realized_offsets",
    "limit_kernel",
    "convergence_report",
]

SOFT_FIXED = "soft"
BULK = "bulk"
HARD_EDGE = "hard"
SOFT_DRIFT = "soft-drift"


@dataclass(frozen=True)
class LimitQuery:
    """A scaling-regime evaluation request.

    offsets are the species displacements c_i (integers in the fixed regimes,
    reals under SOFT_DRIFT); positions are the scaled coordinates Y_i / X_i.
    """

    regime: str
    ensemble: op.EnsembleSpec
    N: int
    offsets: tuple[float, ...]
    positions: tuple[float, ...]

    def __post_init__(self):
        if self.regime not in (SOFT_FIXED, BULK, HARD_EDGE, SOFT_DRIFT):
            raise ValueError(f"unknown regime {self.regime!r}")
        if len(self.offsets) != len(self.positions):
            raise ValueError("offsets and positions must pair up")
        if self.regime in (SOFT_FIXED, BULK) and self.ensemble.kind == op.JACOBI:
            raise ValueError("soft/bulk scalings are set up for gaussian and laguerre")
        if self.regime == HARD_EDGE and self.ensemble.kind != op.LAGUERRE:
            raise ValueError("hard-edge scaling is set up for the laguerre family")
        if self.regime == BULK and self.ensemble.kind != op.GAUSSIAN:
            raise ValueError("bulk scaling is set up for the gaussian family")


def airy_kernel(x: float, y: float) -> float:
    """Airy kernel; ratio form away from the diagonal, integral form near it."""
    if abs(x) > 20 or abs(y) > 20:
        raise ValueError("arguments limited to [-20, 20]")
    if abs(x - y) >= 1e-4:
        ax, axp = op.airy(x)
        ay, ayp = op.airy(y)
        return (ax * ayp - ay * axp) / (x - y)
    return _airy_integral(0.0, x, y)


def _airy_integral(tau: float, x: float, y: float) -> float:
    """int_0^inf e^(-tau u) Ai(x+u) Ai(y+u) du, tau >= 0."""
    f = lambda u: math.exp(-tau * u) * special.airy(x + u)[0] * special.airy(y + u)[0]
    val, err = integrate.quad(f, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
    return val


def extended_airy(tau_x: float, x: float, tau_y: float, y: float) -> float:
    """Two-time Airy-process kernel entry."""
    if abs(tau_x) > 5 or abs(tau_y) > 5:
        raise ValueError("time offsets limited to [-5, 5]")
    tau = tau_y - tau_x
    if tau >= 0:
        return _airy_integral(tau, x, y)
    # decaying-left branch: truncate where the envelope is negligible
    T = 10.0
    env = lambda t: math.exp(tau * t) * (1.0 + t) ** (-0.5)
    while env(T) > 1e-16 and T < 2000.0:
        T *= 1.5
    f = lambda u: math.exp(-tau * u) * special.airy(x + u)[0] * special.airy(y + u)[0]
    val, err = integrate.quad(f, -T, 0.0, epsabs=1e-13, epsrel=1e-10, limit=3000)
    return -val


def _exp_integral_imag(n: int, w: float) -> complex:
    """E_n(i w) = int_1^inf exp(-i w t) / t^n dt for real w, n >= 1."""
    if w == 0.0:
        if n <= 1:
            raise ValueError("E_n(0) diverges for n <= 1")
        return complex(1.0 / (n - 1))
    aw = abs(w)
    si, ci = special.sici(aw)
    e1 = complex(-ci, -(math.pi / 2.0 - si))
    if w < 0:
        e1 = e1.conjugate()
    e = e1
    z = complex(0.0, w)
    for k in range(1, n):
        e = (cmath.exp(-z) - z * e) / k
    return e


def bead_kernel(cx: int, x: float, cy: int, y: float) -> float:
    """Bulk (bead) kernel between integer species offsets."""
    m = cy - cx
    u = x - y
    beta = math.pi * u
    phi = -0.5 * math.pi * m
    if m >= 0:
        if abs(m) <= 6:
            c = _poly_osc_integral_01(m, beta)
            return ((-1j) ** m * c).real
        nodes, wts = gl_nodes(0.0, 1.0, 48)
        return float(np.dot(wts, nodes**m * np.cos(beta * nodes + phi)))
    n = -m
    if u == 0.0:
        # cos(pi m / 2) vanishes for odd m; otherwise the plain power integral
        return math.cos(phi) / (m + 1) if n >= 2 else 0.0
    if n <= 6:
        val = _exp_integral_imag(n, -beta)
        return -((-1j) ** m * val).real
    return -_osc_tail_integral(lambda s: s ** float(m) * np.cos(beta * s + phi), abs(beta))



def _poly_osc_integral_01(m: int, beta: float) -> complex:
    """int_0^1 s^m e^(i beta s) ds; series for small beta, recursion otherwise."""
    if abs(beta) < max(2.0, 0.5 * m):
        tot = 0.0j
        term = 1.0 + 0.0j
        k = 0
        while True:
            add = term / (m + k + 1)
            tot += add
            if abs(add) < 1e-18 * max(1.0, abs(tot)) and k > 4:
                return tot
            k += 1
            term *= 1j * beta / k
    ib = 1j * beta
    c = (cmath.exp(ib) - 1.0) / ib
    for j in range(1, m + 1):
        c = (cmath.exp(ib) - j * c) / ib
    return c


def _osc_tail_integral(f, freq: float, start: float = 1.0, freqs=()) -> float:
    """int_start^inf of a decaying oscillatory integrand via averaged panels.

    freqs lists the oscillation frequencies present; the cumulative sums are
    averaged at each one's half period, which removes the corresponding
    component to leading order even when it spans many panels.
    """
    freqs = [abs(w) for w in (freqs or (freq,)) if abs(w) > 1e-12]
    h = math.pi / max(max(freqs), 1e-3)
    n_panels = 640
    lo = start
    panels = np.empty(n_panels)
    for i in range(n_panels):
        nodes, wts = gl_nodes(lo, lo + h, 16)
        panels[i] = float(np.dot(wts, f(nodes)))
        lo += h
    cum = np.cumsum(panels)
    for w in sorted(freqs):
        lag = max(int(round(math.pi / (w * h))), 1)
        for _ in range(3):
            if len(cum) <= lag:
                break
            cum = 0.5 * (cum[lag:] + cum[:-lag])
    return float(np.mean(cum[-min(8, len(cum)):]))


def bead_kernel_alt(cx: int, x: float, cy: int, y: float) -> float:
    """Alternate bead form; same determinants as bead_kernel (gauge differs)."""
    m = cy - cx
    beta = math.pi * (x - y)
    if m >= 0:
        nodes, wts = gl_nodes(-1.0, 1.0, 64)
        vals = (1j * nodes) ** m * np.exp(1j * beta * nodes)
        return 0.5 * float(np.dot(wts, vals).real)
    n = -m
    if x == y:
        return -math.cos(0.5 * math.pi * m) / (m + 1) if n >= 2 else 0.0
    # the two half-lines are complex conjugates of each other
    c = _power_tail_integral(m, beta)
    return -((1j) ** m * c).real


def _power_tail_integral(m: int, beta: float) -> complex:
    """int_1^inf s^m e^(i beta s) ds for integer m <= -1, by panel quadrature
    up to T plus an integration-by-parts asymptotic tail."""
    ab = abs(beta)
    T = max(60.0, 60.0 / ab)
    width = min(math.pi / ab, 0.5)
    edges = np.arange(1.0, T + width, width)
    total = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes, wts = gl_nodes(float(lo), float(hi), 16)
        total += complex(np.dot(wts, nodes ** float(m) * np.exp(1j * beta * nodes)))
    T = float(edges[-1])
    # tail: repeated integration by parts in e^(i beta s)
    ib = 1j * beta
    term = -(T ** float(m)) * cmath.exp(1j * beta * T) / ib
    tail = 0.0 + 0.0j
    mm = float(m)
    for _ in range(6):
        tail += term
        term *= -mm / (ib * T)
        mm -= 1.0
    return total + tail


def hard_edge_kernel(a: float, cx: int, x: float, cy: int, y: float) -> float:
    """Hard-edge kernel between species offsets; Bessel orders a+cx, a+cy."""
    if a <= -1:
        raise ValueError("need a > -1")
    if x < 0 or y < 0:
        raise ValueError("hard-edge coordinates are nonnegative")
    if a + min(cx, cy) < 0:
        raise ValueError("Bessel order a + c must be >= 0")
    m = cy - cx
    sx, sy = math.sqrt(x), math.sqrt(y)

    def integrand(v):
        return 2.0 * v ** (m + 1.0) * special.jv(a + cx, v * sx) * special.jv(a + cy, v * sy)

    if m >= 0:
        nodes, wts = gl_nodes(0.0, 1.0, 64)
        return 0.25 * float(np.dot(wts, integrand(nodes)))
    return -0.25 * _osc_tail_integral(integrand, sx + sy, freqs=(sx + sy, sx - sy))


# ---------------------------------------------------------------------------
# finite-N scaling maps
# ---------------------------------------------------------------------------


def _resolve(q: LimitQuery):
    """Map (offsets, positions) to model species/coordinates plus the scale."""
    kind = q.ensemble.kind
    N = q.N
    pts = []
    if q.regime == SOFT_FIXED:
        if kind == op.GAUSSIAN:
            scale = 1.0 / (math.sqrt(2.0) * N ** (1.0 / 6.0))
            for c, Y in zip(q.offsets, q.positions):
                pts.append((N - int(c), math.sqrt(2.0 * N) + Y * scale))
        else:
            scale = 2.0 * (2.0 * N) ** (1.0 / 3.0)
            edge = 4.0 * N + 2.0 * q.ensemble.a
            for c, Y in zip(q.offsets, q.positions):
                pts.append((N - int(c), edge + Y * scale))
    elif q.regime == BULK:
        scale = math.pi / math.sqrt(2.0 * N)
        for c, Y in zip(q.offsets, q.positions):
            pts.append((N - int(c), Y * scale))
    elif q.regime == HARD_EDGE:
        scale = 1.0 / (4.0 * N)
        for c, X in zip(q.offsets, q.positions):
            pts.append((N - int(c), X * scale))
    else:  # SOFT_DRIFT
        if kind == op.GAUSSIAN:
            scale = 1.0 / (math.sqrt(2.0) * N ** (1.0 / 6.0))
            for c, Y in zip(q.offsets, q.positions):
                s = int(round(N + 2.0 * c * N ** (2.0 / 3.0)))
                pts.append((s, math.sqrt(2.0 * s) + Y / (math.sqrt(2.0) * s ** (1.0 / 6.0))))
        elif kind == op.LAGUERRE:
            scale = 2.0 * (2.0 * N) ** (1.0 / 3.0)
            for c, Y in zip(q.offsets, q.positions):
                s = int(round(N - 2.0 * c * (2.0 * N) ** (2.0 / 3.0)))
                # species s has effective exponent a + N - s; its edge is
                # (sqrt(s) + sqrt(s + a + N - s))^2, which the 4s + 2(a+N-s)
                # form only matches to within O(1) of the fluctuation scale
                a_eff = q.ensemble.a + N - s
                edge = (math.sqrt(s) + math.sqrt(s + a_eff)) ** 2
                pts.append((s, edge + scale * Y))
        else:
            raise ValueError("soft drift needs the gaussian or laguerre family")
    for s, _ in pts:
        if not 1 <= s <= N:
            raise ValueError(f"mapped species {s} lands outside [1, {N}]")
    return pts, scale


def realized_offsets(q: LimitQuery) -> tuple[float, ...]:
    """Offsets implied by the rounded species indices actually used."""
    pts, _ = _resolve(q)
    N = q.N
    out = []
    for s, _ in pts:
        if q.regime == SOFT_DRIFT and q.ensemble.kind == op.GAUSSIAN:
            out.append((s - N) / (2.0 * N ** (2.0 / 3.0)))
        elif q.regime == SOFT_DRIFT:
            out.append((N - s) / (2.0 * (2.0 * N) ** (2.0 / 3.0)))
        else:
            out.append(float(N - s))
    return tuple(out)


def scaled_finite_kernel(q: LimitQuery, j: int, k: int) -> float:
    """Gauge-free scaled finite-N kernel between query points j and k.

    Diagonal entries carry no gauge; off-diagonal entries report the geometric
    mean magnitude of the (j,k),(k,j) pair signed by the pair product, which
    is exactly the gauge-invariant content of the pair (the sign of a single
    entry is itself gauge).
    """
    pts, scale = _resolve(q)
    proc = ProcessSpec(q.ensemble, q.N)
    pj = SpeciesPoint(*pts[j])
    pk = SpeciesPoint(*pts[k])
    if j == k:
        s, lg = _kernel_slog(proc, pj, pk)
        return scale * slog_to_float(s, lg)
    s1, l1 = _kernel_slog(proc, pj, pk)
    s2, l2 = _kernel_slog(proc, pk, pj)
    if s1 == 0.0 or s2 == 0.0:
        return 0.0
    return s1 * s2 * scale * math.exp(0.5 * (l1 + l2))


def limit_kernel(q: LimitQuery, j: int, k: int) -> float:
    """The predicted limit for scaled_finite_kernel(q, j, k), gauge-freed the
    same way (geometric mean of the (j,k),(k,j) pair off the diagonal)."""
    cj, ck = q.offsets[j], q.offsets[k]
    Yj, Yk = q.positions[j], q.positions[k]
    if q.regime == SOFT_FIXED:
        return airy_kernel(Yj, Yk)
    if q.regime == BULK:
        f = lambda a, b: bead_kernel(int(q.offsets[a]), q.positions[a],
                                     int(q.offsets[b]), q.positions[b])
    elif q.regime == HARD_EDGE:
        f = lambda a, b: hard_edge_kernel(q.ensemble.a, int(q.offsets[a]), q.positions[a],
                                          int(q.offsets[b]), q.positions[b])
    else:
        sgn = -1.0 if q.ensemble.kind == op.GAUSSIAN else 1.0
        f = lambda a, b: extended_airy(sgn * q.offsets[a], q.positions[a],
                                       sgn * q.offsets[b], q.positions[b])
    if j == k:
        return f(j, j)
    vjk, vkj = f(j, k), f(k, j)
    if vjk == 0.0 or vkj == 0.0:
        return 0.0
    return math.copysign(math.sqrt(abs(vjk * vkj)), vjk * vkj)


def convergence_report(regime: str, ensemble: op.EnsembleSpec, n_list, offsets,
                       positions, *, pairs=None, mode: str = "entry") -> dict:
    """Tabulate |scaled finite-N value - limit| across N with an order estimate.

    mode "entry" compares gauge-free kernel entries at the given index pairs;
    mode "det2" compares the 2x2 determinant built from the first two points.
    """
    n_list = list(n_list)
    if len(n_list) < 3:
        raise ValueError("need at least 3 values of N")
    offsets = tuple(offsets)
    positions = tuple(positions)
    if pairs is None:
        pairs = [(i, i) for i in range(len(offsets))]
    rows = []
    for N in n_list:
        q = LimitQuery(regime, ensemble, N, offsets, positions)
        if mode == "det2":
            fin = _det2(lambda a, b: scaled_finite_kernel(q, a, b))
            lim = _det2(lambda a, b: _limit_entry_raw(q, a, b))
            errs = [abs(fin - lim)]
            vals, lims = [fin], [lim]
        else:
            vals = [scaled_finite_kernel(q, a, b) for a, b in pairs]
            lims = [limit_kernel(q, a, b) for a, b in pairs]
            errs = [abs(v - l) for v, l in zip(vals, lims)]
        rows.append({"N": N, "values": vals, "limits": lims, "max_error": max(errs)})
    orders = []
    for r0, r1 in zip(rows[:-1], rows[1:]):
        e0, e1 = r0["max_error"], r1["max_error"]
        if e1 > 0 and e0 > 0:
            orders.append(math.log(e0 / e1) / math.log(r1["N"] / r0["N"]))
    report = {
        "regime": regime,
        "ensemble": ensemble.kind,
        "a": ensemble.a,
        "b": ensemble.b,
        "N_list": n_list,
        "offsets": list(offsets),
        "positions": list(positions),
        "mode": mode,
        "rows": rows,
        "errors": [r["max_error"] for r in rows],
        "order_estimate": (sum(orders) / len(orders)) if orders else None,
        "converged": all(a > b for a, b in zip([r["max_error"] for r in rows][:-1],
                                               [r["max_error"] for r in rows][1:])),
    }
    return report


def _det2(entry) -> float:
    return entry(0, 0) * entry(1, 1) - entry(0, 1) * entry(1, 0)


def _limit_entry_raw(q: LimitQuery, a: int, b: int) -> float:
    """Raw (possibly gauge-carrying) limit entry; only determinants of these
    are compared, so the internal gauge is irrelevant."""
    if q.regime == SOFT_FIXED:
        return airy_kernel(q.positions[a], q.positions[b])
    if q.regime == BULK:
        return bead_kernel(int(q.offsets[a]), q.positions[a], int(q.offsets[b]), q.positions[b])
    if q.regime == HARD_EDGE:
        return hard_edge_kernel(q.ensemble.a, int(q.offsets[a]), q.positions[a],
                                int(q.offsets[b]), q.positions[b])
    sgn = -1.0 if q.ensemble.kind == op.GAUSSIAN else 1.0
    return extended_airy(sgn * q.offsets[a], q.positions[a], sgn * q.offsets[b], q.positions[b])


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True)


def report_to_csv(report: dict) -> str:
    lines = ["N,max_error," + ",".join(f"value_{i}" for i in range(len(report["rows"][0]["values"])))]
    for r in report["rows"]:
        lines.append(f'{r["N"]},{r["max_error"]:.17g},' + ",".join(f"{v:.17g}" for v in r["values"]))
    return "\n".join(lines) + "\n"
