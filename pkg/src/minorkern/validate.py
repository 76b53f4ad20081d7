"""Independent oracles and statistical comparison machinery.

brute_force_marginal integrates the joint interlaced density directly with
nested Gauss-Legendre rules (no kernel formulas involved), at N <= 3.
empirical_density and compare link Monte Carlo output to predicted densities.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np
from scipy import stats

from . import orthopoly as op
from .kernel import ProcessSpec, SpeciesPoint

__all__ = [
    "ComparisonReport",
    "DensityEstimate",
    "brute_force_marginal",
    "empirical_density",
    "compare",
    "ks_two_sample",
]

SUP_NORM = "sup-norm"
KOLMOGOROV_SMIRNOV = "ks"
CHI_SQUARE = "chi2"

# asymptotic 1% Kolmogorov-Smirnov coefficient: sqrt(-ln(alpha/2)/2)
KS_COEFF_1PCT = math.sqrt(-math.log(0.005) / 2.0)


@dataclass(frozen=True)
class ComparisonReport:
    test: str
    statistic: float
    threshold: float
    draws: int
    seed: int
    passed: bool

    def to_json(self) -> str:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class DensityEstimate:
    """Histogram estimate of a species one-point function, total mass = species."""

    edges: np.ndarray
    density: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    draws: int
    species: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


# ---------------------------------------------------------------------------
# brute-force quadrature of the joint density
# ---------------------------------------------------------------------------


def _support_box(spec: op.EnsembleSpec, N: int) -> tuple[float, float]:
    """Truncated integration box carrying all but ~1e-15 of the mass, N <= 3."""
    if spec.kind == op.GAUSSIAN:
        return (-6.5, 6.5)
    if spec.kind == op.LAGUERRE:
        return (0.0, 45.0 + 6.0 * (spec.a + N))
    return (0.0, 1.0)


def _base_edges(spec: op.EnsembleSpec, N: int) -> list[float]:
    lo, hi = _support_box(spec, N)
    if spec.kind == op.JACOBI:
        return [0.0, 0.02, 0.12, 0.5, 0.88, 0.98, 1.0]
    return list(np.linspace(lo, hi, 6))


def _logw_vec(spec: op.EnsembleSpec, x: np.ndarray) -> np.ndarray:
    if spec.kind == op.GAUSSIAN:
        return -x * x
    with np.errstate(divide="ignore"):
        if spec.kind == op.LAGUERRE:
            return np.where(x > 0, spec.a * np.log(np.maximum(x, 1e-300)) - x,
                            0.0 if spec.a == 0 else -np.inf)
        return (spec.a * np.log(np.maximum(x, 1e-300))
                + spec.b * np.log(np.maximum(1.0 - x, 1e-300)))


def _nested_nodes(lo, hi, edges, n: int):
    """Panelized GL nodes/weights on [lo, hi] (arrays ok), split at the edges.

    Returns (nodes, weights) with one new trailing axis; empty segments get
    zero weight.
    """
    xg, wg = np.polynomial.legendre.leggauss(n)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    cuts = [-np.inf] + list(edges) + [np.inf]
    nodes, weights = [], []
    for c0, c1 in zip(cuts[:-1], cuts[1:]):
        s_lo = np.maximum(lo, c0)
        s_hi = np.minimum(hi, c1)
        half = np.maximum(0.5 * (s_hi - s_lo), 0.0)
        mid = 0.5 * (s_hi + s_lo)
        nodes.append(mid[..., None] + half[..., None] * xg)
        weights.append(half[..., None] * wg)
    return np.concatenate(nodes, axis=-1), np.concatenate(weights, axis=-1)


def _gap_moments(lo, hi, kind: str, cut=None):
    """Exact integrals over (lo, hi): kind "one"/"x" with an optional one-sided
    cut ("above": x > cut, "below": x < cut)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if cut is not None:
        side, c = cut
        if side == "above":
            lo = np.maximum(lo, c)
        else:
            hi = np.minimum(hi, c)
    width = np.maximum(hi - lo, 0.0)
    if kind == "one":
        return width
    return 0.5 * np.maximum(hi - lo, 0.0) * (hi + lo) * (hi > lo)


def _lower_integral(spec, N, tops, pins1, pins2):
    """Integral over species < N given top-species values, with pinned targets.

    tops is the list [t_1 > t_2 > ...] of broadcast arrays.  pins1/pins2 are
    the pinned positions in species 1 and 2 (only N <= 3 is supported, so
    deeper species do not occur).
    """
    if N == 1:
        return 1.0
    if N == 2:
        t1, t2 = tops
        if pins1:
            (y1,) = pins1
            return ((t2 < y1) & (y1 < t1)).astype(float)
        return _gap_moments(t2, t1, "one")
    t1, t2, t3 = tops
    # species 2 lives in the gaps (t2, t1) and (t3, t2); species 1 sits
    # between the two species-2 points, which splits into separable factors
    if pins1:
        (y1,) = pins1
        terms = [(("one", ("above", y1)), ("one", ("below", y1)), 1.0)]
    else:
        terms = [(("x", None), ("one", None), 1.0), (("one", None), ("x", None), -1.0)]
    total = 0.0
    for (ka, ca), (kb, cb), sign in terms:
        # slot u in (t2, t1), slot v in (t3, t2); pins placed by ordering
        val_u = None
        val_v = None
        mask = 1.0
        ps = sorted(pins2, reverse=True)
        if len(ps) == 2:
            ya, yb = ps
            mask = ((t2 < ya) & (ya < t1) & (t3 < yb) & (yb < t2)).astype(float)
            val_u = _point_factor(ka, ca, ya)
            val_v = _point_factor(kb, cb, yb)
        elif len(ps) == 1:
            (ya,) = ps
            in_u = ((t2 < ya) & (ya < t1)).astype(float)
            in_v = ((t3 < ya) & (ya < t2)).astype(float)
            term_u = in_u * _point_factor(ka, ca, ya) * _gap_moments(t3, t2, kb, cb)
            term_v = in_v * _gap_moments(t2, t1, ka, ca) * _point_factor(kb, cb, ya)
            total = total + sign * (term_u + term_v)
            continue
        if val_u is None:
            val_u = _gap_moments(t2, t1, ka, ca)
        if val_v is None:
            val_v = _gap_moments(t3, t2, kb, cb)
        total = total + sign * mask * val_u * val_v
    return total


def _point_factor(kind, cut, y):
    ok = 1.0
    if cut is not None:
        side, c = cut
        ok = float(y > c) if side == "above" else float(y < c)
    return ok * (y if kind == "x" else 1.0)


def _joint_integral(spec: op.EnsembleSpec, N: int, pins: dict) -> float:
    """Quadrature of the unnormalized joint density with pinned targets."""
    box_lo, box_hi = _support_box(spec, N)
    pinvals = sorted(v for vals in pins.values() for v in vals)
    edges = sorted(set(_base_edges(spec, N)) | set(pinvals))
    n_nodes = {op.GAUSSIAN: 20, op.LAGUERRE: 24, op.JACOBI: 16}[spec.kind]
    top_pins = sorted(pins.get(N, []), reverse=True)
    pins1 = sorted(pins.get(1, [])) if N > 1 else []
    pins2 = sorted(pins.get(2, [])) if N > 2 else []

    total = 0.0
    # choose which ordered top slots carry the pinned values
    for slots in itertools.combinations(range(N), len(top_pins)):
        tops: list = []
        wts: list = []
        pin_iter = iter(top_pins)
        for j in range(N):
            hi = box_hi if j == 0 else tops[j - 1]
            if j in slots:
                y = next(pin_iter)
                mask = (np.asarray(hi) > y) if j > 0 else np.asarray(True)
                tops.append(np.asarray(y))
                wts.append(np.where(mask, 1.0, 0.0))
            else:
                nodes, weights = _nested_nodes(box_lo, hi, edges, n_nodes)
                tops = [np.asarray(t)[..., None] for t in tops]
                wts = [np.asarray(w)[..., None] for w in wts]
                tops.append(nodes)
                wts.append(weights)
        shape = np.broadcast_shapes(*[np.shape(t) for t in tops])
        tops_b = [np.broadcast_to(t, shape) for t in tops]
        f = np.ones(shape)
        for w in wts:
            f = f * w
        for j in range(N):
            f = f * np.exp(_logw_vec(spec, tops_b[j]))
            for k in range(j + 1, N):
                f = f * (tops_b[j] - tops_b[k])
        f = f * _lower_integral(spec, N, tops_b, pins1, pins2)
        total += float(np.sum(f))
    return total


@lru_cache(maxsize=64)
def _normalization(spec: op.EnsembleSpec, N: int) -> float:
    return _joint_integral(spec, N, {})


def brute_force_marginal(proc: ProcessSpec, targets: list[SpeciesPoint]) -> float:
    """Correlation at the targets by direct quadrature of the joint density.

    Relative accuracy about 1e-4; restricted to N <= 3 and at most 5
    integrated-out dimensions.
    """
    if proc.N > 3:
        raise ValueError("brute force is limited to N <= 3")
    n_vars = proc.N * (proc.N + 1) // 2
    if n_vars - len(targets) > 5:
        raise ValueError("more than 5 integrated-out dimensions")
    pins: dict[int, list[float]] = {}
    for t in targets:
        if not 1 <= t.s <= proc.N:
            raise ValueError(f"species {t.s} outside [1, {proc.N}]")
        pins.setdefault(t.s, []).append(t.y)
    for s, vals in pins.items():
        if len(vals) > s:
            raise ValueError(f"more targets than particles in species {s}")
    val = _joint_integral(proc.ensemble, proc.N, pins)
    return val / _normalization(proc.ensemble, proc.N)


# ---------------------------------------------------------------------------
# empirical densities and comparisons
# ---------------------------------------------------------------------------


def empirical_density(positions, draws: int, species: int, edges) -> DensityEstimate:
    """Histogram estimate of rho_1(species, .) from pooled sampled positions.

    positions holds every species coordinate over all draws; the estimate is
    normalized per draw, so its total mass is the particle count (= species).
    Per-bin 99% confidence intervals are binomial, normal approximation.
    """
    if draws < 1:
        raise ValueError("need at least one draw")
    positions = np.asarray(positions, dtype=float).ravel()
    if positions.size == 0:
        raise ValueError("no positions for this species")
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(positions, bins=edges)
    widths = np.diff(edges)
    dens = counts / (draws * widths)
    p = counts / positions.size
    se_counts = np.sqrt(np.maximum(p * (1 - p), 0.0) * positions.size)
    half = 2.5758293035489004 * se_counts / (draws * widths)
    return DensityEstimate(edges, dens, dens - half, dens + half, draws, species)


def compare(predicted, estimate: DensityEstimate, test: str, *,
            threshold: float | None = None, seed: int = 0) -> ComparisonReport:
    """Compare a predicted grid function with a density estimate.

    predicted is stated on the estimate's bin centers.  sup-norm takes a
    caller threshold; ks and chi2 default to their 1% critical values.
    """
    pred = np.asarray(predicted, dtype=float)
    if pred.shape != estimate.centers.shape:
        raise ValueError("grid mismatch between prediction and estimate")
    widths = np.diff(estimate.edges)
    if test == SUP_NORM:
        stat = float(np.max(np.abs(pred - estimate.density)))
        thr = 0.02 if threshold is None else threshold
    elif test == KOLMOGOROV_SMIRNOV:
        mass_p = np.cumsum(pred * widths)
        mass_e = np.cumsum(estimate.density * widths)
        scale = max(mass_p[-1], 1e-300)
        stat = float(np.max(np.abs(mass_p - mass_e)) / scale)
        n_eff = estimate.draws * estimate.species
        thr = KS_COEFF_1PCT / math.sqrt(n_eff) if threshold is None else threshold
    elif test == CHI_SQUARE:
        exp_counts = pred * widths * estimate.draws
        obs_counts = estimate.density * widths * estimate.draws
        keep = exp_counts >= 5.0
        stat = float(np.sum((obs_counts[keep] - exp_counts[keep]) ** 2 / exp_counts[keep]))
        dof = max(int(np.sum(keep)) - 1, 1)
        thr = float(stats.chi2.ppf(0.99, dof)) if threshold is None else threshold
    else:
        raise ValueError(f"unknown test {test!r}")
    return ComparisonReport(test, stat, thr, estimate.draws, seed, stat < thr)


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and its asymptotic 1% critical value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    stat = float(stats.ks_2samp(a, b, method="asymp").statistic)
    m, n = len(a), len(b)
    crit = KS_COEFF_1PCT * math.sqrt((m + n) / (m * n))
    return stat, crit
