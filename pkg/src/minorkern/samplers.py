"""Seeded Monte Carlo samplers for the interlaced eigenvalue chains.

Three constructions: eigenvalues of nested principal minors of a Gaussian
Hermitian matrix, the rank-one-update Wishart chain, and repeated corank-1
projections of a classical ensemble draw.  Each draw owns a counter-based
RNG stream keyed by (seed, draw index), so batches are reproducible and
independent of evaluation order.

Convention: the Gaussian matrix has density proportional to exp(-tr M^2)
(diagonal sd 1/sqrt(2), off-diagonal parts sd 1/2), which makes the species-1
marginal exp(-x^2)/sqrt(pi) and matches the kernel module's weights.  Wishart
entries have unit-mean squared modulus (parts sd 1/sqrt(2)).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh as scipy_eigh

from . import orthopoly as op
from .numerics import NumericError

__all__ = [
    "InterlacedChain",
    "SecularProblem",
    "sample_gue_minor_chain",
    "sample_lue_chain",
    "sample_projection_chain",
    "sample_ensemble_eigs",
    "secular_roots",
    "interlaces",
    "chains_to_csv",
    "chains_from_csv",
]

GUE_BORDERED = "gue-bordered"
LUE_UPDATE = "lue-update"
PROJECTION = "projection"

# poles closer than this are merged (weights added) before root finding
POLE_MERGE_GAP = 1e-12


def rng_stream(seed: int, draw: int = 0) -> np.random.Generator:
    """Counter-based generator for one draw; streams never overlap."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed), counter=draw << 128))


@dataclass(frozen=True)
class InterlacedChain:
    """One draw of the multi-species configuration {x_j^(s)}.

    species maps s to the sorted (increasing) vector of its points; length s
    for full chains, n(s) <= s for truncated ones.
    """

    species: dict[int, np.ndarray]
    ensemble: str
    N: int
    seed: int
    draw: int = 0
    notes: tuple[str, ...] = ()

    def top(self) -> int:
        return max(self.species)


@dataclass(frozen=True)
class SecularProblem:
    """Rational secular equation fixed by poles, weights and its form.

    GUE bordered: f(x) = x - a - sum w_i/(x - p_i)          (n+1 roots)
    LUE update:   f(x) = 1 - w0/x - sum w_i/(x - p_i)       (n+1 roots, poles > 0)
    projection:   f(x) = sum w_i/(x - p_i)                  (n-1 interior roots)
    """

    poles: np.ndarray
    weights: np.ndarray
    form: str
    border: float = 0.0
    zero_pole_weight: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.poles, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if p.shape != w.shape:
            raise ValueError("poles and weights must have matching shapes")
        if np.any(np.diff(p) <= 0):
            raise ValueError("poles must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if self.form not in (GUE_BORDERED, LUE_UPDATE, PROJECTION):
            raise ValueError(f"unknown secular form {self.form!r}")


def _merge_close_poles(poles, weights):
    """Merge near-degenerate poles, adding weights; returns (p, w, merged?)."""
    if len(poles) < 2 or np.all(np.diff(poles) >= POLE_MERGE_GAP):
        return poles, weights, False
    p_out, w_out = [poles[0]], [weights[0]]
    for p, w in zip(poles[1:], weights[1:]):
        if p - p_out[-1] < POLE_MERGE_GAP:
            w_out[-1] += w
        else:
            p_out.append(p)
            w_out.append(w)
    return np.array(p_out), np.array(w_out), True


def secular_roots(prob: SecularProblem) -> np.ndarray:
    """All real roots, sorted; each satisfies |f| below 1e-10 of local scale."""
    poles = np.asarray(prob.poles, dtype=float)
    weights = np.asarray(prob.weights, dtype=float)
    poles, weights, _ = _merge_close_poles(poles, weights)
    if prob.form == LUE_UPDATE:
        if len(poles) and poles[0] <= 0:
            raise ValueError("LUE poles must be positive")
        poles = np.concatenate([[0.0], poles])
        weights = np.concatenate([[prob.zero_pole_weight], weights])
        if weights[0] <= 0:
            raise ValueError("zero-pole weight must be positive")

    def f(x):
        return _secular_value(prob.form, prob.border, poles, weights, x)

    roots = []
    # interior roots: one per gap between consecutive poles
    for lo, hi in zip(poles[:-1], poles[1:]):
        roots.append(_bisect_root(f, lo, hi))
    if prob.form in (GUE_BORDERED, LUE_UPDATE):
        # exterior root above the last pole (and below the first for bordered)
        if len(poles):
            roots.append(_exterior_root(f, poles[-1], +1.0, weights))
            if prob.form == GUE_BORDERED:
                roots.insert(0, _exterior_root(f, poles[0], -1.0, weights))
        else:
            roots.append(prob.border if prob.form == GUE_BORDERED else 1.0)
    return np.array(sorted(roots))


def _secular_value(form, border, poles, weights, x):
    s = np.sum(weights / (x - poles)) if len(poles) else 0.0
    if form == GUE_BORDERED:
        return x - border - s
    if form == LUE_UPDATE:
        return 1.0 - s
    return s


def _bisect_root(f, lo, hi):
    """Bisection on a pole-bounded bracket, then two safeguarded Newton steps."""
    gap = hi - lo
    eps = 1e-14 * max(gap, 1.0)
    a, b = lo + eps, hi - eps
    fa, fb = f(a), f(b)
    # f runs from +inf side to -inf side between consecutive poles for all
    # three forms (residues positive), so a sign change is guaranteed
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise NumericError(f"no sign change in bracket ({lo}, {hi})")
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
        if b - a < 1e-13 * max(abs(a), abs(b), 1e-300):
            break
    x = 0.5 * (a + b)
    for _ in range(2):
        h = 1e-7 * max(abs(x), 1e-12)
        df = (f(x + h) - f(x - h)) / (2 * h)
        if df != 0.0:
            step = f(x) / df
            if a < x - step < b:
                x -= step
    return x


def _exterior_root(f, pole, direction, weights):
    """Root beyond the extreme pole; bracket grows geometrically."""
    total = float(np.sum(weights))
    step = max(math.sqrt(total), 1e-6)
    lo = pole + direction * 1e-14 * max(abs(pole), 1.0)
    f_lo = f(pole + direction * max(1e-9, 1e-12 * abs(pole)))
    for _ in range(200):
        hi = pole + direction * step
        if f(hi) * f_lo < 0:
            a, b = (lo, hi) if direction > 0 else (hi, lo)
            return _bisect_root(f, min(a, b), max(a, b))
        step *= 2.0
    raise NumericError("exterior bracket expansion failed")


# ---------------------------------------------------------------------------
# matrix draws
# ---------------------------------------------------------------------------


def _gue_matrix(rng, N: int) -> np.ndarray:
    """Hermitian draw with density ~ exp(-tr M^2)."""
    iu = np.triu_indices(N, 1)
    m = np.zeros((N, N), dtype=complex)
    m[iu] = rng.normal(0.0, 0.5, len(iu[0])) + 1j * rng.normal(0.0, 0.5, len(iu[0]))
    m = m + m.conj().T
    m[np.diag_indices(N)] = rng.normal(0.0, 1.0 / math.sqrt(2.0), N)
    return m


def _complex_gaussian(rng, shape) -> np.ndarray:
    """Entries with unit-mean squared modulus (parts sd 1/sqrt(2))."""
    s = 1.0 / math.sqrt(2.0)
    return rng.normal(0.0, s, shape) + 1j * rng.normal(0.0, s, shape)


def sample_gue_minor_chain(N: int, seed: int, draw: int = 0) -> InterlacedChain:
    """Eigenvalues of all nested principal minors of one Gaussian draw."""
    if not 1 <= N <= 400:
        raise ValueError("need 1 <= N <= 400")
    rng = rng_stream(seed, draw)
    m = _gue_matrix(rng, N)
    species = {s: np.linalg.eigvalsh(m[:s, :s]) for s in range(1, N + 1)}
    return InterlacedChain(species, op.GAUSSIAN, N, seed, draw)


def sample_lue_chain(N: int, n_max: int, seed: int, draw: int = 0) -> InterlacedChain:
    """Rank-one-update Wishart chain; species n holds the n nonzero eigenvalues."""
    if not 1 <= n_max <= N:
        raise ValueError("need 1 <= n_max <= N")
    rng = rng_stream(seed, draw)
    species: dict[int, np.ndarray] = {}
    eigs = np.zeros(0)
    for n in range(n_max):
        x = _complex_gaussian(rng, N)
        w = np.abs(x) ** 2
        if n == 0:
            eigs = np.array([float(np.sum(w))])
        else:
            prob = SecularProblem(eigs, w[:n], LUE_UPDATE,
                                  zero_pole_weight=float(np.sum(w[n:])))
            eigs = secular_roots(prob)
        species[n + 1] = eigs
    return InterlacedChain(species, op.LAGUERRE, N, seed, draw)


def sample_ensemble_eigs(ensemble: op.EnsembleSpec, n: int, seed: int, draw: int = 0) -> np.ndarray:
    """One eigenvalue draw of the unitary-invariant ensemble with weight w."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng_stream(seed, draw)
    return _ensemble_eigs_rng(ensemble, n, rng)


def _ensemble_eigs_rng(ensemble, n, rng) -> np.ndarray:
    if ensemble.kind == op.GAUSSIAN:
        return np.linalg.eigvalsh(_gue_matrix(rng, n))
    if ensemble.kind == op.LAGUERRE:
        a = _integer_exponent(ensemble.a, "a")
        x = _complex_gaussian(rng, (n + a, n))
        return np.linalg.eigvalsh(x.conj().T @ x)
    a = _integer_exponent(ensemble.a, "a")
    b = _integer_exponent(ensemble.b, "b")
    x = _complex_gaussian(rng, (n + a, n))
    y = _complex_gaussian(rng, (n + b, n))
    w1 = x.conj().T @ x
    return scipy_eigh(w1, w1 + y.conj().T @ y, eigvals_only=True)


def _integer_exponent(v: float, name: str) -> int:
    if v < 0 or v != int(v):
        raise ValueError(f"matrix sampler needs a nonnegative integer exponent {name}, got {v}")
    return int(v)


def sample_projection_chain(ensemble: op.EnsembleSpec, n: int, depth: int,
                            seed: int, draw: int = 0) -> InterlacedChain:
    """Base ensemble draw followed by `depth` corank-1 random projections."""
    if not 0 <= depth < n:
        raise ValueError("need 0 <= depth < n")
    rng = rng_stream(seed, draw)
    eigs = np.sort(_ensemble_eigs_rng(ensemble, n, rng))
    species = {n: eigs}
    for m in range(n, n - depth, -1):
        x = _complex_gaussian(rng, m)
        w = np.abs(x) ** 2
        w /= np.sum(w)
        eigs = secular_roots(SecularProblem(eigs, w, PROJECTION))
        species[m - 1] = eigs
    return InterlacedChain(species, ensemble.kind, n, seed, draw)


def interlaces(chain: InterlacedChain, strict: bool = True) -> bool:
    """Strict interlacing between every consecutive pair of species present."""
    keys = sorted(chain.species)
    for lo_s, hi_s in zip(keys[:-1], keys[1:]):
        if hi_s != lo_s + 1:
            continue
        lo_v, hi_v = chain.species[lo_s], chain.species[hi_s]
        if len(hi_v) != len(lo_v) + 1:
            continue
        ok = np.all(hi_v[:-1] < lo_v) and np.all(lo_v < hi_v[1:])
        if strict and not ok:
            return False
    return True


# ---------------------------------------------------------------------------
# batched sampling (vectorized across draws, same per-draw streams)
# ---------------------------------------------------------------------------


def sample_gue_minor_batch(N: int, draws: int, seed: int, start: int = 0) -> dict[int, np.ndarray]:
    """Species -> array (draws, s) of sorted minor eigenvalues."""
    mats = np.empty((draws, N, N), dtype=complex)
    for d in range(draws):
        mats[d] = _gue_matrix(rng_stream(seed, start + d), N)
    return {s: np.linalg.eigvalsh(mats[:, :s, :s]) for s in range(1, N + 1)}


def sample_lue_batch(N: int, n_max: int, draws: int, seed: int, start: int = 0) -> dict[int, np.ndarray]:
    """Vectorized rank-one-update chain; identical in law to sample_lue_chain."""
    xs = np.empty((draws, n_max, N), dtype=complex)
    for d in range(draws):
        rng = rng_stream(seed, start + d)
        for n in range(n_max):
            xs[d, n] = _complex_gaussian(rng, N)
    w = np.abs(xs) ** 2
    out: dict[int, np.ndarray] = {}
    eigs = w[:, 0, :].sum(axis=1)[:, None]
    out[1] = eigs.copy()
    for n in range(1, n_max):
        poles = eigs
        wn = w[:, n, :n]
        w0 = w[:, n, n:].sum(axis=1)
        eigs = _lue_roots_vec(poles, wn, w0)
        out[n + 1] = eigs.copy()
    return out


def _lue_roots_vec(poles, weights, w0):
    """Vectorized bisection for 1 - w0/x - sum w/(x - p) over all draws."""
    draws, n = poles.shape
    allp = np.concatenate([np.zeros((draws, 1)), poles], axis=1)
    allw = np.concatenate([w0[:, None], weights], axis=1)

    def fval(x):
        # x: (draws, n+1) candidate per gap
        return 1.0 - np.sum(allw[:, None, :] / (x[:, :, None] - allp[:, None, :]), axis=2)

    gaps_lo = allp
    width = np.diff(allp, axis=1)
    scale = np.maximum(np.abs(allp[:, -1]), 1.0)
    # interior brackets plus a geometrically grown exterior bracket
    lo = np.concatenate([gaps_lo[:, :-1] + 1e-14 * scale[:, None], (allp[:, -1] + 1e-14 * scale)[:, None]], axis=1)
    hi_int = allp[:, 1:] - 1e-14 * scale[:, None]
    tot = np.sum(allw, axis=1)
    ext = allp[:, -1] + np.maximum(np.sqrt(tot), 1.0)
    bad = fval(ext[:, None] * np.ones((draws, 1)))[:, 0] < 0
    grow = np.maximum(np.sqrt(tot), 1.0)
    for _ in range(120):
        if not np.any(bad):
            break
        grow = np.where(bad, grow * 2.0, grow)
        ext = np.where(bad, allp[:, -1] + grow, ext)
        bad = fval(ext[:, None])[:, 0] < 0
    if np.any(bad):
        raise NumericError("exterior bracket expansion failed in batch solver")
    hi = np.concatenate([hi_int, ext[:, None]], axis=1)
    for _ in range(110):
        mid = 0.5 * (lo + hi)
        pos = fval(mid) > 0
        # f rises from -inf to +inf across each gap: positive value means the
        # root lies below mid
        lo = np.where(pos, lo, mid)
        hi = np.where(pos, mid, hi)
    return 0.5 * (lo + hi)


def sample_projection_batch(ensemble: op.EnsembleSpec, n: int, depth: int,
                            draws: int, seed: int, start: int = 0) -> dict[int, np.ndarray]:
    """Vectorized corank-1 projection chain with per-draw streams."""
    base = np.empty((draws, n))
    gauss = np.empty((draws, depth), dtype=object)
    for d in range(draws):
        rng = rng_stream(seed, start + d)
        base[d] = np.sort(_ensemble_eigs_rng(ensemble, n, rng))
        for i, m in enumerate(range(n, n - depth, -1)):
            gauss[d, i] = _complex_gaussian(rng, m)
    out = {n: base}
    eigs = base
    for i, m in enumerate(range(n, n - depth, -1)):
        w = np.abs(np.stack([gauss[d, i] for d in range(draws)])) ** 2
        w /= w.sum(axis=1, keepdims=True)
        eigs = _projection_roots_vec(eigs, w)
        out[m - 1] = eigs
    return out


def _projection_roots_vec(poles, weights):
    """Vectorized bisection for sum w/(x - p) = 0 on interior gaps."""
    scale = np.maximum(np.abs(poles).max(axis=1, keepdims=True), 1.0)
    lo = poles[:, :-1] + 1e-15 * scale
    hi = poles[:, 1:] - 1e-15 * scale

    def fval(x):
        return np.sum(weights[:, None, :] / (x[:, :, None] - poles[:, None, :]), axis=2)

    for _ in range(110):
        mid = 0.5 * (lo + hi)
        pos = fval(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------


def chains_to_csv(batch: dict[int, np.ndarray], *, ensemble: str, N: int, seed: int) -> str:
    """One row per (draw, species, index, value), '#'-prefixed metadata header."""
    buf = io.StringIO()
    buf.write(f"# ensemble={ensemble}\n# N={N}\n# seed={seed}\n")
    buf.write("draw,species,index,value\n")
    draws = len(next(iter(batch.values())))
    for d in range(draws):
        for s in sorted(batch):
            row = batch[s][d]
            for i, v in enumerate(np.atleast_1d(row)):
                buf.write(f"{d},{s},{i},{v:.17g}\n")
    return buf.getvalue()


def chains_from_csv(text: str) -> tuple[dict[int, np.ndarray], dict[str, str]]:
    """Inverse of chains_to_csv."""
    meta: dict[str, str] = {}
    rows: dict[int, dict[int, dict[int, float]]] = {}
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k.strip()] = v.strip()
            continue
        if not line or line.startswith("draw"):
            continue
        d, s, i, v = line.split(",")
        rows.setdefault(int(s), {}).setdefault(int(d), {})[int(i)] = float(v)
    batch = {}
    for s, by_draw in rows.items():
        draws = sorted(by_draw)
        batch[s] = np.array([[by_draw[d][i] for i in sorted(by_draw[d])] for d in draws])
    return batch, meta
