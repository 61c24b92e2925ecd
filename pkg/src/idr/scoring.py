"""Proper scores and calibration diagnostics for step-function CDFs.

All scores act on :class:`~idr.stepfun.StepCdf` forecasts and scalar
outcomes.  The CRPS is available in closed form, as an exact evaluation
of its defining integral, and through quadrature of its three mixture
representations (quantile scores over levels, elementary quantile
scores over levels and thresholds, elementary probability scores over
thresholds and probabilities), which serve as consistency checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stepfun import StepCdf

__all__ = [
    "crps",
    "crps_integral",
    "crps_rows",
    "quantile_score",
    "elementary_quantile_score",
    "elementary_probability_score",
    "brier_score",
    "pit",
    "crps_mixture_check",
    "reliability_bins",
    "ScoreReport",
]


def crps(cdf: StepCdf, y: float) -> float:
    """Continuous ranked probability score, exact closed form.

    For atoms t_k with masses p_k this is
    sum_k p_k |t_k - y| - 0.5 sum_{k,l} p_k p_l |t_k - t_l|.
    """
    t = cdf.jumps
    p = cdf.masses()
    term1 = float((p * np.abs(t - y)).sum())
    # atoms are sorted, so the pairwise sum telescopes via prefix sums
    pref_mass = np.concatenate(([0.0], np.cumsum(p)[:-1]))
    pref_moment = np.concatenate(([0.0], np.cumsum(p * t)[:-1]))
    pairwise = float((p * (t * pref_mass - pref_moment)).sum())
    return term1 - pairwise


def crps_integral(cdf: StepCdf, y: float) -> float:
    """CRPS as the exact integral of (F(z) - 1{y <= z})^2.

    The integrand is piecewise constant with knots at the jumps and at
    ``y``, so the integral is evaluated exactly rather than on a grid.
    """
    return float(crps_rows(cdf.jumps, cdf.cum[None, :], np.array([y]))[0])


def crps_rows(thresholds, rows, ys, chunk: int = 512) -> np.ndarray:
    """CRPS for many step CDFs sharing one threshold grid.

    Parameters
    ----------
    thresholds : array_like, shape (m,)
        Common, strictly increasing jump points.
    rows : array_like, shape (cases, m)
        Cumulative probabilities per case; each row ends at 1.
    ys : array_like, shape (cases,)
        Outcomes.
    chunk : int
        Number of cases per processing block, to bound memory.

    Returns
    -------
    numpy.ndarray, shape (cases,)
    """
    z = np.asarray(thresholds, dtype=float)
    rows = np.asarray(rows, dtype=float)
    ys = np.asarray(ys, dtype=float)
    widths = np.diff(z)
    out = np.empty(ys.size)
    for lo in range(0, ys.size, chunk):
        hi = min(ys.size, lo + chunk)
        y = ys[lo:hi, None]
        f = rows[lo:hi, :-1]
        below = np.clip(y - z[:-1], 0.0, widths)  # segment length left of y
        out[lo:hi] = (below * f**2 + (widths - below) * (1.0 - f) ** 2).sum(axis=1)
    out += np.clip(z[0] - ys, 0.0, None) + np.clip(ys - z[-1], 0.0, None)
    return out


def quantile_score(cdf: StepCdf, alpha: float, y: float) -> float:
    """Pinball loss of the fitted alpha-quantile against outcome y."""
    q = cdf.quantile(alpha)
    if y <= q:
        return (1.0 - alpha) * (q - y)
    return alpha * (y - q)


def elementary_quantile_score(cdf: StepCdf, alpha: float, theta: float, y: float) -> float:
    """Elementary score for the alpha-quantile at location theta.

    Scores 1 - alpha when the outcome is at or below theta while the
    forecast quantile lies above it, alpha in the mirrored case, and 0
    otherwise.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    q = cdf.quantile(alpha)
    if y <= theta < q:
        return 1.0 - alpha
    if q <= theta < y:
        return alpha
    return 0.0


def elementary_probability_score(cdf: StepCdf, z: float, c: float, y: float) -> float:
    """Elementary score for the exceedance forecast at threshold z."""
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie strictly between 0 and 1")
    f = cdf.evaluate(z)
    if f < c and y <= z:
        return 1.0 - c
    if f >= c and y > z:
        return c
    return 0.0


def brier_score(cdf: StepCdf, z: float, y: float) -> float:
    """Squared error of the forecast probability of {Y <= z}."""
    f = cdf.evaluate(z)
    return float((f - (1.0 if y <= z else 0.0)) ** 2)


def pit(cdf: StepCdf, y: float, v: float) -> float:
    """Randomized probability integral transform.

    ``v`` in [0, 1] interpolates across any probability mass at the
    outcome: F(y-) + v (F(y) - F(y-)).  Callers draw ``v`` from their
    own seeded generator.
    """
    if not 0.0 <= v <= 1.0:
        raise ValueError("v must lie in [0, 1]")
    lo = cdf.left_limit(y)
    hi = cdf.evaluate(y)
    return float(lo + v * (hi - lo))


def _mixture_quantile(cdf: StepCdf, y: float, n: int) -> float:
    alphas = (np.arange(n) + 0.5) / n
    q = cdf.quantile(alphas)
    qs = np.where(y <= q, (1.0 - alphas) * (q - y), alphas * (y - q))
    return 2.0 * float(qs.mean())


def _mixture_quantile_theta(cdf: StepCdf, y: float, n: int, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    alphas = (np.arange(n) + 0.5) / n
    q = cdf.quantile(alphas)
    total = 0.0
    step = max(1, int(2**22) // n)
    for start in range(0, n, step):
        theta = lo + (np.arange(start, min(n, start + step)) + 0.5) * (hi - lo) / n
        first = (y <= theta[None, :]) & (theta[None, :] < q[:, None])
        second = (q[:, None] <= theta[None, :]) & (theta[None, :] < y)
        s = np.where(first, (1.0 - alphas)[:, None], 0.0) + np.where(second, alphas[:, None], 0.0)
        total += float(s.sum())
    return 2.0 * (hi - lo) * total / (n * n)


def _mixture_probability(cdf: StepCdf, y: float, n: int, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    cs = (np.arange(n) + 0.5) / n
    total = 0.0
    step = max(1, int(2**22) // n)
    for start in range(0, n, step):
        z = lo + (np.arange(start, min(n, start + step)) + 0.5) * (hi - lo) / n
        f = cdf.evaluate(z)
        first = (f[None, :] < cs[:, None]) & (y <= z[None, :])
        second = (f[None, :] >= cs[:, None]) & (y > z[None, :])
        s = np.where(first, (1.0 - cs)[:, None], 0.0) + np.where(second, cs[:, None], 0.0)
        total += float(s.sum())
    return 2.0 * (hi - lo) * total / (n * n)


def crps_mixture_check(cdf: StepCdf, y: float, grid_sizes) -> dict[str, list[float]]:
    """Quadrature residuals of the CRPS mixture representations.

    Evaluates the CRPS as twice the integral of the quantile score over
    levels, twice the double integral of elementary quantile scores,
    and twice the double integral of elementary probability scores, on
    midpoint grids of the given sizes.  Returns, per representation,
    the absolute deviations from the closed form; these shrink as the
    grids refine.
    """
    sizes = [int(s) for s in grid_sizes]
    if any(s < 100 for s in sizes):
        raise ValueError("grid sizes must be at least 100")
    ref = crps(cdf, y)
    lo = min(float(cdf.jumps[0]), y)
    hi = max(float(cdf.jumps[-1]), y)
    res: dict[str, list[float]] = {"quantile": [], "quantile_theta": [], "probability": []}
    for n in sizes:
        res["quantile"].append(abs(_mixture_quantile(cdf, y, n) - ref))
        res["quantile_theta"].append(abs(_mixture_quantile_theta(cdf, y, n, lo, hi) - ref))
        res["probability"].append(abs(_mixture_probability(cdf, y, n, lo, hi) - ref))
    return res


def reliability_bins(probabilities, outcomes, bins: int):
    """Equal-width reliability table on [0, 1].

    Parameters
    ----------
    probabilities : array_like
        Forecast probabilities in [0, 1].
    outcomes : array_like
        Binary event indicators.
    bins : int
        Number of bins, at least 2.  Empty bins are emitted with
        count 0 and NaN forecast/frequency entries.

    Returns
    -------
    list of (bin_center, mean_forecast, event_frequency, count)
    """
    p = np.asarray(probabilities, dtype=float)
    o = np.asarray(outcomes, dtype=float)
    if p.shape != o.shape or p.ndim != 1:
        raise ValueError("probabilities and outcomes must be 1-d of equal length")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    idx = np.minimum((p * bins).astype(int), bins - 1)
    rows = []
    for b in range(bins):
        sel = idx == b
        count = int(sel.sum())
        center = (b + 0.5) / bins
        if count == 0:
            rows.append((center, float("nan"), float("nan"), 0))
        else:
            rows.append((center, float(p[sel].mean()), float(o[sel].mean()), count))
    return rows


@dataclass
class ScoreReport:
    """Aggregate scores of a batch of forecast cases."""

    mean_crps: float
    mean_brier: dict[float, float] = field(default_factory=dict)
    mean_quantile_score: dict[float, float] = field(default_factory=dict)
    pit_values: list[float] = field(default_factory=list)
