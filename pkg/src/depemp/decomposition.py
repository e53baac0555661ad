"""Martingale decomposition of centered empirical statistics.

The centered empirical CDF splits into an observation-minus-conditional-mean
part (a martingale in the sample index) and a conditional-mean-minus-marginal
part (differentiable in the query point); the same split applies to
function-indexed means. Both splits are exact identities, checked here with
explicit residuals, plus Monte Carlo diagnostics for the martingale property.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .empirical import TestFunction
from .processes import (
    Path,
    ProcessModel,
    cond_cdf,
    cond_pdf,
    marginal_distribution,
    require_states,
    simulate_batch,
)
from . import seeds


@dataclass
class DecompResult:
    """One decomposition query: total = martingale + smooth up to residual."""

    total: float
    martingale: float
    smooth: float
    residual: float


def conditional_ecdf(model: ProcessModel, path: Path, x: float):
    """Averages of the one-step conditional CDF and density over the path
    states: the conditional counterparts of the empirical CDF and density."""
    require_states(path)
    fbar = float(np.mean(cond_cdf(model, x, path.y)))
    dbar = float(np.mean(cond_pdf(model, x, path.y)))
    return fbar, dbar


def decompose_cdf(model: ProcessModel, path: Path, F, s: float) -> DecompResult:
    """Split sqrt(n)(F_n - F)(s) into its martingale and smooth parts."""
    require_states(path)
    n = path.n
    rt = math.sqrt(n)
    fn = float(np.count_nonzero(path.x <= s)) / n
    fbar, _ = conditional_ecdf(model, path, s)
    fs = float(F(s))
    total = rt * (fn - fs)
    mart = rt * (fn - fbar)
    smooth = rt * (fbar - fs)
    return DecompResult(total, mart, smooth, abs(mart + smooth - total))


def segmented_nodes(lo: float, hi: float, breakpoints=(), n_nodes: int = 4001):
    """Composite Simpson nodes split at integrand kinks."""
    cuts = [lo] + sorted(p for p in set(breakpoints) if lo < p < hi) + [hi]
    xs, ws = [], []
    span = hi - lo
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = max(32, int(round(n_nodes * (b - a) / span / 2) * 2))
        x = np.linspace(a, b, m + 1)
        h = (b - a) / m
        w = np.full(m + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        xs.append(x)
        ws.append(w * (h / 3.0))
    return np.concatenate(xs), np.concatenate(ws)


def cond_support(model: ProcessModel, states: np.ndarray, tol: float = 1e-12):
    """Interval outside which every conditional density along the path is
    negligible."""
    cut = model.innovation.tail_cutoff(tol)
    if model.kind == "linear":
        centers = states
        spread = cut
    elif model.kind == "ar1":
        centers = model.alpha * states
        spread = cut
    else:
        centers = model.alpha * states
        spread = cut * float(np.max(np.sqrt(model.a**2 + states**2)))
    return float(np.min(centers) - spread), float(np.max(centers) + spread)


def marginal_mean(model: ProcessModel, g: TestFunction, n_nodes: int = 100_001) -> float:
    """E g(X_1) by high-resolution quadrature against the marginal law."""
    marg = marginal_distribution(model)
    t = marg.support_cutoff(1e-14)
    x, w = segmented_nodes(-t, t, g.breakpoints + g.jumps, n_nodes)
    return float(np.sum(w * g.g(x) * marg.pdf(x)))


def decompose_indexed(model: ProcessModel, path: Path, g: TestFunction, eg: float,
                      n_nodes: int = 4001) -> DecompResult:
    """Split sqrt(n)((1/n) sum g(X_i) - E g) into martingale and smooth parts.

    The martingale part subtracts per-state conditional means of g; the
    smooth part integrates g against the difference between the averaged
    conditional density and the marginal density. Their sum must reproduce
    the total up to quadrature error, reported as the residual.
    """
    require_states(path)
    n = path.n
    rt = math.sqrt(n)
    marg = marginal_distribution(model)
    lo, hi = cond_support(model, path.y)
    lo = min(lo, -marg.support_cutoff(1e-12))
    hi = max(hi, marg.support_cutoff(1e-12))
    x, w = segmented_nodes(lo, hi, g.breakpoints + g.jumps, n_nodes)
    gx = g.g(x)
    wg = w * gx
    cond_means = np.empty(n)
    dbar = np.zeros(len(x))
    chunk = max(1, int(2e6 // len(x)))
    for s in range(0, n, chunk):
        e = min(s + chunk, n)
        pmat = cond_pdf(model, x[None, :], path.y[s:e, None])
        cond_means[s:e] = pmat @ wg
        dbar += pmat.sum(axis=0)
    dbar /= n
    gobs = g.g(path.x)
    total = rt * (float(np.mean(gobs)) - eg)
    mart = float(np.sum(gobs - cond_means)) / rt
    smooth = rt * (float(np.sum(wg * dbar)) - float(np.sum(wg * marg.pdf(x))))
    return DecompResult(total, mart, smooth, abs(mart + smooth - total))


@dataclass
class MartingaleRow:
    s: float
    mean: float
    se_mean: float
    corr: list
    se_corr: list
    passed: bool


@dataclass
class MartingaleReport:
    rows: list
    misspecified: bool
    passed: bool


def martingale_diagnostic(model: ProcessModel, n: int, reps: int, s_values,
                          master: int, misspecified: bool = False,
                          max_lag: int = 5, z_crit: float = 3.0) -> MartingaleReport:
    """Check that the one-step prediction residuals of the indicator process
    are centered and uncorrelated at small lags.

    With misspecified=True the residual at time i conditions on the state
    that already includes X_i (a deliberate negative control; the centering
    and whiteness checks are expected to fail).
    """
    if reps < 1000:
        raise ConfigurationError("martingale diagnostics need reps >= 1000")
    s_values = np.asarray(s_values, dtype=float)
    k = len(s_values)
    sum_d = np.zeros(k)
    sum_d2 = np.zeros(k)
    count = 0
    corr_rows = np.empty((reps, k, max_lag))
    chunk = max(1, int(4e6 // max(n, 1)))
    done = 0
    while done < reps:
        take = min(chunk, reps - done)
        xs, ys = simulate_batch(model, n, take, master, rep_offset=done)
        if misspecified:
            states = ys[:, 1:]
            obs = xs[:, : n - 1]
        else:
            states = ys
            obs = xs
        for j, s in enumerate(s_values):
            d = (obs <= s).astype(float) - cond_cdf(model, s, states)
            sum_d[j] += d.sum()
            sum_d2[j] += (d * d).sum()
            # the residuals are conditionally centered by construction, so
            # uncentered correlations avoid the O(1/n) centering bias that
            # would otherwise shift the null
            denom = (d * d).sum(axis=1)
            for lag in range(1, max_lag + 1):
                num = (d[:, :-lag] * d[:, lag:]).sum(axis=1)
                corr_rows[done : done + take, j, lag - 1] = num / denom
        count += take * obs.shape[1]
        done += take
    rows = []
    all_pass = True
    for j, s in enumerate(s_values):
        mean = sum_d[j] / count
        var = sum_d2[j] / count - mean**2
        se = math.sqrt(var / count)
        ok = abs(mean) <= z_crit * se
        corrs, ses = [], []
        for lag in range(max_lag):
            c = corr_rows[:, j, lag]
            cm = float(np.mean(c))
            cse = float(np.std(c, ddof=1) / math.sqrt(reps))
            corrs.append(cm)
            ses.append(cse)
            ok = ok and abs(cm) <= z_crit * cse
        rows.append(MartingaleRow(float(s), mean, se, corrs, ses, ok))
        all_pass = all_pass and ok
    return MartingaleReport(rows=rows, misspecified=misspecified, passed=all_pass)
