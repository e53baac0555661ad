"""Computable dependence coefficients for causal models.

Projection norms are estimated through their coupling upper bound: replace
the time-0 innovation by an independent copy, measure how much the
conditional-law field moves in weighted L2 over the query point, and sum
over lags. Also: the local-sensitivity path metric induced by the state
derivative of the conditional law, geometric-moment-contraction rate fits,
coefficient tail sums, and the moment/integral condition checkers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConfigurationError, NumericError
from .empirical import WeightedMeasure
from .innovations import require_moment
from .processes import (
    CoeffSpec,
    ProcessModel,
    cond_field,
    cond_field_dy,
    gmc_step_factor,
    make_coeffs,
    simulate_batch,
    simulate_coupled_batch,
)
from . import seeds

H_FIELDS = ("cdf", "pdf", "pdf_dtheta")


def state_amplitude(model: ProcessModel) -> float:
    """Rough outer bound on typical |state| magnitudes (for quadrature)."""
    if model.kind == "linear":
        a = model.coeff_array()
        sd = math.sqrt(model.innovation.variance() * float(np.sum(a[1:] ** 2)))
        return 10.0 * sd + 1.0
    if model.kind == "ar1":
        sd = math.sqrt(model.innovation.variance() / (1.0 - model.alpha**2))
        return 10.0 * sd + 1.0
    xs, _ = simulate_batch(model, 256, 8, master=0xA3, role=seeds.ROLE_CALIBRATION)
    return 1.5 * float(np.max(np.abs(xs))) + 5.0


def default_power_measure(model: ProcessModel, lam: float, tol: float = 1e-10,
                          n_nodes: int = 2001) -> WeightedMeasure:
    """Power-weight measure with the cutoff chosen so the weighted
    conditional-density integrand is below tol at the boundary."""
    amp = state_amplitude(model)
    t = amp + model.innovation.tail_cutoff(1e-8)
    for _ in range(200):
        envelope = (1.0 + t) ** max(lam, 0.0) * float(model.innovation.pdf((t - amp) / max(1.0, amp)))
        if envelope < tol:
            return WeightedMeasure.power(lam, T=t, n_nodes=n_nodes)
        t *= 1.25
    raise NumericError(
        f"weighted integrand with weight exponent {lam} does not vanish in the tails"
    )


@dataclass
class ProjBound:
    """Coupling upper bound for one projection-norm integral."""

    j: int
    value: float
    se: float


def proj_bound_estimate(model: ProcessModel, h: str, m: WeightedMeasure, j: int,
                        reps: int, seed: int) -> ProjBound:
    """Estimate sqrt(integral of E[(h(theta,Y_j) - h(theta,Y*_j))^2] m(dtheta)).

    Monte Carlo over coupled state pairs at lag j; this upper-bounds the
    lag-j projection norm integral.
    """
    return proj_bound_curve(model, h, m, j, reps, seed)[j]


def proj_bound_curve(model: ProcessModel, h: str, m: WeightedMeasure, j_max: int,
                     reps: int, seed: int) -> list[ProjBound]:
    """ProjBound at every lag 0..j_max from one set of coupled paths."""
    if reps < 1000:
        raise ConfigurationError("projection bounds need reps >= 1000")
    if h not in H_FIELDS:
        raise ConfigurationError(f"h must be one of {H_FIELDS}, got {h!r}")
    hfun = cond_field(model, h)
    nodes = m.nodes
    sum_v = np.zeros(j_max + 1)
    sum_v2 = np.zeros(j_max + 1)
    chunk = max(1, min(reps, int(2e5 // len(nodes)) or 1))
    done = 0
    while done < reps:
        take = min(chunk, reps - done)
        ys, yss = simulate_coupled_batch(model, j_max, take, seed, rep_offset=done)
        for j in range(j_max + 1):
            dh = hfun(nodes[None, :], ys[:, j][:, None]) - hfun(nodes[None, :], yss[:, j][:, None])
            v = m.integrate(dh * dh)
            sum_v[j] += v.sum()
            sum_v2[j] += (v * v).sum()
        done += take
    out = []
    for j in range(j_max + 1):
        mean_v = sum_v[j] / reps
        var_v = max(sum_v2[j] / reps - mean_v**2, 0.0)
        se_v = math.sqrt(var_v / reps)
        value = math.sqrt(max(mean_v, 0.0))
        se = se_v / (2.0 * value) if value > 0 else math.sqrt(se_v)
        out.append(ProjBound(j=j, value=value, se=se))
    return out


def _coupled_chunk(model, n, take, master, offset):
    ys = np.empty((take, n + 1))
    yss = np.empty((take, n + 1))
    from .processes import _coupled_rows

    for r in range(take):
        rng = seeds.generator(master, seeds.ROLE_COUPLED, offset + r)
        y, ystar = _coupled_rows(model, n, rng, 1)
        ys[r] = y[0]
        yss[r] = ystar[0]
    return ys, yss


@dataclass
class SigmaEstimate:
    partial_sum: float
    tail_estimate: float
    summable: bool
    decay: str  # "geometric" | "power" | "zero" | "none"
    slope: float
    bounds: list


def sigma_hm_estimate(model: ProcessModel, h: str, m: WeightedMeasure, j_max: int,
                      reps: int, seed: int) -> SigmaEstimate:
    """Partial sum of per-lag projection bounds plus a fitted tail.

    The tail is extrapolated from a log-linear fit over the last half of
    the computed lags, geometric or power-law according to a curvature
    comparison; power-law decay with slope >= -1 is flagged non-summable.
    """
    if j_max < 5:
        raise ConfigurationError("tail extrapolation needs j_max >= 5")
    bounds = proj_bound_curve(model, h, m, j_max, reps, seed)
    vals = np.array([b.value for b in bounds])
    partial = float(np.sum(vals))
    floor = 1e-14 * max(vals[0], 1e-300)
    lo = j_max // 2
    fit_j = np.arange(lo, j_max + 1)
    fit_v = vals[lo:]
    live = fit_v > floor
    if np.count_nonzero(live) < 3:
        return SigmaEstimate(partial, 0.0, True, "zero", -math.inf, bounds)
    jj = fit_j[live].astype(float)
    lv = np.log(fit_v[live])
    slope_g, r2_g = _ls_fit(jj, lv)
    slope_p, r2_p = _ls_fit(np.log(jj), lv)
    if slope_g >= 0 and slope_p >= 0:
        raise NumericError("no decay detected in the projection bounds")
    if r2_g >= r2_p:
        rho = math.exp(slope_g)
        if rho >= 1.0:
            raise NumericError("no decay detected in the projection bounds")
        tail = float(fit_v[live][-1] * rho / (1.0 - rho))
        return SigmaEstimate(partial, tail, True, "geometric", slope_g, bounds)
    p = -slope_p
    if p <= 1.0:
        return SigmaEstimate(partial, math.inf, False, "power", slope_p, bounds)
    tail = float(fit_v[live][-1] * jj[-1] / (p - 1.0))
    return SigmaEstimate(partial, tail, True, "power", slope_p, bounds)


def _ls_fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - ym - slope * (x - xm)
    syy = float(np.sum((y - ym) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / syy if syy > 0 else 1.0
    return slope, r2


# ---------------------------------------------------------------------------
# local-sensitivity path metric
# ---------------------------------------------------------------------------


def local_sensitivity(model: ProcessModel, m: WeightedMeasure, y, h: str = "pdf"):
    """Weighted L2 norm (squared) of the state derivative of the
    conditional-law field at state y."""
    dh = cond_field_dy(model, h)
    y = np.asarray(y, dtype=float)
    vals = dh(m.nodes[None, :], y[..., None])
    return m.integrate(vals * vals)


def rho_m_distance(model: ProcessModel, m: WeightedMeasure, y1: float, y2: float,
                   h: str = "pdf", n_nodes: int = 513) -> float:
    """Path distance |integral from y1 to y2 of sqrt(local sensitivity)|."""
    if y1 == y2:
        return 0.0
    lo, hi = (y1, y2) if y1 < y2 else (y2, y1)
    from .innovations import simpson_rule

    ygrid, w = simpson_rule(lo, hi, n_nodes)
    hm = local_sensitivity(model, m, ygrid, h)
    return float(np.sum(w * np.sqrt(np.maximum(hm, 0.0))))


class RhoMetric:
    """Cached antiderivative of sqrt(local sensitivity), for fast pairwise
    path distances rho(a, b) = |Lambda(b) - Lambda(a)|."""

    def __init__(self, model: ProcessModel, m: WeightedMeasure, h: str = "pdf",
                 span: float | None = None, n_grid: int = 4097):
        if span is None:
            span = 1.5 * state_amplitude(model)
        ygrid = np.linspace(-span, span, n_grid)
        hm = local_sensitivity(model, m, ygrid, h)
        root = np.sqrt(np.maximum(hm, 0.0))
        lam = np.concatenate([[0.0], np.cumsum(0.5 * (root[1:] + root[:-1]) * np.diff(ygrid))])
        self._y = ygrid
        self._lam = lam
        self.span = span

    def distance(self, a, b):
        la = np.interp(np.asarray(a, dtype=float), self._y, self._lam)
        lb = np.interp(np.asarray(b, dtype=float), self._y, self._lam)
        return np.abs(lb - la)


# ---------------------------------------------------------------------------
# geometric-moment-contraction rate
# ---------------------------------------------------------------------------


@dataclass
class GmcFit:
    r_hat: float
    c_hat: float
    r2: float
    flagged: bool  # true when the decay is visibly non-geometric
    means: list


def gmc_rate_fit(model: ProcessModel, beta_exp: float, n_list, reps: int,
                 seed: int) -> GmcFit:
    """Fit E|Y_n - Y*_n|^beta ~ C r^n by least squares on the log scale."""
    require_moment(model.innovation, beta_exp)
    if model.is_markov:
        gate = gmc_step_factor(model, beta_exp)
        if not gate < 1.0:
            raise ConfigurationError(
                f"moment gate failed: one-step contraction factor {gate:.4f} >= 1 "
                f"at exponent {beta_exp}"
            )
    n_list = sorted(int(v) for v in n_list)
    n_max = n_list[-1]
    ys, yss = simulate_coupled_batch(model, n_max, reps, seed)
    means = [float(np.mean(np.abs(ys[:, n] - yss[:, n]) ** beta_exp)) for n in n_list]
    x = np.array(n_list, dtype=float)
    lv = np.log(np.maximum(means, 1e-300))
    slope, r2 = _ls_fit(x, lv)
    inter = float(np.mean(lv) - slope * np.mean(x))
    return GmcFit(
        r_hat=math.exp(slope / beta_exp) if False else math.exp(slope),
        c_hat=math.exp(inter),
        r2=r2,
        flagged=r2 < 0.9,
        means=means,
    )


# ---------------------------------------------------------------------------
# coefficient tail sums
# ---------------------------------------------------------------------------


@dataclass
class TailSums:
    a_n2: float
    a_n4: float
    theta_np: float
    big_theta_np: float


def coeff_abs_power_tail(spec: CoeffSpec, k: float, n: int) -> float:
    """sum over i >= n of |a_i|^k for the ideal (untruncated) coefficient law."""
    if spec.kind == "explicit":
        a = np.asarray(spec.a)
        return float(np.sum(np.abs(a[n:]) ** k)) if n <= spec.L else 0.0
    if spec.kind == "geometric":
        r = abs(spec.rho) ** k
        return r**n / (1.0 - r)
    # longmem: a_0 = 1, a_i = i^-beta; Hurwitz zeta gives the exact tail
    s = k * spec.beta
    if s <= 1.0:
        return math.inf
    if n == 0:
        return 1.0 + float(special.zeta(s, 1))
    return float(special.zeta(s, n))


def coeff_value(spec: CoeffSpec, i: int) -> float:
    if spec.kind == "explicit":
        return float(spec.a[i]) if i <= spec.L else 0.0
    if spec.kind == "geometric":
        return float(spec.rho**i)
    return 1.0 if i == 0 else float(i) ** (-spec.beta)


def tail_sums(spec: CoeffSpec, p: int, n: int) -> TailSums:
    """Tail sums A_n(2), A_n(4) and the remainder weights built from them."""
    if n < 1:
        raise ConfigurationError("tail sums are defined for n >= 1")
    a2 = coeff_abs_power_tail(spec, 2.0, n)
    a4 = coeff_abs_power_tail(spec, 4.0, n)
    theta = _theta(spec, p, n, a2, a4)
    big = 0.0
    for k in range(1, n + 1):
        big += _theta(spec, p, k, coeff_abs_power_tail(spec, 2.0, k), coeff_abs_power_tail(spec, 4.0, k))
    return TailSums(a_n2=a2, a_n4=a4, theta_np=theta, big_theta_np=big)


def theta_series(spec: CoeffSpec, p: int, n_max: int) -> np.ndarray:
    """theta_{n,p} for n = 1..n_max (vectorized tails for the power laws)."""
    ns = np.arange(1, n_max + 1)
    if spec.kind == "geometric":
        r2 = spec.rho**2
        r4 = spec.rho**4
        a2 = r2**ns / (1.0 - r2)
        a4 = r4**ns / (1.0 - r4)
        prev = np.abs(spec.rho ** (ns - 1).astype(float))
    elif spec.kind == "longmem":
        a2 = special.zeta(2 * spec.beta, ns)
        a4 = special.zeta(4 * spec.beta, ns)
        prev = np.where(ns == 1, 1.0, (ns - 1.0) ** (-spec.beta))
    else:
        a2 = np.array([coeff_abs_power_tail(spec, 2.0, int(n)) for n in ns])
        a4 = np.array([coeff_abs_power_tail(spec, 4.0, int(n)) for n in ns])
        prev = np.array([abs(coeff_value(spec, int(n) - 1)) for n in ns])
    return prev * (prev + np.sqrt(a4) + a2 ** (p / 2.0))


def _theta(spec: CoeffSpec, p: int, n: int, a2: float, a4: float) -> float:
    prev = abs(coeff_value(spec, n - 1))
    return prev * (prev + math.sqrt(a4) + a2 ** (p / 2.0))


# ---------------------------------------------------------------------------
# moment / integral condition checkers
# ---------------------------------------------------------------------------


@dataclass
class MomentCheck:
    value: float
    satisfied: bool
    detail: dict = field(default_factory=dict)


def moment_condition_check(target, condition: str, params: dict,
                           seed: int = 0x5EED) -> MomentCheck:
    """Truncated numeric value of a summability condition plus a decay flag.

    conditions: "intf" (weighted integral of the q/2 power of the
    conditional density; needs a model), "ginezinn1"/"ginezinn2" (weighted
    tail-probability series; needs a marginal sample or a model to draw
    one from).
    """
    if condition == "intf":
        return _check_intf(target, params, seed)
    if condition in ("ginezinn1", "ginezinn2"):
        sample = target
        if isinstance(target, ProcessModel):
            xs, _ = simulate_batch(target, 1024, 128, seed, role=seeds.ROLE_SWEEP)
            sample = xs.ravel()
        sample = np.asarray(sample, dtype=float)
        if sample.size < 100_000:
            raise ConfigurationError("tail-probability series needs a sample of >= 1e5")
        if condition == "ginezinn1":
            return _check_ginezinn1(sample, params)
        return _check_ginezinn2(sample, params)
    raise ConfigurationError(f"unknown moment condition {condition!r}")


def _check_intf(model: ProcessModel, params: dict, seed: int) -> MomentCheck:
    q = float(params["q"])
    gamma = float(params["gamma"])
    if q <= 2:
        raise ConfigurationError("intf requires q > 2")
    expo = gamma - 1.0 + q / 2.0
    _, states = simulate_batch(model, 512, 8, seed, role=seeds.ROLE_SWEEP)
    states = states.ravel()[:4096]

    def value(T):
        m = WeightedMeasure.power(expo, T=T, n_nodes=4001)
        from .processes import cond_pdf

        acc = np.zeros(len(m.nodes))
        chunk = 256
        for lo in range(0, len(states), chunk):
            ys = states[lo : lo + chunk, None]
            acc += np.sum(cond_pdf(model, m.nodes[None, :], ys) ** (q / 2.0), axis=0)
        return float(m.integrate(acc / len(states)))

    t0 = state_amplitude(model) + model.innovation.tail_cutoff(1e-10)
    v1 = value(t0)
    v2 = value(2.0 * t0)
    drift = abs(v2 - v1) / max(abs(v2), 1e-300)
    return MomentCheck(value=v2, satisfied=drift < 0.01, detail={"T": 2 * t0, "drift": drift})


def _check_ginezinn1(sample: np.ndarray, params: dict) -> MomentCheck:
    eta = float(params["eta"])
    delta = float(params["delta"])
    if eta - delta >= 1.0:
        raise ConfigurationError("ginezinn1 applies when eta - delta < 1")
    alpha = 1.0 / (1.0 + delta - eta)
    ax = np.abs(sample)
    jmax = int(np.ceil(np.max(ax) ** (1.0 / alpha))) + 1
    edges = (np.arange(1, jmax + 2, dtype=float)) ** alpha
    counts, _ = np.histogram(ax, bins=edges)
    probs = counts / ax.size
    j = np.arange(1, jmax + 1, dtype=float)
    terms = j ** (alpha * eta) * np.sqrt(probs)
    return _series_verdict(terms, j, loglog=True)


def _check_ginezinn2(sample: np.ndarray, params: dict) -> MomentCheck:
    eta = float(params["eta"])
    ax = np.abs(sample)
    jmax = max(int(np.ceil(np.log2(np.max(ax)))) + 1, 4)
    edges = 2.0 ** np.arange(1, jmax + 2)
    counts, _ = np.histogram(ax, bins=edges)
    probs = counts / ax.size
    j = np.arange(1, jmax + 1, dtype=float)
    terms = 2.0 ** (j * eta) * np.sqrt(probs)
    return _series_verdict(terms, j, loglog=False)


def _series_verdict(terms: np.ndarray, j: np.ndarray, loglog: bool) -> MomentCheck:
    value = float(np.sum(terms))
    live = terms > 0
    if np.count_nonzero(live) < 3:
        return MomentCheck(value=value, satisfied=True, detail={"terms": terms.tolist()})
    x = np.log(j[live]) if loglog else j[live]
    slope, _ = _ls_fit(x, np.log(terms[live]))
    # log-log slope < -1 gives a summable power envelope; on the dyadic
    # scale any negative slope is geometric decay
    thresh = -1.0 if loglog else 0.0
    return MomentCheck(
        value=value,
        satisfied=bool(slope < thresh - 1e-9),
        detail={"slope": slope, "nonzero_terms": int(np.count_nonzero(live))},
    )
