"""Empirical distribution statistics and function-class machinery.

Provides the empirical CDF, the weighted sup statistic of the centered
empirical process, its weighted local-oscillation (modulus) statistic, the
function-indexed centered mean, weighted Sobolev norms, and canonical
members of the supported function classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, NumericError

_DIVERGED = "tail shells non-decreasing (slope >= -1): integral diverges"


# ---------------------------------------------------------------------------
# weighted measures and quadrature
# ---------------------------------------------------------------------------


@dataclass
class WeightedMeasure:
    """Weight density omega on the line plus a fixed quadrature rule.

    kind "power" is omega(u) = (1+|u|)^lam; "loggrowth" is
    (1+|u|)^(1+2 eta) log^2(2+|u|); "discrete" carries point masses.
    """

    kind: str
    nodes: np.ndarray
    qw: np.ndarray  # quadrature weight times omega at each node
    T: float
    lam: float | None = None
    eta: float | None = None

    @classmethod
    def power(cls, lam: float, T: float = 40.0, n_nodes: int = 2001) -> "WeightedMeasure":
        x, w = _simpson(-T, T, n_nodes)
        omega = (1.0 + np.abs(x)) ** lam
        return cls(kind="power", nodes=x, qw=w * omega, T=T, lam=lam)

    @classmethod
    def log_growth(cls, eta: float, T: float = 40.0, n_nodes: int = 2001) -> "WeightedMeasure":
        x, w = _simpson(-T, T, n_nodes)
        omega = (1.0 + np.abs(x)) ** (1.0 + 2.0 * eta) * np.log(2.0 + np.abs(x)) ** 2
        return cls(kind="loggrowth", nodes=x, qw=w * omega, T=T, eta=eta)

    @classmethod
    def discrete(cls, points, masses) -> "WeightedMeasure":
        points = np.asarray(points, dtype=float)
        masses = np.asarray(masses, dtype=float)
        if np.any(masses <= 0):
            raise ConfigurationError("discrete measure masses must be positive")
        return cls(kind="discrete", nodes=points, qw=masses, T=float(np.max(np.abs(points))))

    def weight(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            return (1.0 + np.abs(x)) ** self.lam
        if self.kind == "loggrowth":
            return (1.0 + np.abs(x)) ** (1.0 + 2.0 * self.eta) * np.log(2.0 + np.abs(x)) ** 2
        raise ConfigurationError("discrete measures have no weight density")

    def integrate(self, values: np.ndarray):
        """Integrate values-on-nodes against the measure (last axis = nodes)."""
        return np.asarray(values) @ self.qw

    def refined(self, factor: int = 2) -> "WeightedMeasure":
        n = factor * (len(self.nodes) - 1) + 1
        if self.kind == "power":
            return WeightedMeasure.power(self.lam, self.T, n)
        if self.kind == "loggrowth":
            return WeightedMeasure.log_growth(self.eta, self.T, n)
        return self


def _simpson(a: float, b: float, n_nodes: int):
    if n_nodes % 2 == 0:
        n_nodes += 1
    x = np.linspace(a, b, n_nodes)
    h = (b - a) / (n_nodes - 1)
    w = np.full(n_nodes, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * (h / 3.0)


# ---------------------------------------------------------------------------
# test functions and classes
# ---------------------------------------------------------------------------


@dataclass
class TestFunction:
    """Evaluator pair (g, g') with class-membership metadata.

    meta keys in use: kind, params, label, breakpoints (kinks of g or g',
    for quadrature), jumps (discontinuities of g, piecewise classes only).
    """

    g: Callable
    g1: Callable
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.g(x)

    @property
    def breakpoints(self):
        return tuple(self.meta.get("breakpoints", ()))

    @property
    def jumps(self):
        return tuple(self.meta.get("jumps", ()))


@dataclass(frozen=True)
class FunctionClassSpec:
    """Which function class to draw canonical members from."""

    kind: str  # sobolev | lipschitz_growth | piecewise | kclass
    gamma: float | None = None
    mu: float | None = None
    eta: float | None = None
    delta: float | None = None
    pieces: int | None = None

    def __post_init__(self):
        if self.kind == "sobolev":
            if self.mu is None or self.mu > 1:
                raise ConfigurationError("sobolev class requires mu <= 1")
            if self.gamma is None or self.gamma < 0:
                raise ConfigurationError("sobolev class requires gamma >= 0")
        elif self.kind == "lipschitz_growth":
            if self.eta is None or self.delta is None or self.eta < 0 or self.delta < 0:
                raise ConfigurationError("lipschitz_growth requires eta, delta >= 0")
            if self.eta - self.delta > 1:
                raise ConfigurationError("lipschitz_growth requires eta - delta <= 1")
        elif self.kind == "piecewise":
            if self.pieces is None or self.pieces < 1:
                raise ConfigurationError("piecewise requires pieces >= 1")
            if self.gamma is None or self.gamma <= 0:
                raise ConfigurationError("piecewise requires gamma > 0")
        elif self.kind == "kclass":
            if self.gamma is None or self.gamma <= 0:
                raise ConfigurationError("kclass requires gamma > 0")
        else:
            raise ConfigurationError(f"unknown function class {self.kind!r}")


def huber_derivative(theta: float = 0.0) -> TestFunction:
    """Clipped identity x -> max(-1, min(x - theta, 1))."""

    def g(x):
        return np.clip(np.asarray(x, dtype=float) - theta, -1.0, 1.0)

    def g1(x):
        return (np.abs(np.asarray(x, dtype=float) - theta) < 1.0).astype(float)

    return TestFunction(g, g1, {"kind": "huber", "params": {"theta": theta},
                                "breakpoints": (theta - 1.0, theta + 1.0),
                                "label": f"huber(theta={theta:g})"})


def gaussian_bump(theta: float = 0.0) -> TestFunction:
    def g(x):
        return np.exp(-((np.asarray(x, dtype=float) - theta) ** 2))

    def g1(x):
        u = np.asarray(x, dtype=float) - theta
        return -2.0 * u * np.exp(-(u**2))

    return TestFunction(g, g1, {"kind": "bump", "params": {"theta": theta},
                                "breakpoints": (), "label": f"bump(theta={theta:g})"})


def _scaled(tf: TestFunction, lam: float, label: str) -> TestFunction:
    return TestFunction(
        lambda x, _g=tf.g: lam * _g(x),
        lambda x, _g1=tf.g1: lam * _g1(x),
        {**tf.meta, "label": label, "scale": lam},
    )


def _offset(tf: TestFunction, c: float, label: str) -> TestFunction:
    return TestFunction(
        lambda x, _g=tf.g: _g(x) - c,
        tf.g1,
        {**tf.meta, "label": label},
    )


def empirical_cdf(sample, x):
    """Right-continuous empirical CDF of the sample evaluated at x."""
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise ConfigurationError("empirical_cdf requires a nonempty sample")
    xs = np.sort(sample)
    return np.searchsorted(xs, np.asarray(x, dtype=float), side="right") / sample.size


def indexed_emp(sample, g, eg: float) -> float:
    """Centered empirical mean (1/n) sum g(X_i) - E g(X_1)."""
    sample = np.asarray(sample, dtype=float)
    gv = g.g(sample) if isinstance(g, TestFunction) else g(sample)
    return float(np.mean(gv) - eg)


# ---------------------------------------------------------------------------
# weighted sup statistic
# ---------------------------------------------------------------------------


def weighted_sup_stat(sample, F, gamma: float, q: float, f=None) -> float:
    """sup over s of sqrt(n) |F_n(s) - F(s)| (1+|s|)^(gamma/q).

    Exact over each constancy piece of F_n: one-sided values at every
    order statistic, stationary points inside pieces found by bisection on
    the weighted derivative, and tail pieces maximized the same way.
    With gamma = 0 this is the classical KS statistic times sqrt(n).
    """
    if q <= 2:
        raise ConfigurationError(f"q must exceed 2, got {q}")
    if gamma < 0:
        raise ConfigurationError(f"gamma must be >= 0, got {gamma}")
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    if n == 0:
        raise ConfigurationError("weighted sup requires a nonempty sample")
    w0 = gamma / q
    wj = (1.0 + np.abs(xs)) ** w0
    if not np.all(np.isfinite(wj)):
        raise NumericError("non-finite weight at a jump point")
    Fx = np.asarray(F(xs), dtype=float)
    i = np.arange(1, n + 1)
    best = max(
        np.max(np.abs(i / n - Fx) * wj),  # value from the right of each jump
        np.max(np.abs((i - 1) / n - Fx) * wj),  # left limit at each jump
    )
    # value at s = 0 (kink of the weight)
    c0 = np.searchsorted(xs, 0.0, side="right") / n
    best = max(best, abs(c0 - float(F(0.0))))
    if f is None:
        f = _fd_density(F)
    if w0 > 0 and n >= 2:
        lo, hi, c = xs[:-1], xs[1:], i[:-1] / n
        keep = hi > lo
        cand = _piece_stationary_max(F, f, c[keep], lo[keep], hi[keep], w0)
        best = max(best, cand)
    best = max(best, _tail_sup(F, f, w0, xs[0], lower=True, floor=best))
    best = max(best, _tail_sup(F, f, w0, xs[-1], lower=False, floor=best))
    return math.sqrt(n) * best


def _fd_density(F):
    def f(s):
        s = np.asarray(s, dtype=float)
        h = 1e-6 * (1.0 + np.abs(s))
        return (np.asarray(F(s + h)) - np.asarray(F(s - h))) / (2.0 * h)

    return f


def _piece_stationary_max(F, f, c, lo, hi, w0, subdiv: int = 4) -> float:
    """Max of |c - F(s)| (1+|s|)^w0 at interior stationary points.

    The weighted derivative vanishes where
    w0 sign(s) (c - F(s)) = f(s) (1 + |s|); roots are bracketed on a
    per-piece scan and polished by bisection, all vectorized.
    """

    def psi(s, cc):
        return w0 * np.sign(s) * (cc - np.asarray(F(s))) - np.asarray(f(s)) * (1.0 + np.abs(s))

    # scan points per piece, including 0 when the piece straddles it
    frac = np.linspace(0.0, 1.0, subdiv + 1)
    pts = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    straddle = (lo < 0) & (hi > 0)
    if np.any(straddle):
        mid = subdiv // 2
        pts[straddle, mid] = 0.0
        pts[straddle] = np.sort(pts[straddle], axis=1)
    cc = np.repeat(c[:, None], subdiv + 1, axis=1)
    vals = psi(pts, cc)
    sgn = np.sign(vals)
    bracket = sgn[:, :-1] * sgn[:, 1:] < 0
    if not np.any(bracket):
        return 0.0
    a = pts[:, :-1][bracket]
    b = pts[:, 1:][bracket]
    croot = cc[:, :-1][bracket]
    fa = vals[:, :-1][bracket]
    for _ in range(60):
        m = 0.5 * (a + b)
        fm = psi(m, croot)
        left = fa * fm <= 0
        b = np.where(left, m, b)
        a = np.where(left, a, m)
        fa = np.where(left, fa, fm)
    root = 0.5 * (a + b)
    return float(np.max(np.abs(croot - np.asarray(F(root))) * (1.0 + np.abs(root)) ** w0))


def _tail_sup(F, f, w0, edge: float, lower: bool, floor: float, tol: float = 1e-12) -> float:
    """Sup of the weighted deviation on the unbounded piece beyond the data."""
    c = 0.0 if lower else 1.0

    def h(s):
        return np.abs(c - np.asarray(F(s))) * (1.0 + np.abs(s)) ** w0

    # expand until the piece value is negligible relative to the current max
    span = 1.0
    cut = edge - span if lower else edge + span
    for _ in range(80):
        if h(cut) < max(floor, 1.0) * tol:
            break
        span *= 2.0
        cut = edge - span if lower else edge + span
    else:
        raise NumericError("weighted tail of the deviation does not vanish")
    lo, hi = (cut, edge) if lower else (edge, cut)
    grid = np.linspace(lo, hi, 257)
    best = float(np.max(h(grid)))
    if w0 > 0:
        cand = _piece_stationary_max(F, f, np.array([c]), np.array([lo]), np.array([hi]), w0, subdiv=64)
        best = max(best, cand)
    return best


# ---------------------------------------------------------------------------
# modulus statistic
# ---------------------------------------------------------------------------


def modulus_stat(sample, F, delta: float, gamma: float, q: float) -> float:
    """sup_t (1+|t|)^(2 gamma/q) sup_{|s|<=delta} n (DF_n - DF)^2.

    Increment of the scaled centered empirical process over [t, t+s],
    maximized over jump-point pairs plus a delta/10 base-point grid.
    """
    if not 0.0 < delta < 0.5:
        raise ConfigurationError(f"delta must lie in (0, 1/2), got {delta}")
    if q <= 2:
        raise ConfigurationError(f"q must exceed 2, got {q}")
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    if n == 0:
        raise ConfigurationError("modulus requires a nonempty sample")
    w2 = 2.0 * gamma / q
    Fxs = np.asarray(F(xs), dtype=float)
    j = np.arange(1, n + 1)
    # deviation of F from F_n at each jump, per side
    phi_r = Fxs - j / n
    phi_l = Fxs - (j - 1) / n
    phi_max = np.maximum(phi_r, phi_l)
    phi_min = np.minimum(phi_r, phi_l)

    grid = np.arange(xs[0] - delta, xs[-1] + delta + 0.1 * delta, 0.1 * delta)
    u = np.concatenate([xs, xs - delta, xs + delta, grid])
    fn_u = np.concatenate([j / n, *(np.searchsorted(xs, p, side="right") / n
                                    for p in (xs - delta, xs + delta, grid))])
    # left limits at the jumps as extra base points
    u = np.concatenate([u, xs])
    fn_u = np.concatenate([fn_u, (j - 1) / n])
    Fu = np.asarray(F(u), dtype=float)
    kappa = Fu - fn_u

    j_lo = np.searchsorted(xs, u - delta, side="right")
    j_hi = np.searchsorted(xs, u + delta, side="right")
    hi_dev = _window_reduce(phi_max, j_lo, j_hi, np.maximum, -np.inf)
    lo_dev = _window_reduce(phi_min, j_lo, j_hi, np.minimum, np.inf)
    inner = np.maximum(hi_dev - kappa, kappa - lo_dev)
    inner = np.maximum(inner, 0.0)
    # window endpoints v = u +- delta as inner candidates
    for v in (u - delta, u + delta):
        fn_v = np.searchsorted(xs, v, side="right") / n
        inner = np.maximum(inner, np.abs((fn_v - fn_u) - (np.asarray(F(v)) - Fu)))
    wt = (1.0 + np.abs(u)) ** w2
    return float(np.max(wt * n * inner**2))


def _window_reduce(values, starts, ends, op, empty):
    """op-reduction of values[starts[i]:ends[i]] per i (reduceat trick)."""
    out = np.full(starts.shape, empty)
    nonempty = ends > starts
    if not np.any(nonempty):
        return out
    s = starts[nonempty]
    e = ends[nonempty]
    idx = np.empty(2 * s.size, dtype=np.int64)
    idx[0::2] = s
    idx[1::2] = np.maximum(e, s + 1)  # reduceat needs nondecreasing pairs
    # pad so the final segment exists even when e == len(values)
    padded = np.concatenate([values, [empty]])
    idx[1::2] = np.minimum(idx[1::2], len(padded) - 1)
    red = op.reduceat(padded, idx)[0::2]
    out[nonempty] = red
    return out


# ---------------------------------------------------------------------------
# weighted Sobolev norms
# ---------------------------------------------------------------------------


@dataclass
class SobolevNorm:
    norm_g: float
    norm_g1: float
    member: bool
    note: str | None = None

    @property
    def total(self) -> float:
        return self.norm_g + self.norm_g1


def weighted_l2_integral(func, expo: float, breakpoints=(), rel_tol: float = 1e-13):
    """integral of func(u)^2 (1+|u|)^expo du over the line.

    Core interval by adaptive quadrature with breakpoints, tails by dyadic
    shells; a non-decreasing shell sequence flags divergence.
    """

    def integrand(x):
        v = func(x)
        return v * v * (1.0 + abs(x)) ** expo

    T0 = max(8.0, 2.0 * max((abs(b) for b in breakpoints), default=0.0) + 4.0)
    pts = sorted(p for p in breakpoints if -T0 < p < T0)
    core, _ = integrate.quad(integrand, -T0, T0, points=pts or None, limit=400)
    total = core
    for sign in (-1.0, 1.0):
        t = T0
        prev = None
        rising = 0
        for _ in range(600):
            a, b = (sign * 2.0 * t, sign * t) if sign < 0 else (sign * t, sign * 2.0 * t)
            shell, _ = integrate.quad(integrand, a, b, limit=200)
            if prev is not None and prev > 0 and shell >= 0.95 * prev:
                rising += 1
                if rising >= 4:
                    return math.inf, False
            else:
                rising = 0
            total += shell
            if shell < rel_tol * max(abs(total), 1e-300) and (prev is None or shell <= prev):
                break
            prev = shell
            t *= 2.0
        else:
            raise NumericError("tail shells did not converge")
    return total, True


def sobolev_norm(g: TestFunction, gamma: float, mu: float) -> SobolevNorm:
    """The two weighted integrals defining the Sobolev-class membership."""
    bp = g.breakpoints
    i_g, ok_g = weighted_l2_integral(g.g, -gamma - mu, bp)
    i_g1, ok_g1 = weighted_l2_integral(g.g1, -gamma + mu, bp)
    if not (ok_g and ok_g1):
        return SobolevNorm(i_g, i_g1, member=False, note=_DIVERGED)
    return SobolevNorm(i_g, i_g1, member=(i_g + i_g1) <= 1.0 + 1e-9)


# ---------------------------------------------------------------------------
# canonical class members
# ---------------------------------------------------------------------------


def make_class_family(spec: FunctionClassSpec, count: int) -> list[TestFunction]:
    """Canonical members normalized into the class.

    The family is fixed (shifted clipped-identity shapes, Gaussian bumps,
    growth envelopes, step-modulated products); diagnostics that quote a
    class are always relative to these members.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    thetas = np.linspace(-2.0, 2.0, count) if count > 1 else np.array([0.0])
    if spec.kind == "sobolev":
        out = []
        for k, th in enumerate(thetas):
            base = huber_derivative(th) if k % 2 == 0 else gaussian_bump(th)
            norm = sobolev_norm(base, spec.gamma, spec.mu)
            lam = 1.0 / math.sqrt(norm.total)
            out.append(_scaled(base, lam, f"sobolev[{base.meta['label']}]"))
        return out
    if spec.kind == "kclass":
        out = []
        for k, th in enumerate(thetas):
            base = huber_derivative(th) if k % 2 == 0 else gaussian_bump(th)
            if k % 2 == 1:
                base = _offset(base, float(base.g(0.0)), "centered bump")
            i_g1, ok = weighted_l2_integral(base.g1, -spec.gamma, base.breakpoints)
            if not ok:
                raise NumericError("kclass member derivative integral diverged")
            member = _scaled(base, 1.0 / math.sqrt(i_g1), f"kclass[{base.meta['label']}]")
            shift = float(member.g(0.0))
            if shift != 0.0:
                member = _offset(member, shift, member.meta["label"])
            out.append(member)
        return out
    if spec.kind == "lipschitz_growth":
        out = []
        for k, th in enumerate(thetas):
            kind = k % 3
            if kind == 0:
                out.append(huber_derivative(th))
            elif kind == 1:
                w = 2.0
                out.append(TestFunction(
                    lambda x, w=w, th=th: np.sin(w * (np.asarray(x, dtype=float) - th)) / w,
                    lambda x, w=w, th=th: np.cos(w * (np.asarray(x, dtype=float) - th)),
                    {"kind": "sine", "params": {"theta": th}, "breakpoints": (),
                     "label": f"sine(theta={th:g})"},
                ))
            else:
                eta = spec.eta
                lam = 1.0 / max(eta, 1.0) if eta > 0 else 0.5
                out.append(TestFunction(
                    lambda x, lam=lam, eta=eta: lam * ((1.0 + np.asarray(x, dtype=float) ** 2) ** (eta / 2.0) - 1.0),
                    lambda x, lam=lam, eta=eta: lam * eta * np.asarray(x, dtype=float)
                    * (1.0 + np.asarray(x, dtype=float) ** 2) ** (eta / 2.0 - 1.0),
                    {"kind": "growth", "params": {"eta": eta}, "breakpoints": (),
                     "label": f"growth(eta={eta:g})"},
                ))
        return out
    # piecewise: sums of Sobolev members cut at thresholds
    inner = make_class_family(FunctionClassSpec(kind="sobolev", gamma=spec.gamma, mu=1.0),
                              spec.pieces)
    out = []
    for th in thetas:
        cuts = th + np.linspace(0.0, 1.5, spec.pieces)
        comps = [(inner[i], float(cuts[i])) for i in range(spec.pieces)]

        def g(x, comps=comps):
            x = np.asarray(x, dtype=float)
            acc = np.zeros_like(x)
            for tf, cut in comps:
                acc = acc + tf.g(x) * (x <= cut)
            return acc

        def g1(x, comps=comps):
            x = np.asarray(x, dtype=float)
            acc = np.zeros_like(x)
            for tf, cut in comps:
                acc = acc + tf.g1(x) * (x <= cut)
            return acc

        bps = tuple(b for tf, _ in comps for b in tf.breakpoints)
        out.append(TestFunction(g, g1, {
            "kind": "piecewise", "params": {"theta": th},
            "breakpoints": bps + tuple(float(c) for c in cuts),
            "jumps": tuple(float(c) for c in cuts),
            "label": f"piecewise(theta={th:g}, I={spec.pieces})",
        }))
    return out


def check_membership(tf: TestFunction, spec: FunctionClassSpec) -> bool:
    """Verify a member against its class definition."""
    if spec.kind == "sobolev":
        return sobolev_norm(tf, spec.gamma, spec.mu).member
    if spec.kind == "kclass":
        if abs(float(tf.g(0.0))) > 1e-10:
            return False
        i_g1, ok = weighted_l2_integral(tf.g1, -spec.gamma, tf.breakpoints)
        return ok and i_g1 <= 1.0 + 1e-9
    if spec.kind == "lipschitz_growth":
        x = np.linspace(-50.0, 50.0, 10_001)
        ok_g = np.all(np.abs(tf.g(x)) <= (1.0 + np.abs(x)) ** spec.eta + 1e-12)
        ok_g1 = np.all(np.abs(tf.g1(x)) <= (1.0 + np.abs(x)) ** spec.delta + 1e-12)
        return bool(ok_g and ok_g1)
    if spec.kind == "piecewise":
        return len(tf.jumps) == spec.pieces
    raise ConfigurationError(f"unknown class {spec.kind!r}")


def ac_residual(tf: TestFunction, a: float, b: float) -> float:
    """|g(b) - g(a) - integral of g1| on an interval with no jumps inside."""
    if a > b:
        a, b = b, a
    for jump in tf.jumps:
        if a < jump < b:
            raise ConfigurationError("absolute-continuity check straddles a jump")
    pts = sorted(p for p in tf.breakpoints if a < p < b)
    val, _ = integrate.quad(tf.g1, a, b, points=pts or None, limit=200)
    return float(abs(float(tf.g(b)) - float(tf.g(a)) - val))
