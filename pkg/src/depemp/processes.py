"""Causal process generators: truncated linear processes (short and long
memory) and Markov chains from iterated random maps (AR(1), AR-ARCH).

Each model exposes sampling, the conditioning state sequence, the one-step
conditional law of the next observation given the state, and coupled
trajectories in which the time-0 innovation is replaced by an independent
copy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import ConfigurationError, ContractError
from .innovations import InnovationDist, simpson_rule, sample_with
from . import seeds

BURNIN_CAP = 10_000
_BURNIN_TOL = 1e-8


@dataclass(frozen=True)
class CoeffSpec:
    """Moving-average coefficients a_0..a_L with a_0 = 1.

    kinds: explicit (a given), geometric (a_j = rho^j), longmem
    (a_0 = 1, a_j = j^-beta for j >= 1, slowly varying part == 1).
    """

    kind: str
    L: int
    a: tuple[float, ...] | None = None
    rho: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in ("explicit", "geometric", "longmem"):
            raise ConfigurationError(f"unknown coefficient kind {self.kind!r}")
        if self.L < 0:
            raise ConfigurationError("truncation lag L must be >= 0")
        if self.kind == "explicit":
            if not self.a:
                raise ConfigurationError("explicit coefficients require a")
            if abs(self.a[0] - 1.0) > 1e-15:
                raise ConfigurationError("a_0 must equal 1")
        if self.kind == "geometric":
            if self.rho is None or not -1 < self.rho < 1:
                raise ConfigurationError("geometric requires |rho| < 1")
            if self.L < 1:
                raise ConfigurationError("geometric requires L >= 1")
        if self.kind == "longmem":
            if self.beta is None or self.beta <= 0.5:
                raise ConfigurationError(
                    f"longmem requires beta > 1/2 (variance diverges), got {self.beta}"
                )
            if self.L < 1:
                raise ConfigurationError("longmem requires L >= 1")


def explicit_coeffs(a) -> CoeffSpec:
    a = tuple(float(v) for v in np.atleast_1d(a))
    return CoeffSpec(kind="explicit", L=len(a) - 1, a=a)


def geometric_coeffs(rho: float, L: int) -> CoeffSpec:
    return CoeffSpec(kind="geometric", L=L, rho=float(rho))


def longmem_coeffs(beta: float, L: int = 10_000) -> CoeffSpec:
    return CoeffSpec(kind="longmem", L=L, beta=float(beta))


def make_coeffs(spec: CoeffSpec) -> tuple[np.ndarray, float]:
    """Coefficient array a_0..a_L plus an integral-comparison bound on the
    squared tail sum over lags > L."""
    if spec.kind == "explicit":
        return np.asarray(spec.a, dtype=float), 0.0
    if spec.kind == "geometric":
        a = spec.rho ** np.arange(spec.L + 1, dtype=float)
        tail = spec.rho ** (2 * (spec.L + 1)) / (1.0 - spec.rho**2)
        return a, tail
    a = np.ones(spec.L + 1)
    j = np.arange(1, spec.L + 1, dtype=float)
    a[1:] = j ** (-spec.beta)
    # sum_{j>L} j^(-2 beta) ~ integral_L^inf t^(-2 beta) dt
    tail = spec.L ** (1.0 - 2.0 * spec.beta) / (2.0 * spec.beta - 1.0)
    return a, tail


@dataclass(frozen=True)
class ProcessModel:
    """Stationary causal model driven by iid innovations.

    kinds: linear (needs coeffs), ar1 (alpha), ar_arch (alpha, a, and the
    moment order `contraction` at which the random-map contraction gate
    E[(|alpha|+|eps|)^contraction] < 1 is checked numerically).
    """

    kind: str
    innovation: InnovationDist
    coeffs: CoeffSpec | None = None
    alpha: float | None = None
    a: float | None = None
    contraction: float | None = None

    def __post_init__(self):
        if self.kind == "linear":
            if self.coeffs is None:
                raise ConfigurationError("linear model requires coeffs")
        elif self.kind == "ar1":
            if self.alpha is None or not abs(self.alpha) < 1:
                raise ConfigurationError(f"ar1 requires |alpha| < 1, got {self.alpha}")
        elif self.kind == "ar_arch":
            if self.alpha is None or self.a is None:
                raise ConfigurationError("ar_arch requires alpha and a")
            if self.a <= 0:
                raise ConfigurationError("ar_arch requires a > 0")
            beta = 0.25 if self.contraction is None else self.contraction
            object.__setattr__(self, "contraction", float(beta))
            r = gmc_step_factor(self, beta)
            if not r < 1.0:
                raise ConfigurationError(
                    f"ar_arch not contractive: E[(|alpha|+|eps|)^{beta}] = {r:.6f} >= 1"
                )
        else:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")

    @property
    def is_markov(self) -> bool:
        return self.kind in ("ar1", "ar_arch")

    def coeff_array(self) -> np.ndarray:
        a, _ = make_coeffs(self.coeffs)
        return a


def linear_model(coeffs: CoeffSpec, innovation: InnovationDist | None = None) -> ProcessModel:
    return ProcessModel(kind="linear", innovation=innovation or InnovationDist(), coeffs=coeffs)


def iid_model(innovation: InnovationDist | None = None) -> ProcessModel:
    return linear_model(explicit_coeffs([1.0]), innovation)


def ar1_model(alpha: float, innovation: InnovationDist | None = None) -> ProcessModel:
    return ProcessModel(kind="ar1", innovation=innovation or InnovationDist(), alpha=float(alpha))


def ar_arch_model(
    alpha: float,
    a: float,
    innovation: InnovationDist | None = None,
    contraction: float = 0.25,
) -> ProcessModel:
    return ProcessModel(
        kind="ar_arch",
        innovation=innovation or InnovationDist(),
        alpha=float(alpha),
        a=float(a),
        contraction=float(contraction),
    )


def gmc_step_factor(model: ProcessModel, beta: float) -> float:
    """One-step contraction factor of E|Y - Y'|^beta for Markov models."""
    if model.kind == "ar1":
        return abs(model.alpha) ** beta
    if model.kind == "ar_arch":
        # Lipschitz factor of the random map is bounded by |alpha| + |eps|
        dist = model.innovation
        t = dist.tail_cutoff(1e-14)
        x, w = simpson_rule(-t, t, 8001)
        return float(np.sum(w * (abs(model.alpha) + np.abs(x)) ** beta * dist.pdf(x)))
    raise ConfigurationError("contraction factor applies to Markov models only")


def burn_in(model: ProcessModel) -> int:
    """Steps discarded before recording a Markov path (geometric decay rule)."""
    if not model.is_markov:
        return 0
    beta = 1.0 if model.kind == "ar1" else model.contraction
    r = gmc_step_factor(model, beta)
    if r <= 0:
        return 1
    b = math.ceil(math.log(_BURNIN_TOL) / math.log(r))
    return min(max(b, 1), BURNIN_CAP)


@dataclass
class Path:
    """One realized trajectory.

    eps holds the innovations that generated the path; for linear models it
    includes the L pre-period values, so eps[i + L - 1] drives x[i - 1].
    y[i-1] is the conditioning state for x[i-1+1] = X_i.
    """

    model: ProcessModel
    eps: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return len(self.x)

    def innovations(self) -> np.ndarray:
        """eps_1..eps_n, the innovation entering each recorded observation."""
        lag = len(self.eps) - self.n
        return self.eps[lag:]

    def to_csv(self, path) -> None:
        rows = np.column_stack(
            [np.arange(1, self.n + 1, dtype=float), self.innovations(), self.x, self.y]
        )
        header = "index,eps,x,y"
        np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.17g")


def markov_step(model: ProcessModel, x, eps):
    """One application of the random map (vectorized)."""
    if model.kind == "ar1":
        return model.alpha * x + eps
    if model.kind == "ar_arch":
        return model.alpha * x + eps * np.sqrt(model.a**2 + x**2)
    raise ConfigurationError("markov_step applies to Markov models only")


def markov_orbit(model: ProcessModel, x0: float, eps: np.ndarray) -> np.ndarray:
    """Iterate the random map from x0 under a given innovation sequence.

    Test hook: with eps == 0 the orbit contracts to the map's fixed point.
    """
    out = np.empty(len(eps))
    x = x0
    for i, e in enumerate(eps):
        x = markov_step(model, x, e)
        out[i] = x
    return out


def simulate(model: ProcessModel, n: int, seed) -> Path:
    """Simulate a stationary stretch X_1..X_n with its state sequence."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else seeds.generator(seed, seeds.ROLE_PATH)
    if model.kind == "linear":
        a = model.coeff_array()
        L = len(a) - 1
        eps = sample_with(model.innovation, rng, n + L)
        y = _linear_states(a, eps, n)
        x = eps[L:] + y
        return Path(model=model, eps=eps, x=x, y=y)
    b = burn_in(model)
    eps = sample_with(model.innovation, rng, b + n)
    if model.kind == "ar1":
        full = signal.lfilter([1.0], [1.0, -model.alpha], eps)
    else:
        full = markov_orbit(model, 0.0, eps)
    x = full[b:]
    y = np.concatenate([[full[b - 1]], x[:-1]]) if b > 0 else np.concatenate([[0.0], x[:-1]])
    return Path(model=model, eps=eps[b:], x=x, y=y)


def _linear_states(a: np.ndarray, eps: np.ndarray, n: int) -> np.ndarray:
    """States Y_0..Y_{n-1} = sum_{j>=1} a_j eps_{i-j} for the packed eps array."""
    L = len(a) - 1
    if L == 0:
        return np.zeros(n)
    a_lag = a.copy()
    a_lag[0] = 0.0
    if (L + 1) * n > 250_000:
        conv = signal.fftconvolve(eps, a_lag)
    else:
        conv = np.convolve(eps, a_lag)
    return conv[L : L + n]


def simulate_batch(model: ProcessModel, n: int, reps: int, master: int,
                   role: int = seeds.ROLE_REPLICATION, rep_offset: int = 0):
    """(reps, n) observation matrix and matching state matrix.

    Row r is deterministic given (master, role, rep_offset + r), so results
    do not depend on chunking or evaluation order.
    """
    xs = np.empty((reps, n))
    ys = np.empty((reps, n))
    if model.kind == "linear":
        a = model.coeff_array()
        L = len(a) - 1
        a_lag = a.copy()
        a_lag[0] = 0.0
        chunk = max(1, int(4e6 // max(n + L, 1)))
        for lo in range(0, reps, chunk):
            hi = min(lo + chunk, reps)
            eps = np.stack(
                [sample_with(model.innovation, seeds.generator(master, role, rep_offset + r), n + L)
                 for r in range(lo, hi)]
            )
            if L == 0:
                y = np.zeros_like(eps)
            else:
                y = signal.fftconvolve(eps, a_lag[None, :], axes=1)[:, L : L + n]
            xs[lo:hi] = eps[:, L:] + y[:, :n] if L else eps
            ys[lo:hi] = y[:, :n]
        return xs, ys
    b = burn_in(model)
    eps = np.stack(
        [sample_with(model.innovation, seeds.generator(master, role, rep_offset + r), b + n)
         for r in range(reps)]
    )
    x = np.zeros(reps)
    for t in range(b):
        x = markov_step(model, x, eps[:, t])
    for t in range(n):
        ys[:, t] = x
        x = markov_step(model, x, eps[:, b + t])
        xs[:, t] = x
    return xs, ys


def simulate_coupled(model: ProcessModel, n: int, seed):
    """Coupled states (Y_j, Y*_j) for j = 0..n.

    Both trajectories share every innovation except the one at time 0,
    which is replaced by an independent copy in the starred version.
    """
    if n < 0:
        raise ConfigurationError(f"n must be >= 0, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else seeds.generator(seed, seeds.ROLE_COUPLED)
    eps = sample_with(model.innovation, rng, _coupled_draw_count(model, n))
    y, ystar = _coupled_from_eps(model, n, eps[None, :])
    return y[0], ystar[0]


def simulate_coupled_batch(model: ProcessModel, n: int, reps: int, master: int,
                           role: int = seeds.ROLE_COUPLED, rep_offset: int = 0):
    """(reps, n+1) matrices of coupled state pairs, row-deterministic."""
    ys = np.empty((reps, n + 1))
    yss = np.empty((reps, n + 1))
    draw = _coupled_draw_count(model, n)
    chunk = max(1, int(4e6 // max(draw, 1)))
    for lo in range(0, reps, chunk):
        hi = min(lo + chunk, reps)
        eps = np.stack(
            [sample_with(model.innovation, seeds.generator(master, role, rep_offset + r), draw)
             for r in range(lo, hi)]
        )
        ys[lo:hi], yss[lo:hi] = _coupled_from_eps(model, n, eps)
    return ys, yss


def _coupled_draw_count(model: ProcessModel, n: int) -> int:
    if model.kind == "linear":
        return n + len(model.coeff_array()) + 1
    return burn_in(model) + n + 2


def _coupled_from_eps(model: ProcessModel, n: int, eps: np.ndarray):
    """Coupled state rows from pre-drawn innovations (last column is the
    independent replacement for the time-0 innovation)."""
    if model.kind == "linear":
        a = model.coeff_array()
        L = len(a) - 1
        eps_star0 = eps[:, -1].copy()
        eps = eps[:, :-1]
        if L == 0:
            # iid: the state is an empty sum, identically 0
            rows = eps.shape[0]
            return np.zeros((rows, n + 1)), np.zeros((rows, n + 1))
        eps_star = eps.copy()
        eps_star[:, L - 1] = eps_star0  # column of eps_0
        a_lag = a.copy()
        a_lag[0] = 0.0
        # Y_j = sum_{k>=1} a_k eps_{j+1-k}; eps index j maps to column j+L-1
        conv = signal.fftconvolve(eps, a_lag[None, :], axes=1)
        conv_star = signal.fftconvolve(eps_star, a_lag[None, :], axes=1)
        cols = np.arange(0, n + 1) + L  # state Y_j at column j+L
        return conv[:, cols], conv_star[:, cols]
    b = burn_in(model)
    eps_star0 = eps[:, -1].copy()
    eps = eps[:, :-1]
    x = np.zeros(eps.shape[0])
    for t in range(b):
        x = markov_step(model, x, eps[:, t])
    y = np.empty((eps.shape[0], n + 1))
    ystar = np.empty((eps.shape[0], n + 1))
    xs = markov_step(model, x, eps[:, b])
    xss = markov_step(model, x, eps_star0)
    y[:, 0], ystar[:, 0] = xs, xss
    for j in range(1, n + 1):
        xs = markov_step(model, xs, eps[:, b + j])
        xss = markov_step(model, xss, eps[:, b + j])
        y[:, j], ystar[:, j] = xs, xss
    return y, ystar


# ---------------------------------------------------------------------------
# conditional law of X_{n+1} given the state Y_n = y
# ---------------------------------------------------------------------------


def cond_cdf(model, x, y):
    if model.kind == "linear":
        return model.innovation.cdf(np.asarray(x) - np.asarray(y))
    if model.kind == "ar1":
        return model.innovation.cdf(np.asarray(x) - model.alpha * np.asarray(y))
    s = np.sqrt(model.a**2 + np.asarray(y) ** 2)
    return model.innovation.cdf((np.asarray(x) - model.alpha * np.asarray(y)) / s)


def cond_pdf(model, x, y):
    if model.kind == "linear":
        return model.innovation.pdf(np.asarray(x) - np.asarray(y))
    if model.kind == "ar1":
        return model.innovation.pdf(np.asarray(x) - model.alpha * np.asarray(y))
    s = np.sqrt(model.a**2 + np.asarray(y) ** 2)
    return model.innovation.pdf((np.asarray(x) - model.alpha * np.asarray(y)) / s) / s


def cond_pdf_dx(model, x, y):
    if model.kind == "linear":
        return model.innovation.pdf_d1(np.asarray(x) - np.asarray(y))
    if model.kind == "ar1":
        return model.innovation.pdf_d1(np.asarray(x) - model.alpha * np.asarray(y))
    s2 = model.a**2 + np.asarray(y) ** 2
    return model.innovation.pdf_d1((np.asarray(x) - model.alpha * np.asarray(y)) / np.sqrt(s2)) / s2


def cond_cdf_dy(model, x, y):
    if model.kind == "linear":
        return -model.innovation.pdf(np.asarray(x) - np.asarray(y))
    if model.kind == "ar1":
        return -model.alpha * model.innovation.pdf(np.asarray(x) - model.alpha * np.asarray(y))
    y = np.asarray(y, dtype=float)
    s2 = model.a**2 + y**2
    s = np.sqrt(s2)
    u = (np.asarray(x) - model.alpha * y) / s
    du_dy = -model.alpha / s - u * y / s2
    return model.innovation.pdf(u) * du_dy


def cond_pdf_dy(model, x, y):
    if model.kind == "linear":
        return -model.innovation.pdf_d1(np.asarray(x) - np.asarray(y))
    if model.kind == "ar1":
        return -model.alpha * model.innovation.pdf_d1(np.asarray(x) - model.alpha * np.asarray(y))
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    s2 = model.a**2 + y**2
    s = np.sqrt(s2)
    u = (x - model.alpha * y) / s
    f = model.innovation.pdf(u)
    f1 = model.innovation.pdf_d1(u)
    return -y * f / s**3 - model.alpha * f1 / s2 - (x - model.alpha * y) * y * f1 / s2**2


def cond_pdf_dx_dy(model, x, y):
    if model.kind == "linear":
        return -model.innovation.pdf_d2(np.asarray(x) - np.asarray(y))
    if model.kind == "ar1":
        return -model.alpha * model.innovation.pdf_d2(np.asarray(x) - model.alpha * np.asarray(y))
    y = np.asarray(y, dtype=float)
    s2 = model.a**2 + y**2
    s = np.sqrt(s2)
    u = (np.asarray(x) - model.alpha * y) / s
    du_dy = -model.alpha / s - u * y / s2
    return model.innovation.pdf_d2(u) * du_dy / s2 - 2.0 * y * model.innovation.pdf_d1(u) / s2**2


_FIELD_EVAL = {"cdf": cond_cdf, "pdf": cond_pdf, "pdf_dtheta": cond_pdf_dx}
_FIELD_DY = {"cdf": cond_cdf_dy, "pdf": cond_pdf_dy, "pdf_dtheta": cond_pdf_dx_dy}


def cond_field(model: ProcessModel, which: str):
    """Evaluator (theta, y) -> h(theta, y) for a conditional-law field."""
    try:
        fn = _FIELD_EVAL[which]
    except KeyError:
        raise ConfigurationError(f"unknown conditional-law field {which!r}") from None
    return lambda theta, y: fn(model, theta, y)


def cond_field_dy(model: ProcessModel, which: str):
    """State derivative of a conditional-law field."""
    try:
        fn = _FIELD_DY[which]
    except KeyError:
        raise ConfigurationError(f"unknown conditional-law field {which!r}") from None
    return lambda theta, y: fn(model, theta, y)


class ConditionalLaw:
    """Conditional law of the next observation given state y."""

    def __init__(self, model: ProcessModel, y: float):
        if not np.isfinite(y):
            raise ConfigurationError(f"state y must be finite, got {y}")
        self.model = model
        self.y = float(y)

    def cdf(self, x):
        return cond_cdf(self.model, x, self.y)

    def pdf(self, x):
        return cond_pdf(self.model, x, self.y)

    def pdf_dx(self, x):
        return cond_pdf_dx(self.model, x, self.y)

    def pdf_dy(self, x):
        return cond_pdf_dy(self.model, x, self.y)


def conditional_law(model: ProcessModel, y: float) -> ConditionalLaw:
    return ConditionalLaw(model, y)


# ---------------------------------------------------------------------------
# stationary marginal distribution
# ---------------------------------------------------------------------------


class NormalMarginal:
    def __init__(self, sd: float):
        self.sd = float(sd)

    def pdf(self, x):
        z = np.asarray(x, dtype=float) / self.sd
        return np.exp(-0.5 * z * z) / (self.sd * math.sqrt(2 * math.pi))

    def cdf(self, x):
        from scipy.special import ndtr

        return ndtr(np.asarray(x, dtype=float) / self.sd)

    def support_cutoff(self, tol: float = 1e-10) -> float:
        from scipy.special import ndtri

        return float(-ndtri(tol / 2)) * self.sd


class InnovationMarginal:
    def __init__(self, dist: InnovationDist):
        self.dist = dist

    def pdf(self, x):
        return self.dist.pdf(x)

    def cdf(self, x):
        return self.dist.cdf(x)

    def support_cutoff(self, tol: float = 1e-10) -> float:
        return self.dist.tail_cutoff(tol)


class GridMarginal:
    """Stationary marginal of a Markov model, computed on a grid by
    fixed-point iteration of the transition density (Richardson-refined)."""

    def __init__(self, model: ProcessModel, nodes: int = 513):
        if not model.is_markov:
            raise ConfigurationError("grid marginal applies to Markov models only")
        self.model = model
        t = self._find_cutoff()
        coarse_x, coarse_f = self._solve(t, nodes)
        fine_x, fine_f = self._solve(t, 2 * nodes - 1)
        # transition iteration converges at O(h^4) with Simpson weights
        refined = fine_f.copy()
        refined[::2] = (16.0 * fine_f[::2] - coarse_f) / 15.0
        refined = np.maximum(refined, 0.0)
        w = _simpson_weights(fine_x)
        refined /= np.sum(w * refined)
        from scipy.interpolate import CubicSpline

        self._cut = t
        self._pdf = CubicSpline(fine_x, refined, extrapolate=False)
        cmass = np.concatenate([[0.0], np.cumsum(0.5 * (refined[1:] + refined[:-1]) * np.diff(fine_x))])
        cmass /= cmass[-1]
        self._cdf = CubicSpline(fine_x, cmass, extrapolate=False)
        # resolution self-check: a refined quadrature of the spline must
        # still integrate to 1, otherwise the grid cannot carry this law
        xq = np.linspace(-t, t, 4 * (nodes - 1) + 1)
        mass = float(np.sum(_simpson_weights(xq) * self.pdf(xq)))
        if abs(mass - 1.0) > 1e-6:
            raise ConfigurationError(
                f"stationary marginal unresolved on the grid (mass {mass:.6f}); "
                "tails of this model are too heavy for quadrature-based marginals"
            )

    def _find_cutoff(self) -> float:
        model = self.model
        t = 8.0 * model.innovation.tail_cutoff(1e-6)
        for _ in range(8):
            x, f = self._solve(t, 513, iters=80)
            w = _simpson_weights(x)
            edge = np.sum(w[x > 0.75 * t] * f[x > 0.75 * t]) + np.sum(w[x < -0.75 * t] * f[x < -0.75 * t])
            if edge < 1e-10:
                return 0.8 * t
            t *= 2.0
        raise ConfigurationError(
            "stationary marginal tail too heavy for a grid computation"
        )

    def _solve(self, t: float, nodes: int, iters: int = 400):
        x = np.linspace(-t, t, nodes)
        w = _simpson_weights(x)
        kernel = cond_pdf(self.model, x[:, None], x[None, :])  # K[i, j] = q(x_i | x_j)
        f = np.exp(-0.5 * (x / (t / 6)) ** 2)
        f /= np.sum(w * f)
        for _ in range(iters):
            nxt = kernel @ (w * f)
            nxt /= np.sum(w * nxt)
            if np.max(np.abs(nxt - f)) < 1e-13:
                f = nxt
                break
            f = nxt
        return x, f

    def pdf(self, x):
        v = self._pdf(np.asarray(x, dtype=float))
        return np.where(np.isnan(v), 0.0, np.maximum(v, 0.0))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        v = self._cdf(x)
        v = np.where(x <= -self._cut, 0.0, v)
        v = np.where(x >= self._cut, 1.0, v)
        return np.clip(v, 0.0, 1.0)

    def support_cutoff(self, tol: float = 1e-10) -> float:
        return self._cut


_MARGINAL_CACHE: dict = {}


def marginal_distribution(model: ProcessModel):
    """Stationary marginal law of X_1.

    Closed form for Gaussian linear models; the innovation law itself in
    the iid case; otherwise a cached grid fixed point (Markov models only).
    """
    key = _model_key(model)
    if key in _MARGINAL_CACHE:
        return _MARGINAL_CACHE[key]
    if model.kind == "linear":
        a = model.coeff_array()
        if len(a) == 1:
            out = InnovationMarginal(model.innovation)
        elif model.innovation.family == "standard-normal":
            out = NormalMarginal(model.innovation.scale * math.sqrt(float(np.sum(a * a))))
        else:
            raise ConfigurationError(
                "marginal law of a non-Gaussian linear model with memory is not available"
            )
    elif model.kind == "ar1" and model.innovation.family == "standard-normal":
        out = NormalMarginal(model.innovation.scale / math.sqrt(1.0 - model.alpha**2))
    else:
        out = GridMarginal(model)
    _MARGINAL_CACHE[key] = out
    return out


def _model_key(model: ProcessModel):
    return (
        model.kind,
        model.innovation.family,
        model.innovation.scale,
        model.innovation.df,
        model.coeffs,
        model.alpha,
        model.a,
        model.contraction,
    )


def _simpson_weights(x: np.ndarray) -> np.ndarray:
    n = len(x)
    if n % 2 == 0:
        raise ConfigurationError("Simpson weights need an odd node count")
    h = (x[-1] - x[0]) / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def require_states(path: Path) -> None:
    if path.y is None or len(path.y) != len(path.x):
        raise ContractError("path is missing its conditioning states")
