"""Innovation distributions with closed-form density derivatives.

Every conditional-law formula downstream consumes the density, its first
two derivatives, and the CDF of the innovation analytically, so only
families with closed forms are supported: standard normal, logistic, and
Student-t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConfigurationError
from . import seeds

_SQRT2PI = math.sqrt(2.0 * math.pi)

FAMILIES = ("standard-normal", "logistic", "student-t")


@dataclass(frozen=True)
class InnovationDist:
    """Innovation law: family plus a positive scale (default 1)."""

    family: str = "standard-normal"
    scale: float = 1.0
    df: float | None = None  # Student-t only

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unsupported innovation family {self.family!r}")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ConfigurationError(f"scale must be positive, got {self.scale}")
        if self.family == "student-t":
            if self.df is None or self.df <= 0:
                raise ConfigurationError("student-t requires df > 0")
        elif self.df is not None:
            raise ConfigurationError(f"df only applies to student-t, not {self.family}")

    # ---- standardized (scale = 1) kernels -------------------------------

    def _std_pdf(self, z):
        if self.family == "standard-normal":
            return np.exp(-0.5 * z * z) / _SQRT2PI
        if self.family == "logistic":
            # f = F(1-F), numerically stable via |z|
            e = np.exp(-np.abs(z))
            return e / (1.0 + e) ** 2
        nu = self.df
        c = math.exp(math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2)) / math.sqrt(nu * math.pi)
        return c * (1.0 + z * z / nu) ** (-(nu + 1) / 2)

    def _std_logpdf_d1(self, z):
        # d/dz log f(z)
        if self.family == "standard-normal":
            return -z
        if self.family == "logistic":
            return 1.0 - 2.0 * self._std_cdf(z)
        nu = self.df
        return -(nu + 1) * z / (nu + z * z)

    def _std_logpdf_d2(self, z):
        if self.family == "standard-normal":
            return -np.ones_like(np.asarray(z, dtype=float))
        if self.family == "logistic":
            return -2.0 * self._std_pdf(z)
        nu = self.df
        return -(nu + 1) * (nu - z * z) / (nu + z * z) ** 2

    def _std_cdf(self, z):
        if self.family == "standard-normal":
            return special.ndtr(z)
        if self.family == "logistic":
            return special.expit(z)
        return special.stdtr(self.df, z)

    # ---- public evaluators (vectorized over x) ---------------------------

    def pdf(self, x):
        z = np.asarray(x, dtype=float) / self.scale
        return self._std_pdf(z) / self.scale

    def pdf_d1(self, x):
        """First derivative of the density."""
        z = np.asarray(x, dtype=float) / self.scale
        return self._std_pdf(z) * self._std_logpdf_d1(z) / self.scale**2

    def pdf_d2(self, x):
        """Second derivative of the density."""
        z = np.asarray(x, dtype=float) / self.scale
        lp1 = self._std_logpdf_d1(z)
        return self._std_pdf(z) * (lp1 * lp1 + self._std_logpdf_d2(z)) / self.scale**3

    def cdf(self, x):
        return self._std_cdf(np.asarray(x, dtype=float) / self.scale)

    def quantile(self, p, tol: float = 1e-12):
        """Inverse CDF by monotone bisection (family-agnostic)."""
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0.0) | (p >= 1.0)):
            raise ConfigurationError("quantile requires 0 < p < 1")
        lo = np.full(p.shape, -1.0)
        hi = np.full(p.shape, 1.0)
        while np.any(self.cdf(lo) > p):
            lo = np.where(self.cdf(lo) > p, 2 * lo, lo)
        while np.any(self.cdf(hi) < p):
            hi = np.where(self.cdf(hi) < p, 2 * hi, hi)
        # bisect until interval width < tol everywhere
        while np.max(hi - lo) > tol:
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        return out if out.shape else float(out)

    def variance(self) -> float:
        if self.family == "standard-normal":
            v = 1.0
        elif self.family == "logistic":
            v = math.pi**2 / 3.0
        else:
            if self.df <= 2:
                raise ConfigurationError(f"student-t(df={self.df}) has no finite variance")
            v = self.df / (self.df - 2.0)
        return v * self.scale**2

    def max_moment(self) -> float:
        """Largest m with E|eps|^m finite (inf for normal/logistic)."""
        return float(self.df) if self.family == "student-t" else math.inf

    def abs_moment(self, order: float) -> float:
        """E|eps|^order by quadrature (used by contraction gates)."""
        require_moment(self, order)
        x, w = _tail_quadrature(self)
        return float(np.sum(w * np.abs(x) ** order * self.pdf(x)))

    def tail_cutoff(self, tol: float = 1e-10) -> float:
        """T with 1 - F(T) + F(-T) < tol, found by doubling."""
        t = 8.0 * self.scale
        while (1.0 - self.cdf(t)) + self.cdf(-t) >= tol:
            t *= 2.0
            if t > 1e12:
                raise ConfigurationError("tail cutoff did not converge")
        return t


def require_moment(dist: InnovationDist, order: float) -> None:
    """Reject distributions lacking E|eps|^order < infinity."""
    if order >= dist.max_moment():
        raise ConfigurationError(
            f"{dist.family}(df={dist.df}) lacks finite absolute moment of order {order}"
        )


def innovation_eval(dist: InnovationDist, x: float):
    """Density, first and second density derivative, and CDF at x."""
    if not np.isfinite(x):
        raise ConfigurationError(f"x must be finite, got {x}")
    return (
        float(dist.pdf(x)),
        float(dist.pdf_d1(x)),
        float(dist.pdf_d2(x)),
        float(dist.cdf(x)),
    )


def innovation_sample(dist: InnovationDist, seed, n: int) -> np.ndarray:
    """n iid draws, deterministic given (dist, seed, n)."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else seeds.generator(seed)
    return sample_with(dist, rng, n)


def sample_with(dist: InnovationDist, rng: np.random.Generator, n: int) -> np.ndarray:
    if dist.family == "standard-normal":
        z = rng.standard_normal(n)
    elif dist.family == "logistic":
        z = rng.logistic(size=n)
    else:
        z = rng.standard_t(dist.df, size=n)
    return dist.scale * z


def _tail_quadrature(dist: InnovationDist, n_nodes: int = 4001):
    """Simpson nodes/weights covering the support up to cutoff 1e-14."""
    t = dist.tail_cutoff(1e-14)
    return simpson_rule(-t, t, n_nodes)


def simpson_rule(a: float, b: float, n_nodes: int):
    """Composite Simpson nodes and weights on [a, b]; n_nodes must be odd."""
    if n_nodes % 2 == 0:
        n_nodes += 1
    x = np.linspace(a, b, n_nodes)
    h = (b - a) / (n_nodes - 1)
    w = np.full(n_nodes, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * (h / 3.0)
