"""Envelope distribution fits, KS goodness of fit and the bi-modal K mixture."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .errors import DegenerateInputError
from .kfactor import MomEstimate, estimate_k_mom
from .scenarios import GmmParams

# Pass thresholds for the KS distance.
ENVELOPE_EPSILON = 0.04
GMM_EPSILON = 0.06

GMM_MIN_SAMPLES = 50
GMM_TOL = 1e-8
GMM_MAX_ITER = 500
SIGMA_FLOOR_DB = 1e-3
# Mixtures whose means are closer than this look like a single Gaussian.
NEAR_UNIMODAL_SEP_DB = 4.0
NEAR_UNIMODAL_WEIGHT = 0.01

FLOOR_K_DB = -60.0


@dataclass
class EmpiricalCdf:
    """Right-continuous step CDF ``F(z) = #{x_i <= z} / n``."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.sort(np.asarray(self.values, dtype=float).ravel())

    @property
    def n(self) -> int:
        return len(self.values)

    def __call__(self, z):
        return np.searchsorted(self.values, z, side="right") / self.n

    def left_limit(self, z):
        return np.searchsorted(self.values, z, side="left") / self.n


def empirical_cdf(samples) -> EmpiricalCdf:
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) == 0:
        raise ValueError("empirical CDF needs samples")
    if len(x) < 2:
        raise ValueError("empirical CDF needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return EmpiricalCdf(x)


def ks_gof(emp: EmpiricalCdf, analytic: Callable) -> float:
    """Supremum distance between the empirical CDF and ``analytic``.

    Both one-sided gaps are checked at every distinct sample value. The
    analytic left limit is taken one ulp below each point, which makes the
    statistic exact for continuous CDFs and zero for the empirical CDF itself.
    """
    v = np.unique(emp.values)
    f_hi = emp(v)
    f_lo = emp.left_limit(v)
    a_hi = np.asarray(analytic(v), dtype=float)
    a_lo = np.asarray(analytic(np.nextafter(v, -np.inf)), dtype=float)
    return float(max(np.max(np.abs(f_hi - a_hi)), np.max(np.abs(f_lo - a_lo))))


# -- Rayleigh ---------------------------------------------------------------

def fit_rayleigh(envelope) -> float:
    """Moment estimate of the Rayleigh scale, ``sigma^2 = mean(z^2) / 2``."""
    z = np.asarray(envelope, dtype=float).ravel()
    if len(z) == 0:
        raise ValueError("no samples")
    if np.any(z < 0):
        raise ValueError("envelope samples must be nonnegative")
    p = np.mean(z * z)
    if p <= 0:
        raise DegenerateInputError("all-zero envelope")
    return float(np.sqrt(p / 2.0))


def rayleigh_cdf(z, sigma: float):
    z = np.asarray(z, dtype=float)
    return np.where(z > 0, -np.expm1(-(np.maximum(z, 0.0) ** 2) / (2.0 * sigma**2)), 0.0)


# -- Rician -----------------------------------------------------------------

@dataclass(frozen=True)
class RicianFit:
    """Rician envelope fit from power moments.

    Over-dispersed samples (no moment solution) fall back to the Rayleigh
    member of the family with the same mean power.
    """

    estimate: MomEstimate
    mean_power: float

    @property
    def k_db(self) -> float:
        return self.estimate.k_db

    @property
    def specular_power(self) -> float:
        return self.estimate.specular_power

    @property
    def diffuse_power(self) -> float:
        return self.estimate.diffuse_power

    @property
    def valid(self) -> bool:
        return self.estimate.valid

    @property
    def infinite(self) -> bool:
        return self.estimate.infinite

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        if self.infinite:
            return np.where(z >= np.sqrt(self.specular_power), 1.0, 0.0)
        if not self.valid:
            return rayleigh_cdf(z, np.sqrt(self.mean_power / 2.0))
        sigma = np.sqrt(self.diffuse_power / 2.0)
        nu = np.sqrt(self.specular_power)
        return np.where(z > 0, stats.rice.cdf(np.maximum(z, 0.0), nu / sigma, scale=sigma), 0.0)


def fit_rician(envelope) -> RicianFit:
    z = np.asarray(envelope, dtype=float).ravel()
    if np.any(z < 0):
        raise ValueError("envelope samples must be nonnegative")
    est = estimate_k_mom(z)
    return RicianFit(est, float(np.mean(z * z)))


# -- Weibull ----------------------------------------------------------------

@dataclass(frozen=True)
class WeibullFit:
    k: float
    lam: float
    r2: float

    def cdf(self, z):
        return weibull_cdf(z, self.k, self.lam)


@dataclass
class WeibullPlot:
    """Weibull-plot coordinates ``x = ln z``, ``y = ln(-ln(1 - F))``."""

    x: np.ndarray
    y: np.ndarray
    n_dropped: int = 0


def weibull_cdf(z, k: float, lam: float):
    z = np.asarray(z, dtype=float)
    return np.where(z > 0, -np.expm1(-np.power(np.maximum(z, 0.0) / lam, k)), 0.0)


def weibull_plot_coords(z, F) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=float)
    F = np.asarray(F, dtype=float)
    return np.log(z), np.log(-np.log1p(-F))


def weibull_linearize(emp: EmpiricalCdf) -> WeibullPlot:
    """Weibull-plot points of an empirical CDF.

    Nonpositive samples are dropped (counted in ``n_dropped``) and the top
    value, where ``F = 1``, is excluded.
    """
    v = np.unique(emp.values)
    F = emp(v)
    keep = (v > 0) & (F < 1.0)
    n_dropped = int(np.sum(emp.values <= 0))
    if not np.any(keep):
        raise ValueError("no points left for the Weibull plot")
    x, y = weibull_plot_coords(v[keep], F[keep])
    return WeibullPlot(x, y, n_dropped)


def fit_weibull(envelope) -> WeibullFit:
    """Least-squares line through the Weibull plot: slope ``k``, intercept ``-k ln lam``."""
    z = np.asarray(envelope, dtype=float).ravel()
    if len(z) < 8:
        raise ValueError("need at least 8 samples")
    if np.any(z <= 0):
        raise ValueError("Weibull fit needs positive samples")
    plot = weibull_linearize(EmpiricalCdf(z))
    if len(plot.x) < 2 or np.ptp(plot.x) == 0:
        raise DegenerateInputError("zero-variance input")
    res = stats.linregress(plot.x, plot.y)
    k = float(res.slope)
    if k <= 0:
        raise DegenerateInputError(f"non-positive Weibull slope {k}")
    return WeibullFit(k=k, lam=float(np.exp(-res.intercept / k)), r2=float(res.rvalue**2))


# -- bi-modal Gaussian mixture ----------------------------------------------

def gmm_pdf(params: GmmParams, k_db):
    k = np.asarray(k_db, dtype=float)
    return params.w * stats.norm.pdf(k, params.mu1, params.sigma1) + (1.0 - params.w) * stats.norm.pdf(
        k, params.mu2, params.sigma2
    )


def gmm_cdf(params: GmmParams, k_db):
    """Mixture CDF, ``w (1 - Q((K-mu1)/s1)) + (1-w)(1 - Q((K-mu2)/s2))``."""
    k = np.asarray(k_db, dtype=float)
    return params.w * ndtr((k - params.mu1) / params.sigma1) + (1.0 - params.w) * ndtr(
        (k - params.mu2) / params.sigma2
    )


@dataclass
class GmmFit:
    params: GmmParams
    epsilon: float
    iterations: int
    loglik: float
    n: int
    converged: bool = True
    flags: list[str] = field(default_factory=list)
    loglik_history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            **self.params.to_dict(),
            "epsilon": self.epsilon,
            "iterations": self.iterations,
            "loglik": self.loglik,
            "flags": list(self.flags),
        }


def _log_normal(x, mu, sd):
    z = (x - mu) / sd
    return -0.5 * z * z - np.log(sd) - 0.5 * np.log(2.0 * np.pi)


def fit_bimodal_gmm(k_samples, tol: float = GMM_TOL, max_iter: int = GMM_MAX_ITER) -> GmmFit:
    """Two-component EM fit over K values in dB.

    Initialization splits the sorted samples at the median. Iteration stops
    when the mean log-likelihood gains less than ``tol`` or after
    ``max_iter`` EM steps. Components are returned ordered by mean.

    Flags: ``"not_converged"`` (best parameters so far are returned),
    ``"sigma_floored"`` (a component collapsed below ``SIGMA_FLOOR_DB``),
    ``"near_unimodal"`` (means closer than ``NEAR_UNIMODAL_SEP_DB`` or one
    weight below ``NEAR_UNIMODAL_WEIGHT``).
    """
    x = np.asarray(k_samples, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("K samples must be finite; drop or floor invalid estimates first")
    n = len(x)
    if n < GMM_MIN_SAMPLES:
        raise ValueError(f"need at least {GMM_MIN_SAMPLES} samples, got {n}")

    xs = np.sort(x)
    half = n // 2
    lo, hi = xs[:half], xs[half:]
    w = np.array([half / n, 1.0 - half / n])
    mu = np.array([lo.mean(), hi.mean()])
    sd = np.array([lo.std(), hi.std()])
    floored = bool(np.any(sd < SIGMA_FLOOR_DB))
    sd = np.maximum(sd, SIGMA_FLOOR_DB)

    history: list[float] = []
    best = (-np.inf, w, mu, sd)
    converged = False
    iterations = 0
    xc = x[:, None]
    while True:
        with np.errstate(divide="ignore"):
            logp = np.log(w) + _log_normal(xc, mu, sd)
        ll_i = np.logaddexp(logp[:, 0], logp[:, 1])
        mean_ll = float(ll_i.mean())
        history.append(mean_ll * n)
        if mean_ll > best[0]:
            best = (mean_ll, w, mu, sd)
        if len(history) > 1 and (history[-1] - history[-2]) / n < tol:
            converged = True
            break
        if iterations >= max_iter:
            break
        resp = np.exp(logp - ll_i[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk <= 0):
            # An empty component cannot be re-estimated; stop with what we have.
            converged = True
            break
        w = nk / n
        mu = (resp * xc).sum(axis=0) / nk
        var = (resp * (xc - mu) ** 2).sum(axis=0) / nk
        sd = np.sqrt(var)
        if np.any(sd < SIGMA_FLOOR_DB):
            floored = True
            sd = np.maximum(sd, SIGMA_FLOOR_DB)
        iterations += 1

    mean_ll, w, mu, sd = best
    order = np.argsort(mu, kind="stable")
    w, mu, sd = w[order], mu[order], sd[order]
    params = GmmParams(w=float(np.clip(w[0], 0.0, 1.0)), mu1=float(mu[0]), sigma1=float(sd[0]),
                       mu2=float(mu[1]), sigma2=float(sd[1]))

    flags = []
    if not converged:
        flags.append("not_converged")
    if floored:
        flags.append("sigma_floored")
    if (params.mu2 - params.mu1) < NEAR_UNIMODAL_SEP_DB or min(params.w, 1.0 - params.w) < NEAR_UNIMODAL_WEIGHT:
        flags.append("near_unimodal")

    eps = ks_gof(EmpiricalCdf(x), lambda k: gmm_cdf(params, k))
    return GmmFit(params, eps, iterations, mean_ll * n, n, converged, flags, history)


def pool_k_values(k_db, valid=None, policy: str = "exclude", floor_db: float = FLOOR_K_DB) -> np.ndarray:
    """Collect finite K values for mixture fitting.

    ``policy="exclude"`` drops invalid estimates; ``"floor"`` keeps them at
    ``floor_db``. Infinite (purely specular) estimates are always dropped.
    """
    k = np.asarray(k_db, dtype=float).ravel()
    invalid = np.isnan(k)
    if valid is not None:
        invalid |= ~np.asarray(valid, dtype=bool).ravel()
    if policy == "exclude":
        out = k[~invalid]
    elif policy == "floor":
        out = np.where(invalid, floor_db, k)
    else:
        raise ValueError(f"unknown invalid-K policy {policy!r}")
    return out[np.isfinite(out)]
