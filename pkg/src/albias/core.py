"""Model classes, priors, target distributions and likelihood evaluation.

A :class:`ModelSpec` names one of four likelihood families:

``gaussian-linear``
    y ~ N(beta . phi_k(x), sigma^2); parameters are the k+1 coefficients.
``logistic-poly``
    y ~ Bernoulli(expit(epsilon * beta . phi_k(x))).
``eut``
    y ~ Bernoulli(expit(epsilon * V_EUT(alpha, gamble))), parameter (alpha,).
``cpt``
    y ~ Bernoulli(expit(epsilon * V_CPT(alpha, gamma, Lambda, gamble))).

Scalar designs are plain floats; gamble designs are rows ``(p, G, L)``.
Posterior objects (:class:`~albias.linreg.GaussianPosterior`,
:class:`~albias.posteriors.GridPosterior`,
:class:`~albias.posteriors.ParticlePosterior`) are immutable and implement
``update`` / ``predictive_log_density``; the module-level functions here just
dispatch to them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import expit, log_expit

from . import binary
from .exceptions import DimensionError, InvalidOutcomeError, ZeroLikelihoodError
from .linreg import LOG_2PI, poly_features

FAMILIES = ("gaussian-linear", "logistic-poly", "eut", "cpt")
BINARY_FAMILIES = ("logistic-poly", "eut", "cpt")

# Smallest log-probability kept before exponentiation.
LOG_PROB_FLOOR = -745.0


@dataclass(frozen=True, eq=False)
class ParamSpace:
    names: tuple
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != (len(self.names),) or upper.shape != lower.shape:
            raise DimensionError("bounds must have one entry per parameter name")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self):
        return len(self.names)

    @property
    def bounded(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.all((theta >= self.lower) & (theta <= self.upper), axis=-1)

    @classmethod
    def unbounded(cls, names):
        d = len(names)
        return cls(tuple(names), np.full(d, -np.inf), np.full(d, np.inf))


@dataclass(frozen=True, eq=False)
class PriorSpec:
    """Multivariate normal or uniform-on-a-box prior.

    For ``kind="normal"`` give ``mean`` and ``cov`` (a vector is read as a
    diagonal). For ``kind="uniform"`` give ``lower`` and ``upper``.
    """

    kind: str
    mean: np.ndarray = None
    cov: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        if self.kind == "normal":
            mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
            cov = np.asarray(self.cov, dtype=float)
            if cov.ndim <= 1:
                cov = np.diag(np.broadcast_to(cov, mean.shape))
            if cov.shape != (mean.size, mean.size):
                raise DimensionError("prior covariance does not match mean")
            object.__setattr__(self, "mean", mean)
            object.__setattr__(self, "cov", cov)
        elif self.kind == "uniform":
            lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
            upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
            if lower.shape != upper.shape or np.any(lower >= upper):
                raise ValueError("uniform prior needs lower < upper per coordinate")
            if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
                raise ValueError("uniform prior must be on a bounded box")
            object.__setattr__(self, "lower", lower)
            object.__setattr__(self, "upper", upper)
        else:
            raise ValueError(f"unknown prior kind {self.kind!r}")

    @property
    def dim(self):
        return (self.mean if self.kind == "normal" else self.lower).size

    def logpdf(self, thetas):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        if self.kind == "normal":
            return np.atleast_1d(stats.multivariate_normal(self.mean, self.cov).logpdf(thetas))
        inside = np.all((thetas >= self.lower) & (thetas <= self.upper), axis=1)
        logvol = np.sum(np.log(self.upper - self.lower))
        return np.where(inside, -logvol, -np.inf)

    def sample(self, rng, n):
        if self.kind == "normal":
            return rng.multivariate_normal(self.mean, self.cov, size=n, method="cholesky")
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))


def _param_names(family, degree):
    if family in ("gaussian-linear", "logistic-poly"):
        return tuple(f"beta{j}" for j in range(degree + 1))
    if family == "eut":
        return ("alpha",)
    return ("alpha", "gamma", "loss_aversion")


def default_param_space(family, degree=0):
    names = _param_names(family, degree)
    if family == "eut":
        return ParamSpace(names, [0.0], [1.0])
    if family == "cpt":
        return ParamSpace(names, [0.0, 0.0, 1.0], [1.0, 1.0, 2.0])
    return ParamSpace.unbounded(names)


def default_prior(family, degree=0):
    if family in ("gaussian-linear", "logistic-poly"):
        from .linreg import default_prior_cov
        return PriorSpec("normal", mean=np.zeros(degree + 1), cov=default_prior_cov(degree))
    space = default_param_space(family, degree)
    return PriorSpec("uniform", lower=space.lower, upper=space.upper)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A hypothesized model class m(x, Theta)."""

    family: str
    degree: int = 0
    sigma: float = None
    epsilon: float = 1.0
    param_space: ParamSpace = None
    prior: PriorSpec = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.family == "gaussian-linear":
            if self.sigma is None or not self.sigma > 0:
                raise ValueError("gaussian-linear needs sigma > 0")
        elif not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.param_space is None:
            object.__setattr__(self, "param_space", default_param_space(self.family, self.degree))
        if self.prior is None:
            object.__setattr__(self, "prior", default_prior(self.family, self.degree))
        if self.prior.dim != self.param_space.dim:
            raise DimensionError("prior dimension does not match parameter space")

    @property
    def n_params(self):
        return self.param_space.dim

    @property
    def is_binary(self):
        return self.family in BINARY_FAMILIES

    @property
    def design_dim(self):
        return 3 if self.family in ("eut", "cpt") else 1

    def __repr__(self):
        noise = f"sigma={self.sigma}" if self.family == "gaussian-linear" else f"epsilon={self.epsilon}"
        deg = f"k={self.degree}, " if self.family in ("gaussian-linear", "logistic-poly") else ""
        return f"ModelSpec({self.family}, {deg}{noise})"

    # vectorized kernels -------------------------------------------------

    def check_designs(self, X):
        """Coerce designs to (m,) for scalar families or (m, 3) for gambles."""
        X = np.asarray(X, dtype=float)
        if self.design_dim == 1:
            if X.ndim == 2 and X.shape[1] == 1:
                X = X[:, 0]
            if X.ndim > 1:
                raise DimensionError(f"{self.family} expects scalar designs, got shape {X.shape}")
        else:
            if X.shape[-1:] != (3,) or X.ndim > 2:
                raise DimensionError(f"{self.family} expects (p, G, L) gamble designs, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DimensionError("designs must be finite")
        return X

    def check_thetas(self, thetas):
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim == 1:
            thetas = thetas[None, :]
        if thetas.shape[-1] != self.n_params:
            raise DimensionError(
                f"{self!r} has {self.n_params} parameters, got vectors of length {thetas.shape[-1]}")
        return thetas

    def features(self, X):
        return poly_features(self.degree, self.check_designs(X))

    def mean_table(self, thetas, X):
        """E[y | x, theta] for gaussian-linear: (n_thetas, n_designs)."""
        thetas = self.check_thetas(thetas)
        Phi = np.atleast_2d(self.features(X))
        return thetas @ Phi.T

    def logit_table(self, thetas, X):
        """epsilon * valuation, shape (n_thetas, n_designs), for binary families."""
        thetas = self.check_thetas(thetas)
        X = self.check_designs(X)
        if self.family == "logistic-poly":
            V = thetas @ np.atleast_2d(poly_features(self.degree, X)).T
        elif self.family == "eut":
            V = binary.eut_value(thetas[:, 0:1], np.atleast_2d(X)[None, :, :])
        elif self.family == "cpt":
            V = binary.cpt_value(thetas[:, 0:1], thetas[:, 1:2], thetas[:, 2:3],
                                 np.atleast_2d(X)[None, :, :])
        else:
            raise DimensionError("logit_table is only defined for binary families")
        return self.epsilon * V

    def prob_table(self, thetas, X):
        """P(y = 1 | x, theta), shape (n_thetas, n_designs)."""
        return expit(self.logit_table(thetas, X))

    def log_likelihood_table(self, thetas, X, Y):
        """log m(y_s | x_s, theta_i) for many observations: shape (n_thetas, n_obs)."""
        Y = np.asarray(Y, dtype=float).ravel()
        if self.is_binary:
            if not np.all((Y == 0.0) | (Y == 1.0)):
                raise InvalidOutcomeError("binary outcomes must be 0 or 1")
            z = self.logit_table(thetas, X)
            lp = log_expit(np.where(Y == 1.0, z, -z))
            return np.maximum(lp, LOG_PROB_FLOOR)
        mu = self.mean_table(thetas, X)
        s2 = self.sigma ** 2
        return -0.5 * (LOG_2PI + np.log(s2) + (Y - mu) ** 2 / s2)

    def log_likelihoods(self, thetas, x, y):
        """log m(y | x, theta) for each parameter row, for one observation."""
        if self.is_binary:
            yv = check_binary_outcome(y)
            z = self.logit_table(thetas, np.asarray(x, dtype=float)[None, ...])[:, 0]
            lp = log_expit(z) if yv == 1 else log_expit(-z)
            return np.maximum(lp, LOG_PROB_FLOOR)
        yv = float(np.squeeze(y))
        if not np.isfinite(yv):
            raise InvalidOutcomeError("regression outcome must be finite")
        mu = self.mean_table(thetas, np.atleast_1d(np.squeeze(x)))[:, 0]
        s2 = self.sigma ** 2
        return -0.5 * (LOG_2PI + np.log(s2) + (yv - mu) ** 2 / s2)


def check_binary_outcome(y):
    yv = float(np.squeeze(y))
    if yv not in (0.0, 1.0):
        raise InvalidOutcomeError(f"binary outcome must be 0 or 1, got {y!r}")
    return int(yv)


@dataclass(frozen=True, eq=False)
class TrueModel:
    """A fully specified generating conditional f(x)."""

    spec: ModelSpec
    params: np.ndarray

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float).ravel()
        if params.size != self.spec.n_params:
            raise DimensionError("generating parameters do not match the model family")
        object.__setattr__(self, "params", params)

    def mean(self, X):
        return self.spec.mean_table(self.params, X)[0]

    def prob(self, X):
        return self.spec.prob_table(self.params, X)[0]

    def sample(self, x, rng):
        if self.spec.is_binary:
            return int(rng.random() < self.prob(np.asarray(x)[None, ...])[0])
        mu = self.mean(np.atleast_1d(np.squeeze(x)))[0]
        return float(mu + self.spec.sigma * rng.standard_normal())


@dataclass(frozen=True, eq=False)
class TargetDistribution:
    """Target design distribution g: a continuous interval or a finite design list."""

    kind: str
    lo: float = None
    hi: float = None
    designs: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kind == "uniform-continuous":
            if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
                raise ValueError("continuous target needs finite lo < hi")
        elif self.kind == "uniform-discrete":
            designs = np.asarray(self.designs, dtype=float)
            if designs.size == 0:
                raise ValueError("discrete target needs a non-empty design list")
            object.__setattr__(self, "designs", designs)
        else:
            raise ValueError(f"unknown target kind {self.kind!r}")

    @classmethod
    def continuous(cls, lo, hi):
        return cls("uniform-continuous", lo=float(lo), hi=float(hi))

    @classmethod
    def discrete(cls, designs):
        return cls("uniform-discrete", designs=designs)

    @property
    def is_discrete(self):
        return self.kind == "uniform-discrete"

    def grid(self, n=1001):
        """Evaluation designs: the design list, or n evenly spaced points."""
        if self.is_discrete:
            return self.designs
        return np.linspace(self.lo, self.hi, n)


def log_likelihood(spec, theta, x, y):
    """log m(y | x, theta) for a single parameter vector."""
    return float(spec.log_likelihoods(np.atleast_1d(theta), x, y)[0])


def bayes_update(posterior, spec, x, y):
    """Posterior after observing (x, y); the input posterior is left untouched."""
    return posterior.update(spec, x, y)


def predictive_log_density(posterior, spec, x, y):
    """log of the posterior predictive density of y at x."""
    return float(posterior.predictive_log_density(spec, x, y))


def normalize_log_weights(log_w, design=None, outcome=None, step=None):
    """Shift-and-normalize log weights; raises if no mass remains."""
    log_w = np.asarray(log_w, dtype=float)
    top = np.max(log_w) if log_w.size else -np.inf
    if not np.isfinite(top) or np.any(np.isnan(log_w)):
        raise ZeroLikelihoodError(
            f"total posterior weight is zero after observing y={outcome!r} at x={design!r}",
            design=design, outcome=outcome, step=step)
    log_w = log_w - top
    log_w -= np.log(np.sum(np.exp(log_w)))
    return log_w
