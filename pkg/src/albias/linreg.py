"""Conjugate Bayesian polynomial regression with known noise level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import DimensionError, RankDeficientError, SingularPriorError

LOG_2PI = np.log(2.0 * np.pi)
N_FIT_POINTS = 1001

# Variances of the coefficient-generating distribution; the fourth entry
# continues the x1/100 decay and is only used by cubic classes.
GENERATING_VARIANCES = (100.0, 10.0, 0.1, 0.001)


def poly_features(k, x):
    """Polynomial basis ``[1, x, ..., x^k]``.

    Scalar ``x`` gives a vector of length k+1; an array of m designs gives an
    (m, k+1) design matrix.
    """
    if k < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("design must be finite")
    return np.power.outer(x, np.arange(k + 1)).astype(float)


def default_prior_cov(k):
    """Modeler's prior covariance: the generating variances truncated to k+1."""
    if k + 1 > len(GENERATING_VARIANCES):
        raise ValueError(f"no default prior variance for degree {k}")
    return np.diag(GENERATING_VARIANCES[: k + 1])


def _symmetrize(S):
    return 0.5 * (S + S.T)


def _chol_inverse(S, what="covariance"):
    try:
        c = linalg.cho_factor(S, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularPriorError(f"{what} is not positive definite") from exc
    return _symmetrize(linalg.cho_solve(c, np.eye(S.shape[0])))


@dataclass(frozen=True, eq=False)
class GaussianPosterior:
    """N(M, S) over regression coefficients."""

    M: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        M = np.atleast_1d(np.asarray(self.M, dtype=float))
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        if S.shape != (M.size, M.size):
            raise DimensionError(f"covariance shape {S.shape} does not match mean length {M.size}")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(S))):
            raise ValueError("posterior moments must be finite")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "S", S)

    @property
    def dim(self):
        return self.M.size

    @classmethod
    def prior(cls, k, mean=None, cov=None):
        mean = np.zeros(k + 1) if mean is None else mean
        cov = default_prior_cov(k) if cov is None else cov
        return cls(mean, cov)

    # Posterior protocol used by core.bayes_update and friends.

    def update(self, spec, x, y):
        if spec.family != "gaussian-linear":
            raise DimensionError("Gaussian posterior only supports the gaussian-linear family")
        phi = poly_features(spec.degree, float(np.squeeze(x)))
        return conjugate_update(self, spec.sigma, phi, float(np.squeeze(y)))

    def predictive_log_density(self, spec, x, y):
        phi = poly_features(spec.degree, np.asarray(x, dtype=float))
        mean, var = posterior_predictive(self, spec.sigma, phi)
        y = np.asarray(y, dtype=float)
        return -0.5 * (LOG_2PI + np.log(var) + (y - mean) ** 2 / var)

    def mean(self):
        return self.M.copy()


def conjugate_update(post, sigma, phi, y):
    """One-observation update in information form.

    ``S_t = (S_{t-1}^-1 + phi phi^T / sigma^2)^-1`` and
    ``M_t = S_t (S_{t-1}^-1 M_{t-1} + phi y / sigma^2)``.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    phi = np.asarray(phi, dtype=float).ravel()
    if phi.size != post.dim:
        raise DimensionError(f"feature length {phi.size} != posterior dimension {post.dim}")
    prec = _chol_inverse(post.S, "prior covariance")
    s2 = sigma * sigma
    prec_new = prec + np.outer(phi, phi) / s2
    S_new = _chol_inverse(prec_new, "posterior precision")
    M_new = S_new @ (prec @ post.M + phi * (y / s2))
    return GaussianPosterior(M_new, S_new)


def posterior_predictive(post, sigma, phi):
    """Mean ``M phi`` and variance ``sigma^2 + phi S phi`` of y at the design(s)."""
    phi = np.asarray(phi, dtype=float)
    mean = phi @ post.M
    quad = np.einsum("...i,ij,...j->...", phi, post.S, phi)
    return mean, sigma * sigma + quad


def eig_linear(post, sigma, phi):
    """Expected information gain ``0.5 log(sigma^2 + phi S phi) - log sigma``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    phi = np.asarray(phi, dtype=float)
    quad = np.einsum("...i,ij,...j->...", phi, post.S, phi)
    # log1p keeps the S -> 0 limit exactly at zero
    return 0.5 * np.log1p(np.maximum(quad, 0.0) / (sigma * sigma))


def fit_grid(domain, n=N_FIT_POINTS):
    lo, hi = domain.lo, domain.hi
    return np.linspace(lo, hi, n)


def theta_star_ols(true_model, k, domain, n=N_FIT_POINTS):
    """Best-fitting degree-k coefficients.

    Least squares of the true conditional mean on ``n`` evenly spaced designs
    across the continuous target domain.
    """
    if domain.kind != "uniform-continuous":
        raise ValueError("theta_star_ols needs a continuous target domain")
    xs = fit_grid(domain, n)
    target = true_model.mean(xs)
    X = poly_features(k, xs)
    coef, _, rank, _ = np.linalg.lstsq(X, target, rcond=None)
    if rank < k + 1:
        raise RankDeficientError(f"degree-{k} design matrix has rank {rank}")
    return coef


def gaussian_kl(mu_f, sigma_f, mu_m, sigma_m):
    """KL(N(mu_f, sigma_f^2) || N(mu_m, sigma_m^2))."""
    mu_f, sigma_f, mu_m, sigma_m = (np.asarray(a, dtype=float)
                                    for a in (mu_f, sigma_f, mu_m, sigma_m))
    if np.any(sigma_f <= 0) or np.any(sigma_m <= 0):
        raise ValueError("standard deviations must be positive")
    kl = (np.log(sigma_m / sigma_f)
          + (sigma_f ** 2 + (mu_f - mu_m) ** 2) / (2.0 * sigma_m ** 2) - 0.5)
    kl = np.maximum(kl, 0.0)
    return float(kl) if kl.ndim == 0 else kl
