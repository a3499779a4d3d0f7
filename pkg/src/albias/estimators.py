"""Scikit-learn style wrappers around the sequential Bayesian learners.

Each learner holds an immutable posterior in ``posterior_`` and replaces it on
every observation, so ``partial_fit`` drives the same update loop the
simulation harness uses. ``query`` returns the next design under greedy
expected-information-gain selection, in the ``(index, design)`` convention of
pool-based active learning libraries.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import design as _design
from .binary import binary_entropy
from .core import ModelSpec, PriorSpec, bayes_update
from .linreg import GaussianPosterior, default_prior_cov, eig_linear, posterior_predictive
from .metrics import cross_entropy_from_stats, risk_nll
from .posteriors import N_PARTICLES, GridPosterior, ParticlePosterior

EUT_LATTICE_SIZE = 1001
# particles lighter than this are skipped in mixture sums (total error <= n * 1e-14)
PRUNE_WEIGHT = 1e-14


def _check_outcomes(y, n, binary):
    y = np.asarray(y, dtype=float).ravel()
    if y.shape != (n,):
        raise ValueError(f"got {n} designs but {y.size} outcomes")
    if not np.all(np.isfinite(y)):
        raise ValueError("outcomes must be finite")
    if binary and not np.all((y == 0) | (y == 1)):
        raise ValueError("binary outcomes must be 0 or 1")
    return y


class _SequentialBayesLearner(BaseEstimator):

    def _make_spec(self):
        raise NotImplementedError

    def _initial_posterior(self, spec):
        raise NotImplementedError

    def reset(self):
        """Discard all data and return to the prior."""
        self.spec_ = self._make_spec()
        self.posterior_ = self._initial_posterior(self.spec_)
        self.n_observations_ = 0
        return self

    def fit(self, X, y):
        self.reset()
        return self.partial_fit(X, y)

    def partial_fit(self, X, y):
        if not hasattr(self, "posterior_"):
            self.reset()
        spec = self.spec_
        X = np.atleast_1d(spec.check_designs(X))
        if spec.design_dim > 1:
            X = np.atleast_2d(X)
        y = _check_outcomes(y, len(X), spec.is_binary)
        post = self.posterior_
        for xi, yi in zip(X, y):
            post = bayes_update(post, spec, xi, yi)
        self.posterior_ = post
        self.n_observations_ += len(X)
        return self

    def _ensure_prior(self):
        if not hasattr(self, "posterior_"):
            self.reset()

    def _designs(self, X):
        if X is None:
            if self.design_space is None:
                raise ValueError("pass designs explicitly or set design_space")
            X = self.design_space
        return self.spec_.check_designs(X)

    def predictive_log_density(self, X, y):
        check_is_fitted(self, "posterior_")
        X = self._designs(X)
        y = np.asarray(y, dtype=float).ravel()
        return np.array([self.posterior_.predictive_log_density(self.spec_, xi, yi)
                         for xi, yi in zip(X, y)])

    def risk(self, eval_set):
        """Mean negative log predictive likelihood on an :class:`~albias.metrics.EvalSet`."""
        self._ensure_prior()
        return risk_nll(self.posterior_, self.spec_, eval_set)

    def query(self, X=None):
        """Index and value of the EIG-maximizing design among ``X`` (default: design_space)."""
        self._ensure_prior()
        X = self._designs(X)
        eig = self.expected_information_gain(X)
        if isinstance(self.posterior_, GaussianPosterior):
            x = _design.select_linear(self.posterior_, self.spec_.sigma, self.spec_.degree, X)
            idx = int(np.flatnonzero(X == x)[0])
        else:
            idx = int(np.argmax(eig))
        return idx, X[idx]


class BayesianPolynomialRegression(RegressorMixin, _SequentialBayesLearner):
    """Conjugate Bayesian polynomial regression with known noise std.

    Parameters
    ----------
    degree : int
        Polynomial degree k; the model has k+1 coefficients.
    noise_std : float
        Assumed observation standard deviation sigma.
    prior_mean, prior_cov : array-like, optional
        Gaussian prior on the coefficients. Defaults to zero mean and
        ``diag(100, 10, 0.1, 0.001)`` truncated to k+1 entries.
    design_space : array-like, optional
        Candidate designs used by ``query`` when none are passed.
    """

    def __init__(self, degree=1, noise_std=100.0, prior_mean=None, prior_cov=None,
                 design_space=None):
        self.degree = degree
        self.noise_std = noise_std
        self.prior_mean = prior_mean
        self.prior_cov = prior_cov
        self.design_space = design_space

    def _make_spec(self):
        mean = np.zeros(self.degree + 1) if self.prior_mean is None else self.prior_mean
        cov = default_prior_cov(self.degree) if self.prior_cov is None else self.prior_cov
        return ModelSpec("gaussian-linear", degree=self.degree, sigma=float(self.noise_std),
                         prior=PriorSpec("normal", mean=mean, cov=cov))

    def _initial_posterior(self, spec):
        return GaussianPosterior(spec.prior.mean, spec.prior.cov)

    @property
    def coef_(self):
        check_is_fitted(self, "posterior_")
        return self.posterior_.M

    def predict(self, X, return_std=False):
        self._ensure_prior()
        phi = self.spec_.features(X)
        mean, var = posterior_predictive(self.posterior_, self.spec_.sigma, phi)
        if return_std:
            return mean, np.sqrt(var)
        return mean

    def expected_information_gain(self, X=None):
        self._ensure_prior()
        phi = self.spec_.features(self._designs(X))
        return eig_linear(self.posterior_, self.spec_.sigma, phi)


class _BinaryLearner(ClassifierMixin, _SequentialBayesLearner):
    classes_ = np.array([0, 1])

    def mixture_stats(self, X=None, with_entropy=True):
        """(pbar, qbar, mean entropy) of the current posterior at each design."""
        self._ensure_prior()
        use_space = X is None
        X = self._designs(X)
        cache = getattr(self, "_stats_cache", None)
        if use_space and cache is not None and cache[0] is self.posterior_ and (
                cache[1] or not with_entropy):
            return cache[2]
        stats = self._compute_stats(X, with_entropy, use_space)
        if use_space:
            self._stats_cache = (self.posterior_, with_entropy, stats)
        return stats

    def _compute_stats(self, X, with_entropy, use_space):
        return _design.binary_mixture_stats(self.posterior_, self.spec_, X, with_entropy,
                                            PRUNE_WEIGHT)

    def predict_proba(self, X=None):
        pbar, qbar, _ = self.mixture_stats(X, with_entropy=False)
        return np.column_stack([qbar, pbar])

    def predict(self, X=None):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)

    def expected_information_gain(self, X=None):
        return _design.eig_from_stats(self.mixture_stats(X))

    def expected_cross_entropy(self, p_true, X=None):
        """Risk against known true success probabilities at the designs."""
        pbar, qbar, _ = self.mixture_stats(X, with_entropy=False)
        return cross_entropy_from_stats(p_true, pbar, qbar)


class GridBinaryLearner(_BinaryLearner):
    """Binary-choice model with its posterior on a fixed parameter lattice.

    Parameters
    ----------
    family : {"eut", "cpt", "logistic-poly"}
    epsilon : float
        Choice sensitivity (logit scale).
    degree : int
        Polynomial degree, logistic-poly only.
    lattice : array-like, optional
        Parameter points; defaults to 1,001 evenly spaced alpha values on
        [0, 1] for EUT.
    prior : PriorSpec, optional
        Defaults to the family's default prior.
    design_space : array-like, optional
        Candidate designs; the probability tables over it are computed once.
    """

    def __init__(self, family="eut", epsilon=1.0, degree=1, lattice=None, prior=None,
                 design_space=None):
        self.family = family
        self.epsilon = epsilon
        self.degree = degree
        self.lattice = lattice
        self.prior = prior
        self.design_space = design_space

    def _make_spec(self):
        return ModelSpec(self.family, degree=self.degree, epsilon=float(self.epsilon),
                         prior=self.prior)

    def _lattice(self):
        if self.lattice is not None:
            return np.asarray(self.lattice, dtype=float)
        if self.family != "eut":
            raise ValueError(f"no default lattice for {self.family}")
        return np.linspace(0.0, 1.0, EUT_LATTICE_SIZE)

    def _initial_posterior(self, spec):
        return GridPosterior.from_prior(self._lattice(), spec.prior)

    def reset(self):
        super().reset()
        self._tables = None
        self._stats_cache = None
        return self

    def design_tables(self):
        """(P, Q, H): success prob., failure prob. and entropy on lattice x design_space."""
        self._ensure_prior()
        if getattr(self, "_tables", None) is None:
            Z = self.spec_.logit_table(self.posterior_.points, self._designs(None))
            P = 1.0 / (1.0 + np.exp(-Z))
            Q = 1.0 / (1.0 + np.exp(Z))
            self._tables = (P, Q, binary_entropy(P))
        return self._tables

    def _compute_stats(self, X, with_entropy, use_space):
        if not use_space:
            return super()._compute_stats(X, with_entropy, use_space)
        P, Q, H = self.design_tables()
        w = self.posterior_.weights
        return w @ P, w @ Q, (w @ H if with_entropy else np.zeros(P.shape[1]))


class ParticleLogisticClassifier(_BinaryLearner):
    """Logistic-polynomial classifier with an importance-sampling posterior.

    Parameters
    ----------
    degree : int
        Degree of the polynomial logit.
    epsilon : float
        Logit scale; smaller values mean noisier assumed choices.
    n_particles : int
    prior_mean, prior_cov : array-like, optional
        Gaussian prior on coefficients (default as in regression).
    random_state : int
        Seed for the particle filter; each update derives its own stream.
    design_space : array-like, optional
    """

    def __init__(self, degree=1, epsilon=1.0, n_particles=N_PARTICLES, prior_mean=None,
                 prior_cov=None, random_state=0, design_space=None):
        self.degree = degree
        self.epsilon = epsilon
        self.n_particles = n_particles
        self.prior_mean = prior_mean
        self.prior_cov = prior_cov
        self.random_state = random_state
        self.design_space = design_space

    def _make_spec(self):
        mean = np.zeros(self.degree + 1) if self.prior_mean is None else self.prior_mean
        cov = default_prior_cov(self.degree) if self.prior_cov is None else self.prior_cov
        return ModelSpec("logistic-poly", degree=self.degree, epsilon=float(self.epsilon),
                         prior=PriorSpec("normal", mean=mean, cov=cov))

    def _initial_posterior(self, spec):
        return ParticlePosterior.from_prior(spec, int(self.n_particles), seed=self.random_state)

    def reset(self):
        super().reset()
        self._stats_cache = None
        return self
