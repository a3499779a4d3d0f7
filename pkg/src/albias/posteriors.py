"""Weighted-point posteriors for models without a conjugate update.

:class:`GridPosterior` keeps a fixed lattice and reweights it exactly.
:class:`ParticlePosterior` is an importance sampler: at every observation the
current particles, weighted by (previous weight x new likelihood), define a
Gaussian kernel density that proposes a fresh particle set, which is then
weighted against prior x full likelihood history.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.special import logsumexp

from .core import ParamSpace, PriorSpec, normalize_log_weights
from .exceptions import DimensionError, ZeroLikelihoodError

N_PARTICLES = 10_000
MAX_REDRAWS = 100
TAIL_CUTOFF = 1e-5  # relative density below which the binned KDE is bypassed


class _WeightedPoints:
    """Shared behaviour for posteriors stored as (points, log_weights)."""

    @property
    def weights(self):
        return np.exp(self.log_weights)

    @property
    def ess(self):
        w = self.weights
        return float(1.0 / np.sum(w * w))

    def mean(self):
        return self.weights @ self._points

    def cov(self):
        pts = self._points
        w = self.weights
        centered = pts - w @ pts
        return (centered * w[:, None]).T @ centered

    def expectation(self, h):
        return posterior_expectation(self, h)

    def predictive_log_density(self, spec, x, y):
        ll = spec.log_likelihoods(self._points, x, y)
        return float(logsumexp(self.log_weights + ll))

    def prob_table(self, spec, X):
        return spec.prob_table(self._points, X)


@dataclass(frozen=True, eq=False)
class GridPosterior(_WeightedPoints):
    """Posterior on a fixed lattice of parameter vectors."""

    points: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        lw = np.asarray(self.log_weights, dtype=float).ravel()
        if lw.shape != (pts.shape[0],):
            raise DimensionError("need one log weight per lattice point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "log_weights", normalize_log_weights(lw))

    @property
    def _points(self):
        return self.points

    @classmethod
    def from_prior(cls, points, prior: PriorSpec):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(pts, prior.logpdf(pts))

    @classmethod
    def uniform(cls, points):
        pts = np.asarray(points, dtype=float)
        return cls(pts, np.zeros(len(pts)))

    @classmethod
    def point_mass(cls, theta):
        return cls(np.atleast_2d(np.asarray(theta, dtype=float)), np.zeros(1))

    def reweight(self, log_likelihood, design=None, outcome=None):
        lw = normalize_log_weights(self.log_weights + np.asarray(log_likelihood, dtype=float),
                                   design=design, outcome=outcome)
        return GridPosterior(self.points, lw)

    def update(self, spec, x, y):
        return grid_update(self, spec, x, y)


def grid_update(post, spec, x, y):
    """Exact Bayes update on the lattice."""
    return post.reweight(spec.log_likelihoods(post.points, x, y), design=x, outcome=y)


def _weighted_scott_bandwidth(samples, w, ess, floor):
    d = samples.shape[1]
    centered = samples - w @ samples
    var = w @ (centered * centered)
    h = np.sqrt(var) * ess ** (-1.0 / (d + 4))
    return np.maximum(h, floor)


@dataclass(frozen=True, eq=False)
class ParticlePosterior(_WeightedPoints):
    """Importance-sampling posterior with a weighted-KDE proposal.

    ``history`` holds every (x, y) absorbed so far so that freshly proposed
    particles can be scored against the full likelihood.
    """

    samples: np.ndarray
    log_weights: np.ndarray
    prior: PriorSpec
    param_space: ParamSpace
    history: tuple = ()
    seed: int = 0
    step: int = 0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        lw = np.asarray(self.log_weights, dtype=float).ravel()
        if lw.shape != (s.shape[0],):
            raise DimensionError("need one log weight per particle")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "log_weights", normalize_log_weights(lw, step=self.step))

    @property
    def _points(self):
        return self.samples

    @property
    def n_particles(self):
        return self.samples.shape[0]

    @property
    def bandwidth(self):
        """Per-dimension kernel scale (Scott's rule on the weighted sample)."""
        return _weighted_scott_bandwidth(self.samples, self.weights, self.ess,
                                         self._bandwidth_floor())

    def _bandwidth_floor(self):
        if self.prior.kind == "normal":
            scale = np.sqrt(np.diag(self.prior.cov))
        else:
            scale = self.prior.upper - self.prior.lower
        return 1e-6 * scale

    @classmethod
    def from_prior(cls, spec, n_particles=N_PARTICLES, seed=0):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
        samples = spec.prior.sample(rng, n_particles)
        return cls(samples, np.zeros(n_particles), spec.prior, spec.param_space,
                   (), int(seed), 0)

    def update(self, spec, x, y):
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.step + 1,))
        return particle_step(self, spec, x, y, seq)


def _draw_from_kde(rng, samples, w, h, space):
    n, d = samples.shape
    parents = rng.choice(n, size=n, p=w)
    centres = samples[parents]
    draws = centres + h * rng.standard_normal((n, d))
    if np.all(np.isinf(space.lower)) and np.all(np.isinf(space.upper)):
        return draws
    for _ in range(MAX_REDRAWS):
        outside = ~space.contains(draws)
        if not outside.any():
            return draws
        k = int(outside.sum())
        draws[outside] = centres[outside] + h * rng.standard_normal((k, d))
    return np.clip(draws, space.lower, space.upper)


def kde_log_density_exact(centres, w, h, points, chunk=512):
    """log of sum_i w_i N(points; centres_i, diag(h^2)), by direct summation."""
    u_c = centres / h
    u_p = np.atleast_2d(points / h)
    d = centres.shape[1]
    log_w = np.log(np.where(w > 0, w, 1.0))
    log_w[w <= 0] = -np.inf
    const = -0.5 * d * np.log(2 * np.pi) - np.sum(np.log(h))
    out = np.empty(len(u_p))
    for start in range(0, len(u_p), chunk):
        blk = u_p[start:start + chunk]
        d2 = (np.sum(blk * blk, axis=1)[:, None] + np.sum(u_c * u_c, axis=1)[None, :]
              - 2.0 * blk @ u_c.T)
        out[start:start + chunk] = logsumexp(log_w[None, :] - 0.5 * np.maximum(d2, 0.0), axis=1)
    return out + const


def kde_log_density(centres, w, h, points, bins_per_h=6, pad=6.0, max_cells=2_000_000):
    """Weighted Gaussian KDE evaluated through a linearly binned grid.

    Kernel mass is spread onto a lattice with spacing ``h / bins_per_h``,
    smoothed with a separable Gaussian filter and read back by multilinear
    interpolation; relative error is O((spacing / h)^2). Points falling off
    the lattice are evaluated exactly.
    """
    centres = np.asarray(centres, dtype=float)
    points = np.asarray(points, dtype=float)
    n, d = centres.shape
    lo = centres.min(axis=0) - pad * h
    hi = centres.max(axis=0) + pad * h
    delta = h / bins_per_h
    shape = np.ceil((hi - lo) / delta).astype(int) + 2
    if np.prod(shape.astype(float)) > max_cells:
        per_dim = int(max_cells ** (1.0 / d))
        shape = np.minimum(shape, per_dim)
        delta = (hi - lo) / (shape - 2)
        if np.any(delta > h / 2):
            return kde_log_density_exact(centres, w, h, points)

    # linear binning
    grid = np.zeros(shape)
    pos = (centres - lo) / delta
    base = np.floor(pos).astype(int)
    frac = pos - base
    for corner in range(2 ** d):
        offs = np.array([(corner >> j) & 1 for j in range(d)])
        cw = w * np.prod(np.where(offs == 1, frac, 1.0 - frac), axis=1)
        np.add.at(grid, tuple((base + offs).T), cw)
    smooth = ndimage.gaussian_filter(grid, sigma=h / delta, mode="constant", truncate=pad)
    dens = smooth / np.prod(delta)

    coords = ((points - lo) / delta).T
    inside = np.all((coords >= 0) & (coords <= (shape - 1)[:, None]), axis=0)
    vals = ndimage.map_coordinates(dens, coords[:, inside], order=1, mode="constant")
    out = np.empty(len(points))
    with np.errstate(divide="ignore"):
        out[inside] = np.log(vals)
    # far tails, where interpolating a steep density loses relative accuracy,
    # fall back to the exact sum
    redo = ~inside
    redo[inside] |= ~(vals > TAIL_CUTOFF * dens.max())
    if redo.any():
        out[redo] = kde_log_density_exact(centres, w, h, points[redo])
    return out


def particle_step(post, spec, x, y, rng_seed):
    """Absorb one observation and regenerate the particle set.

    1. reweight the current particles by the new likelihood;
    2. fit a Gaussian KDE to them and draw a fresh set of the same size;
    3. weight each draw by prior x (likelihood of all observations) / KDE;
    4. normalize.
    """
    step = post.step + 1
    ll = spec.log_likelihoods(post.samples, x, y)
    try:
        lw = normalize_log_weights(post.log_weights + ll, design=x, outcome=y, step=step)
    except ZeroLikelihoodError as exc:
        raise ZeroLikelihoodError(f"particle step {step}: {exc}", x, y, step) from exc
    w = np.exp(lw)
    ess = 1.0 / np.sum(w * w)
    h = _weighted_scott_bandwidth(post.samples, w, ess, post._bandwidth_floor())

    rng = np.random.default_rng(rng_seed)
    draws = _draw_from_kde(rng, post.samples, w, h, post.param_space)

    history = post.history + ((np.asarray(x, dtype=float), float(np.squeeze(y))),)
    X_hist = np.array([obs[0] for obs in history])
    Y_hist = np.array([obs[1] for obs in history])
    log_target = post.prior.logpdf(draws) + spec.log_likelihood_table(draws, X_hist, Y_hist).sum(axis=1)
    log_q = kde_log_density(post.samples, w, h, draws)
    new_lw = log_target - log_q
    new_lw[~np.isfinite(new_lw)] = -np.inf
    try:
        new_lw = normalize_log_weights(new_lw, design=x, outcome=y, step=step)
    except ZeroLikelihoodError as exc:
        raise ZeroLikelihoodError(f"particle step {step}: all proposal weights underflowed",
                                  x, y, step) from exc
    return ParticlePosterior(draws, new_lw, post.prior, post.param_space, history,
                             post.seed, step)


def posterior_expectation(post, h):
    """sum_i w_i h(theta_i) over a grid or particle posterior.

    ``h`` may be vectorized (mapping an (n, d) array to (n,)) or scalar-valued.
    """
    pts = post._points
    w = post.weights
    try:
        vals = np.asarray(h(pts), dtype=float)
    except Exception:
        vals = None
    if vals is None or vals.shape != (len(pts),):
        vals = np.array([float(h(p)) for p in pts])
    return float(w @ vals)
