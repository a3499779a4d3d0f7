"""Active learning bias in Bayesian adaptive experimental design.

Sequential Bayesian learners (conjugate Gaussian, parameter grids and
importance-sampling particles), greedy expected-information-gain design
selection, misspecification and bias metrics, and a simulation harness.
"""

__version__ = "0.1.0"

from .core import ModelSpec, PriorSpec, TargetDistribution, TrueModel, bayes_update
from .design import DesignPolicy, choose_design, next_design, select_discrete_eig, select_linear
from .estimators import (BayesianPolynomialRegression, GridBinaryLearner,
                         ParticleLogisticClassifier)
from .exceptions import ALBError
from .linreg import GaussianPosterior
from .posteriors import GridPosterior, ParticlePosterior

__all__ = [
    "ALBError", "BayesianPolynomialRegression", "DesignPolicy", "GaussianPosterior",
    "GridBinaryLearner", "GridPosterior", "ModelSpec", "ParticleLogisticClassifier",
    "ParticlePosterior", "PriorSpec", "TargetDistribution", "TrueModel", "bayes_update",
    "choose_design", "next_design", "select_discrete_eig", "select_linear",
]
