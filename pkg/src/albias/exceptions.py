"""Exception hierarchy shared across the package."""


class ALBError(Exception):
    """Base class for all errors raised by albias."""


class DimensionError(ALBError, ValueError):
    """Design, parameter or outcome shapes disagree with the model class."""


class InvalidOutcomeError(ALBError, ValueError):
    """An outcome is not admissible for the likelihood family."""


class ZeroLikelihoodError(ALBError, FloatingPointError):
    """A Bayes update left no posterior mass.

    Carries the offending observation (and, for particle filters, the step
    index) so the failure can be traced back inside a simulation.
    """

    def __init__(self, message, design=None, outcome=None, step=None):
        super().__init__(message)
        self.design = design
        self.outcome = outcome
        self.step = step


class SingularPriorError(ALBError, ValueError):
    """A Gaussian covariance could not be factorized."""


class RankDeficientError(ALBError, ValueError):
    """A least-squares design matrix does not have full column rank."""


class NonFiniteRiskError(ALBError, FloatingPointError):
    def __init__(self, message, design=None):
        super().__init__(message)
        self.design = design


class InfiniteDivergenceError(ALBError, ValueError):
    """KL divergence is infinite (model assigns zero mass to a possible outcome)."""


class ReplayExhaustedError(ALBError, IndexError):
    """A replay policy was asked for a design past the end of its sequence."""


class ConfigError(ALBError, ValueError):
    """Malformed experiment configuration.

    ``path`` is the dotted field path and ``line`` the 1-based source line,
    when known.
    """

    def __init__(self, message, path=None, line=None, file=None):
        self.message = message
        self.path = path
        self.line = line
        self.file = file
        where = [str(file)] if file else []
        if line is not None:
            where.append(f"line {line}")
        if path:
            where.append(f"field '{path}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class SimulationError(ALBError, RuntimeError):
    """Wraps a failure inside an experiment with its (replication, arm, t) context."""

    def __init__(self, message, replication=None, arm=None, t=None):
        super().__init__(
            f"replication={replication} arm={arm} t={t}: {message}"
        )
        self.replication = replication
        self.arm = arm
        self.t = t
