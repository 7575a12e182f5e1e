"""Exception types shared across the package.

The CLI maps these onto exit codes, so every module raises one of them
(or a plain ``ValueError`` for argument validation).
"""


class ConfigError(ValueError):
    """Invalid model file, schedule, or run parameters."""


class CapExceededError(RuntimeError):
    """A requested simulation would exceed the configured size cap."""


class NotReversibleError(ValueError):
    """A transition matrix failed the detailed-balance check."""


class ScheduleError(ConfigError):
    """A cooling schedule violates the ratio bound or could not be built."""


class GuaranteeError(RuntimeError):
    """A checked guarantee (e.g. a gap relation) failed at run time."""
