"""Exception hierarchy shared by all modules.

Every error carries a ``module`` tag so the CLI can print messages of the
form ``[assembly] ...``.
"""


class FracCondError(Exception):
    default_module = "fraccond"

    def __init__(self, msg, *, module=None, **details):
        super().__init__(msg)
        self.module = module or self.default_module
        self.details = details

    def __str__(self):
        return f"[{self.module}] {self.args[0]}"


class InvalidArgument(FracCondError, ValueError):
    pass


class PreconditionViolation(FracCondError, ValueError):
    pass


class ConstructionInfeasible(FracCondError):
    default_module = "geometry"


class ConstructionFailed(FracCondError):
    default_module = "counterexample"


class UnsupportedConfiguration(FracCondError):
    default_module = "assembly"


class AssemblyError(FracCondError):
    default_module = "solver"


class NumericalBreakdown(FracCondError):
    default_module = "solver"


class GridTooCoarse(FracCondError):
    default_module = "dn"


class FamilyInfeasible(FracCondError):
    default_module = "counterexample"


class StudyFailed(FracCondError):
    default_module = "counterexample"


class ConfigError(FracCondError, ValueError):
    default_module = "cli_io"
