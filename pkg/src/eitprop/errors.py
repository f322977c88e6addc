"""Exception hierarchy shared by the simulation modules."""


class EitPropError(Exception):
    """Base class. ``category`` is the machine-readable tag used by the CLI."""

    category = "compute"


class ParameterError(EitPropError, ValueError):
    category = "parameter"


class DimensionError(EitPropError, ValueError):
    category = "parameter"


class IntegrationError(EitPropError, RuntimeError):
    """Time integration gave up; ``t_reached`` is the last accepted time (1/Gamma)."""

    def __init__(self, message, t_reached):
        super().__init__(f"{message} (reached t = {t_reached:.6g}/Gamma)")
        self.t_reached = t_reached


class NoUniqueSteadyStateError(EitPropError, ArithmeticError):
    pass


class ZeroFieldError(EitPropError, ZeroDivisionError):
    """A quantity normalised by a field amplitude was requested where the field vanishes."""


class GridRefinementError(EitPropError, RuntimeError):
    """Propagation stability monitor tripped."""

    def __init__(self, message, suggested_n_zeta):
        super().__init__(f"{message}; try n_zeta >= {suggested_n_zeta}")
        self.suggested_n_zeta = suggested_n_zeta


class ScenarioError(EitPropError, KeyError):
    category = "scenario"

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ConfigError(EitPropError, ValueError):
    """Invalid run configuration. ``line`` and ``key_path`` locate the problem."""

    category = "config"

    def __init__(self, message, *, line=None, key_path=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key_path:
            where.append(f"key '{key_path}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key_path = key_path


class OutputError(EitPropError, OSError):
    """Output directory or file could not be written."""

    category = "io"
