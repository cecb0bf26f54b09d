"""Exception types shared across the toolkit."""


class VanetLabError(Exception):
    pass


class InvalidConfigError(VanetLabError, ValueError):
    pass


class NoRouteError(VanetLabError):
    pass


class OutOfRangeError(VanetLabError, ValueError):
    pass


class TraceParseError(VanetLabError, ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TraceSemanticError(VanetLabError, ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class CausalityError(VanetLabError, RuntimeError):
    """An event was scheduled before the current simulation time."""


class SweepError(VanetLabError, RuntimeError):
    def __init__(self, model, n_vehicles, seed, cause):
        super().__init__(f"run ({model}, {n_vehicles}, {seed}) failed: {cause!r}")
        self.triple = (model, n_vehicles, seed)
        self.cause = cause
