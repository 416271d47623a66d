class ParameterError(ValueError):
    """Invalid argument to a sampler, constructor or estimator."""


class DegeneratePairError(ParameterError):
    """Two distinct atoms of a measure sit at the same point."""

    def __init__(self, i: int, j: int):
        super().__init__(f"atoms {i} and {j} coincide; energy is undefined")
        self.i = i
        self.j = j


class ConfigError(ValueError):
    """Experiment configuration could not be parsed; ``path`` locates the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
