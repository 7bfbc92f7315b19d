"""Exception hierarchy shared by all modules."""


class RedundancyError(ValueError):
    """Base class for every error raised by this package."""


class DegenerateInputError(RedundancyError):
    pass


class FFTSizeError(RedundancyError):
    pass


class UnresolvableBandError(RedundancyError):
    """One or more octave bands contain no FFT bin.

    ``bands`` lists the offending center frequencies so the caller can drop
    them or raise the FFT size.
    """

    def __init__(self, bands, bin_hz):
        self.bands = tuple(bands)
        self.bin_hz = bin_hz
        listed = ", ".join(f"{c:g} Hz" for c in self.bands)
        super().__init__(f"no FFT bin falls inside band(s) {listed} (bin spacing {bin_hz:.4g} Hz)")


class AlignmentError(RedundancyError):
    pass


class ShapeError(RedundancyError):
    pass


class AliasingError(RedundancyError):
    pass


class ScenarioError(RedundancyError):
    pass


class ConfigError(RedundancyError):
    """Invalid configuration value; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class ParseError(RedundancyError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
