"""Exception hierarchy shared by every module."""


class WeatherClfError(Exception):
    """Base class for all package errors."""


class FileIOError(WeatherClfError, OSError):
    """A file could not be read or written."""


class DecodeError(WeatherClfError, ValueError):
    """A file exists but is not a decodable PNG/JPEG/BMP image."""


class DimensionError(WeatherClfError, ValueError):
    """An image or matrix is too small or has the wrong shape."""


class ParameterError(WeatherClfError, ValueError):
    """An argument is outside its valid range."""


class SchemaError(WeatherClfError, ValueError):
    """Feature schema or model format does not match."""


class CsvFormatError(WeatherClfError, ValueError):
    """Malformed feature CSV; ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
