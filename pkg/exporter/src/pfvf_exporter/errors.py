"""Exception taxonomy for the exporter.

Everything raised on purpose derives from ExporterError so the CLI can map
error classes to exit codes without string matching.
"""


class ExporterError(Exception):
    """Base class for all exporter errors."""


class ConfigError(ExporterError):
    """Invalid configuration value; message names the field."""


class UndecodableVideoError(ExporterError):
    """The input could not be opened or decoded as video."""


class MissingWeightsError(ExporterError):
    """Pretrained weights were requested but are not available locally."""


class WidthMismatchError(ExporterError):
    """Extractor output widths disagree with the configured header widths."""
