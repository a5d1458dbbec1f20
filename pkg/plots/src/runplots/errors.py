"""Named failure modes for run-directory plotting."""


class PlotsError(Exception):
    """Base class for everything this package raises on bad inputs."""


class MissingRunFile(PlotsError):
    """A run directory lacks one of its three expected files."""


class MalformedRunFile(PlotsError):
    """A run file exists but does not parse (bad header, ragged rows)."""


class MissingColumn(PlotsError):
    """A panel references a CSV column the input schema does not have."""


class SchemaMismatch(PlotsError):
    """Two runs being overlaid disagree on the trajectory column set."""
