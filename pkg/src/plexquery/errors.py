"""Exception hierarchy shared across the package.

Every error raised by library code derives from PlexError so callers
(CLI, HTTP service) can map failures to structured messages uniformly.
"""


class PlexError(Exception):
    """Base class for all package errors."""


# -- ingest ----------------------------------------------------------------

class MissingFile(PlexError):
    pass


class SchemaError(PlexError):
    pass


class SizeMismatch(PlexError):
    pass


class ParseError(PlexError):
    pass


class DuplicateId(PlexError):
    pass


class OutOfBounds(PlexError):
    pass


class EmptyResult(PlexError):
    pass


class SpecError(PlexError):
    pass


# -- encoder / losses ------------------------------------------------------

class ShapeMismatch(PlexError):
    pass


class UnlabeledSample(PlexError):
    pass


class NoValidTriplet(PlexError):
    pass


class NonFinite(PlexError):
    pass


# -- graph / community -----------------------------------------------------

class NodeSetMismatch(PlexError):
    pass


class EmptyGraph(PlexError):
    pass


class IsolatedOnlyGraph(PlexError):
    pass


class TooLarge(PlexError):
    pass


# -- trainer ---------------------------------------------------------------

class DegenerateData(PlexError):
    pass


# -- query -----------------------------------------------------------------

class UnknownCell(PlexError):
    pass


class OutlierQuery(PlexError):
    pass


class UnknownCommunity(PlexError):
    pass


class UnknownPanelSet(PlexError):
    pass


class NoUsableFeatures(PlexError):
    pass


class EmptySet(PlexError):
    pass


# -- eval ------------------------------------------------------------------

class MissingLabels(PlexError):
    pass


class NoLabeledCells(PlexError):
    pass


# -- persistence -----------------------------------------------------------

class DuplicateCell(PlexError):
    pass


class CapabilityMissing(PlexError):
    pass


class IoError(PlexError):
    pass
