"""Exception hierarchy shared by every pipeline stage."""


class ClbpError(Exception):
    """Base class for all toolkit errors."""


class ColorspaceError(ClbpError, ValueError):
    """An image arrived in a colorspace the operation does not accept."""


class EmptyInputError(ClbpError, ValueError):
    """An array, list or directory that must be nonempty was empty."""


class ShapeError(ClbpError, ValueError):
    """Array dimensions are too small or mutually inconsistent."""


class DegenerateInputError(ClbpError, ValueError):
    """Input makes the requested quantity undefined (zero norm, zero variance...)."""


class NoSkinRegionError(ClbpError):
    """The skin mask of an image is empty, so no face can be cropped."""

    def __init__(self, message="no skin region"):
        super().__init__(message)


class IncompatibleError(ClbpError, ValueError):
    """Signatures or galleries built with different grid/bins/channels were mixed."""


class GalleryFormatError(ClbpError):
    """A gallery file is corrupt, truncated or of an unknown version."""


class DatasetError(ClbpError):
    """Dataset layout problems: empty roots, subjects without usable images."""


class InsufficientSamplesError(DatasetError):
    """A subject has too few samples for the requested train split."""
