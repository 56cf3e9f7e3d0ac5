"""Exception hierarchy shared by all polyslice modules."""


class PolysliceError(Exception):
    """Base class for every error raised by this package."""


class AxisError(PolysliceError, KeyError):
    """An axis name is unknown to the object it was looked up on."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UnsupportedAxisOperation(PolysliceError, TypeError):
    pass


class IndexFormatError(PolysliceError, ValueError):
    pass


class DatacubeFormatError(PolysliceError, ValueError):
    pass


class InvalidPathError(PolysliceError, LookupError):
    pass


class RequestError(PolysliceError, ValueError):
    """A shape request is malformed or inconsistent with the datacube."""
