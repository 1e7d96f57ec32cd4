"""Exception hierarchy.

Each family maps onto one CLI exit code: input problems exit 2, protocol
violations exit 3 and numeric failures exit 4.
"""


class MSCMError(Exception):
    exit_code = 4


class InputError(MSCMError):
    exit_code = 2


class ProtocolError(MSCMError):
    exit_code = 3


class NumericError(MSCMError):
    exit_code = 4


class UnsupportedChannels(InputError):
    pass


class InvalidImage(InputError):
    pass


class EmptyForeground(InputError):
    pass


class DegenerateRegion(InputError):
    pass


class TooFewPoints(InputError):
    pass


class ScaleTooFine(InputError):
    pass


class InvalidConfig(InputError):
    pass


class NoRecordsFound(InputError):
    pass


class ShapeOutOfCanvas(InputError):
    pass


class OutOfRange(NumericError):
    pass


class DegenerateChord(NumericError):
    pass


class ZeroStatistic(NumericError):
    pass


class DimensionMismatch(ProtocolError):
    pass


class EmptyModelSet(ProtocolError):
    pass


class MissingPart(ProtocolError):
    pass


class UnpairedCultivar(ProtocolError):
    pass


class NotEnoughClasses(ProtocolError):
    pass
