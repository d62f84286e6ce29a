"""Exception hierarchy.

``DataError`` covers bad inputs (files, manifests, shapes, labels) and maps to
CLI exit code 2; ``NumericalError`` maps to exit code 3.
"""


class GenreForgeError(Exception):
    pass


class DataError(GenreForgeError, ValueError):
    pass


class NumericalError(GenreForgeError, ArithmeticError):
    pass


# audio_io
class MalformedHeader(DataError):
    pass


class UnsupportedEncoding(DataError):
    pass


class EmptyAudio(DataError):
    pass


class MissingFile(DataError, FileNotFoundError):
    pass


class DuplicatePath(DataError):
    pass


class EmptyManifest(DataError):
    pass


# dsp / features
class SignalTooShort(DataError):
    pass


class BinCountMismatch(DataError):
    pass


class DegenerateFilter(DataError):
    pass


# preprocess / classifiers / evaluation
class TooFewRows(DataError):
    pass


class NotTwoClasses(DataError):
    pass


class DegenerateClass(DataError):
    pass


class SingleClass(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class UnknownFeatureName(DataError, KeyError):
    pass


class TooManyFeatures(DataError):
    pass


class KOutOfRange(DataError):
    pass


class EmptyDataset(DataError):
    pass


class LengthMismatch(DataError):
    pass


class MissingSeries(DataError, KeyError):
    pass


class Empty(DataError):
    pass
