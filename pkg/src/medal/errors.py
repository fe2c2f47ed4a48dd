"""Exception hierarchy.

Every error carries a ``category`` string; the CLI prints it and maps it to a
nonzero exit code.
"""


class MedalError(Exception):
    category = "error"
    exit_code = 1


# -- data model ------------------------------------------------------------

class PartitionError(MedalError):
    category = "partition"
    exit_code = 3


class DuplicateId(PartitionError):
    pass


class NotInOracle(PartitionError):
    pass


class LabelLeakError(PartitionError):
    """Raised when an oracle label is read before the example is queried."""


# -- numerics --------------------------------------------------------------

class InputError(MedalError):
    category = "input"
    exit_code = 4


class InvalidDistribution(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class KindMismatch(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class InvalidArchitecture(InputError):
    pass


class InvalidLayer(InputError):
    pass


class EmptyTrainingSet(InputError):
    pass


class EmptyPool(InputError):
    pass


class KTooLarge(InputError):
    pass


class TargetTooLarge(InputError):
    pass


class PoolTooSmall(InputError):
    pass


# -- images ----------------------------------------------------------------

class ImageTooSmall(InputError):
    pass


class PatchOutOfBounds(InputError):
    pass


# -- files and configuration -----------------------------------------------

class ConfigError(MedalError):
    category = "config"
    exit_code = 2


class InvalidSpec(ConfigError):
    pass


class DataError(MedalError):
    category = "data"
    exit_code = 5


class ParseError(DataError):
    pass


class EmptyDataset(DataError):
    pass


class InconsistentDimension(DataError):
    pass
