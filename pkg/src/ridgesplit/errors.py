"""Exception types raised across the package."""


class RidgeSplitError(ValueError):
    pass


class InvalidDimensionError(RidgeSplitError):
    pass


class NotPositiveDefiniteError(RidgeSplitError):
    pass


class SingularDesignError(RidgeSplitError):
    pass


class InvalidSplitError(RidgeSplitError):
    pass


class DegenerateMomentError(RidgeSplitError):
    pass


class NoValidSplitError(RidgeSplitError):
    pass


class ConfigError(RidgeSplitError):
    pass
