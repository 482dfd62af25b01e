"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: unknown keys, bad method ids, bad schedule syntax."""


class UnknownMethodError(ConfigError):
    def __init__(self, method_id):
        super().__init__(f"unknown method id: {method_id!r}")
        self.method_id = method_id


class DataParseError(ValueError):
    """Malformed dataset file. Carries the 1-based line number when known."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class EmptyDatasetError(DataParseError):
    pass


class EmptyStreamError(RuntimeError):
    """A run received a stream with no instances."""


class InfeasibleScheduleError(RuntimeError):
    """A dynamic-imbalance schedule exhausted one class pool."""

    def __init__(self, segment_index, label, emitted):
        super().__init__(
            f"schedule segment {segment_index} infeasible: class {label} "
            f"exhausted after {emitted} emissions"
        )
        self.segment_index = segment_index


class WarmupIncomplete(Exception):
    """Raised while a ratio estimate is undefined (a class not yet observed)."""
