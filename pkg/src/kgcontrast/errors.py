"""Exception hierarchy. Each class maps to one CLI exit status."""


class KGError(Exception):
    exit_code = 1


class ConfigError(KGError, ValueError):
    exit_code = 2


class DataError(KGError, ValueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class VocabularyError(DataError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NumericError(KGError, FloatingPointError):
    exit_code = 4


class CheckpointError(KGError):
    exit_code = 5
