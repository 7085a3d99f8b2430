"""Exception hierarchy. Every error raised on purpose derives from StructDivError."""


class StructDivError(Exception):
    pass


class ConfigError(StructDivError, ValueError):
    pass


class ProgramError(StructDivError, ValueError):
    """A program string could not be tokenized or parsed."""


class UnbalancedQuote(ProgramError):
    pass


class UnbalancedParens(ProgramError):
    pass


class EmptyProgram(ProgramError):
    pass


class ParseFailure(StructDivError):
    def __init__(self, instance_id: str, cause: Exception) -> None:
        super().__init__(f"instance {instance_id!r}: {cause}")
        self.instance_id = instance_id
        self.cause = cause


class MalformedRecord(StructDivError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateId(StructDivError, KeyError):
    def __str__(self) -> str:
        return f"duplicate instance id {self.args[0]!r}"


class UnknownId(StructDivError, KeyError):
    def __str__(self) -> str:
        return f"unknown or already removed instance id {self.args[0]!r}"


class TestTooLarge(StructDivError, ValueError):
    __test__ = False


class UnsatisfiableSplit(StructDivError):
    pass


class EmptyTable(StructDivError, ValueError):
    pass


class EmptySample(StructDivError, ValueError):
    pass


class SampleNotSubsetOfPool(StructDivError, ValueError):
    pass


class DepthExceeded(StructDivError):
    pass
