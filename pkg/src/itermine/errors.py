"""Exception hierarchy. Each error knows the pipeline stage that raised it."""


class IterMineError(Exception):
    stage = "analysis"


class IngestError(IterMineError):
    stage = "ingest"


class UnreadableFile(IngestError):
    pass


class TraceFormatError(IngestError):
    pass


class MissingColumn(IngestError):
    def __init__(self, name: str):
        super().__init__(f"required column {name!r} not found in header")
        self.name = name


class TooManyBadRows(IngestError):
    def __init__(self, skipped: int, total: int):
        super().__init__(
            f"{skipped} of {total} data rows could not be parsed; "
            "the file does not look like a GPU-trace CSV export"
        )
        self.skipped = skipped
        self.total = total


class ClassifyError(IterMineError):
    stage = "classify"


class EmptyTrace(ClassifyError):
    pass


class NoMainStream(ClassifyError):
    pass


class EmptyMainStream(ClassifyError):
    pass


class MiningError(IterMineError):
    stage = "mine"


class InvalidIterationCount(MiningError):
    pass


class NoPatternFound(MiningError):
    def __init__(self, message: str, loop: int | None = None):
        super().__init__(message)
        self.loop = loop


class AmbiguousLoops(MiningError):
    pass


class NoIterations(IterMineError):
    stage = "metrics"


class InvalidConfig(IterMineError, ValueError):
    stage = "config"


class OutputError(IterMineError):
    stage = "render"
