"""Exception hierarchy shared by every lomatch module."""


class LomatchError(Exception):
    """Base class for all errors raised by this package."""

    module = "lomatch"


class RecordFormatError(LomatchError, ValueError):
    """A record file line could not be parsed."""

    module = "records"

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class DuplicateIdError(LomatchError, ValueError):
    module = "records"

    def __init__(self, record_id: str, line_no: int | None = None):
        self.record_id = record_id
        self.line_no = line_no
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate record id {record_id!r}{where}")


class UnknownIdError(LomatchError, KeyError):
    module = "records"

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown id"


class EmptyRepositoryError(LomatchError, ValueError):
    module = "records"


class SchemaMismatchError(LomatchError, ValueError):
    """Feature dimension or schema id does not match the model."""

    module = "features"


class EmptyClusterError(LomatchError, ValueError):
    """A label/cluster group has no members or no membership mass."""

    module = "matcher"


class ColdStartError(LomatchError, ValueError):
    """The user has no usable rating signal."""

    module = "recommender"


class FoldError(LomatchError, ValueError):
    """Cross-validation folds cannot be built for the given labels."""

    module = "evaluation"
