"""Exception types shared by the library and the CLI.

Every error carries the process exit code the CLI reports for it:
1 for bad input, 2 for failed verification, 3 for report I/O.
"""


class AcbmError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InputError(AcbmError):
    exit_code = 1


class JacobiError(InputError):
    pass


class ClassificationError(InputError):
    pass


class FamilyViolationError(InputError):
    pass


class NormalizationError(InputError):
    pass


class OracleError(AcbmError):
    exit_code = 2


class VerificationFailure(AcbmError):
    exit_code = 2


class ReportIOError(AcbmError):
    exit_code = 3
