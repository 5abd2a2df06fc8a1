"""Exception types shared across the toolkit.

InputDataError covers everything a caller can fix by fixing their files
(exit code 1 in the CLI); all other failures are runtime errors (exit 2).
"""


class SensekitError(Exception):
    pass


class InputDataError(SensekitError):
    """Malformed or contract-violating input files."""


class GenerationError(SensekitError):
    """Definition generation failed after retries."""

    def __init__(self, message, novel_sense_id=None):
        super().__init__(message)
        self.novel_sense_id = novel_sense_id
