"""Common exception base for the package.

Every typed error raised by febvp inherits from FebvpError so callers (and the
CLI) can catch the whole family without enumerating modules.
"""


class FebvpError(Exception):
    """Base class for all febvp errors.

    Attributes:
        context: dict with machine-readable details (set by subclasses).
    """

    code = "error"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context
