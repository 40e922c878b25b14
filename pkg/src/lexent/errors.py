class DataError(ValueError):
    """Malformed or inconsistent input data."""


class ScorerError(DataError):
    """The external scorer failed or violated the wire protocol."""
