"""Shared error type for the bridge."""


class BridgeError(ValueError):
    """A bridge job, file, or model interaction violates the bridge contract."""
