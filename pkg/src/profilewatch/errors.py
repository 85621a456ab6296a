"""Exception types raised across the toolkit."""


class ProfileWatchError(Exception):
    """Base class for all toolkit errors."""


class UnparseableUrl(ProfileWatchError, ValueError):
    """A URL string is not a parseable absolute URL."""


class StreamTooShort(ProfileWatchError):
    """Training stream has fewer messages than the minimum stream length."""

    def __init__(self, account_id: str, length: int, minimum: int):
        super().__init__(
            f"account {account_id!r}: {length} messages, need at least {minimum}"
        )
        self.account_id = account_id
        self.length = length
        self.minimum = minimum


class ProfileNotFound(ProfileWatchError, KeyError):
    """No stored profile exists for an account."""

    def __str__(self) -> str:
        return f"no stored profile for account {self.args[0]!r}"


class CorruptProfile(ProfileWatchError):
    """A stored profile document failed to parse or verify."""


class ProfileMissing(ProfileWatchError):
    """A message cannot be scored because its account has no profile."""


class ConfigError(ProfileWatchError, ValueError):
    """Invalid configuration document."""


class SimulationSpecError(ProfileWatchError, ValueError):
    """Invalid simulation spec; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
