"""Exception types shared across the toolkit."""


class BearingNetError(Exception):
    """Base class for all toolkit errors."""


class InputError(BearingNetError, ValueError):
    """Malformed arguments, files, or request payloads."""


class CollocationError(BearingNetError):
    """Two adjacent nodes are (numerically) at the same point; bearings undefined."""


class NotLocalizableError(BearingNetError):
    """The follower block of the bearing Laplacian is singular."""


class SingularProjectionSumError(BearingNetError):
    """A follower's aggregate projection matrix is singular (all desired
    bearings at that follower are collinear)."""

    def __init__(self, follower: int):
        self.follower = follower
        super().__init__(
            f"aggregate projection matrix of follower {follower} is singular"
        )
