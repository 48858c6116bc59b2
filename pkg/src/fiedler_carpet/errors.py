"""Exception hierarchy shared by the library and the CLI.

The CLI maps each family to an exit code: parse errors to 2, violated
preconditions to 3 and numerical failures to 4.
"""


class CarpetError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ParseError(CarpetError, ValueError):
    """Malformed input text.

    ``offset`` is a 0-based byte offset (graph6) or 1-based line number
    (edge lists, CSV), whichever locates the problem best.
    """

    exit_code = 2

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at {offset})"
        super().__init__(message)


class SelfLoop(ParseError):
    pass


class NegativeEntry(ParseError):
    pass


class DuplicateLabel(ParseError):
    pass


class PreconditionError(CarpetError, ValueError):
    exit_code = 3


class Disconnected(PreconditionError):
    pass


class ZeroDegree(PreconditionError):
    pass


class Degenerate(PreconditionError):
    pass


class RankDeficient(PreconditionError):
    pass


class GapTooSmall(PreconditionError):
    pass


class NotNormalized(PreconditionError):
    pass


class EmptyCluster(PreconditionError):
    pass


class TooLarge(PreconditionError):
    """Exhaustive enumeration refused because the instance is too big."""


class BlockTooLarge(TooLarge):
    pass


class NumericalFailure(CarpetError, ArithmeticError):
    exit_code = 4


class NoRootFound(NumericalFailure):
    """No orientation/cell reached the requested residual.

    The best candidate found is kept on ``best`` so callers can still
    report it.
    """

    def __init__(self, best_residual, best=None):
        self.best_residual = best_residual
        self.best = best
        super().__init__(f"no root within tolerance; best residual {best_residual:.3e}")
