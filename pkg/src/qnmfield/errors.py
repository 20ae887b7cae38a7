"""Exception types raised across the package."""


class QnmError(Exception):
    """Base class for all package errors."""


class InvalidProfile(QnmError, ValueError):
    """A cavity profile violates one of its invariants."""


class InfiniteDissipation(InvalidProfile):
    """Inside and outside indices coincide, so the cavity has no edge."""


class RootCountMismatch(QnmError):
    """Refined roots disagree with the argument-principle count."""


class NoConvergence(QnmError):
    """An iterative refinement failed to converge."""


class NearPole(QnmError, ZeroDivisionError):
    """Evaluation point sits on (or too close to) a pole."""


class PoleAt(NearPole):
    """A thermal or propagator factor is singular at the requested frequency."""

    def __init__(self, omega, what="pole"):
        self.omega = omega
        super().__init__(f"{what} at omega={omega!r}")


class TailTooLarge(QnmError):
    """A truncated series has a tail estimate above tolerance."""

    def __init__(self, value, tail, tolerance):
        self.value = value
        self.tail = tail
        self.tolerance = tolerance
        super().__init__(f"tail estimate {tail:.3g} exceeds tolerance {tolerance:.3g}")


class GridMismatch(QnmError, ValueError):
    """Two field pairs are not sampled on the same grid."""


class DegeneratePair(QnmError, ZeroDivisionError):
    """The surface commutator denominator omega_j + omega_k vanishes."""
