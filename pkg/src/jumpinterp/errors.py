"""Exception hierarchy shared by all modules.

Every failure raised by the library derives from :class:`JumpInterpError` so
the command-line driver can map it to a named diagnostic.
"""


class JumpInterpError(Exception):
    """Base class; ``name`` is the short identifier used in CLI diagnostics."""

    @property
    def name(self) -> str:
        return type(self).__name__


# mesh
class NonConforming(JumpInterpError):
    pass


class DanglingVertex(JumpInterpError):
    pass


class DegenerateSimplex(JumpInterpError):
    pass


class BoundViolated(JumpInterpError):
    pass


class ParseError(JumpInterpError):
    pass


class IndexOutOfRange(JumpInterpError):
    pass


# crack
class NotResolved(JumpInterpError):
    pass


class NotStrictlyEnclosed(JumpInterpError):
    def __init__(self, message: str, element: int | None = None):
        super().__init__(message)
        self.element = element


class OrphanNode(JumpInterpError):
    pass


class DisconnectedBridgeGraph(JumpInterpError):
    pass


# polynomials / interpolant
class SingularMass(JumpInterpError):
    pass


class MissingGammaFace(JumpInterpError):
    pass


class SingularA(JumpInterpError):
    pass


# norms / solver / cli
class MissingGradient(JumpInterpError):
    pass


class InsufficientLevels(JumpInterpError):
    pass


class NonSPD(JumpInterpError):
    pass


class NoConvergence(JumpInterpError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(f"CG stopped after {iterations} iterations, relative residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


class InvalidSpec(JumpInterpError):
    pass
