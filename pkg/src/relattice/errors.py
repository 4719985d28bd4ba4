"""Exception hierarchy shared by every relattice module."""

from __future__ import annotations


class LatticeError(Exception):
    """Base class for all relattice errors."""


class InvalidUniverse(LatticeError):
    pass


class UnknownAttribute(LatticeError):
    pass


class AttributeNotInHeader(UnknownAttribute):
    pass


class TupleHeaderMismatch(LatticeError):
    pass


class ValueOutsideDomain(LatticeError):
    pass


class UniverseMismatch(LatticeError):
    pass


class HeaderMismatch(LatticeError):
    pass


class TargetAttributeCollision(LatticeError):
    pass


class DomainMismatch(LatticeError):
    pass


class ArityRestriction(LatticeError):
    """An operation defined only for relations of a fixed arity got another."""


class HeaderNotProperSubset(LatticeError):
    pass


class EmptyDivisorHeader(LatticeError):
    pass


class OverlappingHeaders(LatticeError):
    pass


class ArityMismatch(LatticeError):
    pass


class UnresolvedName(LatticeError):
    pass


class RuleNotApplicable(LatticeError):
    pass


class UniverseTooLarge(LatticeError):
    pass


class ExprSyntaxError(LatticeError):
    """Raised by the expression parser.

    ``offset`` is the byte offset into the source text, ``expected`` the set of
    token kinds that would have been accepted there.
    """

    def __init__(self, text: str, offset: int, expected, found: str):
        self.text = text
        self.offset = offset
        self.expected = frozenset(expected)
        self.found = found
        head = text.encode()[:offset].decode(errors="replace")
        self.line = head.count("\n") + 1
        self.col = len(head) - (head.rfind("\n") + 1) + 1
        want = ", ".join(sorted(self.expected))
        super().__init__(f"{self.line}:{self.col}: expected one of {{{want}}}, found {found}")


class EvaluationError(LatticeError):
    """Wraps an error raised while evaluating the subexpression at ``path``."""

    def __init__(self, path: tuple[int, ...], node_text: str, cause: LatticeError):
        self.path = path
        self.node_text = node_text
        self.cause = cause
        where = "/".join(map(str, path)) or "root"
        super().__init__(f"at {where} ({node_text}): {type(cause).__name__}: {cause}")
