"""Exception types shared across the package."""

from __future__ import annotations


class DecnetError(Exception):
    """Base class for all errors raised by decnet."""


class UnknownNode(DecnetError, KeyError):
    def __init__(self, node):
        self.node = node
        super().__init__(node)

    def __str__(self):
        return f"unknown node {self.node!r}"


class DanglingReference(DecnetError, ValueError):
    """A map destination or overlay names a node that is not in the net."""

    def __init__(self, source, target):
        self.source = source
        self.target = target
        super().__init__(f"node {source} references missing node {target}")


class LoopDetected(DecnetError):
    """Resolution from a name revisits a name already on the current path.

    ``cycle`` lists the names from the first occurrence of the repeated name
    up to and including its second occurrence.
    """

    def __init__(self, cycle, interval=None):
        self.cycle = list(cycle)
        self.interval = interval
        super().__init__(self._describe())

    def _describe(self):
        path = " -> ".join(f"({n.node},{n.addr:#x})" for n in self.cycle)
        if self.interval is not None:
            lo, hi = self.interval
            return f"decoding loop on [{lo:#x}, {hi:#x}]: {path}"
        return f"decoding loop: {path}"


class NotInDomain(DecnetError):
    """A name (or address) lies outside the resolution domain."""

    def __init__(self, name, loop=None):
        self.name = name
        self.loop = loop
        super().__init__(f"{name} is not in the resolution domain")


class NotFresh(DecnetError, ValueError):
    pass


class DslError(DecnetError):
    """Base class for errors in concrete syntax handling."""


class DslSyntaxError(DslError):
    def __init__(self, message, line, column, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        self.message = message
        super().__init__(self._describe())

    def _describe(self):
        text = f"{self.line}:{self.column}: {self.message}"
        if self.expected:
            text += f" (expected one of: {', '.join(self.expected)})"
        return text


class UndeclaredIdentifier(DslError):
    def __init__(self, name, line=None, column=None):
        self.name = name
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}undeclared node identifier {name!r}")


class InvalidBlock(DslError, ValueError):
    def __init__(self, base, limit, line=None, column=None):
        self.base = base
        self.limit = limit
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}block base {base:#x} exceeds limit {limit:#x}")
