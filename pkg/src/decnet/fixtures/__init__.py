"""System models shipped with the package and their golden resolution vectors.

Each model is a ``<name>.dn`` file in this directory.  Golden vectors live in
``<name>.golden.json``; each vector names a start name and either the exact
set of resolved names or ``"loop"``.  Vectors marked ``"published"`` restate
walkthroughs of the modelled systems; vectors marked ``"derived"`` are
computed by ``scripts/derive_goldens.py``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..core import Name, NetModel, resolve
from ..dsl import SymbolTable, load
from ..errors import DecnetError, LoopDetected

__all__ = [
    "FIXTURES",
    "FIXTURE_DIR",
    "GoldenResult",
    "GoldenVector",
    "UnknownFixture",
    "fixture_path",
    "fixture_text",
    "load_fixture",
    "load_goldens",
    "run_golden",
]

FIXTURE_DIR = Path(__file__).resolve().parent

# The eight system models, followed by the fuller numbered OMAP variant.
FIXTURES = (
    "omap44xx-mem",
    "omap44xx-irq",
    "desktop-mem",
    "desktop-irq",
    "server-mem",
    "server-irq",
    "cluster",
    "scc",
    "omap44xx-mem-full",
)

LOOP = "loop"


class UnknownFixture(DecnetError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"unknown fixture {self.name!r}; choose from {', '.join(FIXTURES)}"


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise UnknownFixture(name)
    return FIXTURE_DIR / f"{name}.dn"


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


def load_fixture(name: str) -> tuple[NetModel, SymbolTable]:
    return load(fixture_text(name))


@dataclass(frozen=True)
class GoldenVector:
    model: str
    start: tuple[str, int]
    expect: Union[frozenset, str]  # frozenset of (node name, addr) or LOOP
    source: str = "published"
    note: str = ""

    @classmethod
    def from_json(cls, model: str, obj: dict) -> GoldenVector:
        start = (obj["start"]["node"], int(obj["start"]["addr"], 16))
        raw = obj["expect"]
        expect = LOOP if raw == LOOP else frozenset((e["node"], int(e["addr"], 16)) for e in raw)
        return cls(model, start, expect, obj.get("source", "published"), obj.get("note", ""))

    def to_json(self) -> dict:
        if self.expect == LOOP:
            expect = LOOP
        else:
            expect = [{"node": n, "addr": hex(a)} for n, a in sorted(self.expect)]
        out = {"start": {"node": self.start[0], "addr": hex(self.start[1])}, "expect": expect,
               "source": self.source}
        if self.note:
            out["note"] = self.note
        return out


def golden_path(name: str) -> Path:
    fixture_path(name)
    return FIXTURE_DIR / f"{name}.golden.json"


def load_goldens(name: Optional[str] = None) -> list[GoldenVector]:
    """Golden vectors of one fixture, or of every fixture that has any."""
    names = [name] if name is not None else list(FIXTURES)
    out = []
    for model in names:
        path = golden_path(model)
        if not path.exists():
            continue
        data = json.loads(path.read_text(encoding="utf-8"))
        out.extend(GoldenVector.from_json(model, v) for v in data["vectors"])
    return out


@dataclass(frozen=True)
class GoldenResult:
    vector: GoldenVector
    actual: Union[frozenset, str]
    passed: bool
    missing: frozenset = field(default_factory=frozenset)
    unexpected: frozenset = field(default_factory=frozenset)

    def describe(self) -> str:
        v = self.vector
        head = f"{v.model}: ({v.start[0]}, {v.start[1]:#x})"
        if self.passed:
            return f"{head} ok"
        if isinstance(self.actual, str) or isinstance(v.expect, str):
            return f"{head} expected {_show(v.expect)}, got {_show(self.actual)}"
        return f"{head} missing {_show(self.missing)}, unexpected {_show(self.unexpected)}"


def _show(value) -> str:
    if isinstance(value, str):
        return value
    return "{" + ", ".join(f"({n}, {a:#x})" for n, a in sorted(value)) + "}"


def run_golden(vectors: list[GoldenVector]) -> list[GoldenResult]:
    """Resolve every vector against its model and compare exactly."""
    cache: dict[str, tuple[NetModel, SymbolTable]] = {}
    results = []
    for v in vectors:
        if v.model not in cache:
            cache[v.model] = load_fixture(v.model)
        net, table = cache[v.model]
        try:
            got = resolve(net, Name(table.id(v.start[0]), v.start[1]))
            actual = frozenset((table.name(n.node), n.addr) for n in got)
        except LoopDetected:
            actual = LOOP
        if isinstance(actual, str) or isinstance(v.expect, str):
            results.append(GoldenResult(v, actual, actual == v.expect))
        else:
            results.append(GoldenResult(v, actual, actual == v.expect,
                                        v.expect - actual, actual - v.expect))
    return results
