#!/usr/bin/env python3
"""Regenerate the derived golden vectors with a brute-force search.

The search walks the decode relation breadth-first from the start name,
reading node descriptors directly, and keeps the accepted names it meets.
It shares no code with the library's resolver.  A name reached twice along
one path is reported as a loop.

    python scripts/derive_goldens.py           # rewrite derived vectors
    python scripts/derive_goldens.py --check   # exit 1 if any differ
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import deque
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from decnet.dsl import load  # noqa: E402

FIXTURE_DIR = ROOT / "src" / "decnet" / "fixtures"

# (model, start node, start address, note)
QUERIES = [
    ("omap44xx-mem", "MIF", 0x50020000,
     "passes the MIF twice, at 0x50020000 and at 0x55000000"),
    ("omap44xx-mem", "L3", 0x49038000,
     "the L3 window lands in L4 at 0x40138000, which L4 does not map"),
    ("omap44xx-irq", "SDMA", 2,
     "SPIMap adds 32 and the GIC routes 46 to the second A9 interface"),
    ("omap44xx-irq", "SDMA", 0, "vector 12 + 32 reaches the first A9 interface"),
    ("omap44xx-irq", "GPT5_INT", 0, "the DSP controller masks everything; the GIC routes 73 to the first A9 interface"),
    ("desktop-irq", "GFX_INT", 0, "the PCH routes the graphics MSI to vector 41"),
    ("desktop-irq", "NIC_INT", 3, "NIC MSI 3"),
    ("server-irq", "PHI0_RTC", 0, "through the Phi IOAPIC"),
    ("server-irq", "PHI0_SBOX", 0, "the SBOX write reaches TIMER1, which only maps address 0"),
    ("cluster", "M0_IC", 0x380000000000, "the PCI root complex maps the PCI window onto itself"),
    ("cluster", "CX3_0", 0x0, "remote RDMA read reaches the other machine's DRAM"),
    ("scc", "PHYS_00", 0x3000000, "LUT segment onto the local memory buffer"),
    ("scc", "PHYS_01", 0x1000000, "PHYS_01 overlays the first core's LUT"),
    ("scc", "VAS_00", 0x10, "the virtual window only reaches LUT pass-through addresses"),
    ("omap44xx-mem-full", "L3", 0x4A056000, "identity map of the SDMA window onto L3"),
    ("omap44xx-mem-full", "SDMA", 0x80000000, "SDMA reaches RAM directly"),
]


def successors(net, node, addr):
    desc = net.node(node)
    out = set()
    for entry in desc.maps:
        if entry.src.base <= addr <= entry.src.limit:
            for dest in entry.dests:
                out.add((dest.node, dest.base + addr - entry.src.base))
    if desc.overlay is not None:
        out.add((desc.overlay, addr))
    return out


def accepted(net, node, addr):
    return any(b.base <= addr <= b.limit for b in net.node(node).accept)


def brute_force(net, start):
    """Accepted names reachable from ``start``, or None if a loop is reachable."""
    graph = {}
    queue = deque([start])
    while queue:
        name = queue.popleft()
        if name in graph:
            continue
        graph[name] = successors(net, *name)
        queue.extend(graph[name])
    # Any cycle in the reachable graph is reachable from the start.
    colour = {}
    for root in graph:
        if root in colour:
            continue
        stack = [(root, iter(graph[root]))]
        colour[root] = 1
        while stack:
            name, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[name] = 2
                stack.pop()
            elif colour.get(nxt) == 1:
                return None
            elif nxt not in colour:
                colour[nxt] = 1
                stack.append((nxt, iter(graph[nxt])))
    return {n for n in graph if accepted(net, *n)}


def derive(model, node, addr, note):
    net, table = load((FIXTURE_DIR / f"{model}.dn").read_text(encoding="utf-8"))
    names = table.names
    found = brute_force(net, (table.id(node), addr))
    if found is None:
        expect = "loop"
    else:
        expect = [{"node": names[n], "addr": hex(a)} for n, a in sorted(found, key=lambda x: (names[x[0]], x[1]))]
    return {"start": {"node": node, "addr": hex(addr)}, "expect": expect, "source": "derived", "note": note}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="compare instead of rewriting")
    args = ap.parse_args(argv)
    models = sorted({q[0] for q in QUERIES})
    stale = []
    for model in models:
        path = FIXTURE_DIR / f"{model}.golden.json"
        data = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {"model": model, "vectors": []}
        published = [v for v in data["vectors"] if v.get("source") != "derived"]
        derived = [derive(*q) for q in QUERIES if q[0] == model]
        checked_in = [v for v in data["vectors"] if v.get("source") == "derived"]
        if args.check:
            for vec in derived:
                if vec not in checked_in:
                    stale.append((model, vec))
            for vec in checked_in:
                if vec not in derived:
                    stale.append((model, vec))
            continue
        data = {"model": model, "vectors": published + derived}
        path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    if args.check:
        for model, vec in stale:
            print(f"MISMATCH {model}: {json.dumps(vec)}")
        print(f"{len(QUERIES)} derived vectors, {len(stale)} mismatches")
        return 1 if stale else 0
    print(f"wrote {len(QUERIES)} derived vectors across {len(models)} models")
    return 0


if __name__ == "__main__":
    sys.exit(main())
