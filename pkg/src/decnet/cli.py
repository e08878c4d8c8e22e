"""Command-line front end: ``decnet <command> ...``.

Exit status: 0 success, 1 parse or elaboration error, 2 decoding loop,
3 views differ, 64 usage error, 74 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .core import Dest, MapEntry, Name, NetModel, NodeDesc, compute_ranking, is_in_domain, resolve
from .dsl import SymbolTable, elaborate, format_block, fresh_id, parse, pretty_print, split_spec
from .errors import DecnetError, DslError, LoopDetected, NotInDomain, UndeclaredIdentifier, UnknownNode
from .transforms import Remap, derive_witness_addresses, flatten, view_equiv

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_LOOP = 2
EXIT_DIFFERENT = 3
EXIT_USAGE = 64
EXIT_IO = 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_address(text: str) -> int:
    try:
        value = int(text, 16) if text.lower().startswith("0x") else int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid address {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"negative address {text!r}")
    return value


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(path: str, allow_dangling: bool):
    ast = parse(_read(path))
    net, table = elaborate(ast, allow_dangling)
    return ast, net, table


def _node(table: SymbolTable, text: str) -> int:
    try:
        return table.lookup(text)
    except UndeclaredIdentifier:
        raise UsageError(f"unknown node {text!r}") from None


def _name_str(table: SymbolTable, n: Name) -> str:
    return f"({table.name(n.node)},{n.addr:#x})"


def _cycle_str(table: SymbolTable, cycle) -> str:
    return " → ".join(_name_str(table, n) for n in cycle)


def _sorted_names(names):
    return sorted(names, key=lambda n: (n.node, n.addr))


# --- commands ---------------------------------------------------------------


def cmd_check(args, out, err) -> int:
    _, net, table = _load(args.file, args.allow_dangling)
    witness = sorted(derive_witness_addresses(net))
    looping = []
    for nd in net:
        for addr in witness:
            if not is_in_domain(net, Name(nd, addr)):
                try:
                    resolve(net, Name(nd, addr))
                except LoopDetected as exc:
                    looping.append((nd, addr, exc.cycle))
                break
    if looping:
        for nd, addr, cycle in looping:
            print(f"loop from ({table.name(nd)},{addr:#x}): {_cycle_str(table, cycle)}", file=err)
        return EXIT_LOOP
    print(f"ok: {len(net)} nodes, {len(witness)} witness addresses", file=out)
    return EXIT_OK


def cmd_resolve(args, out, err) -> int:
    _, net, table = _load(args.file, args.allow_dangling)
    start = Name(_node(table, args.node), args.addr)
    try:
        names = resolve(net, start)
    except LoopDetected as exc:
        print(f"decoding loop: {_cycle_str(table, exc.cycle)}", file=err)
        return EXIT_LOOP
    for n in _sorted_names(names):
        print(f"{table.name(n.node)} @ {n.addr:#x}", file=out)
    return EXIT_OK


def cmd_flatten(args, out, err) -> int:
    _, net, table = _load(args.file, args.allow_dangling)
    observers = [_node(table, o) for o in args.observer] if args.observer else list(net)
    for o in observers:
        if o not in net:
            raise UsageError(f"unknown observer {table.name(o)!r}")
    try:
        views = flatten(net, observers)
    except LoopDetected as exc:
        lo, hi = exc.interval
        print(f"decoding loop on [{lo:#x}, {hi:#x}]: {_cycle_str(table, exc.cycle)}", file=err)
        return EXIT_LOOP
    print(json.dumps([v.to_json(table.name) for v in views], indent=2), file=out)
    return EXIT_OK


def cmd_split(args, out, err) -> int:
    ast = parse(_read(args.file))
    elaborate(ast, args.allow_dangling)
    try:
        text = pretty_print(split_spec(ast))
    except ValueError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_PARSE
    if text:
        print(text, file=out)
    return EXIT_OK


def renumber(net: NetModel, remap) -> NetModel:
    """Apply an injective node renaming to the keys and references of ``net``."""
    def dest(d):
        return Dest(remap(d.node), d.base)

    nodes = {}
    for nd, desc in net.items():
        maps = tuple(MapEntry(m.src, tuple(dest(d) for d in m.dests)) for m in desc.maps)
        overlay = None if desc.overlay is None else remap(desc.overlay)
        nodes[remap(nd)] = NodeDesc(desc.accept, maps, overlay)
    return NetModel(nodes, allow_dangling=net.allow_dangling)


def cmd_equiv(args, out, err) -> int:
    left_ast, lnet, ltab = _load(args.left, args.allow_dangling)
    _, rnet, rtab = _load(args.right, args.allow_dangling)

    # Put the right net into the left id space: shared names share ids,
    # other right names get ids past everything used on the left.
    next_id = 1 + max(list(ltab.ids.values()) + list(rtab.ids.values()), default=-1)
    r_to_common = {}
    for name, rid in sorted(rtab.ids.items(), key=lambda kv: kv[1]):
        if name in ltab:
            r_to_common[rid] = ltab.ids[name]
        else:
            r_to_common[rid] = next_id
            next_id += 1
    rnet_c = renumber(rnet, lambda nd: r_to_common.get(nd, nd))
    common_id = {name: r_to_common[rid] for name, rid in rtab.ids.items()}

    name_map = {}
    if args.auto_split_map:
        c = fresh_id(left_ast)
        for name, lid in ltab.ids.items():
            name_map[name] = str(lid + c)
    for item in args.map:
        if "=" not in item:
            raise UsageError(f"--map expects A=B, got {item!r}")
        a, b = item.split("=", 1)
        name_map[a] = b
    overrides = {}
    for a, b in name_map.items():
        if a not in ltab:
            raise UsageError(f"--map: {a!r} is not a node of {args.left}")
        if b not in common_id:
            raise UsageError(f"--map: {b!r} is not a node of {args.right}")
        overrides[ltab.ids[a]] = common_id[b]
    f = Remap(overrides)

    if args.observers:
        obs_names = args.observers
        for o in obs_names:
            if o not in ltab or o not in rtab:
                raise UsageError(f"observer {o!r} must be a node of both nets")
    else:
        obs_names = [n for n in ltab.ids if n in rtab and ltab.ids[n] in lnet]
        if not obs_names:
            raise UsageError("the nets share no node names; name observers with --observers")
    observers = [ltab.ids[o] for o in obs_names]
    witness = derive_witness_addresses(lnet) | derive_witness_addresses(rnet_c)
    report = view_equiv((f, lnet), (Remap(), rnet_c), observers, witness, max_failures=args.max_failures)
    if report.equal:
        print(f"equal: {len(observers)} observers, {len(witness)} witness addresses", file=out)
        return EXIT_OK

    inverse = {v: k for k, v in common_id.items()}

    def show(names):
        if names is None:
            return "loop"
        return "{" + ", ".join(f"({inverse.get(n.node, str(n.node))},{n.addr:#x})"
                               for n in _sorted_names(names)) + "}"

    print("views differ:", file=err)
    for m in report.witnesses:
        print(f"  ({ltab.name(m.observer)},{m.addr:#x}): left {show(m.left)} right {show(m.right)}", file=err)
    return EXIT_DIFFERENT


def cmd_rank(args, out, err) -> int:
    _, net, table = _load(args.file, args.allow_dangling)
    start = Name(_node(table, args.node), args.addr)
    try:
        ranking = compute_ranking(net, start)
    except NotInDomain as exc:
        cycle = exc.loop.cycle if exc.loop is not None else []
        print(f"decoding loop: {_cycle_str(table, cycle)}", file=err)
        return EXIT_LOOP
    doc = {
        "root": {"node": table.name(start.node), "addr": hex(start.addr)},
        "ranks": [
            {"node": table.name(n.node), "addr": hex(n.addr), "rank": ranking[n]}
            for n in _sorted_names(ranking.ranks)
        ],
    }
    print(json.dumps(doc, indent=2), file=out)
    return EXIT_OK


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def cmd_dot(args, out, err) -> int:
    _, net, table = _load(args.file, args.allow_dangling)
    lines = ["digraph decnet {"]
    for nd, desc in net.items():
        label = _dot_id(table.name(nd))
        if desc.accept:
            # Append the accept list after an unescaped DOT line break.
            label = label[:-1] + "\\naccept " + ", ".join(format_block(b) for b in desc.accept) + '"'
        shape = "box" if desc.accept else "ellipse"
        lines.append(f"  {_dot_id(table.name(nd))} [label={label}, shape={shape}];")
    for nd, desc in net.items():
        for m in desc.maps:
            for d in m.dests:
                label = f"{format_block(m.src)} at {d.base:#x}"
                lines.append(f"  {_dot_id(table.name(nd))} -> {_dot_id(table.name(d.node))} [label={_dot_id(label)}];")
        if desc.overlay is not None:
            lines.append(f"  {_dot_id(table.name(nd))} -> {_dot_id(table.name(desc.overlay))} "
                         f"[label=\"over\", style=dashed];")
    lines.append("}")
    print("\n".join(lines), file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--allow-dangling", action="store_true",
                        help="treat undeclared node references as empty nodes")

    ap = _Parser(prog="decnet", description="Decoding-net models of address and interrupt routing.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="validate a model and scan for decoding loops")
    p.add_argument("file")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("resolve", parents=[common], help="resolve one name")
    p.add_argument("file")
    p.add_argument("node")
    p.add_argument("addr", type=parse_address)
    p.set_defaults(run=cmd_resolve)

    p = sub.add_parser("flatten", parents=[common], help="print flat views as JSON")
    p.add_argument("file")
    p.add_argument("--observer", action="append", default=[], metavar="NODE")
    p.set_defaults(run=cmd_flatten)

    p = sub.add_parser("split", parents=[common], help="print the split model")
    p.add_argument("file")
    p.set_defaults(run=cmd_split)

    p = sub.add_parser("equiv", parents=[common], help="compare the views of two models")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--map", action="append", default=[], metavar="A=B",
                   help="rename left node A to right node B before comparing")
    p.add_argument("--observers", nargs="+", metavar="NODE")
    p.add_argument("--auto-split-map", action="store_true",
                   help="map each left node to its acceptor in the output of 'split'")
    p.add_argument("--max-failures", type=int, default=10)
    p.set_defaults(run=cmd_equiv)

    p = sub.add_parser("rank", parents=[common], help="print a ranking witness as JSON")
    p.add_argument("file")
    p.add_argument("node")
    p.add_argument("addr", type=parse_address)
    p.set_defaults(run=cmd_rank)

    p = sub.add_parser("dot", parents=[common], help="print the node graph in DOT format")
    p.add_argument("file")
    p.set_defaults(run=cmd_dot)
    return ap


def main(argv: Optional[list] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.run(args, out, err)
    except (UsageError, UnknownNode) as exc:
        print(f"decnet: {exc}", file=err)
        return EXIT_USAGE
    except OSError as exc:
        print(f"decnet: {exc}", file=err)
        return EXIT_IO
    except (DslError, DecnetError) as exc:
        print(f"decnet: {exc}", file=err)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
