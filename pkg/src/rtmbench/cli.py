"""Command-line entry point.

Exit codes: 0 success (or related), 1 a negative verdict (invalid, not
related, inconclusive, violation found), 2 usage, IO or parse errors.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import redirect_stderr, redirect_stdout
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

from .atoms import TermError, format_term
from .bisim import branching_bisim, dp_branching_bisim
from .compilers import CompilationReport, compile_lts_to_rtminf, compile_ltsa_to_rtma, verify_roundtrip
from .demos import DEMOS
from .lts import (FiniteLts, LtsFormatError, bounded_reach, check_k_supported, emit_aut,
                  parse_aut, parse_ltsa, sample_transitions)
from .orbitsets import support_violation
from .pi import (PiSyntaxError, canonical_state, effective_ltsa_of, free_names, is_transition,
                 parse_pi_with_names, pretty, sos_step_canonical)
from .rtm import Rtm, RtmFormatError, config_lts, emit_rtm, parse_rtm, validate
from .rtm_atoms import RtmA, RtmaFormatError, config_lts_canonical, emit_rtma, parse_rtma, validate_rtma

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2

_PARSE_ERRORS = (OSError, UnicodeDecodeError, TermError, LtsFormatError, RtmFormatError, RtmaFormatError,
                 PiSyntaxError, ValueError)


class CliError(Exception):
    pass


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _kind(path: str) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix not in ("aut", "ltsa", "rtm", "rtma", "pi"):
        raise CliError(f"{path}: cannot tell the file kind from the extension (use .aut .ltsa .rtm .rtma .pi)")
    return suffix


def _load(path: str):
    kind = _kind(path)
    text = _read(path)
    if kind == "aut":
        return parse_aut(text)
    if kind == "ltsa":
        return parse_ltsa(text)
    if kind == "rtm":
        return parse_rtm(text)
    if kind == "rtma":
        return parse_rtma(text)
    return parse_pi_with_names(text.strip())


def _plot(g: FiniteLts, target: Optional[str], stem: str, out: TextIO, title: str) -> None:
    if not target:
        return
    from .plotting import plot_lts

    path = Path(target)
    if path.suffix.lower() != ".png":
        path.mkdir(parents=True, exist_ok=True)
        path = path / f"{stem}.png"
    plot_lts(g, path, title)
    out.write(f"figure: {path}\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args, out: TextIO) -> int:
    obj = _load(args.file)
    kind = _kind(args.file)
    if kind == "rtm":
        v = validate(obj)
        problems = v.problems
    elif kind == "rtma":
        problems = validate_rtma(obj).problems
    elif kind == "ltsa":
        sv = check_k_supported(obj)
        problems = () if sv.ok else (str(sv),)
    else:
        problems = ()
    if problems:
        for p in problems:
            out.write(f"problem: {p}\n")
        out.write("invalid\n")
        return EXIT_NEGATIVE
    out.write("valid\n")
    return EXIT_OK


def _graph_of(obj, kind: str, depth: Optional[int]) -> FiniteLts:
    if kind == "aut":
        return obj
    if kind == "rtm":
        return config_lts(obj, depth)
    if kind == "rtma":
        return config_lts_canonical(obj, depth)
    if kind == "ltsa":
        if depth is None:
            raise CliError("--depth is required for systems with atoms")
        return bounded_reach(obj, depth)
    if depth is None:
        raise CliError("--depth is required for π-terms")
    return bounded_reach(effective_ltsa_of(obj.process), depth)


def _write_graph(g: FiniteLts, fmt: str, out: TextIO) -> None:
    if fmt == "aut":
        out.write(emit_aut(g))
        return
    out.write(f"states: {g.num_states}\ntransitions: {len(g.transitions)}\n")
    for s in g.states:
        mark = " (cut)" if s in g.frontier else ""
        out.write(f"state {s}: {g.name(s)}{mark}\n")
    for s, a, t in g.transitions:
        out.write(f"{s} --{a}--> {t}\n")


def cmd_lts(args, out: TextIO) -> int:
    kind = _kind(args.file)
    g = _graph_of(_load(args.file), kind, args.depth)
    _write_graph(g, args.format, out)
    _plot(g, args.plot, Path(args.file).stem, out, f"{Path(args.file).name}, depth {args.depth}")
    return EXIT_NEGATIVE if g.truncated else EXIT_OK


def cmd_bisim(args, out: TextIO) -> int:
    l1, l2 = parse_aut(_read(args.a)), parse_aut(_read(args.b))
    v = (dp_branching_bisim if args.mode == "dpbb" else branching_bisim)(l1, l2)
    out.write(f"mode: {args.mode}\nverdict: {'related' if v.related else 'not related'}\n")
    if v.related:
        out.write(f"witness-pairs: {len(v.witness)}\n")
    elif v.distinguishing:
        (p, q), a = v.distinguishing
        out.write(f"distinguishing: states {p} and {q} differ on {a}\n")
    return EXIT_OK if v.related else EXIT_NEGATIVE


def _report(rep: CompilationReport, args, out: TextIO, stem: str) -> int:
    out.write(rep.to_text())
    gs, gm = rep.graphs
    if gs is not None:
        _plot(gs, args.plot, f"{stem}-source", out, f"source, {gs.num_states} states")
    if gm is not None:
        _plot(gm, args.plot, f"{stem}-machine", out, f"machine, {gm.num_states} configurations")
    return EXIT_OK if rep.related else EXIT_NEGATIVE


def _save(path: str, text: str, out: TextIO) -> None:
    Path(path).write_text(text, encoding="utf-8")
    out.write(f"wrote: {path}\n")


def _rtma_text(m: RtmA) -> str:
    note = ("# Gadget schemas of a compiled machine.  The enumeration and stage",
            "# bookkeeping run as host macros and are not part of this file.")
    return emit_rtma(replace(m, comments=note))


def cmd_compile(args, out: TextIO) -> int:
    kind = _kind(args.file)
    src = _load(args.file)
    stem = Path(args.file).stem
    if args.target == "rtm-inf":
        if kind not in ("aut", "ltsa"):
            raise CliError("compile rtm-inf takes a .aut or .ltsa file")
        m = compile_lts_to_rtminf(src)
        if isinstance(m, Rtm):
            if args.out:
                _save(args.out, emit_rtm(m), out)
            elif not args.verify:
                out.write(emit_rtm(m))
        elif args.out:
            raise CliError("a source with atoms compiles to an infinitary machine, which has no file form")
    else:
        if kind != "ltsa":
            raise CliError("compile rtma takes a .ltsa file")
        if src.labels is None:
            out.write("note: no label declarations; using the projected transition labels\n")
        m = compile_ltsa_to_rtma(src)
        if args.out:
            _save(args.out, _rtma_text(m), out)
        if not args.verify:
            out.write(f"machine: rtm with atoms, support {len(m.support)}, {len(m.schemas)} schemas "
                      "plus the enumeration macros\n")
    if not args.verify:
        return EXIT_OK
    if kind == "ltsa" and args.depth is None:
        raise CliError("--verify on a system with atoms needs --depth")
    rep = verify_roundtrip(src, m, None if kind == "aut" else args.depth, args.mode)
    return _report(rep, args, out, stem)


def _pi_source(args):
    text = _read(args.file).strip()
    return parse_pi_with_names(text)


def cmd_pi(args, out: TextIO) -> int:
    parsed = _pi_source(args)
    p = parsed.process
    if args.pi_cmd == "lts":
        g = bounded_reach(effective_ltsa_of(p), args.depth)
        _write_graph(g, args.format, out)
        _plot(g, args.plot, Path(args.file).stem, out, pretty(p, parsed.names))
        return EXIT_OK
    out.write(f"term: {pretty(p, parsed.names)}\n")
    l = effective_ltsa_of(p)
    m = compile_ltsa_to_rtma(l)
    if not args.verify:
        out.write(f"machine: rtm with atoms, support {len(m.support)}, {len(m.schemas)} schemas "
                  "plus the enumeration macros\n")
        return EXIT_OK
    rep = verify_roundtrip(l, m, args.depth, args.mode)
    return _report(rep, args, out, Path(args.file).stem)


def pi_transition_sample(p, depth: int, max_states: int = 200) -> List[tuple]:
    """Concrete transitions of the α-classes reachable within ``depth``."""
    k = free_names(p)
    layer, seen = [canonical_state(p, k)], {canonical_state(p, k)}
    sample = []
    for _ in range(depth + 1):
        nxt = []
        for s in layer:
            for a, t in sos_step_canonical(s, k):
                sample.append((s, a, t))
                c = canonical_state(t, k)
                if c not in seen and len(seen) < max_states:
                    seen.add(c)
                    nxt.append(c)
        layer = nxt
    return sample


def cmd_support_check(args, out: TextIO) -> int:
    kind = _kind(args.file)
    obj = _load(args.file)
    if kind == "ltsa":
        sv = check_k_supported(obj)
        out.write(f"descriptor check: {sv}\n")
        sample = sample_transitions(obj, args.depth)
        member = lambda t: t in obj.transition_space
        k = obj.support
    elif kind == "pi":
        sv = None
        p = obj.process
        sample = pi_transition_sample(p, args.depth)
        member = lambda t: is_transition(*t)
        k = free_names(p)
    else:
        raise CliError("support-check takes a .ltsa or .pi file")
    out.write("support: {" + ", ".join(format_term(a) for a in sorted(k, key=int)) + "}\n")
    out.write(f"sampled transitions: {len(sample)}\nbudget: {args.budget}\n")
    cert = support_violation(sample, member, k, args.budget)
    if cert is None:
        out.write("certificate: none found\n")
        return EXIT_OK if sv is None or sv.ok else EXIT_NEGATIVE
    pm, t = cert
    out.write(f"certificate: {pm} moves {format_term(t)} out of the set\n")
    return EXIT_NEGATIVE


def cmd_demo(args, out: TextIO) -> int:
    out.write(DEMOS[args.name]())
    if args.plot and args.name == "infinite-alphabet":
        from .demos import infinite_alphabet_ltsa

        _plot(bounded_reach(infinite_alphabet_ltsa(), 2), args.plot, "infinite-alphabet", out, "orbit quotient")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rtmbench", description="Reactive Turing machines with atoms.")
    sub = ap.add_subparsers(dest="command", required=True)

    def plot_flag(p):
        p.add_argument("--plot", metavar="PATH", help="render graphs as PNG (a directory or a .png path)")

    p = sub.add_parser("validate", help="parse and check a .aut/.ltsa/.rtm/.rtma/.pi file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("lts", help="print the (bounded) transition graph of a file")
    p.add_argument("file")
    p.add_argument("--depth", type=int)
    p.add_argument("--format", choices=("aut", "text"), default="aut")
    plot_flag(p)
    p.set_defaults(func=cmd_lts)

    p = sub.add_parser("bisim", help="compare two .aut files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--mode", choices=("bb", "dpbb"), default="bb")
    p.set_defaults(func=cmd_bisim)

    p = sub.add_parser("compile", help="compile a transition system to a machine")
    p.add_argument("target", choices=("rtm-inf", "rtma"))
    p.add_argument("file")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--depth", type=int)
    p.add_argument("--mode", choices=("bb", "dpbb"), default=None)
    p.add_argument("--out", metavar="FILE", help="write the machine as .rtm (finite sources) or .rtma text")
    plot_flag(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("pi", help="π-calculus terms")
    pisub = p.add_subparsers(dest="pi_cmd", required=True)
    q = pisub.add_parser("lts", help="bounded reachable graph of α-classes")
    q.add_argument("file")
    q.add_argument("--depth", type=int, required=True)
    q.add_argument("--format", choices=("aut", "text"), default="aut")
    plot_flag(q)
    q.set_defaults(func=cmd_pi)
    q = pisub.add_parser("compile", help="compile to a machine with atoms")
    q.add_argument("file")
    q.add_argument("--depth", type=int, required=True)
    q.add_argument("--verify", action="store_true")
    q.add_argument("--mode", choices=("bb", "dpbb"), default="bb")
    plot_flag(q)
    q.set_defaults(func=cmd_pi)

    p = sub.add_parser("support-check", help="search for a transposition that breaks the declared support")
    p.add_argument("file")
    p.add_argument("--budget", type=int, default=8)
    p.add_argument("--depth", type=int, default=3, help="exploration depth for the transition sample")
    p.set_defaults(func=cmd_support_check)

    p = sub.add_parser("demo", help="scripted examples")
    p.add_argument("name", choices=sorted(DEMOS))
    plot_flag(p)
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    ap = build_parser()
    try:
        with redirect_stderr(err), redirect_stdout(out):
            args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    if getattr(args, "command", None) == "compile" and args.mode is None:
        args.mode = "dpbb" if args.target == "rtm-inf" else "bb"
    try:
        code = args.func(args, out)
    except CliError as e:
        err.write(f"rtmbench: {e}\n")
        return EXIT_ERROR
    except _PARSE_ERRORS as e:
        err.write(f"rtmbench: {type(e).__name__}: {e}\n")
        return EXIT_ERROR
    return code


if __name__ == "__main__":
    sys.exit(main())
