"""Command dispatch over fixture documents with machine-readable reports.

Every command loads one document (a bundled fixture name or a JSON file),
runs one module operation, prints a small human table, and can write the
full report as canonical JSON.  Reports embed the fixture digest and the
complete config, and identical (document, flags, seed) always produce
byte-identical report text.  Exit codes: 0 success, 1 a counterexample or
refusal was found, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import fixtures
from .conetree import (
    classify_element,
    cone_distance,
    coned_ball,
    cone_qi_constants,
    tree_point,
)
from .disintegration import (
    admissible_lattice,
    almost_invariant_partition,
    build_f_a,
    coordinate_hom,
    is_admissible,
    quasi_twist_triples,
)
from .document import DocumentError, ParseResult, digest, parse
from .flaring import verify_general_flaring, verify_special_flaring
from .graphs import GraphError, cyclic_tighten, tighten
from .path_metrics import (
    adjusted_length,
    constants,
    little_lengths,
    mu_nu,
    rho_isolation,
)
from .suspension import build_window, properness_gauge, unit_ball, verify_flaring2
from .trackmap import MapError

__all__ = ["main", "run"]

COMMANDS = (
    "validate",
    "spectrum",
    "tighten",
    "metrics",
    "decompose",
    "cone-dist",
    "classify",
    "flare",
    "flare-special",
    "suspend",
    "disintegrate",
)


class UsageError(ValueError):
    """Bad invocation or unusable input; maps to exit code 2."""


def _plain(x):
    """Recursively strip values down to JSON types; Fractions print exactly."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, bool) or x is None or isinstance(x, (int, float, str)):
        return x
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _parse_word(text: str) -> tuple[int, ...]:
    t = text.strip()
    if not t:
        return ()
    try:
        word = tuple(int(p) for p in t.split(","))
    except ValueError:
        raise UsageError(
            f"cannot parse the edge word {text!r}; want signed ids like 1,-2,3"
        ) from None
    if any(x == 0 for x in word):
        raise UsageError("edge id 0 does not name an edge")
    return word


def _parse_levels(text: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"cannot parse levels {text!r}; want a:b")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"cannot parse levels {text!r}; want integers a:b") from None
    return a, b


def _parse_tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise UsageError(f"cannot parse the tuple {text!r}; want ints like 1,0,2") from None


def _parse_factor(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse the factor {text!r} as a number") from None


def _load(spec: str, strict: bool) -> tuple[str, ParseResult]:
    if spec in fixtures.NAMES:
        return spec, parse(fixtures.load_document(spec), strict=strict)
    path = Path(spec)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {spec}: {exc}") from exc
    return path.stem or spec, parse(text, strict=strict)


# -- command handlers ---------------------------------------------------------
# each returns (results, counterexamples, exit_code)


def _cmd_validate(res: ParseResult, args) -> tuple[dict, list, int]:
    strata = res.rep.strata()
    results = {
        "valid": True,
        "warnings": list(res.warnings),
        "vertices": len(res.rep.graph.vertices),
        "edges": len(res.rep.graph.edge_ids),
        "strata": {str(i): s.kind for i, s in sorted(strata.items())},
        "certified_periodic_path": list(res.rep.nielsen[0]) if res.rep.nielsen else None,
    }
    return results, [], 0


def _cmd_spectrum(res: ParseResult, args) -> tuple[dict, list, int]:
    f = res.rep
    table = {}
    for i, s in sorted(f.strata().items()):
        row = {"kind": s.kind, "edges": list(s.edges)}
        if s.pf is not None:
            row["value"] = s.pf.value
            row["vector"] = [str(v) for v in s.pf.vector]
            row["residual"] = s.pf.residual
        if s.twist_path is not None:
            row["twist_path"] = list(s.twist_path)
            row["twist_coefficient"] = s.twist_coefficient
        table[str(i)] = row
    return {"strata": table}, [], 0


def _require_words(args, least: int = 1) -> list[tuple[int, ...]]:
    words = [_parse_word(w) for w in args.word or []]
    if len(words) < least:
        raise UsageError(
            f"this command needs at least {least} --word argument"
            + ("s" if least > 1 else "")
        )
    return words


def _cmd_tighten(res: ParseResult, args) -> tuple[dict, list, int]:
    g = res.rep.graph
    rows = []
    for word in _require_words(args):
        tight = tighten(g, word)
        row = {"word": list(word), "tight": list(tight.edges)}
        if tight.edges and g.init_of(tight.edges[0]) == g.term_of(tight.edges[-1]):
            row["circuit"] = list(cyclic_tighten(g, tight.edges).edges)
        rows.append(row)
    return {"paths": rows}, [], 0


def _cmd_metrics(res: ParseResult, args) -> tuple[dict, list, int]:
    f = res.rep
    cons = constants(f, seed=args.seed)
    results = {
        "comparison": str(cons.comparison),
        "slack_u": cons.slack_u,
        "slack_pf": str(cons.slack_pf),
        "expansion": [cons.expansion[0], cons.expansion[1]],
        "probe_words": cons.probe_words,
    }
    words = [_parse_word(w) for w in args.word or []]
    counterexamples: list = []
    if words:
        rows = []
        for word in words:
            count, weight = little_lengths(f, word)
            rows.append(
                {
                    "word": list(word),
                    "little_u": count,
                    "little_pf": str(weight),
                    "copies": rho_isolation(f, word).count,
                    "adjusted_u": int(adjusted_length(f, word, "u")),
                    "adjusted_pf": str(adjusted_length(f, word, "pf")),
                }
            )
        results["paths"] = rows
    else:
        # sandwich sweep: adjusted lengths stay within the comparison factor
        from .graphs import random_tight_word
        import random as _random

        mu = _parse_factor(args.mu) if args.mu else cons.comparison
        rng = _random.Random(args.seed)
        checked = 0
        for i in range(args.probe):
            word = random_tight_word(f.graph, 1 + i % 24, rng)
            if not word:
                continue
            lu = Fraction(adjusted_length(f, word, "u"))
            lpf = Fraction(adjusted_length(f, word, "pf"))
            checked += 1
            if not (lpf / mu - 1 <= lu <= mu * lpf + 1):
                counterexamples.append(
                    {"word": list(word), "adjusted_u": str(lu), "adjusted_pf": str(lpf)}
                )
        results["sandwich_factor"] = str(mu)
        results["sandwich_checked"] = checked
    return results, counterexamples, 1 if counterexamples else 0


def _cmd_decompose(res: ParseResult, args) -> tuple[dict, list, int]:
    f = res.rep
    rows = []
    for word in _require_words(args):
        dec = mu_nu(f, word)
        rows.append(
            {
                "word": list(word),
                "mus": [list(m) for m in dec.mus],
                "exponents": list(dec.exponents),
                "copies": dec.copies,
            }
        )
    return {"paths": rows}, [], 0


def _cmd_cone_dist(res: ParseResult, args) -> tuple[dict, list, int]:
    f = res.rep
    words = _require_words(args, 2)
    if len(words) != 2:
        raise UsageError("cone-dist takes exactly two --word arguments")
    x = tree_point(f, words[0])
    y = tree_point(f, words[1])
    route = cone_distance(f, x, y)
    qi = cone_qi_constants(f)
    results = {
        "distance": str(route.d_star),
        "word": list(route.word),
        "bypassed": list(route.bypassed),
        "exponents": list(route.decomposition.exponents),
        "qi_factor": str(qi.k),
        "qi_offset": str(qi.c),
    }
    return results, [], 0


def _cmd_classify(res: ParseResult, args) -> tuple[dict, list, int]:
    f = res.rep
    rows = []
    for word in _require_words(args):
        cls = classify_element(f, word)
        rows.append(
            {
                "word": list(word),
                "kind": cls.kind,
                "circuit": list(cls.circuit.edges),
                "translation": str(cls.translation),
                "growth": [str(v) for v in cls.growth],
            }
        )
    return {"elements": rows}, [], 0


def _flare_counterexamples(report) -> list:
    out = []
    for step in report.per_step:
        if step.worst is not None:
            word, (lo, mid, hi) = step.worst
            out.append(
                {
                    "steps": step.steps,
                    "threshold": step.threshold,
                    "word": list(word),
                    "triple": [str(lo), str(mid), str(hi)],
                }
            )
    return out


def _flare_results(report) -> dict:
    return {
        "passed": report.passed,
        "steps": report.steps,
        "threshold": report.threshold,
        "vacuous": report.vacuous,
        "checked": report.checked,
        "per_step": [
            {
                "steps": s.steps,
                "threshold": s.threshold,
                "vacuous": s.vacuous,
                "support": s.support,
                "violations": s.violations,
            }
            for s in report.per_step
        ],
    }


def _cmd_flare(res: ParseResult, args) -> tuple[dict, list, int]:
    if args.nu is None:
        raise UsageError("flare needs --nu")
    report = verify_general_flaring(
        res.rep,
        _parse_factor(args.nu),
        eta=args.eta,
        max_steps=args.maxN,
        max_threshold=args.threshold,
        probe_len=args.probe,
        seed=args.seed,
    )
    results = _flare_results(report)
    results["eta"] = report.eta
    cx = [] if report.passed else _flare_counterexamples(report)
    return results, cx, 0 if report.passed else 1


def _cmd_flare_special(res: ParseResult, args) -> tuple[dict, list, int]:
    if args.nu is None:
        raise UsageError("flare-special needs --nu")
    report = verify_special_flaring(
        res.rep,
        _parse_factor(args.nu),
        max_steps=args.maxN,
        max_threshold=args.threshold,
        probe_len=args.probe,
        seed=args.seed,
    )
    cx = [] if report.passed else _flare_counterexamples(report)
    return _flare_results(report), cx, 0 if report.passed else 1


def _cmd_suspend(res: ParseResult, args) -> tuple[dict, list, int]:
    f = res.rep
    lo, hi = _parse_levels(args.levels)
    if hi < lo:
        raise UsageError("window levels must satisfy a <= b")
    try:
        ball = coned_ball(f, args.radius)
    except MapError:
        ball = unit_ball(f, args.radius)
    window = build_window(f, ball, lo, hi)
    gauge = properness_gauge(window, seed=args.seed)
    results = {
        "levels": [window.level_lo, window.level_hi],
        "fiber_points": len(window.points) + len(window.lines),
        "cone_points": len(window.lines),
        "vertices": window.vertex_count,
        "horizontal_edges": len(window.horizontal) * window.level_count,
        "vertical_pairs": len(window.vertical),
        "vertical_edges": window.vertical_edge_count,
        "stretch": window.stretch,
        "slack": str(window.slack),
        "properness_gauge": [[b, str(v)] for b, v in gauge],
    }
    counterexamples: list = []
    code = 0
    if args.nu is not None:
        span = hi - lo
        if span == 0 or span % 2:
            raise UsageError("section flaring needs an even, positive level span")
        report = verify_flaring2(
            f,
            _parse_factor(args.nu),
            r=span // 2,
            radius=args.radius,
            levels=(lo, hi),
            seed=args.seed,
        )
        results["flaring"] = {
            "passed": report.passed,
            "threshold": report.threshold,
            "vacuous": report.vacuous,
            "checked": report.checked,
            "support": report.support,
            "violations": report.violations,
        }
        nu = report.nu
        counterexamples = [
            [str(a), str(b), str(c)]
            for a, b, c in report.triples
            if nu * b > max(a, c)
        ][:20]
        code = 0 if report.passed else 1
    return results, counterexamples, code


def _cmd_disintegrate(res: ParseResult, args) -> tuple[dict, list, int]:
    f = res.rep
    part = almost_invariant_partition(f)
    lat = admissible_lattice(f)
    results = {
        "vertices": list(part.vertices),
        "relation": [list(e) for e in part.relation],
        "blocks": [
            {"strata": list(s), "edges": list(c)}
            for s, c in zip(part.strata, part.components)
        ],
        "triples": [
            {
                "block": t.r,
                "edges": [t.ei, t.ej],
                "coefficients": [t.di, t.dj],
                "homes": [t.s, t.t],
            }
            for t in quasi_twist_triples(f)
        ],
        "lattice": {
            "relations": [list(r) for r in lat.relations],
            "basis": [list(b) for b in lat.basis],
        },
    }
    counterexamples: list = []
    code = 0
    if args.tuple is not None:
        a = _parse_tuple(args.tuple)
        if len(a) != part.size:
            raise UsageError(
                f"the tuple has {len(a)} entries but the map has {part.size} blocks"
            )
        ok, violated = is_admissible(f, a)
        results["tuple"] = list(a)
        results["admissible"] = ok
        if ok:
            vec = coordinate_hom(f, a)
            results["omega"] = [[i, v] for i, v in vec.omega]
            results["differences"] = [
                [list(pair), v] for pair, v in vec.differences
            ]
            results["in_semigroup"] = lat.in_semigroup(a)
            if lat.in_semigroup(a):
                results["edge_images"] = {
                    str(e): list(w) for e, w in build_f_a(f, a).edge_image.items()
                }
        else:
            counterexamples.append(
                {
                    "block": violated.r,
                    "edges": [violated.ei, violated.ej],
                    "coefficients": [violated.di, violated.dj],
                    "homes": [violated.s, violated.t],
                }
            )
            code = 1
    return results, counterexamples, code


_HANDLERS = {
    "validate": _cmd_validate,
    "spectrum": _cmd_spectrum,
    "tighten": _cmd_tighten,
    "metrics": _cmd_metrics,
    "decompose": _cmd_decompose,
    "cone-dist": _cmd_cone_dist,
    "classify": _cmd_classify,
    "flare": _cmd_flare,
    "flare-special": _cmd_flare_special,
    "suspend": _cmd_suspend,
    "disintegrate": _cmd_disintegrate,
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ttlab",
        description="Run one operation of the lab on a fixture document.",
    )
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("fixture", help="bundled fixture name or path to a JSON document")
        p.add_argument("--json-out", metavar="PATH", help="write the full report as JSON")
        p.add_argument("--seed", type=int, default=11, help="probe seed (default 11)")
        mode = p.add_mutually_exclusive_group()
        mode.add_argument(
            "--strict", dest="strict", action="store_true", default=True,
            help="reject unknown document keys (default)",
        )
        mode.add_argument(
            "--lenient", dest="strict", action="store_false",
            help="downgrade unknown document keys to warnings",
        )

    def words(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--word", action="append", metavar="IDS",
            help="edge word as signed comma-separated ids; repeatable",
        )

    p = sub.add_parser("validate", help="parse and validate a document")
    common(p)
    p = sub.add_parser("spectrum", help="per-stratum taxonomy and expansion data")
    common(p)
    p = sub.add_parser("tighten", help="tighten edge words")
    common(p)
    words(p)
    p = sub.add_parser("metrics", help="length calculus: constants, or per-word table")
    common(p)
    words(p)
    p.add_argument("--probe", type=int, default=200, help="sandwich sweep size (default 200)")
    p.add_argument("--mu", metavar="Q", help="override the comparison factor for the sweep")
    p = sub.add_parser("decompose", help="alternating periodic-path decomposition")
    common(p)
    words(p)
    p = sub.add_parser("cone-dist", help="electrified distance between two tree words")
    common(p)
    words(p)
    p = sub.add_parser("classify", help="dynamics of conjugacy classes on the coned tree")
    common(p)
    words(p)
    for name, help_text in (
        ("flare", "pseudo-orbit flaring search"),
        ("flare-special", "exact-orbit flaring search"),
    ):
        p = sub.add_parser(name, help=help_text)
        common(p)
        p.add_argument("--nu", metavar="Q", help="flaring factor (> 1), e.g. 1.2 or 6/5")
        if name == "flare":
            p.add_argument("--eta", type=int, default=0, help="pseudo-orbit slack (default 0)")
        p.add_argument("--maxN", type=int, default=6, help="largest step count tried (default 6)")
        p.add_argument("--threshold", type=int, default=40, help="largest threshold allowed (default 40)")
        p.add_argument("--probe", type=int, default=6, help="exhaustive probe word length (default 6)")
    p = sub.add_parser("suspend", help="layered window over a ball, with the properness gauge")
    common(p)
    p.add_argument("--radius", type=int, default=6, help="ball radius (default 6)")
    p.add_argument("--levels", default="0:2", metavar="A:B", help="level window (default 0:2)")
    p.add_argument("--nu", metavar="Q", help="also run the section flaring search at this factor")
    p = sub.add_parser("disintegrate", help="blocks, twisting relations, and the power lattice")
    common(p)
    p.add_argument("--tuple", metavar="I,J,K", help="tuple of per-block powers to check")
    return ap


def _print_table(report: dict, stream) -> None:
    print(f"command: {report['command']}", file=stream)
    fx = report["fixture"]
    print(f"fixture: {fx['name']} ({(fx['digest'] or 'no digest')[:12]})", file=stream)
    for key, value in report["config"].items():
        print(f"config.{key}: {value}", file=stream)
    for key, value in report["results"].items():
        text = json.dumps(_plain(value), sort_keys=True) if isinstance(value, (dict, list)) else value
        print(f"{key}: {text}", file=stream)
    n = len(report["counterexamples"])
    if n:
        print(f"counterexamples: {n} (first: {json.dumps(report['counterexamples'][0], sort_keys=True)})", file=stream)


def run(argv: Sequence[str] | None = None) -> int:
    """Dispatch one command; returns the exit code."""
    args = _build_parser().parse_args(argv)
    command = args.command
    try:
        name, res = _load(args.fixture, args.strict)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DocumentError as exc:
        if command == "validate":
            report = {
                "command": command,
                "config": {"strict": args.strict},
                "counterexamples": list(exc.diagnostics),
                "fixture": {"name": args.fixture, "digest": None},
                "results": {"valid": False},
            }
            _emit(report, args)
            return 1
        print(f"error: invalid document: {exc}", file=sys.stderr)
        return 2

    config = {"seed": args.seed, "strict": args.strict}
    for key in ("probe", "mu", "nu", "eta", "maxN", "threshold", "radius", "levels", "tuple", "word"):
        if hasattr(args, key) and getattr(args, key) is not None:
            config[key] = getattr(args, key)
    try:
        results, counterexamples, code = _HANDLERS[command](res, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GraphError, MapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    report = {
        "command": command,
        "config": _plain(config),
        "counterexamples": _plain(counterexamples),
        "fixture": {"name": name, "digest": digest(res.document)},
        "results": _plain(results),
    }
    _emit(report, args)
    return code


def _emit(report: dict, args) -> None:
    _print_table(report, sys.stdout)
    text = json.dumps(report, sort_keys=True, separators=(",", ":"))
    if args.json_out:
        Path(args.json_out).write_text(text + "\n", encoding="utf-8")
        print(f"report: {args.json_out}")
    else:
        print(text)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
