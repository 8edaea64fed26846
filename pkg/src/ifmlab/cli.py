"""Command-line front end.

Exit codes: 0 success, 1 parse error (including unreadable input), 2
validation error, 3 runtime error such as a zero-probability
post-selection. Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

from . import expformat, scenarios
from .engine import (
    conditional,
    insert_measurement,
    outcome_distribution,
    postselect,
    sample,
)
from .errors import IfmError, ParseError, ValidationError
from .twostate import abl, presence, trace

EXIT_PARSE, EXIT_VALIDATION, EXIT_RUNTIME = 1, 2, 3
ABL_TOLERANCE = 1e-10


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def prob(p: float) -> str:
    return f"{p:.12f}"


def num(x: float) -> str:
    v = f"{x:.12f}"
    return v[1:] if v.startswith("-") and float(v) == 0 else v


def resolve(name: str) -> scenarios.Scenario:
    """Scenario names win over file paths; a ``./`` prefix forces a file."""
    if not name.startswith("./") and name in scenarios.names():
        return scenarios.get(name)
    path = Path(name)
    try:
        doc = expformat.load(path)
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"{name}: cannot read file ({exc.strerror or exc})") from None
    except ParseError as exc:
        raise CliError(EXIT_PARSE, f"{name}:{exc.line}: {exc.kind}: {exc.detail}") from None
    except ValidationError as exc:
        where = f"{name}:{exc.line}" if exc.line else name
        raise CliError(EXIT_VALIDATION, f"{where}: {exc}") from None
    return doc.to_scenario(path.stem)


def write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(buf.getvalue())
    print(f"wrote {len(rows)} rows to {path}")


def print_table(header: list[str], rows: list[list[str]]) -> None:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    for r in [header, *rows]:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())


# --- commands ----------------------------------------------------------------------


def cmd_run(args) -> None:
    sc = resolve(args.input)
    final = sc.final_state()
    det = sc.detectors
    dist = outcome_distribution(final, det)
    post = postselect(final, det, sc.post)[1] if sc.post else None
    if args.csv:
        write_csv(args.csv, ["outcome", "probability"], [[k, prob(v)] for k, v in dist.items()])
        return
    if args.branches:
        rows = []
        for label in det.labels:
            comps = [i for i in sorted(det[label]) if abs(final[i]) > 1e-15]
            for i in comps:
                rows.append([label, sc.basis.element_label(i), num(final[i].real),
                             num(final[i].imag), prob(abs(final[i]) ** 2)])
            if not comps:
                rows.append([label, "-", num(0.0), num(0.0), prob(0.0)])
        print_table(["outcome", "element", "re", "im", "probability"], rows)
    else:
        print_table(["outcome", "probability"], [[k, prob(v)] for k, v in dist.items()])
    if post is not None:
        print(f"post-selected on {sc.post}: probability {prob(post)}")


def cmd_sample(args) -> None:
    if args.shots < 0:
        raise CliError(EXIT_VALIDATION, "--shots must be non-negative")
    sc = resolve(args.input)
    dist = sc.distribution()
    counts = sample(dist, args.shots, args.seed)
    rows = [[k, str(n), prob(n / args.shots if args.shots else 0.0)] for k, n in counts.items()]
    if args.csv:
        write_csv(args.csv, ["outcome", "count", "frequency"], rows)
        return
    print(f"shots {args.shots}  seed {args.seed}")
    print_table(["outcome", "count", "frequency"], rows)


def cmd_trace(args) -> None:
    sc = resolve(args.input)
    post = args.post or sc.post
    if post is None:
        raise CliError(EXIT_VALIDATION, "no post-selection: pass --post")
    if post not in sc.detectors:
        raise CliError(EXIT_VALIDATION, f"unknown outcome {post!r}")
    t = trace(sc.circuit, sc.init, sc.detectors, post)
    rows = []
    for k in range(t.n_boundaries):
        f, b = t.forward[k], t.backward[k]
        for i in range(sc.basis.dim):
            p = presence(t, {i}, k)
            rows.append([str(k), sc.basis.element_label(i), num(f[i].real), num(f[i].imag),
                         num(b[i].real), num(b[i].imag), num(p.real), num(p.imag)])
    header = ["boundary", "mode", "fwd_re", "fwd_im", "bwd_re", "bwd_im", "presence_re", "presence_im"]
    if args.csv:
        write_csv(args.csv, header, rows)
        return
    bridge = t.bridge(0)
    print(f"post-selected on {post}: probability {prob(t.post_probability)}; "
          f"<backward|forward> = {num(bridge.real)}{'+' if bridge.imag >= 0 else '-'}{num(abs(bridge.imag))}i")
    print_table(header, rows)


def parse_partition(spec: str | None, basis) -> dict:
    """``label=spec+spec,label=spec``; uncovered indices become ``rest``."""
    if not spec:
        return {"all": frozenset(range(basis.dim))}
    out = {}
    for group in spec.split(","):
        label, eq, items = group.partition("=")
        label = label.strip()
        if not eq or not label or label in out:
            raise CliError(EXIT_VALIDATION, f"bad partition group {group!r}")
        idx = frozenset()
        for item in items.split("+"):
            try:
                idx |= basis.resolve(item)
            except (KeyError, ValueError):
                raise CliError(EXIT_VALIDATION, f"cannot resolve {item.strip()!r}") from None
        out[label] = idx
    return out


def cmd_abl(args) -> None:
    sc = resolve(args.input)
    post = args.post or sc.post
    if post is None:
        raise CliError(EXIT_VALIDATION, "no post-selection: pass --post")
    if post not in sc.detectors:
        raise CliError(EXIT_VALIDATION, f"unknown outcome {post!r}")
    k = args.boundary if args.boundary is not None else sc.markers.get("meeting", 0)
    if not 0 <= k <= sc.circuit.n_stages:
        raise CliError(EXIT_VALIDATION, f"boundary {k} outside 0..{sc.circuit.n_stages}")
    parts = parse_partition(args.partition, sc.basis)
    det = sc.detectors
    c = sc.circuit
    dist = abl(c.slice(0, k), c.slice(k, c.n_stages), sc.init, parts, det, post)
    branch = conditional(insert_measurement(c, k, parts, sc.init, det), post)
    tol = float(os.environ.get("IFMLAB_TOLERANCE", ABL_TOLERANCE))
    worst = max(abs(dist[a] - branch[a]) for a in dist)
    rows = [[a, prob(dist[a]), prob(branch[a])] for a in dist]
    print(f"post-selected on {post}, measured at boundary {k}")
    print_table(["outcome", "abl", "branch"], rows)
    if worst > tol:
        raise CliError(EXIT_RUNTIME, f"internal error: ABL and branch results differ by {worst:.3e}")


def cmd_zeno(args) -> None:
    if args.nmax < 1:
        raise CliError(EXIT_VALIDATION, "--nmax must be >= 1")
    rows = []
    for n in range(1, args.nmax + 1):
        closed = scenarios.zeno_closed_form(n)
        sim = scenarios.zeno_scenario(n, "live").distribution()["explosion"]
        rows.append([str(n), prob(closed), prob(sim), f"{sim - closed:.3e}"])
    header = ["N", "p_closed", "p_sim", "delta"]
    if args.csv:
        write_csv(args.csv, header, rows)
    else:
        print_table(header, rows)


def cmd_scenario(args) -> None:
    if not args.name:
        for name in scenarios.names():
            sc = scenarios.get(name)
            print(f"{name:18s} {_summary(sc)}")
        return
    if args.name not in scenarios.names():
        raise CliError(EXIT_PARSE, f"unknown scenario {args.name!r}")
    sc = scenarios.get(args.name)
    lines = [f"# scenario {sc.name}"]
    if sc.expected is not None:
        lines += ["# expected:"] + [f"#   {k} {prob(v)}" for k, v in sc.expected.items()]
    lines += [f"# {k}: {v}" for k, v in sc.notes.items()]
    for mark, k in sc.markers.items():
        lines.append(f"# boundary {k}: {mark}")
    print("\n".join(lines))
    print(expformat.serialize(expformat.ExperimentDoc.from_scenario(sc)), end="")


def _summary(sc) -> str:
    return f"dim {sc.basis.dim:3d}, {sc.circuit.n_stages:2d} stages, outcomes {', '.join(sc.detectors)}"


def cmd_validate(args) -> None:
    sc = resolve(args.input)
    print(f"ok: {sc.name}: dim {sc.basis.dim}, {sc.circuit.n_stages} stages, "
          f"{len(sc.detectors)} outcomes")


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _ArgParser(prog="ifmlab", description="Simulate interaction-free measurements.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="outcome probabilities")
    r.add_argument("input", help="scenario name or .exp file")
    r.add_argument("--branches", action="store_true", help="list amplitudes per outcome")
    r.add_argument("--csv", metavar="PATH")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sample", help="seeded single-photon runs")
    s.add_argument("input")
    s.add_argument("--shots", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv", metavar="PATH")
    s.set_defaults(func=cmd_sample)

    t = sub.add_parser("trace", help="forward/backward states and presence overlaps")
    t.add_argument("input")
    t.add_argument("--post", metavar="LABEL")
    t.add_argument("--csv", metavar="PATH")
    t.set_defaults(func=cmd_trace)

    a = sub.add_parser("abl", help="conditional probabilities of an inserted measurement")
    a.add_argument("input")
    a.add_argument("--post", metavar="LABEL")
    a.add_argument("--boundary", type=int)
    a.add_argument("--partition", metavar="SPEC",
                   help="label=spec[+spec],... ; uncovered elements form 'rest'")
    a.set_defaults(func=cmd_abl)

    z = sub.add_parser("zeno", help="explosion probability of the Zeno scheme for N=1..K")
    z.add_argument("--nmax", type=int, default=20)
    z.add_argument("--csv", metavar="PATH")
    z.set_defaults(func=cmd_zeno)

    c = sub.add_parser("scenario", help="list scenarios or print one as an .exp document")
    c.add_argument("name", nargs="?")
    c.set_defaults(func=cmd_scenario)

    v = sub.add_parser("validate", help="parse and validate an experiment")
    v.add_argument("input")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        print(f"ifmlab: {exc}", file=sys.stderr)
        return exc.code
    except ValidationError as exc:
        print(f"ifmlab: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IfmError, ArithmeticError) as exc:
        print(f"ifmlab: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
