"""Command line front end: ``lenfun`` and ``geq`` subcommands."""

import argparse
import json
import os
import sys
from pathlib import Path
from xml.sax.saxutils import escape

from . import diagram, elimination, geq, lengths, transform
from .words import Undefined, parse_word

DOMAIN_ERRORS = (
    ValueError,
    KeyError,
    ArithmeticError,
    OSError,
    transform.TransformError,
    elimination.StructureError,
)


class DomainError(Exception):
    pass


def _rank(args, fallback=1):
    if getattr(args, "rank", None):
        return args.rank
    env = os.environ.get("GEQ_RANK")
    return int(env) if env else fallback


def _emit(args, text_lines, data):
    if args.format == "json":
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _load_geq(path, args=None):
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return geq.from_json(text)
    return geq.parse(text, _rank(args) if args is not None and getattr(args, "rank", None) else None)


def _load_solution(path, rank):
    return geq.parse_solution(Path(path).read_text(), rank)


# ---------------------------------------------------------------------------
# lenfun


def _axioms(spec):
    spec = spec.replace(" ", "")
    if ".." in spec:
        a, b = spec.split("..")
        lo, hi = int(a.lstrip("L")), int(b.lstrip("L"))
        return tuple(f"L{k}" for k in range(lo, hi + 1))
    return tuple(x if x.startswith("L") else f"L{x}" for x in spec.split(",") if x)


def cmd_lenfun_check(args):
    rank = _rank(args)
    words = []
    for raw in Path(args.file).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            words.append(parse_word(line, rank))
    sample = lengths.GroupSample(words, args.closure_depth)
    report = lengths.check_axioms(sample, _axioms(args.axioms))
    data = {
        "size": report.size,
        "ok": report.ok,
        "axioms": {k: {"status": r.status, "checked": r.checked, "witness": [str(w) for w in r.witness]}
                   for k, r in report.results.items()},
        "undefined": len(report.undefined),
    }
    _emit(args, [f"sample size {report.size}"] + report.lines(), data)
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------
# geq


def _write_or_print(args, text):
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_build(args):
    p = diagram.parse_presentation(Path(args.file).read_text(), _rank(args) if args.rank else None)
    asm = diagram.build(p)
    if args.format == "json":
        _write_or_print(args, json.dumps(geq.to_json(asm.omega), indent=2, sort_keys=True) + "\n")
    else:
        _write_or_print(args, geq.serialize(asm.omega))
    sol_path = args.solution_out
    if sol_path is None and args.output:
        sol_path = str(Path(args.output).with_suffix(".sol"))
    if sol_path:
        Path(sol_path).write_text(geq.serialize_solution(asm.solution))
    return 0


def cmd_validate(args):
    omega = _load_geq(args.file, args)
    errs = geq.validate(omega)
    _emit(args, errs or ["valid"], {"valid": not errs, "errors": errs})
    return 1 if errs else 0


def cmd_derive(args):
    omega = _load_geq(args.file, args)
    eqs = geq.derive(omega)
    _emit(args, [str(e) for e in eqs],
          [{"kind": e.kind, "left": geq.format_signed(e.left), "right": geq.format_signed(e.right)} for e in eqs])
    return 0


def cmd_present(args):
    omega = _load_geq(args.file, args)
    pres = geq.presentation(omega, reduce=args.reduce)
    free, torsion = pres.abelianization()
    lines = str(pres).splitlines() + [f"abelianization: Z^{free}" + "".join(f" + Z/{t}" for t in torsion)]
    _emit(args, lines, {"generators": len(pres.generators),
                        "relators": [geq.format_signed(r) for r in pres.relators],
                        "free_rank": free, "torsion": list(torsion)})
    return 0


def cmd_verify(args):
    omega = _load_geq(args.file, args)
    sol = _load_solution(args.solution, omega.rank)
    bad = geq.verify_solution(omega, sol)
    _emit(args, ["solution verified" if bad is None else f"violation: {bad}"],
          {"ok": bad is None, "violation": None if bad is None else str(bad)})
    return 0 if bad is None else 1


def cmd_tau(args):
    omega = _load_geq(args.file, args)
    c = geq.complexity(omega)
    lines = [f"tau = {c.tau}"]
    for start, end, active, n in c.per_section:
        lines.append(f"section [{start}, {end}] {'active' if active else 'inactive'}: {n} bases")
    data = {"tau": c.tau, "sections": [{"start": a, "end": e, "active": f, "bases": n} for a, e, f, n in c.per_section]}
    _emit(args, lines, data)
    return 0


def _param(tok):
    try:
        return int(tok)
    except ValueError:
        return tok


def cmd_xform(args):
    omega = _load_geq(args.file, args)
    fn = transform.XFORMS[args.name]
    params = [_param(t) for t in args.params]
    if args.name == "et1":
        if len(params) != 3:
            raise DomainError("et1 takes p base q")
        params = [geq.Connection(*params)]
    sol = _load_solution(args.solution, omega.rank) if args.solution else None
    r = fn(omega, *params, solution=sol)
    text = geq.serialize(r.target)
    if args.output:
        Path(args.output).write_text(text)
        if r.solution is not None:
            Path(args.output).with_suffix(".sol").write_text(geq.serialize_solution(r.solution))
    lines = [r.note]
    if not args.output:
        lines += text.rstrip("\n").splitlines()
    if args.trace:
        lines += r.morphism.lines() if r.morphism is not None else ["(no morphism: loop replaced by kernel)"]
    data = {"note": r.note, "target": geq.to_json(r.target), "steps": r.steps,
            "morphism": r.morphism.lines() if r.morphism is not None else None}
    _emit(args, lines, data)
    return 0


def cmd_eliminate(args):
    omega = _load_geq(args.file, args)
    if not args.solution:
        raise DomainError("eliminate needs --solution to measure lengths")
    sol = _load_solution(args.solution, omega.rank)
    bad = geq.verify_solution(omega, sol)
    if bad is not None:
        raise DomainError(f"the solution does not solve the equation: {bad}")
    if args.max_steps < 1:
        report = elimination.DecompositionReport(False, 0, [], [], geq.LinearSystem(omega.rho), [],
                                                 reason="budget exhausted after 0 steps")
    else:
        report = elimination.run(omega, sol, max_steps=args.max_steps)
    if args.report:
        Path(args.report).write_text(report.to_json() + "\n")
    _emit(args, report.lines(), report.to_dict())
    if not report.complete:
        print("budget exhausted", file=sys.stderr)
        return 1
    return 0


def render_svg(omega, unit=60, row=22):
    """Items on a horizontal interval, bases as labeled bars above it."""
    rho = omega.rho
    margin = 30
    rows = []  # list of lists of (left, right)
    placed = []
    for b in sorted(omega.bases, key=lambda b: (b.left, b.right, b.id)):
        k = 0
        while k < len(rows) and any(b.left < r and l < b.right for l, r in rows[k]):
            k += 1
        if k == len(rows):
            rows.append([])
        rows[k].append((b.left, b.right))
        placed.append((b, k))
    width = 2 * margin + unit * rho
    base_y = margin + row * (len(rows) + 1)
    height = base_y + 50

    def x(p):
        return margin + unit * (p - 1)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">']
    for s in omega.sections:
        fill = "#eef4ff" if s.active else "#f2f2f2"
        out.append(f'<rect x="{x(s.start)}" y="{margin - 10}" width="{x(s.end) - x(s.start)}" '
                   f'height="{base_y - margin + 20}" fill="{fill}" stroke="#99a"/>')
    out.append(f'<line x1="{x(1)}" y1="{base_y}" x2="{x(rho + 1)}" y2="{base_y}" stroke="black" stroke-width="2"/>')
    for p in range(1, rho + 2):
        out.append(f'<line x1="{x(p)}" y1="{base_y - 5}" x2="{x(p)}" y2="{base_y + 5}" stroke="black"/>')
        out.append(f'<text x="{x(p)}" y="{base_y + 18}" text-anchor="middle">{p}</text>')
    for i in range(1, rho + 1):
        out.append(f'<text x="{(x(i) + x(i + 1)) / 2}" y="{base_y - 8}" text-anchor="middle" '
                   f'fill="#555">h{i}</text>')
    for b, k in placed:
        y = base_y - row * (k + 1) - 10
        arrow = "&#8594;" if b.epsilon > 0 else "&#8592;"
        out.append(f'<line x1="{x(b.left) + 3}" y1="{y}" x2="{x(b.right) - 3}" y2="{y}" stroke="#236" '
                   f'stroke-width="3"/>')
        out.append(f'<text x="{(x(b.left) + x(b.right)) / 2}" y="{y - 4}" text-anchor="middle">'
                   f'{escape(b.id)} {arrow}</text>')
    for c in omega.connections:
        out.append(f'<circle cx="{x(c.p)}" cy="{base_y}" r="3" fill="#c33"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_render(args):
    omega = _load_geq(args.file, args)
    _write_or_print(args, render_svg(omega))
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)


def make_parser():
    parser = argparse.ArgumentParser(prog="lambdageq")
    top = parser.add_subparsers(dest="tool", required=True)

    lenfun = top.add_parser("lenfun").add_subparsers(dest="cmd", required=True)
    p = lenfun.add_parser("check")
    _common(p)
    p.add_argument("--axioms", default="L1..L5")
    p.add_argument("--closure-depth", type=int, default=1)
    p.add_argument("file")
    p.set_defaults(func=cmd_lenfun_check)

    g = top.add_parser("geq").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("build")
    _common(p)
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--solution-out")
    p.set_defaults(func=cmd_build)
    for name, func in (("validate", cmd_validate), ("derive", cmd_derive), ("tau", cmd_tau)):
        p = g.add_parser(name)
        _common(p)
        p.add_argument("file")
        p.set_defaults(func=func)
    p = g.add_parser("present")
    _common(p)
    p.add_argument("file")
    p.add_argument("--reduce", action="store_true")
    p.set_defaults(func=cmd_present)
    p = g.add_parser("verify")
    _common(p)
    p.add_argument("file")
    p.add_argument("--solution", required=True)
    p.set_defaults(func=cmd_verify)
    p = g.add_parser("xform")
    _common(p)
    p.add_argument("name", choices=sorted(transform.XFORMS))
    p.add_argument("file")
    p.add_argument("params", nargs="*")
    p.add_argument("--solution")
    p.add_argument("--trace", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_xform)
    p = g.add_parser("eliminate")
    _common(p)
    p.add_argument("file")
    p.add_argument("--solution")
    p.add_argument("--max-steps", type=int, default=10000)
    p.add_argument("--report")
    p.set_defaults(func=cmd_eliminate)
    p = g.add_parser("render")
    _common(p)
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)
    return parser


def dispatch(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (DomainError, geq.InvalidEquation, diagram.EmbeddingError, Undefined) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
