"""Command line front end.

Subcommands: ``enumerate``, ``check``, ``decompose`` and ``represent``.  All
write JSON (sorted keys) to stdout or ``-o``.  Exit codes: 0 success, 2 input
or contract error, 3 unsupported rendering, 4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from importlib import resources
from fractions import Fraction

from .graphs import MarkedGraph, QuasiStableGraph, canonical_form, classify, graph_from_json, is_simple, named_graph
from .moduli import build_poset, check_graded, enumerate_category, expected_length
from .stability import (
    Divisor,
    canonical_phi,
    check_semistable,
    is_break_divisor,
    is_general,
    load_phi,
    zero_phi,
)
from .tropical import (
    MetricDivisor,
    MetricGraph,
    build_jacobian_complex,
    stable_representative,
)

EXIT_OK, EXIT_INPUT, EXIT_RENDER, EXIT_INTERNAL = 0, 2, 3, 4
COMMANDS = ("enumerate", "check", "decompose", "represent")


def load_schema(command: str) -> dict:
    """JSON schema shipped for the output of ``command``."""
    if command not in COMMANDS:
        raise ValueError(f"no schema for {command!r}")
    res = resources.files("tropijac") / "schemas" / f"{command}.schema.json"
    return json.loads(res.read_text())


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT, payload=None):
        super().__init__(message)
        self.code = code
        self.payload = payload


# ----------------------------------------------------------------- inputs


def _load_json_arg(text: str):
    """Inline JSON or a path to a JSON file."""
    s = text.strip()
    if s[:1] in "[{":
        return json.loads(s)
    with open(text) as fh:
        return json.load(fh)


def load_graph(arg: str):
    """``builtin:NAME`` or a JSON graph file; returns ``(graph, vertex_ids, edge_ids)``."""
    if arg is None:
        raise CliError("--graph is required")
    if arg.startswith("builtin:"):
        G = named_graph(arg.split(":", 1)[1])
        return G, list(range(G.n_vertices)), list(range(G.n_edges))
    return graph_from_json(_load_json_arg(arg))


def resolve_phi(args, g: int, n: int, default_degree=None):
    choice = args.phi or "canonical"
    if choice == "zero":
        return zero_phi(g, n)
    if choice == "canonical":
        d = args.d if args.d is not None else default_degree
        if d is None:
            raise CliError("canonical stability condition needs -d")
        return canonical_phi(g, n, d)
    if choice.startswith("file:"):
        phi = load_phi(_load_json_arg(choice[5:]))
        if phi.type != (g, n):
            raise CliError(f"stability table has type {phi.type}, expected {(g, n)}")
        return phi
    raise CliError(f"unknown --phi {choice!r}")


def load_lengths(arg, G: MarkedGraph, edge_ids):
    if arg is None:
        return [Fraction(1)] * G.n_edges
    obj = _load_json_arg(arg)
    if isinstance(obj, list):
        if len(obj) != G.n_edges:
            raise CliError("length list must have one entry per edge")
        return [Fraction(x) for x in obj]
    lookup = {str(e): i for i, e in enumerate(edge_ids)}
    out = [None] * G.n_edges
    for k, x in obj.items():
        if str(k) not in lookup:
            raise CliError(f"unknown edge id {k!r}")
        out[lookup[str(k)]] = Fraction(x)
    if any(x is None for x in out):
        raise CliError("lengths missing for some edges")
    return out


def _q(x) -> str:
    return str(Fraction(x))


# --------------------------------------------------------------- commands


def cmd_enumerate(args) -> dict:
    g, n = args.g, args.n
    variant = args.variant
    phi = None
    window = None
    if variant == "qd-phi":
        phi = resolve_phi(args, g, n)
    elif variant in ("qd", "qd-spl") and args.d is None:
        window = (0, 2 * g - 2)
    inst = enumerate_category(variant, g, n, d=None if variant == "qd-phi" else args.d,
                              phi=phi, window=window)
    out = inst.to_json()
    graded, length = check_graded(build_poset(inst))
    expected = expected_length(variant, g, n)
    applies = True
    if variant == "qd-phi":
        verdict = is_general(phi)
        out["phi"] = {"name": phi.name, "degree": phi.degree, "general": verdict.general}
        applies = verdict.general
    if window is not None:
        # lengths are taken per degree component
        per = {}
        for d in range(window[0], window[1] + 1):
            comp = enumerate_category(variant, g, n, d=d)
            per[str(d)] = check_graded(build_poset(comp))[1]
        out["component_lengths"] = per
        length_checked = set(per.values()) == {expected}
    else:
        length_checked = length == expected
    out["report"] = {"length": length, "graded": graded,
                     "expected": expected if applies else None,
                     "formula_holds": length_checked if applies else None,
                     "n_objects": len(inst)}
    if args.assert_lengths:
        if not applies:
            raise CliError("length formula needs a general stability condition", EXIT_INPUT, out)
        if not (graded and length_checked):
            raise CliError(f"poset length {length} differs from {expected}", EXIT_INTERNAL, out)
    return out


def _divisor_arg(arg, vids):
    if arg is None:
        raise CliError("--divisor is required")
    obj = _load_json_arg(arg)
    if isinstance(obj, list):
        return Divisor(obj)
    return Divisor.from_json(obj, vids)


def cmd_check(args) -> dict:
    G, vids, _ = load_graph(args.graph)
    c = classify(G)
    if not c.is_quasi_stable:
        raise CliError(f"graph is not quasi-stable: {c.reason}")
    Q = QuasiStableGraph.from_graph(G)
    D = _divisor_arg(args.divisor, vids)
    if len(D) != G.n_vertices:
        raise CliError("divisor does not match the graph")
    g, n = G.type
    phi = resolve_phi(args, g, n, default_degree=D.degree)
    v = check_semistable(Q, D, phi)
    out = {"graph": canonical_form(G), "type": [g, n],
           "phi": {"name": phi.name, "degree": phi.degree},
           "divisor": D.to_json(vids), "simple": is_simple(Q)}
    out.update(v.to_json(vids))
    if n == 0:
        b = is_break_divisor(Q, D)
        out["break"] = b.is_break
        out["break_witness"] = None if not b.is_break else {
            "tree": list(b.tree), "assignment": {str(e): vids[w] for e, w in sorted(b.assignment.items())}}
    else:
        out["break"] = None
        out["break_witness"] = None
    return out


def _metric_from_args(args):
    G, vids, eids = load_graph(args.graph)
    c = classify(G)
    if c.kind != "stable":
        raise CliError(f"graph must be stable ({c.reason or c.kind})")
    lengths = load_lengths(args.lengths, G, eids)
    try:
        M = MetricGraph(G, lengths)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    g, n = G.type
    phi = resolve_phi(args, g, n, default_degree=g)
    return M, vids, eids, phi


def _torus_samples(cx, M, count, seed) -> dict:
    rng = random.Random(seed)
    counts = {}
    for _ in range(count):
        u = [Fraction(rng.randrange(10 ** 6), 10 ** 6) for _ in range(M.b1)]
        y = [sum((a * b for a, b in zip(row, u)), Fraction(0)) for row in M.gram]
        k = len(cx.preimages(y))
        counts[str(k)] = counts.get(str(k), 0) + 1
    return {"samples": count, "seed": seed, "preimage_counts": counts}


def render_svg(cx, M) -> str:
    """Fundamental domain of ``R^2 / M Z^2`` with the cells drawn in it."""
    if M.b1 != 2:
        raise CliError(f"SVG needs b1 = 2 (got {M.b1})", EXIT_RENDER)
    G = M.gram
    Minv = M.gram_inverse

    def reduce_shift(pt):
        z = [sum((a * b for a, b in zip(row, pt)), Fraction(0)) for row in Minv]
        k = [int(x // 1) for x in z]
        return [sum(G[i][j] * k[j] for j in range(2)) for i in range(2)]

    corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    dom = [[sum(G[i][j] * c[j] for j in range(2)) for i in range(2)] for c in corners]
    xs = [float(p[0]) for p in dom]
    ys = [float(p[1]) for p in dom]
    pad = 0.15 * max(max(xs) - min(xs), max(ys) - min(ys))
    x0, y0 = min(xs) - pad, min(ys) - pad
    w, h = max(xs) - min(xs) + 2 * pad, max(ys) - min(ys) + 2 * pad
    scale = 400.0 / max(w, h)

    def sx(p):
        return f"{(float(p[0]) - x0) * scale:.3f},{(h - (float(p[1]) - y0)) * scale:.3f}"

    def label(cell):
        terms = [(x, f"v{v}") for v, x in enumerate(cell.values) if x]
        terms += [(1, f"p{e}") for e in cell.T]
        if not terms:
            return "0"
        out = ""
        for x, name in terms:
            coef = "" if abs(x) == 1 else str(abs(x))
            out += ("-" if x < 0 else ("+" if out else "")) + coef + name
        return out

    def placed(cell, pts):
        cx_, cy_ = sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts)
        s = reduce_shift([cx_, cy_])
        return [[p[0] - s[0], p[1] - s[1]] for p in pts]

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * scale:.0f}" height="{h * scale:.0f}">',
             f'<polygon class="domain" points="{" ".join(sx(p) for p in dom)}" fill="none" stroke="#888" stroke-dasharray="4"/>']
    cells = sorted(cx.cells, key=lambda c: -c.dim)
    for cell in cells:
        off, lin = cx.chart(cell.index)
        if cell.dim == 2:
            box = [(0, 0), (cell.box[0], 0), (cell.box[0], cell.box[1]), (0, cell.box[1])]
        elif cell.dim == 1:
            box = [(0,), (cell.box[0],)]
        else:
            box = [()]
        pts = [[off[i] + sum((lin[i][j] * b[j] for j in range(cell.dim)), Fraction(0)) for i in range(2)]
               for b in box]
        pts = placed(cell, pts)
        mid = [sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts)]
        if cell.dim == 2:
            lines.append(f'<polygon class="cell2" id="cell{cell.index}" points="{" ".join(sx(p) for p in pts)}" '
                         f'fill="#cde" fill-opacity="0.6" stroke="none"/>')
            lines.append(f'<text class="label2" x="{sx(mid).split(",")[0]}" y="{sx(mid).split(",")[1]}" '
                         f'font-size="12" text-anchor="middle">{label(cell)}</text>')
        elif cell.dim == 1:
            a, b = sx(pts[0]).split(","), sx(pts[1]).split(",")
            lines.append(f'<line class="cell1" id="cell{cell.index}" x1="{a[0]}" y1="{a[1]}" x2="{b[0]}" y2="{b[1]}" '
                         f'stroke="#246" stroke-width="2"/>')
        else:
            p = sx(pts[0]).split(",")
            lines.append(f'<circle class="cell0" id="cell{cell.index}" cx="{p[0]}" cy="{p[1]}" r="4" fill="#a22"/>')
            lines.append(f'<text class="label0" x="{p[0]}" y="{p[1]}" dy="-8" font-size="11" '
                         f'text-anchor="middle">{label(cell)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_decompose(args) -> tuple:
    M, vids, eids, phi = _metric_from_args(args)
    verdict = is_general(phi)
    cx = build_jacobian_complex(M, phi)
    out = cx.to_json()
    out["vertex_ids"] = list(vids)
    out["edge_ids"] = list(eids)
    out["phi"] = {"name": phi.name, "degree": phi.degree, "general": verdict.general}
    if not verdict.general:
        out["phi"]["witness"] = {"graph": canonical_form(verdict.graph.graph),
                                 "subset": list(verdict.subset)}
    bad = cx.check_gluing()
    if bad:
        raise CliError(f"{len(bad)} face charts disagree", EXIT_INTERNAL, out)
    if args.samples:
        if not verdict.general:
            raise CliError("torus sampling needs a general stability condition", EXIT_INPUT, out)
        out["tiling"] = _torus_samples(cx, M, args.samples, args.seed)
        if set(out["tiling"]["preimage_counts"]) != {"1"}:
            raise CliError("sampled torus point without a unique preimage", EXIT_INTERNAL, out)
    svg = None
    if args.svg is not None:
        if not verdict.general:
            raise CliError("refusing to draw a non-general decomposition", EXIT_INPUT, out)
        if M.b1 != 2:
            raise CliError(f"SVG needs b1 = 2 (got {M.b1})", EXIT_RENDER, out)
        svg = render_svg(cx, M)
    return out, svg


def _divisor_to_user(D: MetricDivisor, M: MetricGraph, vids, eids) -> list:
    out = []
    for p, c in D.terms:
        if p.edge is None:
            out.append({"vertex": vids[p.vertex], "coeff": c})
        else:
            t = M.lengths[p.edge] - p.offset if p.edge in M.flipped else p.offset
            out.append({"edge": eids[p.edge], "offset_num": t.numerator,
                        "offset_den": t.denominator, "coeff": c})
    return out


def _divisor_from_user(items, M: MetricGraph, vids, eids) -> MetricDivisor:
    vlook = {str(v): i for i, v in enumerate(vids)}
    elook = {str(e): i for i, e in enumerate(eids)}
    terms = []
    for it in items:
        c = int(it.get("coeff", 1))
        if "vertex" in it:
            if str(it["vertex"]) not in vlook:
                raise CliError(f"unknown vertex id {it['vertex']!r}")
            terms.append((M.vertex(vlook[str(it["vertex"])]), c))
            continue
        if str(it.get("edge")) not in elook:
            raise CliError(f"unknown edge id {it.get('edge')!r}")
        e = elook[str(it["edge"])]
        t = Fraction(int(it["offset_num"]), int(it.get("offset_den", 1)))
        if e in M.flipped:
            t = M.lengths[e] - t
        try:
            terms.append((M.point(e, t), c))
        except ValueError as exc:
            raise CliError(str(exc)) from None
    return MetricDivisor.from_terms(terms)


def cmd_represent(args) -> dict:
    M, vids, eids, phi = _metric_from_args(args)
    if args.divisor is None:
        raise CliError("--divisor is required")
    obj = _load_json_arg(args.divisor)
    items = obj["realized"] if isinstance(obj, dict) and "realized" in obj else obj
    if not isinstance(items, list):
        raise CliError("metric divisor must be a list of terms")
    D0 = _divisor_from_user(items, M, vids, eids)
    verdict = is_general(phi)
    if not verdict.general:
        raise CliError("stability condition is not general; representatives are not unique",
                       EXIT_INPUT, {"witness": {"graph": canonical_form(verdict.graph.graph),
                                                "subset": list(verdict.subset)}})
    if D0.degree != phi.degree:
        raise CliError(f"divisor degree {D0.degree} != {phi.degree}")
    cx = build_jacobian_complex(M, phi)
    rep = stable_representative(M, phi, D0, complex=cx)
    cell = cx.cells[rep.cell]
    coords = []
    for e, t in zip(cell.T, rep.coords):
        coords.append(_q(M.lengths[e] - t if e in M.flipped else t))
    return {"cell": rep.cell, "subdivided": [eids[e] for e in cell.T],
            "cell_divisor": {str(vids[v]): x for v, x in enumerate(cell.values)},
            "coords": coords, "phi": {"name": phi.name, "degree": phi.degree},
            "realized": _divisor_to_user(rep.divisor, M, vids, eids)}


# ------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tropijac", description="Quasi-stable graphs, stability conditions and tropical Jacobians.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-g", type=int, help="genus")
        sp.add_argument("-n", type=int, default=0, help="number of marked legs")
        sp.add_argument("-d", type=int, help="degree")
        sp.add_argument("--phi", help="canonical | zero | file:PATH")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("-o", dest="output", help="write JSON here instead of stdout")

    e = sub.add_parser("enumerate", help="enumerate a category and report its poset")
    common(e)
    e.add_argument("--variant", choices=["sg", "qsg", "qd", "qd-spl", "qd-phi"], default="sg")
    e.add_argument("--assert-lengths", action="store_true")

    c = sub.add_parser("check", help="admissibility, (semi)stability and break check")
    common(c)
    c.add_argument("--graph", required=True, help="PATH or builtin:NAME")
    c.add_argument("--divisor", required=True, help="PATH or inline JSON")

    d = sub.add_parser("decompose", help="Jacobian complex of a metric graph")
    common(d)
    d.add_argument("--graph", required=True)
    d.add_argument("--lengths")
    d.add_argument("--svg", nargs="?", const="-", default=None, metavar="PATH")
    d.add_argument("--samples", type=int, default=0)

    r = sub.add_parser("represent", help="stable representative of a divisor class")
    common(r)
    r.add_argument("--graph", required=True)
    r.add_argument("--lengths")
    r.add_argument("--divisor", required=True)
    return p


def _emit(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    svg = None
    try:
        if args.command == "enumerate":
            if args.g is None:
                raise CliError("-g is required")
            out = cmd_enumerate(args)
        elif args.command == "check":
            out = cmd_check(args)
        elif args.command == "decompose":
            out, svg = cmd_decompose(args)
        else:
            out = cmd_represent(args)
    except CliError as exc:
        if exc.payload is not None:
            _emit(exc.payload, getattr(args, "output", None))
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    _emit(out, args.output)
    if svg is not None:
        if args.svg == "-":
            sys.stdout.write(svg)
        else:
            with open(args.svg, "w") as fh:
                fh.write(svg)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
