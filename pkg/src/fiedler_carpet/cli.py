"""``carpet`` command-line entry point."""

from __future__ import annotations

import argparse
import sys

from . import __version__, pipeline
from .errors import CarpetError


def _values(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="carpet", description="Spectral clustering with the Fiedler carpet.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("input", help="file path, or g6:<graph6 string>")
        sp.add_argument("--kind", choices=("graph", "table"), default=None)
        sp.add_argument("--out", metavar="DIR", default=None, help="write report.json and SVG files here")
        sp.add_argument("--format", choices=("json", "text"), default="text")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("spectrum", help="eigenvalues of a graph or singular values of a table")
    common(sp)
    sp.add_argument("--top", type=int, default=None)

    sp = sub.add_parser("select-k", help="choose the cluster count from a spectral gap")
    sp.add_argument("input", nargs="?", default=None)
    common(sp, needs_input=False)
    sp.add_argument("--values", type=_values, default=None, help="comma separated singular values")

    sp = sub.add_parser("ca", help="correspondence analysis and bi-clustering of a table")
    common(sp)
    sp.add_argument("--k", type=int, default=None)

    sp = sub.add_parser("carpet", help="root of the carpet map and the variance bound")
    common(sp)
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--tol", type=float, default=1e-8)

    sp = sub.add_parser("cluster", help="weighted k-means on the spectral embedding")
    common(sp)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--clusters", type=int, default=None)
    return p


def _text(rep):
    cmd = rep["command"]
    if cmd in ("spectrum", "select-k"):
        lines = [rep["text"]]
        for row in rep.get("gap_table") or []:
            lines.append(f"  gap after {row['j']}: {row['gap']:.5f}")
        return "\n".join(lines)
    if cmd == "ca":
        lines = [f"k = {rep['k']}", "singular values: " + pipeline.fmt5(rep["singular_values"])]
        for side in ("row_clusters", "col_clusters"):
            lines.append(side.replace("_", " ") + ":")
            for c in rep[side]:
                lines.append(f"  {c['cluster']}: " + ", ".join(c["members"]))
        mib = rep["most_independent_block"]
        lines.append(f"most independent block: rows {mib['row_cluster']} x cols {mib['col_cluster']}")
        lines.append(f"md = {rep['discrepancy']['md']:.6g} ({'exact' if rep['discrepancy']['exact'] else 'lower bound'})")
        return "\n".join(lines)
    if cmd == "carpet":
        r = rep["root"]
        return "\n".join(
            [
                f"k = {rep['k']}, clusters = {rep['clusters']}",
                f"bound = {rep['bound']:.6g}, achieved = {rep['achieved']:.6g}, holds = {rep['holds']}",
                "root = (" + ", ".join(f"{v:.5f}" for v in r["a_star"]) + f"), residual = {r['residual']:.3g}",
                f"orientation = {tuple(r['orientation'])}, sigma^2(y) = {r['sigma_sq']:.6g}",
            ]
        )
    lines = [f"S^2 = {rep['variance']:.6g}, normalized cut = {rep['normalized_cut']:.6g}"]
    for c in rep["memberships"]:
        lines.append(f"  {c['cluster']}: " + ", ".join(c["members"]))
    return "\n".join(lines)


def run(args):
    if args.command == "select-k" and args.values is not None:
        return pipeline.run_select_k(values=args.values)
    if args.input is None:
        raise CarpetError("an input is required")
    inp = pipeline.load_input(args.input, args.kind)
    if args.command == "spectrum":
        return pipeline.run_spectrum(inp, top=args.top)
    if args.command == "select-k":
        return pipeline.run_select_k(inp)
    if args.command == "ca":
        return pipeline.run_ca(inp, k=args.k, seed=args.seed)
    if args.command == "carpet":
        return pipeline.run_carpet(inp, k=args.k, tol=args.tol, seed=args.seed)
    return pipeline.run_cluster(inp, k=args.k, clusters=args.clusters, seed=args.seed)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rep, files = run(args)
    except CarpetError as exc:
        print(f"carpet: error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.out:
        pipeline.save_outputs(args.out, rep, files)
    if args.format == "json":
        sys.stdout.write(pipeline.dumps(rep))
    else:
        print(_text(rep))
    if rep["command"] == "carpet" and not rep["root"]["found"]:
        print(f"carpet: error: no root with residual <= {args.tol}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
