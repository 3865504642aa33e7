"""Batch command-line interface: describe, detect, cluster, pipeline, plot, fixture."""
from __future__ import annotations

import argparse
import contextlib
import json
import os
import re
import sys
import tempfile
from pathlib import Path

import numpy as np

from .dataset import Dataset, DatasetError, RowSelection, dump_csv, iris, iris_outlier_fixture, load_csv
from .kmeans import DistanceMeasure, KMeansConfig, KMeansError, KMeansResult, kmeans
from .pipeline import PipelineConfig, Verdict, run_pipeline
from .plot import PlotSpec, render_svg
from .univariate import describe, flag_outliers, zscores

EXIT_OK = 0
EXIT_ERROR = 2


class CliError(Exception):
    pass


# ---------------------------------------------------------------- formatting


def spss_number(value: float, decimals: int) -> str:
    """Fixed decimals with the leading zero dropped, e.g. 0.89193 -> '.89193'."""
    text = f"{value:.{decimals}f}"
    if text.startswith("0."):
        return text[1:]
    if text.startswith("-0."):
        return "-" + text[2:]
    return text


def format_describe(name: str, stats) -> str:
    header = ("", "N", "Minimum", "Maximum", "Mean", "Std. Deviation")
    row = (
        name,
        str(stats.n),
        spss_number(stats.minimum, 2),
        spss_number(stats.maximum, 2),
        spss_number(stats.mean, 4),
        spss_number(stats.std_dev, 5),
    )
    label_w = max(len("Valid N (listwise)"), len(name))
    widths = [label_w] + [max(len(h), len(v)) for h, v in zip(header[1:], row[1:])]

    def line(cells):
        return "  ".join(
            c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths))
        ).rstrip()

    lines = ["Descriptive Statistics", line(header), line(row)]
    lines.append(line(("Valid N (listwise)", str(stats.n))))
    return "\n".join(lines)


def format_trace(result: KMeansResult, show_table: bool = True) -> str:
    """Render a clustering run like an interactive k-means session log."""
    lines = []
    if show_table:
        lines.append(f"{'iter':>6}{'phase':>7}{'num':>8}{'sum':>14}")
        for t in result.best.trace:
            lines.append(f"{t.iter:>6d}{t.phase:>7d}{t.num:>8d}{t.sum:>14.6g}")
    for it, s in zip(result.all_iterations, result.all_sums):
        lines.append(f"{it} iterations, total sum of distances = {s:.6g}")
    lines.append("ans =")
    lines.append("")
    lines.append(f"  {result.best.total_sum:.4f}")
    return "\n".join(lines) + "\n"


_TRACE_ROW = re.compile(r"^\s*(\d+)\s+([12])\s+(\d+)\s+(\S+)\s*$")
_REPLICATE_LINE = re.compile(r"^(\d+) iterations, total sum of distances = (\S+)$")


def parse_trace(text: str) -> dict:
    """Inverse of :func:`format_trace` (at printed precision)."""
    rows, replicates, best = [], [], None
    lines = text.splitlines()
    for pos, raw in enumerate(lines):
        line = raw.strip()
        if m := _TRACE_ROW.match(raw):
            rows.append(
                {"iter": int(m[1]), "phase": int(m[2]), "num": int(m[3]), "sum": float(m[4])}
            )
        elif m := _REPLICATE_LINE.match(line):
            replicates.append({"iterations": int(m[1]), "sum": float(m[2])})
        elif line == "ans =":
            for follow in lines[pos + 1:]:
                if follow.strip():
                    best = float(follow)
                    break
    if best is None:
        raise ValueError("no 'ans =' value found in trace output")
    return {"trace": rows, "replicates": replicates, "best": best}


def format_detect_table(ds: Dataset, variables, report, sort: str) -> str:
    scores = {v: zscores(ds, v).scores for v in variables}
    first = scores[variables[0]]
    if sort == "desc":
        order = np.argsort(-first, kind="stable")
    elif sort == "asc":
        order = np.argsort(first, kind="stable")
    else:
        order = np.arange(ds.n)
    header = ["row", *ds.columns, *(f"Z{v}" for v in variables), "flag"]
    body = []
    for i in order:
        cells = [str(int(i))]
        cells += [f"{v:.2f}" for v in ds.values[i]]
        cells += [f"{scores[v][i]:.5f}" for v in variables]
        cells.append("*" if int(i) in report.union else "")
        body.append(cells)
    widths = [max(len(header[j]), *(len(r[j]) for r in body)) for j in range(len(header))]
    out = ["  ".join(h.rjust(w) for h, w in zip(header, widths)).rstrip()]
    out += ["  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in body]
    out.append(
        f"threshold |z| >= {report.criterion.threshold:g} (n={report.criterion.sample_size}); "
        f"flagged rows: {', '.join(map(str, report.union)) or 'none'}"
    )
    return "\n".join(out) + "\n"


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------- arguments


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _columns(text: str) -> list[str]:
    cols = [c.strip() for c in text.split(",") if c.strip()]
    if not cols:
        raise argparse.ArgumentTypeError("empty column list")
    return cols


def _add_kmeans_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=_positive_int, default=3)
    p.add_argument(
        "--distance",
        default="sqeuclidean",
        help="sqeuclidean, cityblock, cosine, correlation or hamming",
    )
    p.add_argument("--replicates", type=_positive_int, default=11)
    p.add_argument("--max-iterations", type=_positive_int, default=100)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--no-online", action="store_true", help="skip the online refinement phase")


def _kmeans_config(args) -> KMeansConfig:
    return KMeansConfig(
        k=args.k,
        measure=DistanceMeasure.parse(args.distance),
        replicates=args.replicates,
        max_iterations=args.max_iterations,
        seed=args.seed,
        online_phase=not args.no_online,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="outlier-gate",
        description="Univariate z-score outlier gating for k-means clustering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", help="descriptive statistics of one column")
    p.add_argument("--input", required=True)
    p.add_argument("--column", required=True)

    p = sub.add_parser("detect", help="z-scores and univariate outlier flags")
    p.add_argument("--input", required=True)
    p.add_argument("--columns", type=_columns, default=None, help="comma-separated; default all")
    p.add_argument("--threshold", type=float, default=None, help="override the |z| cutoff")
    p.add_argument("--sort", choices=("desc", "asc", "none"), default="none")
    p.add_argument("--format", choices=("table", "json"), default="table")

    p = sub.add_parser("cluster", help="k-means with replicates")
    p.add_argument("--input", required=True)
    _add_kmeans_args(p)
    p.add_argument("--trace", action="store_true", help="print the best replicate's iteration log")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("pipeline", help="flag, cluster with and without, decide removal")
    p.add_argument("--input", required=True)
    p.add_argument("--columns", type=_columns, default=None)
    p.add_argument("--threshold", type=float, default=None)
    _add_kmeans_args(p)
    p.add_argument("--cleaned-output", default=None)
    p.add_argument("--report", default=None)

    p = sub.add_parser("plot", help="SVG scatter plot of two columns")
    p.add_argument("--input", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--highlight", type=str, default=None, help="comma-separated row indices")
    p.add_argument(
        "--highlight-from", default=None, help="detect or pipeline JSON report; uses its union"
    )
    p.add_argument(
        "--assignments", default=None, help="cluster JSON output or a JSON list of cluster ids"
    )
    p.add_argument("--width", type=_positive_int, default=640)
    p.add_argument("--height", type=_positive_int, default=480)
    p.add_argument("--output", required=True)

    p = sub.add_parser("fixture", help="write the Iris data set (with the outlier by default)")
    p.add_argument("--plain", action="store_true", help="plain 150-row Iris without the outlier")
    p.add_argument("--output", default=None, help="file path; standard output if omitted")

    return parser


# ---------------------------------------------------------------- commands


def _load(path: str) -> tuple[Dataset, bytes]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    return load_csv(raw), raw


def _write_atomically(outputs: dict[str, bytes]) -> None:
    """Write every file or none of them."""
    staged = []
    try:
        for path, payload in outputs.items():
            directory = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
            staged.append((tmp, path))
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
        for tmp, path in staged:
            os.replace(tmp, path)
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise CliError(f"cannot write output: {exc}") from None


def cmd_describe(args, out) -> int:
    ds, _ = _load(args.input)
    out.write(format_describe(args.column, describe(ds, args.column)) + "\n")
    return EXIT_OK


def cmd_detect(args, out) -> int:
    ds, _ = _load(args.input)
    variables = args.columns or list(ds.columns)
    report = flag_outliers(ds, variables, args.threshold)
    if args.format == "json":
        out.write(dumps(report.to_dict()))
    else:
        out.write(format_detect_table(ds, variables, report, args.sort))
    return EXIT_OK


def cmd_cluster(args, out) -> int:
    ds, _ = _load(args.input)
    result = kmeans(ds, _kmeans_config(args))
    if args.format == "json":
        out.write(dumps(result.to_dict()))
    else:
        out.write(format_trace(result, show_table=args.trace))
    return EXIT_OK


def verdict_line(decision) -> str:
    if decision.verdict is Verdict.NO_OUTLIERS_DETECTED:
        return "no_outliers_detected"
    flagged = len(decision.outliers.union)
    sums = f"sum {decision.sum_with:.2f} -> {decision.sum_without:.2f}"
    if decision.verdict is Verdict.REMOVED:
        return f"removed: {flagged} tuple(s); {sums}"
    return f"retained: {flagged} tuple(s) flagged; {sums}"


def cmd_pipeline(args, out) -> int:
    ds, raw = _load(args.input)
    config = PipelineConfig(
        variables=args.columns, threshold_override=args.threshold, kmeans=_kmeans_config(args)
    )
    decision = run_pipeline(ds, config)
    outputs = {}
    if args.cleaned_output:
        removed = decision.verdict is Verdict.REMOVED
        outputs[args.cleaned_output] = dump_csv(decision.cleaned) if removed else raw
    if args.report:
        outputs[args.report] = dumps(decision.to_dict()).encode()
    _write_atomically(outputs)
    out.write(verdict_line(decision) + "\n")
    return EXIT_OK


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}") from None


def _highlight(args) -> RowSelection:
    rows: set[int] = set()
    if args.highlight:
        try:
            rows.update(int(t) for t in args.highlight.split(",") if t.strip())
        except ValueError:
            raise CliError(f"bad --highlight value {args.highlight!r}") from None
    if args.highlight_from:
        doc = _read_json(args.highlight_from)
        if "outliers" in doc:
            doc = doc["outliers"]
        if "union" not in doc:
            raise CliError(f"{args.highlight_from} has no 'union' of flagged rows")
        rows.update(int(i) for i in doc["union"])
    return RowSelection.of(rows)


def _assignments(path: str | None):
    if path is None:
        return None
    doc = _read_json(path)
    if isinstance(doc, dict):
        doc = doc.get("best", {}).get("assignments")
    if not isinstance(doc, list) or not all(isinstance(v, int) for v in doc):
        raise CliError(f"{path} does not contain a list of integer cluster assignments")
    return doc


def cmd_plot(args, out) -> int:
    ds, _ = _load(args.input)
    spec = PlotSpec(
        x_variable=args.x,
        y_variable=args.y,
        highlight=_highlight(args),
        color_by=_assignments(args.assignments),
        width=args.width,
        height=args.height,
    )
    _write_atomically({args.output: render_svg(ds, spec).encode()})
    return EXIT_OK


def cmd_fixture(args, out) -> int:
    payload = dump_csv(iris() if args.plain else iris_outlier_fixture())
    if args.output:
        _write_atomically({args.output: payload})
    else:
        out.write(payload.decode())
    return EXIT_OK


COMMANDS = {
    "describe": cmd_describe,
    "detect": cmd_detect,
    "cluster": cmd_cluster,
    "pipeline": cmd_pipeline,
    "plot": cmd_plot,
    "fixture": cmd_fixture,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stderr(err), contextlib.redirect_stdout(out):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return COMMANDS[args.command](args, out)
    except (CliError, DatasetError, KMeansError, ValueError) as exc:
        err.write(f"outlier-gate {args.command}: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
