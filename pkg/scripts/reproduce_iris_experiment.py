#!/usr/bin/env python3
"""Run the Iris-with-outlier experiment end to end and write its artifacts.

Outputs (in --outdir): descriptive tables, the sorted z-score listing, both
clustering logs, the pipeline report, the cleaned CSV and three SVG plots.
"""
import argparse
import io
import json
from pathlib import Path

from outlier_gate.cli import main


def call(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    if code:
        raise SystemExit(f"command failed ({code}): {' '.join(argv)}")
    return out.getvalue()


def run(outdir: Path, seed: int) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    fixture, plain = outdir / "iris_outlier.csv", outdir / "iris.csv"
    call("fixture", "--output", str(fixture))
    call("fixture", "--plain", "--output", str(plain))

    for name, path in (("with_outlier", fixture), ("without_outlier", plain)):
        table = call("describe", "--input", str(path), "--column", "SL")
        (outdir / f"describe_{name}.txt").write_text(table)
        print(table)

    listing = call("detect", "--input", str(fixture), "--columns", "SL", "--sort", "desc")
    (outdir / "zscores_sl.txt").write_text(listing)
    print("\n".join(listing.splitlines()[:7]))
    detect_json = outdir / "detect.json"
    detect_json.write_text(
        call("detect", "--input", str(fixture), "--columns", "SL", "--format", "json")
    )

    for name, path in (("with_outlier", fixture), ("without_outlier", plain)):
        log = call("cluster", "--input", str(path), "--seed", str(seed), "--trace")
        (outdir / f"kmeans_{name}.txt").write_text(log)
        clusters = outdir / f"kmeans_{name}.json"
        clusters.write_text(
            call("cluster", "--input", str(path), "--seed", str(seed), "--format", "json")
        )
        call("plot", "--input", str(path), "--x", "SL", "--y", "PL",
             "--assignments", str(clusters), "--output", str(outdir / f"clusters_{name}.svg"))
        print(f"\n{name}:\n{log}")

    call("plot", "--input", str(fixture), "--x", "SL", "--y", "PL",
         "--highlight-from", str(detect_json), "--output", str(outdir / "scatter_outlier.svg"))

    verdict = call("pipeline", "--input", str(fixture), "--columns", "SL", "--seed", str(seed),
                   "--cleaned-output", str(outdir / "cleaned.csv"),
                   "--report", str(outdir / "pipeline_report.json"))
    print(verdict, end="")
    report = json.loads((outdir / "pipeline_report.json").read_text())
    print(f"sum_with={report['sum_with']:.4f} sum_without={report['sum_without']:.4f}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", type=Path, default=Path("results/iris_experiment"))
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()
    run(args.outdir, args.seed)
