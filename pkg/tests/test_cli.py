import io
import json
import re

import pytest

from outlier_gate.cli import main, parse_trace, spss_number
from outlier_gate.dataset import dump_csv, iris, iris_outlier_fixture, load_csv
from outlier_gate.kmeans import KMeansResult
from outlier_gate.univariate import OutlierReport


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def fixture_csv(tmp_path):
    path = tmp_path / "fixture.csv"
    path.write_bytes(dump_csv(iris_outlier_fixture()))
    return str(path)


@pytest.fixture
def iris_csv(tmp_path):
    path = tmp_path / "iris.csv"
    path.write_bytes(dump_csv(iris()))
    return str(path)


@pytest.fixture
def clean_csv(tmp_path):
    path = tmp_path / "clean.csv"
    path.write_bytes(b"a,b\n1.00,3\n2.00,1\n3.00,4\n4.00,1\n5.00,5\n6.00,9\n7.00,2\n8.00,6\n")
    return str(path)


def test_spss_number():
    assert spss_number(0.891934, 5) == ".89193"
    assert spss_number(-0.5, 2) == "-.50"
    assert spss_number(5.87086, 4) == "5.8709"


@pytest.mark.parametrize(
    "which, row",
    [
        ("fixture_csv", ["SL", "151", "4.30", "10.00", "5.8709", ".89193"]),
        ("iris_csv", ["SL", "150", "4.30", "7.90", "5.8433", ".82807"]),
    ],
)
def test_describe(which, row, request):
    code, out, _ = run("describe", "--input", request.getfixturevalue(which), "--column", "SL")
    assert code == 0
    lines = out.splitlines()
    assert lines[1].split() == ["N", "Minimum", "Maximum", "Mean", "Std.", "Deviation"]
    assert lines[2].split() == row


def test_describe_errors(tmp_path, fixture_csv):
    code, out, err = run("describe", "--input", str(tmp_path / "missing.csv"), "--column", "SL")
    assert code != 0 and "cannot read" in err and out == ""
    code, _, err = run("describe", "--input", fixture_csv, "--column", "XX")
    assert code == 2 and "unknown column" in err
    one = tmp_path / "one.csv"
    one.write_bytes(b"x\n1\n")
    assert run("describe", "--input", str(one), "--column", "x")[0] == 2


def test_detect_table_sorted(fixture_csv):
    code, out, _ = run("detect", "--input", fixture_csv, "--columns", "SL", "--sort", "desc")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split() == ["row", "SL", "SW", "PL", "PW", "ZSL", "flag"]
    assert lines[1].split() == ["0", "10.00", "7.00", "8.00", "5.00", "4.62943", "*"]
    assert lines[2].split()[1:] == ["7.90", "3.80", "6.40", "2.00", "2.27499"]
    assert all(len(l.split()) == 6 for l in lines[2:-1])


def test_detect_ascending(fixture_csv):
    _, out, _ = run("detect", "--input", fixture_csv, "--columns", "SL", "--sort", "asc")
    assert out.splitlines()[1].split()[1] == "4.30"


def test_detect_threshold_override(fixture_csv):
    code, out, _ = run("detect", "--input", fixture_csv, "--columns", "SL", "--threshold", "2.0",
                       "--format", "json")
    assert code == 0
    rep = OutlierReport.from_dict(json.loads(out))
    flagged = rep.per_variable["SL"]
    # |z| >= 2 exactly for SL in {10.0, 7.9, 7.7}: one, one and four rows
    assert sorted(round(f.zscore, 5) for f in flagged) == [2.05076] * 4 + [2.27499, 4.62943]
    assert rep.criterion.threshold == 2.0


def test_detect_json_round_trip(fixture_csv):
    _, out, _ = run("detect", "--input", fixture_csv, "--format", "json")
    doc = json.loads(out)
    assert OutlierReport.from_dict(doc).to_dict() == doc


def test_detect_clean(clean_csv):
    code, out, _ = run("detect", "--input", clean_csv, "--format", "json")
    assert code == 0 and json.loads(out)["union"] == []


def test_cluster_trace_iris(iris_csv):
    code, out, _ = run("cluster", "--input", iris_csv, "--k", "3", "--distance", "sqeuclidean",
                       "--replicates", "11", "--seed", "42", "--trace")
    assert code == 0
    parsed = parse_trace(out)
    assert parsed["best"] == pytest.approx(78.8514, abs=1e-2)
    assert len(parsed["replicates"]) == 11
    assert parsed["trace"][-1]["num"] == 0
    assert out.rstrip().splitlines()[-3:-1] == ["ans =", ""]


def test_cluster_trace_fixture_structure(fixture_csv):
    code, out, _ = run("cluster", "--input", fixture_csv, "--seed", "42", "--trace")
    assert code == 0
    parsed = parse_trace(out)
    assert parsed["trace"][0]["iter"] == 1
    assert parsed["trace"][-1]["num"] == 0
    assert parsed["best"] == pytest.approx(min(r["sum"] for r in parsed["replicates"]), abs=1e-3)


def test_cluster_json_round_trip_and_determinism(fixture_csv):
    args = ("cluster", "--input", fixture_csv, "--seed", "7", "--format", "json")
    _, first, _ = run(*args)
    _, second, _ = run(*args)
    assert first == second
    doc = json.loads(first)
    assert KMeansResult.from_dict(doc).to_dict() == doc


@pytest.mark.parametrize("flags", [("--k", "0"), ("--distance", "chebyshev"), ("--seed", "-1")])
def test_cluster_bad_flags(fixture_csv, flags):
    code, _, err = run("cluster", "--input", fixture_csv, *flags)
    assert code == 2 and err


def test_cluster_k_too_large(tmp_path):
    p = tmp_path / "t.csv"
    p.write_bytes(b"x\n1\n2\n")
    assert run("cluster", "--input", str(p), "--k", "3")[0] == 2


def test_pipeline_fixture(fixture_csv, tmp_path):
    cleaned, report = tmp_path / "cleaned.csv", tmp_path / "report.json"
    code, out, _ = run("pipeline", "--input", fixture_csv, "--columns", "SL", "--seed", "42",
                       "--cleaned-output", str(cleaned), "--report", str(report))
    assert code == 0
    assert re.fullmatch(r"removed: 1 tuple\(s\); sum \d+\.\d\d -> 78\.85\n", out)
    assert load_csv(cleaned) == iris()
    doc = json.loads(report.read_text())
    assert doc["verdict"] == "removed" and doc["removed"] == [0]
    assert doc["config"]["kmeans"]["seed"] == 42


def test_pipeline_clean_copies_input(clean_csv, tmp_path):
    cleaned, report = tmp_path / "cleaned.csv", tmp_path / "report.json"
    code, out, _ = run("pipeline", "--input", clean_csv, "--cleaned-output", str(cleaned),
                       "--report", str(report))
    assert code == 0 and out == "no_outliers_detected\n"
    assert cleaned.read_bytes() == open(clean_csv, "rb").read()
    doc = json.loads(report.read_text())
    assert doc["sum_with"] is None and doc["sum_without"] is None


def test_pipeline_unwritable_report_leaves_nothing(fixture_csv, tmp_path):
    cleaned = tmp_path / "cleaned.csv"
    code, _, err = run("pipeline", "--input", fixture_csv, "--columns", "SL", "--replicates", "2",
                       "--cleaned-output", str(cleaned),
                       "--report", str(tmp_path / "no" / "such" / "dir" / "r.json"))
    assert code != 0 and "cannot write" in err
    assert not cleaned.exists()
    assert [p.name for p in tmp_path.iterdir()] == ["fixture.csv"]


def test_pipeline_is_deterministic(fixture_csv, tmp_path):
    outputs = []
    for tag in "ab":
        report = tmp_path / f"r{tag}.json"
        cleaned = tmp_path / f"c{tag}.csv"
        _, out, _ = run("pipeline", "--input", fixture_csv, "--seed", "3", "--report", str(report),
                        "--cleaned-output", str(cleaned))
        outputs.append((out, report.read_bytes(), cleaned.read_bytes()))
    assert outputs[0] == outputs[1]


def test_fixture_export_is_stable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("fixture", "--output", str(a))[0] == 0
    assert run("fixture", "--output", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert load_csv(a) == iris_outlier_fixture()
    _, out, _ = run("fixture", "--plain")
    assert load_csv(out.encode()) == iris()


def test_no_subcommand_is_usage_error():
    code, _, err = run()
    assert code == 2 and "usage" in err.lower()


def test_parse_trace_requires_ans():
    with pytest.raises(ValueError):
        parse_trace("1 iterations, total sum of distances = 3\n")
