"""End-to-end checks of the command line driver.

Everything goes through ``main(argv)`` exactly as the console script would,
asserting on exit codes and on the files the commands leave behind.
"""

import json
import math
import os

import pytest

from shrubfield.cli import main
from shrubfield.field_synth import load_bundle
from shrubfield.poly_core import Polynomial


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Shared directory with shrub files and one synthesized bundle."""
    root = tmp_path_factory.mktemp("cli")
    shrubs = {
        "lone-leaf": {"pieces": [{"leaf": {"k": 3}}], "junctions": []},
        "arc": {"pieces": [{"sprig": {}}], "junctions": []},
        "prickly": {
            "pieces": [{"leaf": {"k": 4}}, {"sprig": {}}],
            "junctions": [
                {
                    "bud": 0,
                    "at": [{"piece": 0, "site": 0}, {"piece": 1, "site": "end0"}],
                }
            ],
        },
        "star": {
            "pieces": [{"sprig": {}} for _ in range(14)],
            "junctions": [
                {
                    "bud": 0,
                    "at": [{"piece": i, "site": "end0"} for i in range(14)],
                }
            ],
        },
    }
    for name, body in shrubs.items():
        (root / f"{name}.json").write_text(json.dumps(body))
    rc = main(
        [
            "synthesize",
            str(root / "lone-leaf.json"),
            "--out",
            str(root / "bundle.json"),
            "--report",
            str(root / "synthesize-report.json"),
        ]
    )
    assert rc == 0
    return root


def _read_json(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


# -- implicitize -----------------------------------------------------------------


def test_two_cusps_is_a_usage_error(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["implicitize", "--k", "2"]) == 2


def test_curve_file_and_residual_report(tmp_path):
    out = tmp_path / "k3.json"
    report = tmp_path / "k3-report.json"
    rc = main(
        ["implicitize", "--k", "3", "--out", str(out), "--report", str(report)]
    )
    assert rc == 0
    curve = _read_json(out)
    assert curve["format"] == "implicit-curve/1"
    poly = Polynomial.from_text(curve["polynomial"], tuple(curve["variables"]))
    assert poly.total_degree() == curve["degree"]
    body = _read_json(report)
    assert body["kind"] == "implicitize"
    assert body["max_residual"] < 1e-12
    assert body["cusp_gradient_max"] < 1e-8
    assert body["origin_value_nonzero"] is True
    assert len(body["config_sha256"]) == 64


def test_astroid_grid_agreement(tmp_path):
    report = tmp_path / "k4-report.json"
    rc = main(
        [
            "implicitize",
            "--k",
            "4",
            "--check",
            "astroid",
            "--out",
            str(tmp_path / "k4.json"),
            "--report",
            str(report),
        ]
    )
    assert rc == 0
    grid = _read_json(report)["astroid_check"]
    assert grid["points"] == 101 * 101
    assert grid["agreements"] == grid["points"]
    assert grid["mismatches"] == []
    # the four quarter-turn cusps at radius 4 sit on the tenth-step grid
    assert grid["shared_zeros"] == 4


def test_astroid_check_requires_four_cusps(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["implicitize", "--k", "3", "--check", "astroid"]) == 2


# -- classify --------------------------------------------------------------------


def _classify(workdir, name):
    report = workdir / f"classify-{name}.json"
    rc = main(["classify", str(workdir / f"{name}.json"), "--report", str(report)])
    return rc, _read_json(report)


def test_lone_leaf_needs_no_punctures(workdir):
    rc, body = _classify(workdir, "lone-leaf")
    assert rc == 0
    assert body["punctures"] == []
    assert body["odd_buds"] == []
    assert body["very_simple"] is True
    assert body["orientation"]["verified"] is True


def test_arc_punctures_both_endpoints(workdir):
    rc, body = _classify(workdir, "arc")
    assert rc == 0
    assert body["punctures"] == [
        {"kind": "bud", "bud": 0},
        {"kind": "bud", "bud": 1},
    ]
    assert body["parity"]["consistent"] is True


def test_prickly_cactus_needs_two_punctures(workdir):
    rc, body = _classify(workdir, "prickly")
    assert rc == 0
    assert len(body["punctures"]) == 2
    kinds = {p["kind"] for p in body["punctures"]}
    assert kinds == {"bud", "cactus_cusp"}
    assert body["very_simple"] is False
    assert body["odd_cactuses"] == 1
    # orientation goes through after hanging a parity sprig on the cactus
    assert body["orientation"]["augmented"] is True
    assert body["orientation"]["verified"] is True


def test_unorientable_shrub_still_gets_a_classify_report(workdir):
    rc, body = _classify(workdir, "star")
    assert rc == 0
    orientation = body["orientation"]
    assert orientation["orientable"] is False
    assert orientation["certificate"]["failures"]


def test_malformed_shrub_files_are_validation_failures(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["classify", str(broken)]) == 2
    dangling = tmp_path / "dangling.json"
    dangling.write_text(
        json.dumps(
            {
                "pieces": [{"sprig": {}}],
                "junctions": [{"bud": 0, "at": [{"piece": 5, "site": "end0"}]}],
            }
        )
    )
    assert main(["classify", str(dangling)]) == 2


def test_missing_file_is_a_usage_error(tmp_path):
    assert main(["classify", str(tmp_path / "absent.json")]) == 2


# -- synthesize ------------------------------------------------------------------


def test_lone_leaf_bundle_is_the_equator_field(workdir):
    body = _read_json(workdir / "synthesize-report.json")
    assert body["kind"] == "synthesize"
    assert [f["label"] for f in body["factors"]] == ["frame"]
    assert body["tangency"]["max_normalized"] < 1e-10
    # boundary function z on the sphere: squared it has unit value at the
    # bottom, so the outward spiral rate there is exactly 2
    assert math.isclose(body["south_spiral_rate"], 2.0, rel_tol=1e-12)
    function = load_bundle(workdir / "bundle.json")
    assert [factor.label for factor in function.factors] == ["frame"]


def test_unorientable_shrub_cannot_be_synthesized(workdir, tmp_path):
    rc = main(
        [
            "synthesize",
            str(workdir / "star.json"),
            "--out",
            str(tmp_path / "never.json"),
        ]
    )
    assert rc == 2


# -- simulate --------------------------------------------------------------------


def _simulate(workdir, tmp_path, *extra, name="run"):
    args = [
        "simulate",
        str(workdir / "bundle.json"),
        "--out-csv",
        str(tmp_path / f"{name}.csv"),
        "--report",
        str(tmp_path / f"{name}.json"),
    ]
    args.extend(extra)
    rc = main(args)
    body = _read_json(tmp_path / f"{name}.json") if rc == 0 else None
    return rc, body


def test_repeated_runs_are_byte_identical(workdir, tmp_path):
    args = [
        "simulate",
        str(workdir / "bundle.json"),
        "--horizon",
        "8",
        "--unit-speed",
        "--zero-samples",
        "300",
        "--out-csv",
        str(tmp_path / "same.csv"),
        "--report",
        str(tmp_path / "same.json"),
        "--plot",
        str(tmp_path / "same.svg"),
    ]
    assert main(args) == 0
    first = [
        (tmp_path / f"same.{ext}").read_bytes() for ext in ("csv", "json", "svg")
    ]
    assert main(args) == 0
    second = [
        (tmp_path / f"same.{ext}").read_bytes() for ext in ("csv", "json", "svg")
    ]
    assert first == second


def test_plot_is_a_self_contained_picture(workdir, tmp_path):
    rc, _ = _simulate(
        workdir,
        tmp_path,
        "--horizon",
        "8",
        "--unit-speed",
        "--zero-samples",
        "300",
        "--plot",
        str(tmp_path / "orbit.svg"),
        name="plotted",
    )
    assert rc == 0
    svg = (tmp_path / "orbit.svg").read_text()
    assert svg.startswith("<svg ")
    assert "<polyline" in svg
    assert "<circle" in svg
    assert svg.rstrip().endswith("</svg>")


def test_seed_batches_write_per_seed_files(workdir, tmp_path):
    rc, body = _simulate(
        workdir,
        tmp_path,
        "--horizon",
        "6",
        "--unit-speed",
        "--zero-samples",
        "200",
        "--seeds",
        "3",
        name="batch",
    )
    assert rc == 0
    assert [run["seed"] for run in body["runs"]] == [0, 1, 2]
    for seed in range(3):
        csv_path = tmp_path / f"batch-seed{seed}.csv"
        assert csv_path.exists()
        assert body["runs"][seed]["files"]["trajectory_csv"] == str(csv_path)
    starts = {tuple(run["start"]) for run in body["runs"]}
    assert len(starts) == 3


def test_unit_speed_estimate_matches_raw_speed_within_factor_two(workdir, tmp_path):
    # the raw field fades quadratically at the boundary, so its orbit needs a
    # far longer time horizon to settle than the unit-speed arc length one
    rc_unit, unit = _simulate(
        workdir, tmp_path, "--horizon", "20", "--unit-speed", name="unit"
    )
    rc_raw, raw = _simulate(workdir, tmp_path, "--horizon", "480", name="raw")
    assert rc_unit == 0 and rc_raw == 0
    a_unit = unit["runs"][0]["omega"]["attraction"]
    a_raw = raw["runs"][0]["omega"]["attraction"]
    assert a_raw < 2.0 * a_unit
    assert a_unit < 2.0 * a_raw


def test_step_underflow_is_a_numeric_failure(workdir, tmp_path):
    rc, _ = _simulate(
        workdir,
        tmp_path,
        "--horizon",
        "8",
        "--unit-speed",
        "--min-step",
        "1.0",
        name="underflow",
    )
    assert rc == 3


def test_step_budget_exhaustion_is_a_numeric_failure(workdir, tmp_path):
    rc, _ = _simulate(
        workdir,
        tmp_path,
        "--horizon",
        "1e6",
        "--max-steps",
        "10",
        name="budget",
    )
    assert rc == 3


def test_start_flag_replaces_seeding(workdir, tmp_path):
    rc, body = _simulate(
        workdir,
        tmp_path,
        "--horizon",
        "4",
        "--unit-speed",
        "--start",
        "0.1,0,-0.9",
        name="started",
    )
    assert rc == 0
    run = body["runs"][0]
    assert run["seed"] is None
    norm = math.sqrt(sum(c * c for c in run["start"]))
    assert abs(norm - 1.0) < 1e-12
    assert run["start"][2] < 0


def test_start_conflicts_with_seed_batches(workdir, tmp_path):
    rc, _ = _simulate(
        workdir,
        tmp_path,
        "--start",
        "0.1,0,-0.9",
        "--seeds",
        "2",
        name="conflict",
    )
    assert rc == 2


def test_nonpositive_horizon_is_a_validation_failure(workdir, tmp_path):
    rc, _ = _simulate(workdir, tmp_path, "--horizon", "0", name="zero")
    assert rc == 2
    rc, _ = _simulate(workdir, tmp_path, "--horizon", "-3", name="negative")
    assert rc == 2


def test_config_file_supplies_and_flags_override(workdir, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "simulate": {
                    "horizon": 8.0,
                    "unit_speed": True,
                    "zero_samples": 300,
                    "out_csv": str(tmp_path / "c.csv"),
                    "report": str(tmp_path / "c.json"),
                }
            }
        )
    )
    bundle = str(workdir / "bundle.json")
    assert main(["simulate", bundle, "--config", str(config)]) == 0
    body = _read_json(tmp_path / "c.json")
    assert body["config"]["horizon"] == 8.0
    assert body["config"]["unit_speed"] is True
    assert main(["simulate", bundle, "--config", str(config), "--horizon", "9"]) == 0
    assert _read_json(tmp_path / "c.json")["config"]["horizon"] == 9.0


def test_unknown_config_keys_are_rejected(workdir, tmp_path):
    config = tmp_path / "typo.json"
    config.write_text(json.dumps({"simulate": {"horizn": 8.0}}))
    assert main(["simulate", str(workdir / "bundle.json"), "--config", str(config)]) == 2


def test_config_hash_tracks_the_resolved_values(workdir, tmp_path):
    rc_a, body_a = _simulate(
        workdir, tmp_path, "--horizon", "4", "--unit-speed", name="hash-a"
    )
    rc_b, body_b = _simulate(
        workdir, tmp_path, "--horizon", "5", "--unit-speed", name="hash-b"
    )
    assert rc_a == 0 and rc_b == 0
    assert body_a["config_sha256"] != body_b["config_sha256"]


def test_garbage_bundles_are_validation_failures(tmp_path):
    fake = tmp_path / "fake.json"
    fake.write_text(json.dumps({"format": "something-else"}))
    assert main(["simulate", str(fake)]) == 2


# -- report ----------------------------------------------------------------------


def test_report_renders_every_kind(workdir, tmp_path, capsys):
    rc, _ = _simulate(
        workdir,
        tmp_path,
        "--horizon",
        "6",
        "--unit-speed",
        "--zero-samples",
        "200",
        name="render",
    )
    assert rc == 0
    produced = [
        workdir / "synthesize-report.json",
        tmp_path / "render.json",
    ]
    rc_cls, _ = _classify(workdir, "lone-leaf")
    assert rc_cls == 0
    produced.append(workdir / "classify-lone-leaf.json")
    out = tmp_path / "k3.json"
    report = tmp_path / "k3-report.json"
    assert (
        main(["implicitize", "--k", "3", "--out", str(out), "--report", str(report)])
        == 0
    )
    produced.append(report)
    for path in produced:
        capsys.readouterr()
        assert main(["report", str(path)]) == 0
        rendered = capsys.readouterr().out
        assert "report (config " in rendered


def test_report_rejects_unrecognized_files(tmp_path):
    stray = tmp_path / "stray.json"
    stray.write_text(json.dumps({"kind": "unheard-of"}))
    assert main(["report", str(stray)]) == 2
