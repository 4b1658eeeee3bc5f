import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from expanders import cli
from expanders.errors import NotFoundError


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    assert run("solve", "--rays", "0,2*pi/3", "--step", "0.02", "--radius", "5", "--out", out) == 0
    return out


# --- angle parsing -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "text,value",
    [("pi", math.pi), ("2*pi/3", 2 * math.pi / 3), ("-pi/2", -math.pi / 2), ("0.25", 0.25), ("(1+pi)*2", 2 + 2 * math.pi)],
)
def test_parse_angle(text, value):
    assert cli.parse_angle(text) == pytest.approx(value)


@pytest.mark.parametrize("text", ["__import__('os')", "pi**2", "e", "1/0", "", "2*"])
def test_parse_angle_rejects(text):
    with pytest.raises(ValueError):
        cli.parse_angle(text)


@given(st.floats(-100, 100))
def test_parse_angle_round_trips_reprs(x):
    assert cli.parse_angle(repr(x)) == x


# --- solve -------------------------------------------------------------------------------


def test_solve_outputs(solved):
    meta = json.loads((solved / "profile.json").read_text())
    assert meta["accepted"] is True
    assert meta["config"]["rays"] == "0,2*pi/3"
    assert meta["neck_radius"] == pytest.approx(0.792, abs=1e-3)
    assert meta["decay_fit"]["b"] > 0.25
    assert len(meta["input_hash"]) == 64
    assert (solved / "profile.csv").read_text().startswith("s,r,phi,psi\n")


def test_solve_is_bit_reproducible(tmp_path):
    args = ("solve", "--rays", "0.3,0.3+pi/4", "--step", "0.02", "--radius", "5", "--out", tmp_path)
    assert run(*args) == 0
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert run(*args) == 0
    assert first == {p.name: p.read_bytes() for p in tmp_path.iterdir()}


def test_plane_solve(tmp_path):
    assert run("solve", "--rays", "0,pi", "--out", tmp_path) == 0
    meta = json.loads((tmp_path / "profile.json").read_text())
    assert meta["residual"] < 1e-10 and meta["decay_fit"] is None


@pytest.mark.parametrize("rays", ["0,pi/2", "0,1.5708", "0.1,0.1+pi/2"])
def test_area_minimizing_rays_exit_2(rays, tmp_path, capsys):
    assert run("solve", "--rays", rays, "--out", tmp_path) == 2
    assert "area-minimizing" in capsys.readouterr().err


def test_bad_rays_exit_2(tmp_path):
    assert run("solve", "--rays", "0,0", "--out", tmp_path) == 2
    assert run("solve", "--rays", "1,2,3", "--out", tmp_path) == 2


def test_shoot_failure_writes_trace(tmp_path, monkeypatch):
    def fail(problem):
        raise NotFoundError("no sign change", [(0.1, -1.0), (1.0, -0.5)])

    monkeypatch.setattr(cli.profile, "shoot", fail)
    assert run("solve", "--rays", "0,2*pi/3", "--out", tmp_path) == 2
    trace = json.loads((tmp_path / "trace.json").read_text())
    assert trace["trace"] == [[0.1, -1.0], [1.0, -0.5]]


# --- config ------------------------------------------------------------------------------


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"rays": "0,pi", "step": 0.05, "radius": 5.0}))
    assert run("solve", "--config", cfg, "--step", "0.02", "--out", tmp_path / "o") == 0
    meta = json.loads((tmp_path / "o" / "profile.json").read_text())
    assert meta["stepSize"] == 0.02 and meta["config"]["radius"] == 5.0


def test_config_errors_exit_3(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_option": 1}))
    assert run("solve", "--config", bad) == 3
    bad.write_text("{not json")
    assert run("solve", "--config", bad) == 3
    assert run("solve", "--config", tmp_path / "missing.json") == 3


def test_missing_required_option_is_usage_error():
    with pytest.raises(SystemExit) as info:
        run("density")
    assert info.value.code == 2


# --- other commands ------------------------------------------------------------------------


def test_io_failures_exit_3(tmp_path):
    assert run("decay-fit", "--profile", tmp_path / "none.csv", "--out", tmp_path) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("s,r,phi,psi\n0,1,0,0\n1,oops,0,0\n")
    assert run("spectrum", "--profile", bad, "--out", tmp_path) == 3


def test_decay_fit(solved, tmp_path):
    assert run("decay-fit", "--profile", solved / "profile.csv", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "decay_fit.json").read_text())
    assert doc["slope"] <= -0.23 and doc["exponential_preferred"]


def test_density(solved, tmp_path):
    code = run(
        "density", "--profile", solved / "profile.csv", "--center", "0,0,0,0", "--center", "0.5,0,0,0.1",
        "--scales", "0.1,1", "--times", "0.25,0.5", "--out", tmp_path,
    )
    assert code == 0
    lines = (tmp_path / "density.csv").read_text().splitlines()
    assert lines[0] == "x0_1,x0_2,x0_3,x0_4,l,t,theta"
    assert len(lines) == 1 + 2 * 2 * 2
    summary = json.loads((tmp_path / "density.json").read_text())
    assert summary["sup"] < 2 and summary["monotonicity_violations"] == 0


def test_density_rejects_bad_center(solved, tmp_path):
    assert run("density", "--profile", solved / "profile.csv", "--center", "1,2", "--out", tmp_path) == 2


def test_spectrum(solved, tmp_path):
    code = run("spectrum", "--profile", solved / "profile.csv", "--max-mode", "1", "--h", "0.05", "--radius", "4.5", "--out", tmp_path)
    assert code == 0
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    assert [r["mode"] for r in doc["records"]] == [0, 1]
    assert all(r["sigma_min"] > 0 and r["stable"] for r in doc["records"])
    assert doc["records"][0]["grid"] == {"R": 4.5, "h": 0.05}


def test_flow_from_cone(solved, tmp_path):
    code = run(
        "flow", "--rays", "0,2*pi/3", "--t-end", "0.5", "--ds", "0.02", "--radius", "5",
        "--snapshots", "0.25", "--compare", solved / "profile.csv", "--hausdorff-tolerance", "1e-2", "--out", tmp_path,
    )
    assert code == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["times"] == [0.25, 0.5]
    assert manifest["hausdorff_to_reference"] < 1e-2
    assert sorted(p.name for p in tmp_path.glob("flow_*.csv")) == ["flow_000.csv", "flow_001.csv"]


def test_flow_self_similarity(solved, tmp_path):
    code = run("flow", "--from-profile", solved / "profile.csv", "--tau-max", "0.05", "--out", tmp_path)
    assert code == 0
    assert json.loads((tmp_path / "self_similarity.json").read_text())["max_defect"] < 1e-3


def test_flow_needs_an_input():
    with pytest.raises(SystemExit):
        run("flow")


def test_check_all_subset(tmp_path, capsys):
    assert run("check-all", "--only", "1,8", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "[PASS] criterion 1" in out and "[PASS] criterion 8" in out
    doc = json.loads((tmp_path / "acceptance.json").read_text())
    assert [r["number"] for r in doc["results"]] == [1, 8]
