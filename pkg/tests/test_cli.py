import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from itcircles.cli import BENCH_COLUMNS, SWEEP_COLUMNS, main
from itcircles.detector import DetectorConfig, detect_with_stats
from itcircles.imageio import read_image, write_image
from itcircles.report import DETECTION_COLUMNS, DetectionReport, fmt_real, parse_report

DATA = Path(__file__).parent / "data"


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def two_pgm(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("synth", "--preset", "two-circles", "-o", d / "two.pgm") == 0
    return d / "two.pgm"


def test_synth_writes_image_and_truth(tmp_path):
    out = tmp_path / "scene.pgm"
    assert run("synth", "--preset", "distractor", "-o", out) == 0
    truth = json.loads((tmp_path / "scene.truth.json").read_text())
    assert truth["circles"] == [{"a": 30.0, "b": 60.0, "r": 20.0}]
    assert read_image(out).shape == (256, 256)


def test_synth_zero_variance_ignores_seed(tmp_path):
    run("synth", "--preset", "two-circles", "--seed", "1", "-o", tmp_path / "a.pgm")
    run("synth", "--preset", "two-circles", "--seed", "2", "-o", tmp_path / "b.pgm")
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()
    run("synth", "--preset", "two-circles", "--seed", "2", "--noise-variance", "0.01", "-o", tmp_path / "c.pgm")
    assert (tmp_path / "c.pgm").read_bytes() != (tmp_path / "b.pgm").read_bytes()


def test_synth_spec_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"width": 32, "height": 32,
                               "shapes": [{"kind": "circle", "center": [5, 5], "radius": 20}]}))
    assert run("synth", "--spec", bad, "-o", tmp_path / "x.pgm") == 3
    bad.write_text("{not json")
    assert run("synth", "--spec", bad, "-o", tmp_path / "x.pgm") == 3
    assert run("synth", "--spec", tmp_path / "missing.json", "-o", tmp_path / "x.pgm") == 2


def test_synth_spec_file(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"width": 64, "height": 48, "background": 0.2,
                                "shapes": [{"kind": "circle", "center": [30, 24], "radius": 10.5}]}))
    assert run("synth", "--spec", spec, "-o", tmp_path / "s.png") == 0
    assert read_image(tmp_path / "s.png").shape == (48, 64)
    assert json.loads((tmp_path / "s.truth.json").read_text())["circles"][0]["r"] == 10.5


def test_detect_two_circles(two_pgm, tmp_path):
    rep = tmp_path / "r.txt"
    overlay = tmp_path / "o.png"
    assert run("detect", "-i", two_pgm, "-o", rep, "--overlay", overlay) == 0
    parsed = parse_report(rep.read_text())
    assert parsed["width"] == parsed["height"] == 256
    found = sorted((d["a"], d["b"], d["r"]) for d in parsed["detections"])
    for (a, b, r), truth in zip(found, [(80, 80, 30), (180, 180, 40)]):
        assert abs(a - truth[0]) < 1 and abs(b - truth[1]) < 1 and abs(r - truth[2]) < 1
    assert read_image(overlay).shape == (256, 256)
    assert "wall_time_ms" in parsed


def test_detect_blank(tmp_path):
    write_image(tmp_path / "blank.pgm", np.zeros((32, 32)))
    assert run("detect", "-i", tmp_path / "blank.pgm", "-o", tmp_path / "r.txt") == 0
    assert parse_report((tmp_path / "r.txt").read_text())["detections"] == []


def test_detect_errors(two_pgm, tmp_path):
    assert run("detect", "-i", tmp_path / "nope.pgm") == 2
    assert run("detect", "-i", two_pgm, "--delta-p", "1.5") == 3
    assert run("detect", "-i", two_pgm, "--n-sectors", "4") == 3
    with pytest.raises(SystemExit) as exc:
        run("detect", "-i", two_pgm, "--sigma", "abc")
    assert exc.value.code == 3
    with pytest.raises(SystemExit) as exc:
        run("frobnicate")
    assert exc.value.code == 3


def test_report_round_trip_reproduces_run(two_pgm, tmp_path):
    first = tmp_path / "a.txt"
    second = tmp_path / "b.txt"
    assert run("detect", "-i", two_pgm, "--seed", "9", "--n-sectors", "12", "--omit-timing", "-o", first) == 0
    assert run("detect", "-i", two_pgm, "--config", first, "--omit-timing", "-o", second) == 0
    assert first.read_bytes() == second.read_bytes()
    cfg = parse_report(first.read_text())["config"]
    assert cfg.rng_seed == 9 and cfg.n_sectors == 12


def test_report_format(two_pgm):
    img = read_image(two_pgm)
    cfg = DetectorConfig()
    dets, stats = detect_with_stats(img, cfg)
    text = DetectionReport("x.pgm", 256, 256, cfg, dets, stats, 12.5).to_text()
    lines = text.splitlines()
    keys = [ln.split(" = ")[0] for ln in lines[1:]]
    assert keys[:3] == ["source", "width", "height"]
    assert keys[3:3 + len(cfg.flat())] == [f"config.{k}" for k in cfg.flat()]
    assert "config.sigma = 1.280000" in lines and "config.d_cap = none" in lines
    assert "wall_time_ms = 12.500000" in lines
    assert f"detection_columns = {' '.join(DETECTION_COLUMNS)}" in lines
    assert parse_report(text)["stats"] == stats.counts()


def test_fmt_real():
    assert fmt_real(1 / 3) == "0.333333"
    assert fmt_real(math.inf) == "inf" and fmt_real(-math.inf) == "-inf"


def test_eval_sampling_single_cell(tmp_path):
    out = tmp_path / "s.csv"
    assert run("eval-sampling", "--radii", "50", "--variances", "0.05", "--trials", "2",
               "--iterations", "100", "-o", out, "--grids-dir", tmp_path / "g") == 0
    rows = list(csv.DictReader(out.open()))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert [r["strategy"] for r in rows] == ["its:0.05", "four-point", "three-point"]
    assert (tmp_path / "s.png").exists()
    assert len(list((tmp_path / "g").glob("*.pgm"))) == 3


def test_eval_sampling_golden(tmp_path):
    out = tmp_path / "g.csv"
    assert run("eval-sampling", "--radii", "30", "--variances", "0,0.02", "--trials", "2",
               "--iterations", "100", "--seed", "7", "--figure", "none", "-o", out) == 0
    assert out.read_text() == (DATA / "sweep_golden.csv").read_text()


def test_eval_sampling_full_grid_structure(tmp_path):
    out = tmp_path / "full.csv"
    assert run("eval-sampling", "--radii", "10:100:10", "--variances", "0.01,0.05,0.1,0.2", "--trials", "1",
               "--iterations", "20", "--strategies", "its:0.05,four-point", "--figure", "none", "-o", out) == 0
    rows = list(csv.DictReader(out.open()))
    cells = {(r["radius"], r["variance"]) for r in rows}
    assert len(cells) == 40
    for r in rows:
        assert r["delta_psnr_db"] != ""


def test_eval_sampling_bad_parameters(tmp_path):
    assert run("eval-sampling", "--trials", "0") == 3
    assert run("eval-sampling", "--strategies", "five-point", "--trials", "1") == 3
    with pytest.raises(SystemExit) as exc:
        run("eval-sampling", "--radii", "10:5:1")
    assert exc.value.code == 3


def test_bench(two_pgm, tmp_path):
    out = tmp_path / "b.csv"
    assert run("bench", "-i", two_pgm, "--reps", "3", "-o", out) == 0
    rows = list(csv.DictReader(out.open()))
    assert tuple(rows[0]) == BENCH_COLUMNS and rows[0]["reps"] == "3"
    total = sum(float(rows[0][c]) for c in BENCH_COLUMNS if c.endswith("_pct"))
    assert total == pytest.approx(100.0, abs=0.5)
    assert float(rows[0]["min_ms"]) <= float(rows[0]["mean_ms"]) <= float(rows[0]["max_ms"])
    assert (tmp_path / "b.png").exists()
    assert run("bench", "-i", two_pgm, "--reps", "0") == 3
    assert run("bench", "-i", tmp_path / "missing.png", "--reps", "1") == 2
