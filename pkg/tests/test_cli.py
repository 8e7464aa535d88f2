import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from annofuse.cli import build_parser, main
from annofuse.evaluation import Detection, box_from_point
from annofuse.detections import dumps_detections
from annofuse.model import BBoxLabel, load_dataset, save_dataset
from annofuse.pipeline import load_labels

from cli_fixtures import counts_dataset, rasters_for, sensor_files


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    code = main(["simulate", "--n-images", "6", "--poles-max", "5", "--seed", "4",
                 "--width", "320", "--height", "240", "--min-separation", "40",
                 "--out", str(root / "sim.json")])
    assert code == 0
    ds = rasters_for(load_dataset(root / "sim.json"), root)
    save_dataset(ds, root / "data.json")
    dets = []
    for img in ds.images:
        for k, r in enumerate(img.reference):
            dets.append(Detection(img.id, box_from_point(r, 250, img.width, img.height), 0.9 - 0.1 * k))
        dets.append(Detection(img.id, BBoxLabel(0, 5, 5, 20, 20), 0.35))
    (root / "dets.json").write_text(dumps_detections(dets))
    return root


def test_annotate_each_backend(tmp_path, capsys):
    f = sensor_files(tmp_path)
    code, out, _ = run(capsys, "annotate", "map", "--map", f["map"], "--pose", f["pose"],
                       "--camera", f["camera"], "--cloud", f["cloud"], "--image-id", "fr")
    assert code == 0
    d = json.loads(out)
    assert d["sources"] == ["M"] and len(d["images"][0]["annotations"]["M"]) == 3
    code, out, _ = run(capsys, "annotate", "lidar", "--cloud", f["lidar"], "--pose", f["pose"],
                       "--camera", f["camera"], "--image-id", "fr")
    assert code == 0 and len(json.loads(out)["images"][0]["annotations"]["L"]) == 3
    code, out, _ = run(capsys, "annotate", "seg", "--mask", f["mask"], "--pole-classes", "5",
                       "--ground-classes", "0", "--image-id", "fr")
    pts = json.loads(out)["images"][0]["annotations"]["S"]
    assert code == 0 and [(p["u"], p["v"]) for p in pts] == [(44.5, 149.0)]


def test_annotate_then_merge(tmp_path, capsys):
    f = sensor_files(tmp_path)
    common = ["--image-id", "fr"]
    assert run(capsys, "annotate", "map", "--map", f["map"], "--pose", f["pose"], "--camera",
               f["camera"], "--cloud", f["cloud"], "--out", tmp_path / "m.json", *common)[0] == 0
    assert run(capsys, "annotate", "lidar", "--cloud", f["lidar"], "--pose", f["pose"], "--camera",
               f["camera"], "--out", tmp_path / "l.json", *common)[0] == 0
    code, out, _ = run(capsys, "merge", tmp_path / "m.json", tmp_path / "l.json")
    assert code == 0
    d = json.loads(out)
    assert d["sources"] == ["M", "L"] and set(d["images"][0]["annotations"]) == {"M", "L"}
    code, _, err = run(capsys, "merge", tmp_path / "m.json", tmp_path / "m.json")
    assert code == 2 and "already" in err


def test_fuse_mask_export(work, tmp_path, capsys):
    code, _, err = run(capsys, "fuse", "--dataset", work / "data.json", "--policy", "M&S",
                       "--out", tmp_path / "labels.json", "--jobs", 1)
    assert code == 0 and "confident" in err and "degree" in err
    labels = load_labels(tmp_path / "labels.json")
    assert labels.policy == "M&S"
    code, _, _ = run(capsys, "mask", "--labels", tmp_path / "labels.json", "--raster-root", work,
                     "--out-dir", tmp_path / "masked")
    assert code == 0
    assert len(list((tmp_path / "masked").glob("*_masked.ppm"))) == 6
    code, _, _ = run(capsys, "export-labels", "--labels", tmp_path / "labels.json",
                     "--out-dir", tmp_path / "txt")
    assert code == 0
    files = sorted((tmp_path / "txt").glob("*.txt"))
    assert len(files) == 6
    n_lines = sum(len(p.read_text().splitlines()) for p in files)
    assert n_lines == sum(len(r.split.confident) for r in labels.records)


def test_eval_points_and_detections(work, tmp_path, capsys):
    code, out, _ = run(capsys, "eval", "points", "--dataset", work / "data.json",
                       "--policy", "atleast(1)", "--policy", "M&S&L", "--out", tmp_path / "m.json")
    assert code == 0
    assert out.splitlines()[0].split()[:3] == ["Method", "Number", "FP"]
    rows = json.loads((tmp_path / "m.json").read_text())["rows"]
    assert [r["method"] for r in rows] == ["M", "S", "L", "atleast(1)", "M&S&L"]
    code, out, _ = run(capsys, "eval", "detections", "--detections", work / "dets.json",
                       "--dataset", work / "data.json", "--svg", tmp_path / "pr.svg",
                       "--csv", tmp_path / "pr.csv")
    assert code == 0
    rep = json.loads(out)
    assert rep["fn"] == 0 and rep["fp"] == 6
    assert (tmp_path / "pr.svg").read_text().startswith("<svg")
    code, out, _ = run(capsys, "pr-curve", "--detections", work / "dets.json",
                       "--dataset", work / "data.json")
    assert code == 0 and out == (tmp_path / "pr.csv").read_text()


def test_eval_points_published_counts(tmp_path, capsys):
    save_dataset(counts_dataset(1132, 232, 1714), tmp_path / "counts.json")
    code, out, _ = run(capsys, "eval", "points", "--dataset", tmp_path / "counts.json")
    assert code == 0
    row = out.splitlines()[2].split()
    assert row[:7] == ["M", "1364", "232", "1132", "1714", "83.0", "39.8"]
    assert row[7] == "1.00"


def test_missing_file_exit_code(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    code, _, err = run(capsys, "fuse", "--dataset", missing)
    assert code == 2 and str(missing) in err


def test_unknown_policy_source(work, capsys):
    code, _, err = run(capsys, "fuse", "--dataset", work / "data.json", "--policy", "M&Q")
    assert code == 2 and "Q" in err
    code, _, err = run(capsys, "fuse", "--dataset", work / "data.json", "--policy", "M&")
    assert code == 2 and "offset" in err


def test_order_must_rank_every_source(work, capsys):
    code, _, err = run(capsys, "fuse", "--dataset", work / "data.json", "--order", "S,L")
    assert code == 2 and "M" in err



def test_help_shows_defaults():
    parser = build_parser()
    for action in _all_actions(parser):
        if action.option_strings and action.help and action.dest not in ("help", "version"):
            if action.required or action.const is True:
                continue
            assert "default" in action.help, action.option_strings


def _all_actions(parser):
    for action in parser._actions:
        yield action
        if isinstance(getattr(action, "choices", None), dict):
            for sub in action.choices.values():
                yield from _all_actions(sub)


def test_config_precedence(work, tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"policy": "M|S", "threshold": 15}))
    monkeypatch.setenv("ANNOFUSE_CONFIG", str(cfg))
    assert run(capsys, "fuse", "--dataset", work / "data.json", "--out", tmp_path / "a.json")[0] == 0
    a = load_labels(tmp_path / "a.json")
    assert (a.policy, a.threshold) == ("M|S", 15.0)
    assert run(capsys, "fuse", "--dataset", work / "data.json", "--policy", "S",
               "--out", tmp_path / "b.json")[0] == 0
    b = load_labels(tmp_path / "b.json")
    assert (b.policy, b.threshold) == ("S", 15.0)
    monkeypatch.delenv("ANNOFUSE_CONFIG")
    assert run(capsys, "fuse", "--dataset", work / "data.json", "--out", tmp_path / "c.json")[0] == 0
    c = load_labels(tmp_path / "c.json")
    assert (c.policy, c.threshold) == ("atleast(3)", 20.0)
    cfg.write_text(json.dumps({"polcy": "M"}))
    code, _, err = run(capsys, "fuse", "--dataset", work / "data.json", "--config", cfg)
    assert code == 2 and "polcy" in err


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "annofuse", "simulate", "--n-images", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["sources"] == ["M", "S", "L"]
