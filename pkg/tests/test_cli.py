import json

import numpy as np
import pytest

from tracksentry.cli import main
from tracksentry.geometry import ObjectModel

from testutil import CUBE_VERTS, write_config, write_xyz


@pytest.fixture
def cube02():
    return ObjectModel(points=(CUBE_VERTS - 0.5) * 0.2 / np.sqrt(3), id="cube")


@pytest.fixture
def script_file(tmp_path, cube02):
    model_path = write_xyz(tmp_path / "cube.xyz", cube02.points)
    script = {
        "model": model_path,
        "intrinsics": {"fx": 600.0, "fy": 600.0, "cx": 320.0, "cy": 240.0,
                       "width": 640, "height": 480},
        "fps": 10, "duration": 1.5,
        "trajectory": [{"time": 0.0, "position": [0, 0, 0.8],
                        "rotvec": [0, 0, 0]}],
        "events": [],
    }
    p = tmp_path / "script.json"
    p.write_text(json.dumps(script))
    return str(p), model_path


def test_simulate_run_eval_bench_chain(tmp_path, script_file, capsys):
    script_path, model_path = script_file
    scene_dir = tmp_path / "scene"
    assert main(["simulate", "--script", script_path,
                 "--out", str(scene_dir)]) == 0
    assert (scene_dir / "gt.jsonl").exists()

    cfg = write_config(tmp_path / "cfg.json", model_path, str(scene_dir),
                       tmp_path / "out", seed=1)
    assert main(["run", "--config", cfg]) == 0
    assert (tmp_path / "out" / "results.jsonl").exists()

    capsys.readouterr()
    assert main(["eval", "--pred", str(tmp_path / "out" / "results.jsonl"),
                 "--gt", str(scene_dir / "gt.jsonl"),
                 "--model", model_path,
                 "--masks-pred", str(scene_dir / "masks"),
                 "--masks-gt", str(scene_dir / "masks")]) == 0
    report = json.loads(capsys.readouterr().out)
    per_obj = next(iter(report["per_object"].values()))
    assert per_obj["add_auc"] > 0.99
    assert per_obj["mean_iou"] == 1.0
    assert "runtime" in report

    capsys.readouterr()
    assert main(["bench", "--config", cfg]) == 0
    bench = json.loads(capsys.readouterr().out)
    assert bench["supervisor_mean_ms"] is not None
    assert "python_ms_per_mask" in bench["kernels"]


def test_init_with_click(tmp_path, script_file, capsys):
    script_path, model_path = script_file
    scene_dir = tmp_path / "scene"
    main(["simulate", "--script", script_path, "--out", str(scene_dir)])
    capsys.readouterr()
    code = main(["init", "--scene", str(scene_dir), "--model", model_path,
                 "--click", "320,240", "--out", str(tmp_path / "init")])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["state"]["mode"] == "tracking"
    assert out["pose"] is not None


def test_cli_reports_errors_with_nonzero_exit(tmp_path, script_file, capsys):
    script_path, model_path = script_file
    scene_dir = tmp_path / "scene"
    main(["simulate", "--script", script_path, "--out", str(scene_dir)])
    capsys.readouterr()
    code = main(["init", "--scene", str(scene_dir), "--model", model_path,
                 "--click", "2,2", "--out", str(tmp_path / "init")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_run_seed_override_changes_outputs(tmp_path, script_file):
    script_path, model_path = script_file
    scene_dir = tmp_path / "scene"
    main(["simulate", "--script", script_path, "--out", str(scene_dir)])
    cfg = write_config(tmp_path / "cfg.json", model_path, str(scene_dir),
                       tmp_path / "o1", seed=1,
                       noise={"sigma_trans": 0.01})
    assert main(["run", "--config", cfg]) == 0
    r1 = (tmp_path / "o1" / "results.jsonl").read_bytes()
    cfg2 = write_config(tmp_path / "cfg2.json", model_path, str(scene_dir),
                        tmp_path / "o2", seed=1,
                        noise={"sigma_trans": 0.01})
    assert main(["run", "--config", cfg2, "--seed", "99"]) == 0
    r2 = (tmp_path / "o2" / "results.jsonl").read_bytes()
    assert r1 != r2
