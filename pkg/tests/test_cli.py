import json

import pytest

from vlpsim.cli import main
from vlpsim.occ_link import encode_uid
from vlpsim.rs_camera import read_pgm
from vlpsim.scene import default_scenario, save_scenario, scenario_to_dict


@pytest.fixture
def tiny_scenario(tmp_path):
    doc = scenario_to_dict(default_scenario())
    doc["agents"] = [a for a in doc["agents"] if a["agent_id"] == "phone"]
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_encode_prints_chips(capsys):
    assert main(["encode", "--uid", "0xA5"]) == 0
    out = capsys.readouterr().out.strip()
    assert out == "11100" + "1001100101100110"


def test_encode_bad_uid(capsys):
    assert main(["encode", "--uid", "300"]) == 1


def test_decode_chips_round_trip(capsys):
    chips = encode_uid(0x5A).as_text() * 2
    assert main(["decode", "--chips", chips]) == 0
    out = capsys.readouterr().out
    assert "uid=90" in out and "confidence=1.000" in out


def test_decode_chips_failure(capsys):
    assert main(["decode", "--chips", "1" * 64]) == 2
    assert "NoSync" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    assert main(["simulate", "--definitely-not-a-flag"]) == 1


def test_missing_subcommand_is_usage_error():
    assert main([]) == 1


def test_render_and_decode_image(tmp_path, capsys):
    # close-range scenario whose blob carries two whole frames
    doc = {
        "lamps": [{"uid": 165, "center": [0, 0, 2.5],
                   "shape": {"kind": "circle", "diameter": 0.175}}],
        "agents": [{"agent_id": "cam", "kind": "smartphone",
                    "pose": {"position": [0, 0, 2.3825]}}],
        "sim": {"ambient_level": 0.05},
    }
    scen = tmp_path / "rig.json"
    scen.write_text(json.dumps(doc))
    out = tmp_path / "frame.pgm"
    assert main(["render", "--scenario", str(scen), "--out", str(out)]) == 0
    assert read_pgm(out).shape == (480, 640)
    assert main(["decode", "--image", str(out)]) == 0
    assert "uid=165" in capsys.readouterr().out


def test_decode_image_unmodulated_fails(tmp_path, capsys):
    from vlpsim.rs_camera import RsFrame, write_pgm
    import numpy as np

    img = np.zeros((480, 640))
    img[100:220, 200:320] = 0.9  # solid block, no stripes
    write_pgm(RsFrame(pixels=img, t_start=0.0, camera_pose=None,
                      intrinsics=None), tmp_path / "flat.pgm")
    assert main(["decode", "--image", str(tmp_path / "flat.pgm")]) == 2


def test_simulate_outputs_deterministic(tiny_scenario, tmp_path):
    args = ["simulate", "--scenario", tiny_scenario, "--ticks", "30"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    ma, mb = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    assert main([*args, "--out", str(a), "--messages", str(ma)]) == 0
    assert main([*args, "--out", str(b), "--messages", str(mb)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert ma.read_bytes() == mb.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header == ("t_ms,agent_id,truth_x,truth_y,truth_z,fix_x,fix_y,"
                      "fix_z,err_m,scheme,residual_px,n_leds,decode_ok")
    assert len(a.read_text().splitlines()) == 31  # header + 30 agent-frames


def test_eval_strict_flags_outage(tmp_path):
    doc = {
        "lamps": [{"uid": 1, "center": [0, 0, 2.5],
                   "shape": {"kind": "circle", "diameter": 0.175}}],
        "agents": [{"agent_id": "phone", "kind": "smartphone",
                    "pose": {"position": [2.8, 2.8, 1.0]},
                    "yaw_trusted": False}],
        "sim": {"ambient_level": 0.05},
    }
    scen = tmp_path / "dark.json"
    scen.write_text(json.dumps(doc))
    out = tmp_path / "eval.csv"
    code = main(["eval", "--scenario", str(scen), "--ticks", "10",
                 "--out", str(out), "--strict", "--warmup", "0"])
    assert code == 2
    assert out.exists()


def test_eval_writes_columns(tiny_scenario, tmp_path):
    out = tmp_path / "eval.csv"
    assert main(["eval", "--scenario", tiny_scenario, "--ticks", "5",
                 "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert header == ("agent_id,t_ms,truth_x,truth_y,truth_z,"
                      "fix_x,fix_y,fix_z,scheme,residual_px,n_leds")


def test_missing_scenario_is_io_error(tmp_path, capsys):
    assert main(["render", "--scenario", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "x.pgm")]) == 3
