import json

import numpy as np
import pytest

from mrws import space_to_json
from mrws.builders import p3 as make_p3, two_block
from mrws.cli import main


def write_space(tmp_path, space, name="space.json"):
    path = tmp_path / name
    path.write_text(json.dumps(space_to_json(space)))
    return str(path)


def write_field(tmp_path, values, name="field.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"values": list(values)}))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_build_graph_and_validate(tmp_path, capsys):
    edges = tmp_path / "edges.csv"
    edges.write_text("a,b,1\nb,c,1\n")
    code, obj = run(capsys, ["build", "graph", str(edges)])
    assert code == 0
    assert obj["version"] == 1 and len(obj["labels"]) == 3

    sp = tmp_path / "p3.json"
    sp.write_text(json.dumps(obj))
    code, rep = run(capsys, ["validate", str(sp)])
    assert code == 0 and rep["ok"]


def test_build_grid_and_cloud(tmp_path, capsys):
    code, obj = run(capsys, ["build", "grid", "--interval", "-1", "0",
                             "--interval", "2", "3", "--h", "0.1", "--radius", "1"])
    assert code == 0 and len(obj["labels"]) == 22

    pts = tmp_path / "pts.csv"
    pts.write_text("0,1\n1,1\n2,1\n")
    code, obj = run(capsys, ["build", "cloud", str(pts), "--eps", "1.5"])
    assert code == 0
    assert obj["kernel"][1] == pytest.approx([1 / 3, 1 / 3, 1 / 3])


def test_validate_corrupt_kernel_exits_2(tmp_path, capsys):
    obj = space_to_json(make_p3())
    obj["measure"] = [1.0, 1.0, 1.0]  # not invariant
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    code, rep = run(capsys, ["validate", str(bad)])
    assert code == 2
    assert not rep["ok"]
    assert any(c["axiom"] == "invariance" and not c["ok"] for c in rep["checks"])


def test_connect_output(tmp_path, capsys):
    path = write_space(tmp_path, two_block(0.1))
    code, obj = run(capsys, ["connect", path, "--set", "0,1"])
    assert code == 0
    assert obj["m_connected"] is False
    assert obj["ergodic"] is False
    assert len(obj["blocks"]) == 2
    assert len(obj["n_set"]) == 11


def test_heat_grid_output(tmp_path, capsys):
    path = write_space(tmp_path, make_p3())
    field = write_field(tmp_path, [1.0, 0.0, 0.0])
    code, obj = run(capsys, ["heat", path, "--init", field, "--grid", "0.5,1.0"])
    assert code == 0
    assert obj["times"] == [0.0, 0.5, 1.0]
    expect = 0.25 + 0.5 * np.exp(-1) + 0.25 * np.exp(-2)
    assert obj["states"][2][0] == pytest.approx(expect, abs=1e-9)


def test_spectral_output(tmp_path, capsys):
    path = write_space(tmp_path, make_p3())
    code, obj = run(capsys, ["spectral", path])
    assert code == 0
    assert obj["gap"] == pytest.approx(1.0, abs=1e-12)
    assert obj["spectrum"] == pytest.approx([0.0, 1.0, 2.0], abs=1e-12)
    assert obj["gap_ibe"] == pytest.approx(1.0, abs=1e-12)


def test_cheeger_output(tmp_path, capsys):
    path = write_space(tmp_path, make_p3())
    code, obj = run(capsys, ["cheeger", path, "--exact"])
    assert code == 0
    assert obj["exact"] and obj["lower"] == obj["upper"] == 1.0


def test_geometry_output(tmp_path, capsys):
    path = write_space(tmp_path, make_p3())
    code, obj = run(capsys, ["geometry", path, "--set", "0"])
    assert code == 0
    assert obj["perimeter"] == pytest.approx(0.25)
    assert obj["interaction_complement"] == pytest.approx(0.25)
    assert obj["mean_curvature"] == pytest.approx([1.0, 0.0, 1.0])


def test_curvature_output(tmp_path, capsys):
    path = write_space(tmp_path, make_p3())
    code, obj = run(capsys, ["curvature", path, "--be", "2,inf"])
    assert code == 0
    assert obj["be"]["2"] == pytest.approx(0.0, abs=1e-9)
    assert obj["be"]["inf"] == pytest.approx(1.0, abs=1e-9)
    assert obj["kappa_global"] == pytest.approx(0.0, abs=1e-12)
    assert [0, 2, 1.0] in [[p[0], p[1], round(p[2], 9)] for p in obj["kappa_pairs"]]


def test_transport_output(tmp_path, capsys):
    path = write_space(tmp_path, make_p3())
    mu = write_field(tmp_path, [1.0, 0.0, 0.0], "mu.json")
    code, obj = run(capsys, ["transport", path, "--mu", mu])
    assert code == 0
    assert obj["cost"] == pytest.approx(1.0, abs=1e-10)
    assert obj["dual_gap"] <= 1e-9 * (1 + obj["cost"])


def test_verify_ok_and_hypothesis_failure(tmp_path, capsys):
    p3path = write_space(tmp_path, make_p3())
    code, obj = run(capsys, ["verify", p3path, "--inequality", "ti_be", "--trials", "25"])
    assert code == 0
    assert obj["holds"] and obj["max_ratio"] <= 1 + 1e-9

    code, _ = run(capsys, ["verify", p3path, "--inequality", "ti_ollivier", "--trials", "5"])
    assert code == 3  # zero curvature on the path graph


def test_analyze_p3(tmp_path, capsys):
    path = write_space(tmp_path, make_p3())
    code, obj = run(capsys, ["analyze", path])
    assert code == 0
    assert obj["spectral"]["gap"] == pytest.approx(1.0, abs=1e-12)
    assert obj["cheeger"]["upper"] == 1.0
    assert obj["curvature"]["kappa_global"] == pytest.approx(0.0, abs=1e-12)
    assert obj["curvature"]["be"]["inf"] == pytest.approx(1.0, abs=1e-9)
    assert obj["connectivity"]["m_connected"] is True
    assert obj["provenance"]["timings_s"] is None


def test_analyze_two_block(tmp_path, capsys):
    path = write_space(tmp_path, two_block(0.1))
    code, obj = run(capsys, ["analyze", path, "--trials", "5"])
    assert code == 0
    assert obj["connectivity"]["m_connected"] is False
    assert obj["connectivity"]["blocks"] == 2
    assert obj["spectral"]["gap"] == 0.0
    # the verifiers surface the transport-information failure
    assert obj["transport"]["max_ratios"]["ti_be"] is None  # inf serialized as null
    assert isinstance(obj["transport"]["max_ratios"]["ti_ollivier"], dict)


def test_analyze_rejects_invalid_space(tmp_path, capsys):
    obj = space_to_json(make_p3())
    obj["measure"] = [1.0, 1.0, 1.0]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    code, rep = run(capsys, ["analyze", str(bad)])
    assert code == 2
    assert "violations" in rep


def test_analyze_deterministic_bytes(tmp_path, capsys):
    path = write_space(tmp_path, make_p3())
    main(["analyze", path, "--trials", "10"])
    first = capsys.readouterr().out
    main(["analyze", path, "--trials", "10", "--threads", "4"])
    second = capsys.readouterr().out
    assert first == second


def test_unknown_flag_exits_64(capsys):
    assert main(["spectral", "x.json", "--bogus"]) == 64
    err = capsys.readouterr().err
    assert "usage" in err


def test_missing_file_is_structural(capsys):
    assert main(["spectral", "/nonexistent/space.json"]) == 1


def test_bad_json_is_structural(tmp_path, capsys):
    bad = tmp_path / "nope.json"
    bad.write_text('{"version": 3}')
    assert main(["spectral", str(bad)]) == 1


def test_float_formatting_is_17_digits(tmp_path, capsys):
    path = write_space(tmp_path, make_p3())
    main(["spectral", path])
    out = capsys.readouterr().out
    assert "0.99999999999999978" in out or '"gap":1' in out
