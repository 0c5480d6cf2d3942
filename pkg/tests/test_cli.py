import csv
import io
import json

import pytest

from whspace import acceptance
from whspace.cli import RunConfig, dispatch


def run(argv, capsys):
    code = dispatch(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_schreier_check(capsys):
    assert run(["schreier", "check", "--set", "2,3", "--n", "1"], capsys)[:2] == (0, "true\n")
    assert run(["schreier", "check", "--set", "1,2", "--n", "1"], capsys)[:2] == (1, "false\n")


def test_schreier_enum(capsys):
    code, out, _ = run(["schreier", "enum", "--n", "2", "--max", "2"], capsys)
    assert code == 0 and json.loads(out) == [[], [1], [2]]


def test_usage_errors(capsys, tmp_path):
    assert run(["schreier", "check", "--set", "a,b", "--n", "1"], capsys)[0] == 2
    assert run(["bogus"], capsys)[0] == 2
    assert run(["norm", str(tmp_path / "missing.json")], capsys)[0] == 2
    assert run(["norm", "--dp-cap", "0", write(tmp_path / "x.json", {"coeffs": []})], capsys)[0] == 2
    assert run(["norm", "--tol", "0.1", write(tmp_path / "y.json", {"coeffs": []})], capsys)[0] == 2


def test_malformed_json_reports_position(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"coeffs": [[2, "1/2"],\n  [3, ]]}')
    code, _, err = run(["norm", str(p)], capsys)
    assert code == 2 and "line 2" in err and "column" in err


def test_run_config_checks():
    RunConfig().check()
    with pytest.raises(Exception):
        RunConfig(tol=0).check()
    with pytest.raises(Exception):
        RunConfig(enum_cap=-1).check()


def test_norm_json_and_csv(capsys, tmp_path):
    x = write(tmp_path / "x.json", {"coeffs": [[2, "1/2"], [5, "-1"]]})
    code, out, _ = run(["norm", x], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["lower"] <= rep["upper"] and rep["lower"] == pytest.approx(1)
    batch = write(tmp_path / "b.json", {"vectors": [{"coeffs": [[2, "1"]]}, {"coeffs": [[3, "2"]]}]})
    code, out, _ = run(["norm", "--format", "csv", batch], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["index"] for r in rows] == ["0", "1"]
    assert float(rows[1]["lower"]) == pytest.approx(2)


def test_certify_and_eval(capsys, tmp_path):
    f = write(tmp_path / "f.json", {"leaf": [-1, 5]})
    x = write(tmp_path / "x.json", {"coeffs": [[5, "3/4"]]})
    code, out, _ = run(["certify", f, "--vector", x], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["valid"] and rep["value"] == -0.75
    code, out, _ = run(["eval", f, x], capsys)
    assert code == 0 and json.loads(out) == -0.75
    g = write(tmp_path / "g.json", {"leaf": [2, 5]})
    assert run(["certify", g], capsys)[0] == 1


def test_counting(capsys, tmp_path):
    code, out, _ = run(["counting", "--size", "6", "--seed", "3"], capsys)
    assert code == 0 and json.loads(out)["holds"]
    bad = write(tmp_path / "c.json", {"A": [1, 2], "T": [["1", "0"], ["0", "0"]], "x": ["1", "1"]})
    assert run(["counting", "--file", bad], capsys)[0] == 2


def test_estimate_fuzz_and_check(capsys, tmp_path):
    code, out, _ = run(["estimate", "fuzz", "--kind", "MFE", "--n", "5", "--seed", "1",
                        "--bundle-dir", str(tmp_path)], capsys)
    assert code == 0 and json.loads(out)["passed"] == 5
    assert run(["estimate", "fuzz", "--kind", "PNORM", "--n", "1"], capsys)[0] == 2
    from whspace.estimates import generate
    inst = generate("SAE", 2, 0)
    p = write(tmp_path / "i.json", inst.to_json())
    code, out, _ = run(["estimate", "check", p], capsys)
    assert code == 0 and json.loads(out)["verdict"] == "holds"
    assert run(["estimate", "check", "--kind", "MFE", p], capsys)[0] == 2
    obj = inst.to_json()
    obj["side"]["q"] = 99
    code, out, _ = run(["estimate", "check", write(tmp_path / "bad.json", obj)], capsys)
    assert code == 1 and json.loads(out)["verdict"] == "hypothesis_failure"


def test_params_show(capsys):
    code, out, _ = run(["params", "show", "--strict", "--levels", "4"], capsys)
    assert code == 0 and json.loads(out)["m"][:4] == [2, 2, 8, 512]


def test_gap_demo_registry_copy_and_commit(capsys, tmp_path):
    params = write(tmp_path / "p.json", acceptance.GAP_TOY)
    reg = tmp_path / "reg.json"
    code, out, _ = run(["gap-demo", "--params", params, "--registry", str(reg)], capsys)
    assert code == 0 and not json.loads(out)["committed"] and not reg.exists()
    code, out, _ = run(["gap-demo", "--params", params, "--registry", str(reg), "--commit"], capsys)
    assert code == 0 and json.loads(out)["committed"] and reg.exists()
    assert run(["gap-demo", "--params", params, "--commit"], capsys)[0] == 2


def test_deterministic_output(capsys):
    a = run(["counting", "--size", "4", "--seed", "9"], capsys)
    b = run(["counting", "--size", "4", "--seed", "9"], capsys)
    assert a == b


def test_verify_all_subset(capsys, tmp_path):
    rep = tmp_path / "r.json"
    code, out, _ = run(["verify-all", "--only", "1", "2", "--report", str(rep)], capsys)
    assert code == 0 and "2/2 criteria passed" in out
    assert [r["number"] for r in json.loads(rep.read_text())] == [1, 2]
