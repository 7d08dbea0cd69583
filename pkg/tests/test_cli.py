import json
import os

import pytest

from singmod.cli import main, parse_point
from singmod.quadforms import CMPoint


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, json.loads(out), err


def test_parse_point_spellings():
    assert parse_point("-4") == CMPoint(1, 0, -4)
    assert parse_point("2,1,3") == CMPoint(2, 1, -23)
    assert parse_point("6,1,1") == CMPoint(1, 1, -23)  # reduced first
    z = parse_point("0.3+1.1i")
    assert z == pytest.approx(0.3 + 1.1j)
    assert parse_point("2i") == pytest.approx(2j)
    assert parse_point("i") == pytest.approx(1j)
    with pytest.raises(ValueError):
        parse_point("1-2i")  # lower half plane
    with pytest.raises(Exception):
        parse_point("-5")  # not a discriminant


def test_classpoly_text_and_json(capsys):
    code, out, _ = run(capsys, "classpoly", "-23")
    assert code == 0
    assert "X^3" in out and "3491750" in out
    code, payload, _ = run_json(capsys, "classpoly", "-23")
    assert code == 0
    assert payload["degree"] == 3
    assert payload["coeffs"] == ["12771880859375", "-5151296875", "3491750", "1"]


def test_classpoly_bad_discriminant(capsys):
    code, _, err = run(capsys, "classpoly", "--", "-5")
    assert code == 2
    assert err


def test_classpoly_cache(capsys, tmp_path):
    cache = str(tmp_path)
    code, first, _ = run_json(capsys, "classpoly", "-23", "--cache-dir", cache)
    assert code == 0
    assert any(name.startswith("classpoly") for name in os.listdir(cache))
    code, second, _ = run_json(capsys, "classpoly", "-23", "--cache-dir", cache)
    assert code == 0 and first == second
    # the j-series coefficients are cached alongside
    assert any(name.startswith("jcoeffs") for name in os.listdir(cache))


def test_cmpoints(capsys):
    code, payload, _ = run_json(capsys, "cmpoints", "-23", "--j")
    assert code == 0
    assert payload["h"] == 3 and payload["d_K"] == -23
    assert len(payload["points"]) == 3
    assert all("j" in p for p in payload["points"])


def test_modpoly_eval_value_and_zero(capsys):
    code, payload, _ = run_json(capsys, "modpoly-eval", "1", "-3", "-4")
    assert code == 0
    assert not payload["zero"]
    assert "-1728.0" in payload["value"]
    code, payload, _ = run_json(capsys, "modpoly-eval", "2", "-4", "-4")
    assert code == 0
    assert payload["zero"] and payload["zero_cosets"] == [[1, 1, 2]]


def test_modpoly_eval_bad_point(capsys):
    code, _, err = run(capsys, "modpoly-eval", "1", "1-2i", "-4")
    assert code == 2 and err


def test_norm_with_checks(capsys):
    code, payload, _ = run_json(
        capsys, "norm", "-4", "-7", "1", "--factor",
        "--epsilon", "0.5", "--epsilon", "2.0", "--chain")
    assert code == 0
    assert payload["status"] == "ok"
    assert payload["norm"] == str(5103 ** 4)
    assert payload["witness"] == 3
    assert payload["factorization"] == [["3", 24], ["7", 4]]
    assert [c["k"] for c in payload["chain"]] == [3, 5, 7]
    assert all(c["passed"] for c in payload["chain"])
    assert all(b["passed"] for b in payload["epsilon_bounds"])


def test_norm_zero_exit_ok(capsys):
    code, payload, _ = run_json(capsys, "norm", "-4", "-4", "2")
    assert code == 0
    assert payload["status"] == "zero"
    assert payload["singular_pair"]


def test_norm_bad_input(capsys):
    code, out, _ = run(capsys, "norm", "-5", "-4", "1")
    assert code == 2 and "error" in out


def test_greens_point_mode(capsys):
    code, payload, _ = run_json(
        capsys, "greens", "--k", "3", "--m", "2",
        "--z1", "0.3+1.1i", "--z2", "0.21+2.3i")
    assert code == 0
    assert payload["value"] < 0
    code, payload, _ = run_json(
        capsys, "greens", "--k", "1", "--m", "2",
        "--z1", "0.3+1.1i", "--z2", "0.21+2.3i")
    assert code == 0
    assert len(payload["per_coset"]) == 3  # sigma_1(2) cosets listed


def test_greens_cycle_mode(capsys):
    code, payload, _ = run_json(
        capsys, "greens", "--k", "3", "--m", "2", "--cycle", "-3", "-4",
        "--tail", "1e-4")
    assert code == 0
    assert payload["value"] < 0
    assert payload["tail_bound"] <= 4 * 1e-4 + 1e-12


def test_greens_argument_validation(capsys):
    code, _, err = run(capsys, "greens", "--k", "3")
    assert code == 2 and err
    code, _, err = run(capsys, "greens", "--k", "2", "--z1", "i", "--z2", "2i")
    assert code == 2 and err


def test_sweep_small_grid(capsys):
    code, payload, _ = run_json(
        capsys, "sweep", "--dmax", "8", "--mmax", "2",
        "--coprime-fundamental")
    assert code == 0
    stats = payload["summary"]
    assert stats["total"] == len(payload["reports"])
    assert stats["assert_failures"] == 0
    assert stats["error"] == 0


def test_sweep_empty(capsys):
    code, payload, _ = run_json(capsys, "sweep", "--dmax", "0")
    assert code == 0
    assert payload["summary"]["total"] == 0


def test_out_file(capsys, tmp_path):
    target = tmp_path / "result.json"
    code, out, _ = run(capsys, "classpoly", "-4", "--json",
                       "--out", str(target))
    assert code == 0
    payload = json.loads(target.read_text())
    assert payload["coeffs"] == ["-1728", "1"]


def test_sweep_threads(capsys):
    code, serial, _ = run_json(capsys, "sweep", "--dmax", "4", "--mmax", "2")
    code2, parallel, _ = run_json(capsys, "sweep", "--dmax", "4", "--mmax", "2",
                                  "--threads", "2")
    assert code == code2 == 0
    strip = lambda p: [{k: v for k, v in r.items() if k != "elapsed"}
                       for r in p["reports"]]
    assert strip(serial) == strip(parallel)
