import json
import subprocess
import sys

import pytest

from filterlab import __version__
from filterlab.cli import CAP_ENV, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def doc_of(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_density_evens(capsys):
    d = doc_of(capsys, "density", "--set", "arith(2,2)", "--weights", "constant(1)", "--checkpoints", "1e2,1e4")
    est = d["estimate"]
    assert est["exact"] == 0.5
    assert all(abs(r - 0.5) < 1e-2 for _, r in est["ratios_at_checkpoints"])
    assert d["config"]["subcommand"] == "density" and d["version"] == __version__


def test_density_finite(capsys):
    d = doc_of(capsys, "density", "--set", "finite{1}", "--checkpoints", "1e3")
    assert d["estimate"]["exact"] == 0


def test_density_squares_harmonic(capsys):
    d = doc_of(capsys, "density", "--set", "squares", "--weights", "harmonic", "--checkpoints", "10,1e2,1e3,1e4")
    ratios = [r for _, r in d["estimate"]["ratios_at_checkpoints"]]
    assert ratios == sorted(ratios, reverse=True) and len(set(ratios)) == 4


def test_density_with_block_file(capsys, tmp_path):
    d = doc_of(capsys, "witness", "--kind", "erdos_ulam", "--count", "5")
    p = tmp_path / "bp.json"
    p.write_text(json.dumps(d["partition"]))
    d = doc_of(capsys, "density", "--set", "blockunion(bp, finite{2})", "--blocks", f"bp={p}",
               "--checkpoints", "3")
    assert d["estimate"]["ratios_at_checkpoints"] == [[3, 2 / 3]]


def test_classify(capsys):
    d = doc_of(capsys, "classify", "--set", "squares", "--ideal", "st")
    assert d["verdict"]["side"] == "InIdeal" and d["verdict"]["certainty"] == "Certified"
    d = doc_of(capsys, "classify", "--set", "primes", "--ideal", "summable:harmonic", "--horizon", "1e4")
    assert d["verdict"]["side"] == "InGrill"


def test_witness_erdos_ulam(capsys):
    d = doc_of(capsys, "witness", "--kind", "erdos_ulam", "--weights", "constant(1)", "--count", "4")
    assert d["partition"]["cuts"] == [0, 1, 3, 7, 15]


def test_witness_frechet(capsys):
    d = doc_of(capsys, "witness", "--kind", "frechet", "--count", "3")
    assert d["blocks"] == [[1, 1], [2, 2], [3, 3]]


def test_witness_summable_harmonic(capsys):
    d = doc_of(capsys, "witness", "--kind", "summable", "--weights", "harmonic", "--count", "3")
    # the greedy least cuts; {5..11} sums to 0.937 < 1 so the third block ends at 12
    assert d["partition"]["cuts"] == [0, 1, 4, 12]


def test_witness_with_index(capsys):
    d = doc_of(capsys, "witness", "--kind", "erdos_ulam", "--count", "20", "--index", "arith(1,2)")
    assert d["report"]["conclusion"] == "InGrillCertified"
    assert d["blocks"] is None  # too many points to list


def test_witness_cap_hit_emits_partial(capsys):
    code, out, err = run(capsys, "witness", "--kind", "summable", "--weights", "harmonic",
                         "--count", "30", "--cap", "1e4")
    assert code == 3
    d = json.loads(out)
    assert d["partition"]["cuts"][:4] == [0, 1, 4, 12]
    assert "error" in d and "numeric" not in err


def test_limit_certified(capsys):
    d = doc_of(capsys, "limit", "--seq", "piecewise(squares, const(1), const(0))", "--candidate", "0",
               "--ideal", "eu:constant(1)")
    assert d["report"]["verdict"] == "ConvergesCertified"


def test_limit_search(capsys):
    d = doc_of(capsys, "limit", "--seq", "piecewise(squares, const(7), const(3))", "--horizon", "1e5")
    assert d["search"]["candidate"] == pytest.approx(3.0)
    assert d["report"]["verdict"] == "ConvergesCertified"
    d = doc_of(capsys, "limit", "--seq", "alt", "--horizon", "1e4")
    assert d["report"] is None and d["search"]["candidate"] is None


def test_slln(capsys):
    d = doc_of(capsys, "slln", "--n", "100000", "--trials", "100", "--seed", "7")
    assert abs(d["report"]["grand_mean"] - 0.5) < 0.005
    assert d["report"]["prng"] == "PCG64"


def test_ultralab_sweep(capsys):
    d = doc_of(capsys, "ultralab", "sweep", "--n", "4", "--theorem", "uniqueness")
    (rep,) = d["reports"]
    assert rep["theorem_id"] == "uniqueness" and rep["violations"] == []


def test_ultralab_check(capsys):
    d = doc_of(capsys, "ultralab", "check", "--n", "4", "--points", "1,2")
    assert d["intersection"]["base"] == [[1, 2]]
    assert d["minimal"] is True
    assert d["inavoidable"]["1"]["witness"] == [1, 3, 4]


def test_byte_identical_output(capsys):
    argv = ["slln", "--n", "1e4", "--trials", "5", "--seed", "3"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_output_file(capsys, tmp_path):
    p = tmp_path / "out.json"
    code, out, err = run(capsys, "--output", str(p), "witness", "--kind", "frechet", "--count", "2")
    assert code == 0 and out == ""
    assert json.loads(p.read_text())["config"]["output"] == str(p)
    assert err.startswith("witness:")


@pytest.mark.parametrize("argv", [
    ["density", "--set", "finite{0}"],
    ["density", "--set", "squares", "--weights", "cubic"],
    ["classify", "--set", "squares", "--ideal", "bogus"],
    ["limit", "--seq", "harmonik", "--candidate", "0"],
])
def test_parse_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and "error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["density"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["density", "--set", "squares", "--checkpoints", "100,10"])
    assert exc.value.code == 2


def test_numeric_error_exit_3(capsys, tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("1 2 3")
    code, _, err = run(capsys, "limit", "--seq", f"table({p})", "--candidate", "0", "--horizon", "1e3",
                       "--checkpoints", "10")
    # tables shorter than the horizon are clipped, so this succeeds
    assert code == 0
    code, _, err = run(capsys, "density", "--set", "table(3, 101)", "--checkpoints", "10")
    assert code == 3 and "numeric" in err


def test_env_cap(capsys, monkeypatch):
    monkeypatch.setenv(CAP_ENV, "1000")
    code, _, err = run(capsys, "density", "--set", "squares", "--checkpoints", "1e4")
    assert code == 2 and CAP_ENV in err
    code, _, _ = run(capsys, "density", "--set", "squares", "--checkpoints", "1e3")
    assert code == 0
    monkeypatch.setenv(CAP_ENV, "banana")
    code, _, _ = run(capsys, "density", "--set", "squares", "--checkpoints", "10")
    assert code == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "filterlab.cli", "witness", "--kind", "frechet", "--count", "1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["partition"]["cuts"] == [0, 1]
