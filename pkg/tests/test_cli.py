import json
import math
import subprocess
import sys

import pytest

from gqht.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def run_json(capsys, *argv):
    code, out = run(capsys, *argv, "--output", "json")
    assert code == 0, out.err
    return json.loads(out.out)


def test_bench_c8(capsys):
    d = run_json(capsys, "bench", "--group", "C:8")
    assert d["max_queries"] == 7 and d["expected_queries"] == "7/1" and d["all_correct"] is True


def test_bench_a4(capsys):
    assert run_json(capsys, "bench", "--group", "A4")["expected_queries"] == "29/2"


def test_bench_is_deterministic_and_round_trips(capsys):
    _, a = run(capsys, "bench", "--group", "D:3", "--output", "json")
    _, b = run(capsys, "bench", "--group", "D:3", "--output", "json")
    assert a.out == b.out
    d = json.loads(a.out)
    assert json.loads(json.dumps(d, sort_keys=True)) == d
    assert list(d["counts"]) == sorted(d["counts"])


def test_decide_c3(capsys):
    d = run_json(capsys, "decide", "--group", "C:3", "--hidden", "1")
    assert d["total_queries"] == 6 and d["bits"] == [0, 1] and d["recovered"] == "1"


def test_decide_seeded(capsys):
    a = run_json(capsys, "decide", "--group", "D:5", "--seed", "3")
    b = run_json(capsys, "decide", "--group", "D:5", "--seed", "3")
    assert a == b and a["recovered"] == a["hidden"]


def test_phases(capsys):
    spec = json.dumps({"points": [[1, 1], [0.5, 0], [-0.5, 0]], "parity": "odd", "min_gap": 2.0})
    d = run_json(capsys, "phases", "--targets", spec)
    assert d["degree"] == 3 and d["prep"] == "0" and len(d["phases"]) == 4


def test_phases_from_file(capsys, tmp_path):
    f = tmp_path / "t.json"
    f.write_text(json.dumps({"points": [[1, 1]], "parity": 1}))
    assert run_json(capsys, "phases", "--targets", f"@{f}")["degree"] == 1


def test_noise(capsys):
    d = run_json(capsys, "noise", "--group", "C:4", "--epsilon", "1e-3", "--trials", "5", "--seed", "1")
    assert set(d["peeling"]) >= {"epsilon", "n_j", "distance", "bound", "holds"}
    assert d["peeling"]["holds"] and 0 <= d["failure_rate"] <= 1


def test_frame(capsys):
    d = run_json(capsys, "frame", "--angles", json.dumps([0, 2 * math.pi / 3, 4 * math.pi / 3]), "--hidden", str(2 * math.pi / 3))
    assert d["index"] == 1 and d["rounds"] == 6 and len(d["logs"]) == 6


def test_baseline(capsys):
    d = run_json(capsys, "baseline", "--group", "C:8")
    assert d["protocol_expected_queries"] == "7/1" and d["ratio"] >= 2


def test_table_output(capsys):
    code, out = run(capsys, "bench", "--group", "C:2")
    assert code == 0 and "expected_queries: 1/1" in out.out


@pytest.mark.parametrize(
    "argv",
    [
        ["bench"],
        ["bench", "--group", "Q:3"],
        ["bench", "--group", "C:0"],
        ["decide", "--group", "C:3", "--hidden", "5"],
        ["noise", "--group", "C:3", "--epsilon", "-1"],
        ["noise", "--group", "C:3", "--epsilon", "0.1", "--trials", "0"],
        ["phases", "--targets", "{not json"],
        ["phases", "--targets", '{"points": [[0.5, 2]], "parity": "odd"}'],
        ["frame", "--angles", "[0, 3]", "--hidden", "1"],
        ["bench", "--group", "C:3", "--output", "xml"],
        ["launch"],
    ],
)
def test_bad_flags_exit_2(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_nondeterministic_exit_1(capsys, monkeypatch):
    # the bisection needs outcome probabilities within eps_det of 0 or 1; a
    # perturbed oracle violates that and must be reported as exit code 1
    import gqht.protocols as protocols
    from gqht.su2_core import rx

    real = protocols.HiddenChannelOracle.for_element

    def skewed(rep, label, channel_noise=None):
        return real(rep, label, lambda u: rx(0.05) @ u)

    monkeypatch.setattr(protocols.HiddenChannelOracle, "for_element", staticmethod(skewed))
    code, out = run(capsys, "decide", "--group", "C:3", "--hidden", "0")
    assert code == 1 and "NonDeterministicOutcomeError" in out.err


@pytest.mark.parametrize(
    "argv, name",
    [
        # 0.49999 and 0.50001 are two classes that must get opposite bits
        (["frame", "--angles", "[0, 2.0944, 4.18879]", "--hidden", "2.0944"], "ProtocolConstructionError"),
        (["phases", "--targets", '{"points": [[0.5, 1], [0.49, 0]], "parity": "odd"}'], "InfeasibleTargetError"),
    ],
)
def test_unbuildable_input_exit_1(capsys, argv, name):
    code, out = run(capsys, *argv)
    assert code == 1 and name in out.err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gqht", "bench", "--group", "C:4", "--output", "json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["max_queries"] == 3
