from __future__ import annotations

import json

import pytest

from evolab import cli


@pytest.fixture(autouse=True)
def _isolated_budget(monkeypatch):
    # main() writes the budget into os.environ; setenv first so teardown restores it
    monkeypatch.setenv("EVOLAB_BUDGET", "0")
    monkeypatch.delenv("EVOLAB_BUDGET")


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_dims_with_extra_params(capsys):
    code, out, _ = _run(capsys, "dims", "--family", "bool_mod2", "--n", "2", "--T", "5", "--gamma", "1/2", "--ldim")
    assert code == 0
    d = json.loads(out)
    assert d["C"] == [0, 1, 2, 2, 2, 2]
    assert d["E_gamma"]["1/2"] >= 1
    assert d["littlestone_dim"] is not None


def test_game_single(capsys, tmp_path):
    csv_path = tmp_path / "rounds.csv"
    code, out, _ = _run(capsys, "game", "--family", "bool_mod2", "--n", "2", "--learner", "alg1",
                        "--adversary", "tree_deterministic", "--T", "4", "--csv", str(csv_path))
    assert code == 0
    assert json.loads(out)["mistakes"] >= 2
    assert csv_path.read_text().splitlines()[0].startswith("t,")


def test_game_monte_carlo_config(capsys, tmp_path):
    cfg = {
        "family": {"family": "thresholds_grid", "params": {"m": 2}},
        "learner": {"learner": "ew_markovian"},
        "adversary": {"adversary": "two_function"},
        "T": 10,
        "trials": 20,
        "seed": 1,
        "metric": "markovian",
    }
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = _run(capsys, "game", "--config", str(path))
    assert code == 0
    first = out
    assert json.loads(out)["trials"] == 20
    assert _run(capsys, "game", "--config", str(path))[1] == first


def test_stream_then_replay(capsys, tmp_path):
    code, out, _ = _run(capsys, "stream", "--family", "bool_mod2", "--n", "2", "--adversary", "random_stream", "--T", "6", "--seed", "2")
    assert code == 0
    path = tmp_path / "s.csv"
    path.write_text(out)
    code, out, _ = _run(capsys, "game", "--family", "bool_mod2", "--n", "2", "--learner", "persistence", "--stream", str(path))
    assert code == 0
    assert len(json.loads(out)["rounds"]) == 6


def test_family_export_and_info(capsys):
    code, out, _ = _run(capsys, "family", "export", "--family", "full", "--size", "2")
    assert code == 0 and out.splitlines()[0] == "member,state,next_state"
    code, out, _ = _run(capsys, "family", "info", "--family", "full", "--size", "2")
    assert code == 0 and "4" in out


def test_exit_codes(capsys, tmp_path):
    assert _run(capsys, "dims", "--family", "nope")[0] == 2
    assert _run(capsys, "game", "--config", str(tmp_path / "missing.json"))[0] == 1
    code, _, err = _run(capsys, "--budget", "10", "game", "--family", "bool_mod2", "--n", "2", "--learner", "flow_experts",
                        "--adversary", "random_stream", "--T", "12")
    assert code == 3 and "budget" in err
    code, _, err = _run(capsys, "game", "--family", "separation", "--m", "3", "--zmax", "9", "--learner", "alg1",
                        "--adversary", "separation_flow", "--T", "5")
    assert code == 2 and err


def test_verify_suite(capsys):
    code, out, err = _run(capsys, "verify", "dimensions")
    assert code == 0
    assert "[PASS] criterion 07" in err
    payload = json.loads(out)
    assert payload["passed"] and [r["criterion"] for r in payload["results"]] == [7, 8, 9, 11]
