import csv
import io
import json

import pytest

from hpgclone.cli import main
from hpgclone.serialize import import_json

from conftest import FOUR_SOURCES, BRANCHING


@pytest.fixture
def files(tmp_path):
    t1 = tmp_path / "branching.txt"
    t1.write_text(BRANCHING)
    f7 = tmp_path / "four_sources.txt"
    f7.write_text(FOUR_SOURCES)
    return tmp_path, t1, f7


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_build(files, capsys):
    tmp, t1, _ = files
    code, out, _ = run(capsys, "build", t1, "--alpha", 0, "--out", tmp / "m.json",
                       "--dot", tmp / "m.dot")
    assert code == 0
    stats = json.loads(out)
    assert stats["format_version"] == 1
    assert stats["model"]["states"] == 8
    assert stats["model"]["links"] == 10
    assert stats["dataset"]["sessions"] == 8
    assert "3 (0.375)" in (tmp / "m.dot").read_text()
    assert import_json((tmp / "m.json").read_text()).n_states == 8


def test_build_alpha_half(files, capsys):
    tmp, t1, _ = files
    run(capsys, "build", t1, "--alpha", 0.5, "--out", tmp / "m.json")
    m = import_json((tmp / "m.json").read_text())
    from hpgclone.model import START_STATE, StateId
    a3 = StateId(m.page_index("A3"))
    assert m.prob(START_STATE, a3) == pytest.approx(0.0625, abs=1e-12)


def test_missing_file(files, capsys):
    tmp, _, _ = files
    code, _, err = run(capsys, "build", tmp / "missing.txt", "--out", tmp / "m.json")
    assert code == 2
    assert "missing.txt" in err


def test_parse_error_exit(files, capsys):
    tmp, _, _ = files
    bad = tmp / "bad.txt"
    bad.write_text("A B *0\n")
    code, _, err = run(capsys, "build", bad, "--out", tmp / "m.json")
    assert code == 1
    assert "line 1" in err


@pytest.mark.parametrize("gamma,total", [(0, 1), (1, 0)])
def test_clone_branching(files, capsys, gamma, total):
    tmp, t1, _ = files
    code, out, _ = run(capsys, "clone", t1, "--gamma", gamma, "--support", 0,
                       "--out", tmp / "c.json", "--report-csv", tmp / "r.csv")
    assert code == 0
    assert json.loads(out)["cloning"]["clones_total"] == total
    rows = list(csv.DictReader(io.StringIO((tmp / "r.csv").read_text())))
    assert [r["page"] for r in rows] == ["A1", "A2", "A3", "A4", "A5", "A6"]


def test_clone_from_model_json(files, capsys):
    tmp, t1, _ = files
    run(capsys, "build", t1, "--out", tmp / "m.json")
    code, out, _ = run(capsys, "clone", tmp / "m.json", "--sessions", t1, "--support", 0,
                       "--out", tmp / "c.json")
    assert code == 0
    assert json.loads(out)["model"]["states"] == 9
    code, _, err = run(capsys, "clone", tmp / "m.json", "--out", tmp / "c.json")
    assert code == 2 and "--sessions" in err
    code, _, err = run(capsys, "clone", tmp / "c.json", "--sessions", t1, "--out", tmp / "d.json")
    assert code == 1 and "clones" in err


def test_clone_four_sources(files, capsys):
    tmp, _, f7 = files
    code, out, _ = run(capsys, "clone", f7, "--gamma", 0.1, "--support", 0, "--seed", 3,
                       "--out", tmp / "c.json")
    assert json.loads(out)["cloning"]["clones_total"] == 1


def test_ngram(files, capsys):
    tmp, t1, _ = files
    code, out, _ = run(capsys, "ngram", t1, "--order", 3, "--out", tmp / "n.json")
    stats = json.loads(out)
    assert stats["model"]["states"] == 7
    assert round(stats["ngram"]["theoretical_drop_fraction"] * 100, 2) == pytest.approx(38.28)
    code, out, _ = run(capsys, "ngram", t1, "--order", 2)
    assert json.loads(out)["ngram"]["dropped_fraction"] == 0.0
    code, _, err = run(capsys, "ngram", t1, "--order", 5)
    assert code == 1 and "5-gram" in err


def test_gen_deterministic(files, capsys):
    tmp, _, _ = files
    outs = []
    for name in ("a", "b"):
        code, out, _ = run(capsys, "gen", "--pages", 50, "--sessions", 100, "--seed", 4,
                           "--out", tmp / f"{name}.txt")
        assert code == 0
        outs.append(((tmp / f"{name}.txt").read_text(),
                     (tmp / f"{name}.topology.csv").read_text()))
    assert outs[0] == outs[1]
    assert outs[0][1].startswith("source,target\n")
    assert json.loads(out)["dataset"]["sessions"] == 100


def test_gen_single_page(files, capsys):
    tmp, _, _ = files
    code, out, _ = run(capsys, "gen", "--pages", 1, "--sessions", 20, "--out", tmp / "s.txt",
                       "--topology", tmp / "t.csv")
    assert json.loads(out)["dataset"]["max_session_length"] == 1


def test_sweep_file(files, capsys):
    tmp, t1, _ = files
    code, _, _ = run(capsys, "sweep", t1, "--gammas", "0,0.5,1", "--orders", "2,3,4",
                     "--support", 0, "--csv", tmp / "s.csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO((tmp / "s.csv").read_text())))
    assert list(rows[0]) == ["dataset", "method", "states", "time_ms", "clones_avg",
                             "clones_stdev"]
    methods = [r["method"] for r in rows]
    assert methods == ["FO", "ngram-3", "ngram-4", "DC-0", "DC-0.5", "DC-1"]
    dc = [int(r["states"]) for r in rows if r["method"].startswith("DC")]
    assert dc == sorted(dc, reverse=True)


def test_sweep_synthetic_stdout(capsys):
    code, out, _ = run(capsys, "sweep", "--synthetic", "300", "--gammas", "0,1",
                       "--orders", "2,3,4,5")
    rows = list(csv.DictReader(io.StringIO(out)))
    states = {r["method"]: int(r["states"]) for r in rows}
    assert states["FO"] < states["ngram-3"] < states["ngram-4"] < states["ngram-5"]


def test_sweep_usage_errors(files, capsys):
    _, t1, _ = files
    with pytest.raises(SystemExit) as err:
        main(["sweep", str(t1), "--gammas", ""])
    assert err.value.code == 2
    code, _, _ = run(capsys, "sweep")
    assert code == 2


def test_trails(files, capsys):
    tmp, t1, _ = files
    run(capsys, "build", t1, "--out", tmp / "m.json")
    run(capsys, "clone", t1, "--support", 0, "--out", tmp / "c.json")
    _, out, _ = run(capsys, "trails", tmp / "m.json", "--cutpoint", 0.15)
    assert "0.1875\tA1 A2 A3" in out.splitlines()
    _, out, _ = run(capsys, "trails", tmp / "c.json", "--cutpoint", 0.15, "--json")
    trails = {tuple(t["trail"]): t["probability"] for t in json.loads(out)}
    assert trails[("A1", "A2", "A3")] == 0.375
    assert ("A1", "A2", "A6") not in trails
    with pytest.raises(SystemExit) as err:
        main(["trails", str(tmp / "m.json"), "--cutpoint", "0"])
    assert err.value.code == 2


def test_bad_model_file(files, capsys):
    tmp, _, _ = files
    bad = tmp / "bad.json"
    bad.write_text('{"format_version": 1}')
    code, _, err = run(capsys, "trails", bad, "--cutpoint", 0.5)
    assert code == 1 and "invalid model" in err
