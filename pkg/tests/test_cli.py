import csv
import json

import pytest

from cohortnet import cli, ingest
from conftest import FakeOpenAlex
from examples_catalog import raw_auth, raw_work

SPEC = {
    "n_authors": 240, "span": [2004, 2012], "yearly_stop_hazard": 0.15, "seed": 2,
    "community_blocks": [{"size": 60, "p_in": 0.08, "p_out": 0.004}] * 4,
    "reorganization_year": 2009,
}


@pytest.fixture(scope="module")
def cache(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = root / "spec.json"
    spec.write_text(json.dumps(SPEC))
    assert cli.main(["synth", "--spec", str(spec), "--out", str(root / "corpus")]) == 0
    return root / "corpus"


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_synth_writes_cache_and_truth(cache):
    assert (cache / "truth.json").exists()
    assert ingest.find_cache(cache)[1].complete


def test_yaml_spec(tmp_path):
    import yaml

    spec = tmp_path / "spec.yaml"
    spec.write_text(yaml.safe_dump({"n_authors": 10, "span": [2000, 2002], "seed": 1}))
    assert cli.main(["synth", "--spec", str(spec), "--out", str(tmp_path / "c")]) == 0


def test_windows(cache, tmp_path):
    out = tmp_path / "w.csv"
    assert cli.main(["windows", "--cache", str(cache), "--k", "3", "--out", str(out)]) == 0
    rows = read(out)
    assert rows[0] == ["label", "start", "end", "n_authors"]
    assert rows[1][:3] == ["2006", "2004", "2006"] and len(rows) == 8


def test_turnover_from_cache_and_from_windows_csv(cache, tmp_path):
    direct = tmp_path / "t1.csv"
    assert cli.main(["turnover", "--windows", str(cache), "--k", "3", "--out", str(direct)]) == 0
    wins = tmp_path / "w.csv"
    cli.main(["windows", "--cache", str(cache), "--k", "3", "--out", str(wins)])
    via = tmp_path / "t2.csv"
    assert cli.main(["turnover", "--windows", str(wins), "--cache", str(cache), "--out", str(via)]) == 0
    assert read(direct) == read(via)
    assert read(direct)[0] == ["from", "to", "jaccard", "churn", "n_from", "n_to", "n_intersection"]


def test_survival_modes(cache, tmp_path):
    km, co = tmp_path / "km.csv", tmp_path / "co.csv"
    assert cli.main(["survival", "--cache", str(cache), "--mode", "km", "--censor-gap", "1", "--out", str(km)]) == 0
    assert cli.main(["survival", "--cache", str(cache), "--mode", "cohort", "--out", str(co)]) == 0
    assert read(km)[0] == ["t", "survival", "at_risk", "events"]
    assert read(co)[0] == ["cohort_year", "lag", "fraction", "cohort_size"]
    assert read(co)[1][:3] == ["2004", "0", "1.0"]


def test_network_and_edges(cache, tmp_path):
    out, edges = tmp_path / "m.json", tmp_path / "e.csv"
    assert cli.main(["network", "--cache", str(cache), "--year", "2010", "--out", str(out),
                     "--edges", str(edges)]) == 0
    metrics = json.loads(out.read_text())
    assert {"n_nodes", "n_edges", "avg_clustering", "assortativity", "lcc_ratio", "excluded_works"} <= set(metrics)
    assert len(read(edges)) == metrics["n_edges"] + 1


@pytest.mark.parametrize("extra", [[], ["--null", "rewire"], ["--null", "er", "--strategy", "random"], ["--static"]])
def test_attack(cache, tmp_path, capsys, extra):
    out = tmp_path / "a.csv"
    assert cli.main(["attack", "--cache", str(cache), "--year", "2010", "--out", str(out), *extra]) == 0
    rows = read(out)
    assert rows[0] == ["r", "lcc_ratio"] and rows[1][0] == "0.0" and rows[-1][0] == "1.0"
    assert "r* =" in capsys.readouterr().err


def test_community(cache, tmp_path):
    out = tmp_path / "c.csv"
    assert cli.main(["community", "--cache", str(cache), "--k", "3", "--out", str(out)]) == 0
    rows = read(out)
    assert rows[0] == ["from", "to", "n_common", "nmi", "ari"] and len(rows) == 7


def test_report(cache, tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(f"cache: {cache}\nout_dir: rep\nk: 3\nseed: 4\n")
    assert cli.main(["report", "--config", str(cfg)]) == 0
    assert len(list((tmp_path / "rep").glob("*.csv"))) == 8
    assert "fig4_km.csv" in capsys.readouterr().out


def test_ingest_resolves_names(tmp_path, monkeypatch, capsys):
    recs = [raw_work(f"W{i}", 2004, [raw_auth("A1", "I27837315")]) for i in range(3)]
    fake = FakeOpenAlex(recs)
    real = ingest.OpenAlexClient
    monkeypatch.setattr(ingest, "OpenAlexClient", lambda **kw: real(session=fake, sleep=lambda s: None, **kw))
    code = cli.main(["ingest", "--institution", "University of Maribor", "--from", "2004", "--to", "2004",
                     "--cache", str(tmp_path), "--mailto", "x@y.org"])
    assert code == 0
    assert fake.calls[0]["url"].endswith("/institutions")
    assert fake.calls[1]["mailto"] == "x@y.org"
    assert (tmp_path / "I27837315_2004_2004.ndjson").exists()
    assert "3 records" in capsys.readouterr().out


def test_library_errors_become_exit_code(tmp_path, capsys):
    bad = tmp_path / "s.json"
    bad.write_text(json.dumps({"n_authors": 0}))
    assert cli.main(["synth", "--spec", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "InvalidSpec" in capsys.readouterr().err
