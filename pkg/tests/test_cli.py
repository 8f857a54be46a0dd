import json

import numpy as np
import pytest

from kesbn.cli import main, summary_from_json, summary_to_json
from kesbn.data import EXAMPLE1_G1_ARCS, EXAMPLE1_G2_ARCS, Dataset, load_csv, save_csv
from kesbn.graph import Dag, Fingerprint, fingerprint

G1 = fingerprint(Dag(4, EXAMPLE1_G1_ARCS))
G2 = fingerprint(Dag(4, EXAMPLE1_G2_ARCS))


@pytest.fixture(scope="module")
def trap_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "trap1.csv"
    assert main(["trapgen", "--groups", "1", "--rows", "20000", "--seed", "7", "--out", str(path)]) == 0
    return path


def read(path):
    return json.loads(path.read_text())


class TestTrapgen:
    def test_shape(self, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["trapgen", "--groups", "10", "--rows", "20000", "--seed", "1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 20001 and len(lines[0].split(",")) == 40

    def test_header_only(self, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["trapgen", "--groups", "1", "--rows", "0", "--out", str(out)]) == 0
        assert out.read_text().splitlines() == ["X1,Y1,Z1,U1"]

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            main(["trapgen", "--groups", "2", "--rows", "500", "--seed", "3", "--out", str(p)])
        assert a.read_bytes() == b.read_bytes()


BN_CHAIN = {
    "schema": "kesbn.bayesnet/1",
    "variables": [{"name": "A", "states": ["a0", "a1"]}, {"name": "B", "states": ["b0", "b1"]}],
    "arcs": [["A", "B"]],
    "cpts": {"A": [0.3, 0.7], "B": [[0.9, 0.1], [0.2, 0.8]]},
}


class TestSample:
    def test_chain(self, tmp_path):
        bn, out = tmp_path / "bn.json", tmp_path / "s.csv"
        bn.write_text(json.dumps(BN_CHAIN))
        assert main(["sample", "--bn", str(bn), "--rows", "10", "--seed", "0", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 11

    def test_deterministic_network(self, tmp_path):
        spec = json.loads(json.dumps(BN_CHAIN))
        spec["cpts"] = {"A": [1.0, 0.0], "B": [[0.0, 1.0], [0.0, 1.0]]}
        bn, out = tmp_path / "bn.json", tmp_path / "s.csv"
        bn.write_text(json.dumps(spec))
        assert main(["sample", "--bn", str(bn), "--rows", "20", "--out", str(out)]) == 0
        rows = out.read_text().splitlines()[1:]
        assert set(rows) == {"a0,b1"}

    def test_malformed(self, tmp_path, capsys):
        bn = tmp_path / "bn.json"
        bn.write_text('{"schema": "kesbn.bayesnet/1",\n "variables": [}')
        assert main(["sample", "--bn", str(bn), "--rows", "5", "--out", str(tmp_path / "s.csv")]) == 1
        assert "bn.json:2:" in capsys.readouterr().err


class TestLearn:
    def test_independent_data_gives_empty_model(self, tmp_path):
        rng = np.random.default_rng(0)
        d = Dataset(("A", "B", "C"), (2, 2, 2), rng.integers(0, 2, size=(20000, 3)))
        data, out = tmp_path / "d.csv", tmp_path / "r.json"
        save_csv(d, data)
        assert main(["learn", "--data", str(data), "--k", "1", "--out", str(out)]) == 0
        r = read(out)
        assert r["schema_version"] == 1 and r["result"]["arcs"] == []

    def test_bad_k_is_usage_error(self, tmp_path, trap_csv):
        with pytest.raises(SystemExit) as exc:
            main(["learn", "--data", str(trap_csv), "--k", "1.5", "--out", str(tmp_path / "r.json")])
        assert exc.value.code == 2

    def test_missing_file_is_runtime_error(self, tmp_path, capsys):
        assert main(["learn", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "r.json")]) == 1
        assert "error" in capsys.readouterr().err

    def test_deterministic(self, tmp_path, trap_csv):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            main(["learn", "--data", str(trap_csv), "--k", "0.4", "--seed", "5", "--score", "bdeu", "--out", str(p)])
        assert a.read_bytes() == b.read_bytes()

    @pytest.mark.slow
    def test_ses_seed_sweep_finds_both_optima(self, tmp_path, trap_csv):
        out = tmp_path / "r.json"
        found = set()
        for seed in range(200):
            main(["learn", "--data", str(trap_csv), "--k", "0", "--seed", str(seed), "--out", str(out)])
            found.add(Fingerprint.from_json(read(out)["result"]["fingerprint"]))
        assert {G1, G2} <= found


class TestExperiment:
    def test_single_ges_run(self, tmp_path, trap_csv):
        out = tmp_path / "e.json"
        assert main(["experiment", "--data", str(trap_csv), "--k-list", "1", "--runs", "1", "--out", str(out)]) == 0
        (rec,) = read(out)["records"]
        assert rec["better"] == rec["worse"] == 0

    def test_round_trip_and_determinism(self, tmp_path, trap_csv):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert main(["experiment", "--data", str(trap_csv), "--k-list", "0,0.005,0.02,0.1",
                         "--runs", "5", "--seed", "2", "--out", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()
        obj = read(a)
        s = summary_from_json(obj)
        again = summary_to_json(s)
        again["variables"] = obj["variables"]
        assert again == obj

    def test_bad_k_list(self, tmp_path, trap_csv):
        with pytest.raises(SystemExit) as exc:
            main(["experiment", "--data", str(trap_csv), "--k-list", "0,2", "--out", str(tmp_path / "e.json")])
        assert exc.value.code == 2

    @pytest.mark.slow
    def test_two_hundred_runs(self, tmp_path, trap_csv):
        out = tmp_path / "e.json"
        assert main(["experiment", "--data", str(trap_csv), "--k-list", "0,0.4,0.8,1",
                     "--runs", "200", "--out", str(out)]) == 0
        recs = read(out)["records"]
        assert recs[0]["distinct_total"] >= 2
        for r in recs:
            assert r["better"] + r["worse"] + r["equal"] == 200


class TestOracle:
    def test_atlas(self, tmp_path):
        rng = np.random.default_rng(1)
        d = Dataset(("A", "B", "C"), (2, 2, 2), rng.integers(0, 2, size=(100, 3)))
        data, out = tmp_path / "d.csv", tmp_path / "o.json"
        save_csv(d, data)
        assert main(["oracle", "--data", str(data), "--mode", "atlas", "--out", str(out)]) == 0
        assert len(read(out)["classes"]) == 11

    def test_inclusion_optimal_example1(self, tmp_path):
        out = tmp_path / "o.json"
        assert main(["oracle", "--data", "example1", "--mode", "inclusion-optimal", "--out", str(out)]) == 0
        models = read(out)["models"]
        assert sorted(m["dimension"] for m in models) == [19, 23]

    def test_local_optima(self, tmp_path, trap_csv):
        out = tmp_path / "o.json"
        assert main(["oracle", "--data", str(trap_csv), "--mode", "local-optima", "--out", str(out)]) == 0
        strict = [m for m in read(out)["local_optima"] if m["strict"]]
        assert sorted(m["dimension"] for m in strict) == [19, 23]

    def test_too_large(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        main(["trapgen", "--groups", "2", "--rows", "50", "--out", str(data)])
        assert load_csv(data).n == 8
        assert main(["oracle", "--data", str(data), "--mode", "local-optima", "--out", str(tmp_path / "o.json")]) == 1
        assert "at most 4" in capsys.readouterr().err
