import json

import pytest

from lomatch import io as lio
from lomatch.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, run_command
from lomatch.records import LearningObjectRecord


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert run_command(["synth", "--seed", "7", "--n-records", "10", "--n-users", "8", "--out", str(d)]) == 0
    return d


def _run(*argv):
    return run_command([str(a) for a in argv])


class TestSynth:
    def test_artifacts_have_headers(self, synth_dir):
        for name in ("pair_features.csv", "pair_train.csv", "pair_gold.csv", "gold.csv",
                     "ratings.csv", "source.jsonl", "target.jsonl"):
            first = (synth_dir / name).read_text().splitlines()[0]
            assert first.startswith("# lomatch "), name

    def test_needs_seed(self, tmp_path):
        assert _run("synth", "--out", tmp_path) == EXIT_USAGE


class TestPairsAndFeatures:
    def test_full_cross_product(self, synth_dir, tmp_path):
        assert _run("pairs", "--source", synth_dir / "source.jsonl", "--target", synth_dir / "target.jsonl",
                    "--out", tmp_path) == EXIT_OK
        assert len(lio.read_pairs(tmp_path / "pairs.csv")) == 100

    def test_negative_sampling(self, synth_dir, tmp_path):
        assert _run("pairs", "--source", synth_dir / "source.jsonl", "--target", synth_dir / "target.jsonl",
                    "--gold", synth_dir / "gold.csv", "--negative-ratio", 2, "--seed", 1,
                    "--out", tmp_path) == EXIT_OK
        labels = [p.label for p in lio.read_pairs(tmp_path / "pairs.csv")]
        assert labels.count("MATCH") == 10 and labels.count("NON_MATCH") == 20

    def test_features(self, synth_dir, tmp_path):
        assert _run("features", "--source", synth_dir / "source.jsonl", "--target", synth_dir / "target.jsonl",
                    "--gold", synth_dir / "gold.csv", "--out", tmp_path) == EXIT_OK
        fm = lio.read_features(tmp_path / "features.csv")
        assert fm.values.shape == (100, 4)
        assert fm.labels.count("MATCH") == 10


class TestMatchEvaluate:
    def _match(self, synth_dir, out, *extra):
        return _run("match", "--features", synth_dir / "pair_features.csv", "--train",
                    synth_dir / "pair_train.csv", "--seed", 7, "--out", out, *extra)

    def test_byte_identical_reruns(self, synth_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert self._match(synth_dir, d) == EXIT_OK
            assert _run("evaluate", "--decisions", d / "decisions.csv", "--gold", synth_dir / "pair_gold.csv",
                        "--seed", 7, "--out", d) == EXIT_OK
        for name in ("decisions.csv", "validation.json", "report.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_quality(self, synth_dir, tmp_path):
        self._match(synth_dir, tmp_path)
        _run("evaluate", "--decisions", tmp_path / "decisions.csv", "--gold", synth_dir / "pair_gold.csv",
             "--out", tmp_path)
        report = lio.parse_json((tmp_path / "report.json").read_text())
        assert report["F"] >= 0.95

    def test_perfect_decisions(self, synth_dir, tmp_path):
        self._match(synth_dir, tmp_path)
        gold = {p.key: p.label for p in lio.read_pairs(synth_dir / "pair_gold.csv")}
        from dataclasses import replace
        ds = [replace(d, match_label=gold[d.pair.key]) for d in lio.read_decisions(tmp_path / "decisions.csv")]
        lio.write_text(tmp_path / "perfect.csv", lio.dump_decisions(ds))
        _run("evaluate", "--decisions", tmp_path / "perfect.csv", "--gold", synth_dir / "pair_gold.csv",
             "--out", tmp_path)
        report = lio.parse_json((tmp_path / "report.json").read_text())
        assert (report["PRE"], report["REC"], report["F"]) == (1.0, 1.0, 1.0)

    def test_config_file_and_flags(self, synth_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"stage8_threshold": 0.2, "collective": {"enabled": True}}))
        assert self._match(synth_dir, tmp_path, "--config", cfg, "--threshold", 0.1) == EXIT_OK
        v = lio.parse_json((tmp_path / "validation.json").read_text())
        assert v["config"]["stage8_threshold"] == 0.1
        assert v["config"]["collective"]["enabled"] is True

    def test_unknown_config_key(self, synth_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert self._match(synth_dir, tmp_path, "--config", cfg) == EXIT_USAGE

    def test_cv(self, synth_dir, tmp_path):
        assert _run("evaluate", "--cv", "--features", synth_dir / "pair_features.csv", "--gold",
                    synth_dir / "pair_gold.csv", "--seed", 3, "--folds", 5, "--out", tmp_path) == EXIT_OK
        rep = lio.parse_json((tmp_path / "cv_report.json").read_text())
        assert len(rep["folds"]) == 5 and rep["F"] >= 0.9


class TestRecommend:
    def test_writes_recommendations(self, synth_dir, tmp_path):
        assert _run("recommend", "--ratings", synth_dir / "ratings.csv", "--items", synth_dir / "source.jsonl",
                    "--top-k", 3, "--out", tmp_path) == EXIT_OK
        rows = [ln for ln in (tmp_path / "recommendations.csv").read_text().splitlines()[2:]]
        users = {r.split(",")[0] for r in rows}
        assert rows and all(sum(r.startswith(u + ",") for r in rows) <= 3 for u in users)
        rated = {(u, i) for u, i, _ in lio.read_ratings(synth_dir / "ratings.csv")}
        assert not {tuple(r.split(",")[:2]) for r in rows} & rated


class TestErrors:
    def test_unknown_subcommand(self):
        assert run_command(["frobnicate"]) == EXIT_USAGE

    def test_missing_input(self, tmp_path):
        assert _run("ingest", "--records", tmp_path / "nope.jsonl", "--out", tmp_path) == EXIT_USAGE

    def test_malformed_records(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "a", "title": "t"}\n{not json\n')
        assert _run("ingest", "--records", bad, "--out", tmp_path) == EXIT_DATA

    def test_ingest_normalizes(self, tmp_path):
        src = tmp_path / "in.jsonl"
        src.write_text(lio.dump_records([LearningObjectRecord("a", "  Intro ", "Text", frozenset({"X"}), "video")]))
        assert _run("ingest", "--records", src, "--out", tmp_path / "o") == EXIT_OK
        rec = lio.read_records(tmp_path / "o" / "records.jsonl")[0]
        assert rec.id == "a"
