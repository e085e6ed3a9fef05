"""Config loading/validation and end-to-end CLI subcommand behavior."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from diva.cli import main
from diva.config import BackendSpec, load_config
from diva.errors import ConfigError, ScriptExhausted, ValidationError
from diva.evalbench.report import load_report
from diva.scorer import HASHED_DIM

DEMO = Path(__file__).resolve().parent.parent / "fixtures" / "mock_demo"


def _read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def _manifest(out: Path) -> dict:
    return json.loads(Path(str(out) + ".manifest.json").read_text())


@pytest.fixture()
def demo_copy(tmp_path) -> Path:
    """Mutable copy of the demo fixture directory."""
    dest = tmp_path / "demo"
    shutil.copytree(DEMO, dest)
    return dest


class TestLoadConfig:
    def test_defaults_without_file(self):
        cfg = load_config(None)
        assert cfg.retrieval.enabled_sources == frozenset({"web", "local"})
        assert (cfg.retrieval.k_web, cfg.retrieval.k_local) == (10, 3)
        assert cfg.agent.max_turns == 6
        assert cfg.train.margin == 0.1
        assert cfg.train.epochs == 3
        assert cfg.architecture == "linear"
        assert cfg.feature_dim == HASHED_DIM
        assert (cfg.seed, cfg.parallelism) == (0, 1)
        assert all(spec.kind == "mock" for spec in cfg.backends.values())

    def test_file_values_override_defaults(self):
        cfg = load_config(DEMO / "config.ini")
        assert cfg.corpus_path == "corpus.jsonl"
        assert cfg.web_fixtures == "web_fixtures.json"
        assert cfg.base_dir == DEMO
        assert cfg.resolve("corpus.jsonl") == DEMO / "corpus.jsonl"
        assert cfg.backends["search"].script_path == "scripts/search_script.json"

    def test_overrides_beat_file(self):
        cfg = load_config(DEMO / "config.ini", {"run.seed": "7", "retrieval.k_local": "5"})
        assert cfg.seed == 7
        assert cfg.train.seed == 7  # run seed feeds training too
        assert cfg.retrieval.k_local == 5

    def test_absolute_paths_pass_through(self):
        cfg = load_config(DEMO / "config.ini")
        assert cfg.resolve("/abs/path.jsonl") == Path("/abs/path.jsonl")

    def test_all_problems_reported_at_once(self):
        bad = {
            "retrieval.k_web": "0",
            "train.margin": "-1",
            "agent.max_turns": "soon",
            "train.schedule": "linear_warmup",
        }
        with pytest.raises(ConfigError) as exc_info:
            load_config(None, bad)
        problems = exc_info.value.problems
        assert len(problems) >= 4
        joined = "\n".join(problems)
        assert "retrieval.k_web" in joined
        assert "train.margin" in joined
        assert "agent.max_turns" in joined
        assert "train.schedule" in joined

    def test_unknown_override_rejected(self):
        with pytest.raises(ConfigError, match="unknown override"):
            load_config(None, {"retrieval.k_webb": "10"})
        with pytest.raises(ConfigError, match="section.key"):
            load_config(None, {"just_a_key": "10"})

    def test_unknown_file_keys_rejected(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text("[retrieval]\nk_webz = 4\n\n[mystery]\nx = 1\n")
        with pytest.raises(ConfigError) as exc_info:
            load_config(ini)
        joined = "\n".join(exc_info.value.problems)
        assert "k_webz" in joined and "mystery" in joined

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.ini")

    def test_remote_backend_requires_endpoint(self):
        with pytest.raises(ConfigError, match="search_endpoint"):
            load_config(None, {"backends.search": "remote"})

    def test_invalid_sources_rejected(self):
        with pytest.raises(ConfigError, match="subset"):
            load_config(None, {"retrieval.sources": "web,intranet"})

    def test_custom_sentinels(self):
        cfg = load_config(None, {"agent.sentinels": "DONE , ALL_SET"})
        assert cfg.agent.sentinels == ("DONE", "ALL_SET")


class TestRunConfigHelpers:
    def test_web_client_none_when_disabled_or_unconfigured(self):
        assert load_config(None, {"retrieval.sources": "local"}).web_client() is None
        assert load_config(None).web_client() is None  # replay with no fixtures

    def test_web_client_built_from_demo(self):
        client = load_config(DEMO / "config.ini").web_client()
        assert client is not None and client.mode == "replay"

    def test_make_backend_none_kind(self):
        cfg = load_config(None, {"backends.verify": "none"})
        assert cfg.make_backend("verify") is None

    def test_make_backend_fresh_script_per_call(self):
        cfg = load_config(DEMO / "config.ini")
        b1 = cfg.make_backend("search")
        b2 = cfg.make_backend("search")
        assert b1.script is not b2.script
        assert b1.script.remaining == b2.script.remaining  # same turns, independent cursors

    def test_make_backend_missing_script_file(self):
        cfg = load_config(DEMO / "config.ini")
        cfg.backends["search"] = BackendSpec(kind="mock", script_path="missing.json")
        with pytest.raises(ValidationError, match="not found"):
            cfg.make_backend("search")

    def test_make_backend_malformed_script_file(self, tmp_path):
        bad = tmp_path / "s.json"
        bad.write_text('{"turns": [["only-one-element"]]}')
        cfg = load_config(None)
        cfg.backends["search"] = BackendSpec(kind="mock", script_path=str(bad))
        with pytest.raises(ValidationError, match="matcher, reply"):
            cfg.make_backend("search")

    def test_config_echo_shape(self):
        echo = load_config(DEMO / "config.ini").config_echo()
        assert echo["sources"] == "local+web"
        assert echo["enabled_sources"] == ["local", "web"]
        assert echo["binary_f1_protocol"] == "pairwise-majority induced labels"
        assert echo["web_mode"] == "replay"
        assert "endpoint" not in json.dumps(echo)  # no secrets or URLs


class TestCliPipeline:
    """Drive every subcommand over the bundled offline demo fixtures."""

    def test_search_compress_rank(self, demo_copy, tmp_path):
        traj = tmp_path / "traj.jsonl"
        code = main(
            ["--config", str(demo_copy / "config.ini"), "search",
             "--input", str(demo_copy / "bench.jsonl"), "--out", str(traj)]
        )
        assert code == 0
        manifest = _manifest(traj)
        assert manifest["command"] == "search"
        assert manifest["counts"]["items"] == 5
        assert manifest["counts"]["sentinel"] == 5  # every demo loop ends cleanly
        assert "duration_s" in manifest

        ctx = tmp_path / "ctx.jsonl"
        code = main(
            ["--config", str(demo_copy / "config.ini"), "compress",
             "--traj", str(traj), "--items", str(demo_copy / "bench.jsonl"),
             "--out", str(ctx)]
        )
        assert code == 0
        rows = _read_jsonl(ctx)
        assert len(rows) == 15  # 5 questions x 3 answers
        assert {"question_id", "answer_id", "useful_facts", "reasoning", "verdict"} <= set(rows[0])

        ranked = tmp_path / "rank.jsonl"
        code = main(
            ["--config", str(demo_copy / "config.ini"), "rank",
             "--head", str(demo_copy / "head.json"), "--ctx", str(ctx),
             "--out", str(ranked)]
        )
        assert code == 0
        venice = next(r for r in _read_jsonl(ranked) if r["question_id"] == "venice")
        ids = [entry["answer_id"] for entry in venice["ranking"]]
        scores = [entry["score"] for entry in venice["ranking"]]
        assert ids == ["Answer1", "Answer2", "Answer3"]
        assert scores == pytest.approx([0.4448, 0.3479, 0.2119], abs=1e-6)
        assert not any(entry["tie"] for entry in venice["ranking"])

    def test_score_outputs_per_row(self, demo_copy, tmp_path):
        traj, ctx, scored = (tmp_path / n for n in ("t.jsonl", "c.jsonl", "s.jsonl"))
        base = ["--config", str(demo_copy / "config.ini")]
        assert main(base + ["search", "--input", str(demo_copy / "bench.jsonl"), "--out", str(traj)]) == 0
        assert main(base + ["compress", "--traj", str(traj), "--items", str(demo_copy / "bench.jsonl"), "--out", str(ctx)]) == 0
        assert main(base + ["score", "--head", str(demo_copy / "head.json"), "--ctx", str(ctx), "--out", str(scored)]) == 0
        rows = _read_jsonl(scored)
        assert len(rows) == 15
        venice = {r["answer_id"]: r["score"] for r in rows if r["question_id"] == "venice"}
        assert venice["Answer1"] == pytest.approx(0.4448, abs=1e-6)

    def test_eval_writes_report_and_table(self, demo_copy, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = main(
            ["--config", str(demo_copy / "config.ini"), "eval",
             "--bench", str(demo_copy / "bench.jsonl"), "--mode", "diva",
             "--head", str(demo_copy / "head.json"), "--report", str(report_path)]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "mode: diva" in out and "sources: local+web" in out
        assert "overall" in out
        report = load_report(report_path)
        assert report.overall.n_items == 5
        assert report.overall.precision_at_1 == 1.0
        assert report.overall.kendall_tau == 1.0
        assert set(report.per_dataset) == {"2wiki", "bamboogle", "musique", "nq", "triviaqa"}
        manifest = _manifest(report_path)
        assert manifest["counts"] == {"items": 5, "precision_at_1": 1.0, "kendall_tau": 1.0}

    def test_eval_sources_flag_restricts_retrieval(self, demo_copy, tmp_path):
        report_path = tmp_path / "report.json"
        code = main(
            ["--config", str(demo_copy / "config.ini"), "eval",
             "--bench", str(demo_copy / "bench.jsonl"), "--mode", "diva",
             "--sources", "local",
             "--head", str(demo_copy / "head.json"), "--report", str(report_path)]
        )
        assert code == 0
        manifest = _manifest(report_path)
        assert manifest["config"]["sources"] == "local"
        assert manifest["config"]["enabled_sources"] == ["local"]

    def test_build_pairs(self, demo_copy, tmp_path):
        out = tmp_path / "pairs.jsonl"
        code = main(
            ["--config", str(demo_copy / "config.ini"), "build-pairs",
             "--questions", str(demo_copy / "questions.jsonl"), "--out", str(out), "--n", "3"]
        )
        assert code == 0
        counts = _manifest(out)["counts"]
        assert counts == {
            "questions": 3, "no_valid_pair": 1, "unverified": 0, "dropped": 0, "exported": 2
        }
        rows = _read_jsonl(out)
        assert {r["question_id"] for r in rows} == {"pq1", "pq2"}
        assert all(r["verified"] for r in rows)

    def test_build_bench_and_review_cycle(self, demo_copy, tmp_path):
        bench_out = tmp_path / "bench.jsonl"
        code = main(
            ["--config", str(demo_copy / "config.ini"), "build-bench",
             "--questions", str(demo_copy / "questions.jsonl"), "--out", str(bench_out), "--n", "3"]
        )
        assert code == 0
        counts = _manifest(bench_out)["counts"]
        assert counts["items"] == 1
        skipped = {entry["id"]: entry["reason"] for entry in counts["skipped"]}
        assert skipped == {
            "pq2": "no intermediate answer in pool",
            "pq3": "question not verifiable",
        }
        items = _read_jsonl(bench_out)
        assert items[0]["review_status"] == "pending"

        review = tmp_path / "review.jsonl"
        assert main(["review", "export", "--bench", str(bench_out), "--out", str(review)]) == 0
        review_rows = _read_jsonl(review)
        assert review_rows[0]["decisions"] == []
        review_rows[0]["decisions"] = ["accept"]
        review.write_text("\n".join(json.dumps(r) for r in review_rows) + "\n")

        final = tmp_path / "bench_final.jsonl"
        code = main(
            ["review", "import", "--bench", str(bench_out),
             "--review", str(review), "--out", str(final)]
        )
        assert code == 0
        assert _manifest(final)["counts"]["accepted"] == 1
        assert _read_jsonl(final)[0]["review_status"] == "accepted"

    def test_train_on_built_pairs(self, demo_copy, tmp_path):
        pairs = tmp_path / "pairs.jsonl"
        base = ["--config", str(demo_copy / "config.ini")]
        assert main(base + ["build-pairs", "--questions", str(demo_copy / "questions.jsonl"), "--out", str(pairs), "--n", "3"]) == 0
        head_out = tmp_path / "head.json"
        assert main(base + ["train", "--pairs", str(pairs), "--out", str(head_out)]) == 0
        manifest = _manifest(head_out)
        assert manifest["counts"]["pairs"] == 2
        losses = manifest["counts"]["epoch_mean_losses"]
        assert len(losses) == 3 and losses == sorted(losses, reverse=True)
        checkpoint = json.loads(head_out.read_text())
        assert checkpoint["architecture"] == "linear"

    def test_select_best_of_n(self, demo_copy, tmp_path):
        out = tmp_path / "select.jsonl"
        code = main(
            ["--config", str(demo_copy / "config.ini"), "select",
             "--input", str(demo_copy / "select.jsonl"),
             "--head", str(demo_copy / "head.json"), "--out", str(out)]
        )
        assert code == 0
        rows = {r["id"]: r for r in _read_jsonl(out)}
        assert rows["venice"]["selected_text"] == "Ponte di Rialto"
        assert rows["venice"]["token_f1"] == pytest.approx(0.4)
        manifest = _manifest(out)
        assert manifest["counts"]["mean_token_f1"] == pytest.approx(
            sum(r["token_f1"] for r in rows.values()) / len(rows)
        )


class TestCliErrors:
    def test_validation_error_exit_1(self, capsys):
        assert main(["eval", "--bench", "x.jsonl", "--mode", "nonsense", "--report", "r.json"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_set_override_exit_1(self, demo_copy, capsys):
        code = main(
            ["--config", str(demo_copy / "config.ini"), "--set", "garbage",
             "search", "--input", str(demo_copy / "bench.jsonl"), "--out", "/tmp/x.jsonl"]
        )
        assert code == 1
        assert "SECTION.KEY=VALUE" in capsys.readouterr().err

    def test_config_error_exit_1(self, demo_copy, capsys):
        code = main(
            ["--config", str(demo_copy / "config.ini"), "--set", "retrieval.k_web=0",
             "search", "--input", str(demo_copy / "bench.jsonl"), "--out", "/tmp/x.jsonl"]
        )
        assert code == 1
        assert "k_web" in capsys.readouterr().err

    def test_missing_corpus_exit_1(self, demo_copy, tmp_path, capsys):
        (demo_copy / "corpus.jsonl").unlink()
        code = main(
            ["--config", str(demo_copy / "config.ini"), "search",
             "--input", str(demo_copy / "bench.jsonl"), "--out", str(tmp_path / "t.jsonl")]
        )
        assert code == 1
        assert "corpus file not found" in capsys.readouterr().err

    def test_review_import_requires_review_file(self, demo_copy):
        assert main(["review", "import", "--bench", str(demo_copy / "bench.jsonl"), "--out", "/tmp/x.jsonl"]) == 1

    def test_exhausted_script_exit_2(self, demo_copy, tmp_path, capsys):
        (demo_copy / "scripts" / "search_script.json").write_text('{"turns": []}')
        code = main(
            ["--config", str(demo_copy / "config.ini"), "eval",
             "--bench", str(demo_copy / "bench.jsonl"), "--mode", "diva",
             "--head", str(demo_copy / "head.json"), "--report", str(tmp_path / "r.json")]
        )
        assert code == 2
        assert "no remaining turns" in capsys.readouterr().err

    def test_search_records_backend_error_without_failing(self, demo_copy, tmp_path):
        """The search loop keeps partial traces; exhaustion is data, not a crash."""
        (demo_copy / "scripts" / "search_script.json").write_text('{"turns": []}')
        traj = tmp_path / "traj.jsonl"
        code = main(
            ["--config", str(demo_copy / "config.ini"), "search",
             "--input", str(demo_copy / "bench.jsonl"), "--out", str(traj)]
        )
        assert code == 0
        manifest = _manifest(traj)
        assert manifest["counts"]["backend_error"] == 5

    def test_trajectory_mismatch_exit_1(self, demo_copy, tmp_path, capsys):
        empty_traj = tmp_path / "traj.jsonl"
        empty_traj.write_text("")
        code = main(
            ["--config", str(demo_copy / "config.ini"), "compress",
             "--traj", str(empty_traj), "--items", str(demo_copy / "bench.jsonl"),
             "--out", str(tmp_path / "ctx.jsonl")]
        )
        assert code == 1
        assert "no trajectory" in capsys.readouterr().err

    def test_script_exhausted_is_runtime_failure(self):
        from diva.errors import RuntimeFailure

        assert issubclass(ScriptExhausted, RuntimeFailure)
