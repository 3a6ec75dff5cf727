"""End-to-end CLI behaviour: stages, chaining, exit codes, determinism."""
import json
from pathlib import Path

import pytest

from editgloss import cli
from editgloss.atomic import serialize_edits
from editgloss.corpus import load_pairs
from editgloss.llm import ASSET_DIR

MINI = str(ASSET_DIR / "mini_corpus.jsonl")


def read_jsonl(path):
    return [json.loads(line) for line in
            Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return str(path)


@pytest.fixture
def filtered(tmp_path):
    out = tmp_path / "filtered.jsonl"
    rc = cli.main(["--lang", "de", "preprocess", MINI, str(out)])
    assert rc == 0
    return out


def make_extract_transcript(tmp_path, pairs):
    return write_jsonl(tmp_path / "extract_replies.jsonl", [
        {"reply": serialize_edits(p.gold_edits)} for p in pairs])


def make_explain_transcript(tmp_path, pairs):
    records = []
    for p in pairs:
        lines = []
        for e in p.gold_edits:
            if e.op == "insert":
                desc = "The word '%s' is inserted" % e.tgt
            elif e.op == "delete":
                desc = "The word '%s' is deleted" % e.orig
            elif e.op == "replace":
                desc = "The word '%s' is replaced by '%s'" % (e.orig, e.tgt)
            else:
                desc = "The word '%s' is relocated" % e.orig
            lines.append(desc + " because of a grammar rule.\nError type: grammar")
        records.append({"reply": "\n".join(lines)})
    return write_jsonl(tmp_path / "explain_replies.jsonl", records)


class TestPreprocess:
    def test_writes_filtered_pairs_and_stats(self, tmp_path):
        out = tmp_path / "f.jsonl"
        stats = tmp_path / "stats.json"
        rc = cli.main(["--lang", "de", "preprocess", MINI, str(out),
                       "--stats", str(stats)])
        assert rc == 0
        kept = load_pairs(out)
        assert 0 < len(kept) < 20
        assert all(p.lang == "de" for p in kept)
        payload = json.loads(stats.read_text())
        assert payload["pair_count"] == len(kept)
        assert payload["mean_edits_per_pair"] == pytest.approx(
            payload["edit_count"] / payload["pair_count"], abs=0.005)

    def test_chinese_side(self, tmp_path):
        out = tmp_path / "zh.jsonl"
        rc = cli.main(["--lang", "zh", "preprocess", MINI, str(out)])
        assert rc == 0
        assert all(p.lang == "zh" for p in load_pairs(out))

    def test_empty_input(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        out = tmp_path / "out.jsonl"
        assert cli.main(["preprocess", str(empty), str(out)]) == 0
        assert out.read_text() == ""

    def test_bad_path_exits_usage(self, tmp_path):
        rc = cli.main(["preprocess", str(tmp_path / "nope.jsonl"),
                       str(tmp_path / "out.jsonl")])
        assert rc == cli.EXIT_USAGE

    def test_malformed_input_exits_data(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        rc = cli.main(["preprocess", str(bad), str(tmp_path / "out.jsonl")])
        assert rc == cli.EXIT_DATA


class TestExtract:
    def test_rule_mode_reproduces_fig_edits(self, tmp_path):
        inp = write_jsonl(tmp_path / "in.jsonl", [{
            "id": "fig", "lang": "de",
            "source": "Ich möchte machen ein termin.",
            "target": "Ich möchte einen Termin machen."}])
        out = tmp_path / "edits.jsonl"
        assert cli.main(["--lang", "de", "extract", inp, str(out)]) == 0
        rec = read_jsonl(out)[0]
        assert sorted(map(tuple, rec["edits"])) == [
            ("relocate", "machen", "machen"),
            ("replace", "ein", "einen"),
            ("replace", "termin", "Termin")]
        assert rec["feasibility"] == "feasible"

    def test_identical_pair_zero_edits(self, tmp_path):
        inp = write_jsonl(tmp_path / "in.jsonl", [{
            "id": "same", "lang": "de", "source": "alles gut.", "target": "alles gut."}])
        out = tmp_path / "edits.jsonl"
        assert cli.main(["--lang", "de", "extract", inp, str(out)]) == 0
        assert read_jsonl(out)[0]["edits"] == []

    def test_llm_mode_with_transcript(self, tmp_path, filtered):
        pairs = load_pairs(filtered)
        transcript = make_extract_transcript(tmp_path, pairs)
        out = tmp_path / "edits.jsonl"
        rc = cli.main(["--lang", "de", "--cache-dir", str(tmp_path / "cache"),
                       "extract", str(filtered), str(out), "--mode", "llm",
                       "--mock-transcript", transcript, "--retry-delay", "0"])
        assert rc == 0
        for rec, pair in zip(read_jsonl(out), pairs):
            assert sorted(map(tuple, rec["edits"])) == \
                sorted(e.key() for e in pair.gold_edits)
            assert rec["feasibility"] == "feasible"

    def test_llm_mode_without_provider_exits_usage(self, tmp_path, filtered):
        rc = cli.main(["--lang", "de", "extract", str(filtered),
                       str(tmp_path / "e.jsonl"), "--mode", "llm"])
        assert rc == cli.EXIT_USAGE


class TestExplainAndCoverage:
    def run_pipeline(self, tmp_path, filtered):
        pairs = load_pairs(filtered)
        edits_out = tmp_path / "edits.jsonl"
        cache = str(tmp_path / "cache")
        rc = cli.main(["--lang", "de", "--cache-dir", cache, "extract",
                       str(filtered), str(edits_out), "--mode", "llm",
                       "--mock-transcript", make_extract_transcript(tmp_path, pairs),
                       "--retry-delay", "0"])
        assert rc == 0
        expl_out = tmp_path / "expl.jsonl"
        rc = cli.main(["--lang", "de", "--cache-dir", cache, "explain",
                       str(edits_out), str(expl_out),
                       "--mock-transcript", make_explain_transcript(tmp_path, pairs),
                       "--retry-delay", "0"])
        assert rc == 0
        return edits_out, expl_out

    def test_full_chain_and_coverage(self, tmp_path, filtered):
        _, expl_out = self.run_pipeline(tmp_path, filtered)
        report = tmp_path / "cov.json"
        assert cli.main(["eval-coverage", str(expl_out), str(report)]) == 0
        payload = json.loads(report.read_text())
        assert payload["coverage_rate"] == 1.0
        assert payload["hallucinated_claims"] == 0

    def test_pairs_without_edits_pass_through(self, tmp_path):
        inp = write_jsonl(tmp_path / "in.jsonl", [{
            "id": "same", "lang": "de", "source": "alles gut.",
            "target": "alles gut.", "edits": []}])
        out = tmp_path / "expl.jsonl"
        transcript = write_jsonl(tmp_path / "t.jsonl", [])
        rc = cli.main(["--lang", "de", "explain", inp, str(out),
                       "--mock-transcript", transcript])
        assert rc == 0
        assert read_jsonl(out)[0]["explanations"] == []

    def test_malformed_reply_recorded_run_continues(self, tmp_path):
        inp = write_jsonl(tmp_path / "in.jsonl", [
            {"id": "a", "lang": "de", "source": "ein Termin",
             "target": "einen Termin", "edits": [["replace", "ein", "einen"]]},
            {"id": "b", "lang": "de", "source": "der Schule",
             "target": "die Schule", "edits": [["replace", "der", "die"]]}])
        transcript = write_jsonl(tmp_path / "t.jsonl", [
            {"reply": ""},
            {"reply": "The word 'der' is replaced by 'die' because case.\n"
                      "Error type: case"}])
        out = tmp_path / "expl.jsonl"
        rc = cli.main(["--lang", "de", "explain", inp, str(out),
                       "--mock-transcript", transcript, "--retry-delay", "0"])
        assert rc == 0
        records = read_jsonl(out)
        assert "error" in records[0]
        assert records[1]["explanations"][0]["error_type"] == "case"


class TestEvalEdits:
    def test_predictions_equal_gold_is_perfect(self, tmp_path, filtered):
        pairs = load_pairs(filtered)
        preds = write_jsonl(tmp_path / "pred.jsonl", [
            {"id": p.id, "lang": p.lang, "source": p.source, "target": p.target,
             "edits": [list(e.key()) for e in p.gold_edits]} for p in pairs])
        report = tmp_path / "score.json"
        rc = cli.main(["eval-edits", preds, str(filtered), str(report)])
        assert rc == 0
        payload = json.loads(report.read_text())
        assert payload["f1"] == 1.0

    def test_decomposition_populates_queue(self, tmp_path):
        gold = write_jsonl(tmp_path / "gold.jsonl", [{
            "id": "a2", "lang": "de",
            "source": "Ich möchte haben einen roten Apfel.",
            "target": "Ich möchte einen roten Apfel haben.",
            "gold_edits": [["relocate", "haben", "haben"]]}])
        preds = write_jsonl(tmp_path / "pred.jsonl", [{
            "id": "a2", "edits": [["delete", "haben", ""], ["insert", "", "haben"]]}])
        report = tmp_path / "score.json"
        queue = tmp_path / "queue.jsonl"
        rc = cli.main(["eval-edits", preds, gold, str(report), "--queue", str(queue)])
        assert rc == 0
        statuses = {tuple(r["edit"]): r["status"] for r in read_jsonl(queue)}
        assert statuses == {("delete", "haben", ""): "feasible_unmatched",
                            ("insert", "", "haben"): "feasible_unmatched"}

    def test_adjudications_flip_score(self, tmp_path):
        gold = write_jsonl(tmp_path / "gold.jsonl", [{
            "id": "a2", "lang": "de",
            "source": "Ich möchte haben einen roten Apfel.",
            "target": "Ich möchte einen roten Apfel haben.",
            "gold_edits": [["relocate", "haben", "haben"]]}])
        preds = write_jsonl(tmp_path / "pred.jsonl", [{
            "id": "a2", "edits": [["delete", "haben", ""], ["insert", "", "haben"]]}])
        adj = write_jsonl(tmp_path / "adj.jsonl", [
            {"pair_id": "a2", "edit": ["delete", "haben", ""], "verdict": "correct"},
            {"pair_id": "a2", "edit": ["insert", "", "haben"], "verdict": "correct"}])
        report = tmp_path / "score.json"
        rc = cli.main(["eval-edits", preds, gold, str(report),
                       "--adjudications", adj])
        assert rc == 0
        assert json.loads(report.read_text())["fp"] == 0

    def test_missing_gold_file_nonzero_exit(self, tmp_path):
        preds = write_jsonl(tmp_path / "pred.jsonl", [])
        rc = cli.main(["eval-edits", preds, str(tmp_path / "nope.jsonl"),
                       str(tmp_path / "r.json")])
        assert rc != 0


class TestReport:
    def test_table_arithmetic(self, tmp_path):
        anns = write_jsonl(tmp_path / "ann.jsonl",
                           [{"pair_id": str(i), "explanation_index": 0,
                             "label": "correct"} for i in range(1865)]
                           + [{"pair_id": "w%d" % i, "explanation_index": 0,
                               "label": "wrong_error_type"} for i in range(121)])
        rc = cli.main(["report", anns, str(tmp_path / "rep")])
        assert rc == 0
        payload = json.loads((tmp_path / "rep.json").read_text())
        assert payload["percentages"]["correct"] == pytest.approx(93.9, abs=0.05)
        assert (tmp_path / "rep.csv").exists()
        assert (tmp_path / "rep.html").exists()

    def test_unknown_label_exits_data(self, tmp_path):
        anns = write_jsonl(tmp_path / "ann.jsonl",
                           [{"pair_id": "x", "label": "sketchy"}])
        rc = cli.main(["report", anns, str(tmp_path / "rep")])
        assert rc == cli.EXIT_DATA


class TestConfig:
    def test_config_file_round_trip(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"language": "zh", "concurrency": 2}))
        cfg = cli.RunConfig.load(cfg_path)
        assert cfg.language == "zh"
        assert cfg.concurrency == 2

    def test_bad_language_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"language": "fr"}))
        with pytest.raises(cli.CliError):
            cli.RunConfig.load(cfg_path)

    def test_missing_template_file_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"extract_template": "/does/not/exist"}))
        with pytest.raises(cli.CliError):
            cli.RunConfig.load(cfg_path)

    def test_bad_config_exits_usage(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("{broken")
        rc = cli.main(["--config", str(cfg_path), "preprocess", MINI,
                       str(tmp_path / "o.jsonl")])
        assert rc == cli.EXIT_USAGE
