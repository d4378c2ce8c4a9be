"""Adapter tests, including the round-trip acceptance criterion: an exported
log must parse under the evaluating toolkit's own ingestion (driven through
its CLI, the only interface this package touches) with the record count
equal to the dataset size and a byte-stable header."""

import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

import stub_models
from sed_log_adapter import AdapterConfig, AdapterError, export_log, parse_matrix_names

MATRIX_TEXT = """\
# four traffic-sign classes, four concepts
,Two cars,Color red,Parallel tilted lines,Color black
Prohibited for all vehicles,0,1,0,0
No passing,1,1,0,1
End of no passing zone,1,0,1,1
End of speed limit 80,0,0,1,1
"""

TESTS_DIR = Path(__file__).parent


@pytest.fixture
def matrix_file(tmp_path):
    path = tmp_path / "matrix.csv"
    path.write_text(MATRIX_TEXT, encoding="utf-8")
    return str(path)


def se_config(**overrides):
    base = dict(
        model=stub_models.se_model,
        dataset=list(stub_models.DATASET),
        class_names=stub_models.CLASS_NAMES,
        concept_names=stub_models.CONCEPT_NAMES,
    )
    base.update(overrides)
    return AdapterConfig(**base)


def run_toolkit_eval(matrix_file, log_path, scheme="SE"):
    """Drive the evaluating toolkit's CLI over an exported log."""
    return subprocess.run(
        [sys.executable, "-m", "sedkit", "eval", matrix_file, str(log_path),
         "--scheme", scheme, "--format", "structured"],
        capture_output=True, text=True,
    )


class TestExport:
    def test_se_model_records_carry_bits(self):
        buf = io.StringIO()
        count = export_log(se_config(), out=buf)
        assert count == 10
        lines = buf.getvalue().splitlines()
        assert len(lines) == 11
        header = json.loads(lines[0])
        assert header == {
            "schema_version": 1,
            "class_names": stub_models.CLASS_NAMES,
            "selected_concepts": stub_models.CONCEPT_NAMES,
        }
        for lineno, line in enumerate(lines[1:]):
            rec = json.loads(line)
            assert rec["sample_id"] == f"d{lineno:06d}"
            assert len(rec["predicted_explanation"]) == 2

    def test_regular_model_records_omit_bits(self):
        buf = io.StringIO()
        count = export_log(
            se_config(model=stub_models.regular_model, concept_names=[]), out=buf
        )
        assert count == 10
        for line in buf.getvalue().splitlines()[1:]:
            assert "predicted_explanation" not in line

    def test_predictions_follow_argmax(self):
        buf = io.StringIO()
        export_log(se_config(), out=buf)
        for line in buf.getvalue().splitlines()[1:]:
            rec = json.loads(line)
            # the stub predicts the sample's true class
            assert rec["predicted_class_a"] == rec["true_class"]

    def test_threshold_is_inclusive(self):
        model = lambda x: [1.0, -1.0, 0.0]  # explanation logit exactly 0
        cfg = AdapterConfig(
            model=model,
            dataset=[(0, 0)],
            class_names=["a", "b"],
            concept_names=["c"],
            threshold=0.5,
        )
        buf = io.StringIO()
        export_log(cfg, out=buf)
        rec = json.loads(buf.getvalue().splitlines()[1])
        assert rec["predicted_explanation"] == [1]

    def test_dataset_order_preserved(self):
        buf = io.StringIO()
        export_log(se_config(dataset=list(reversed(stub_models.DATASET))), out=buf)
        truths = [
            json.loads(line)["true_class"] for line in buf.getvalue().splitlines()[1:]
        ]
        assert truths == [t for _, t in reversed(stub_models.DATASET)]


class TestValidation:
    def test_name_mismatch_fails_before_writing(self, matrix_file, tmp_path):
        out = tmp_path / "log.jsonl"
        cfg = se_config(
            class_names=["x"] + stub_models.CLASS_NAMES[1:],
            matrix=matrix_file,
            output=str(out),
        )
        with pytest.raises(AdapterError, match="class names"):
            export_log(cfg)
        assert not out.exists()

    def test_unknown_concept_rejected(self, matrix_file, tmp_path):
        out = tmp_path / "log.jsonl"
        cfg = se_config(
            concept_names=["Two cars", "Sparkles"],
            matrix=matrix_file,
            output=str(out),
        )
        with pytest.raises(AdapterError, match="Sparkles"):
            export_log(cfg)
        assert not out.exists()

    def test_matching_names_pass(self, matrix_file):
        buf = io.StringIO()
        assert export_log(se_config(matrix=matrix_file), out=buf) == 10

    def test_output_arity_mismatch(self):
        cfg = se_config(model=lambda x: [1.0, 2.0, 3.0])
        with pytest.raises(AdapterError, match="3 outputs"):
            export_log(cfg, out=io.StringIO())

    def test_inconsistent_arity(self):
        cfg = se_config(model=stub_models.ragged_model, concept_names=["Two cars"])
        with pytest.raises(AdapterError, match="previous samples"):
            export_log(cfg, out=io.StringIO())

    def test_bad_true_class(self):
        cfg = se_config(dataset=[(0, 9)])
        with pytest.raises(AdapterError, match="true_class"):
            export_log(cfg, out=io.StringIO())

    def test_threshold_domain(self):
        with pytest.raises(AdapterError, match="threshold"):
            export_log(se_config(threshold=1.0), out=io.StringIO())

    def test_parse_matrix_names_both_forms(self):
        classes, concepts = parse_matrix_names(MATRIX_TEXT)
        assert classes == stub_models.CLASS_NAMES
        assert concepts[0] == "Two cars"
        as_json = json.dumps(
            {"classes": classes, "concepts": concepts, "incidence": []}
        )
        assert parse_matrix_names(as_json) == (classes, concepts)


class TestRoundTrip:
    def test_acceptance_10_round_trip(self, matrix_file, tmp_path):
        log = tmp_path / "export.jsonl"
        count = export_log(se_config(matrix=matrix_file, output=str(log)))
        assert count == len(stub_models.DATASET)

        # byte-stable header (and body) across repeated exports
        again = tmp_path / "again.jsonl"
        export_log(se_config(matrix=matrix_file, output=str(again)))
        first_header = log.read_text().splitlines()[0]
        assert first_header == again.read_text().splitlines()[0]
        assert log.read_bytes() == again.read_bytes()

        # the toolkit ingests the log cleanly: exit 0, no warnings, and the
        # record count visible in its own report
        proc = run_toolkit_eval(matrix_file, log)
        assert proc.returncode == 0, proc.stderr
        assert proc.stderr == ""
        report = json.loads(proc.stdout)
        assert report["total_samples"] == len(stub_models.DATASET)
        print("\nACCEPTANCE 10 PASS: adapter log round-trips through toolkit "
              f"ingestion ({count} records, byte-stable header)")

    def test_mislabeled_dataset_yields_detected_errors(self, matrix_file, tmp_path):
        # every prediction is wrong; explanations follow the predicted
        # class, so the SE scheme alone cannot flag them, while R1-style
        # evaluation is impossible (no second classifier in this log)
        log = tmp_path / "wrong.jsonl"
        export_log(
            se_config(dataset=list(stub_models.MISLABELED), matrix=matrix_file,
                      output=str(log))
        )
        proc = run_toolkit_eval(matrix_file, log)
        assert proc.returncode == 0
        report = json.loads(proc.stdout)
        assert report["err_total"] == len(stub_models.MISLABELED)
        assert report["err_detected"] == 0

    def test_regular_log_supports_no_se_scheme(self, matrix_file, tmp_path):
        log = tmp_path / "reg.jsonl"
        export_log(
            se_config(model=stub_models.regular_model, concept_names=[],
                      matrix=matrix_file, output=str(log))
        )
        proc = run_toolkit_eval(matrix_file, log, scheme="SE")
        assert proc.returncode == 1  # records carry no explanations


class TestCli:
    def run_cli(self, *argv):
        env = dict(os.environ)
        env["PYTHONPATH"] = os.pathsep.join(
            [str(TESTS_DIR), env.get("PYTHONPATH", "")]
        )
        return subprocess.run(
            [sys.executable, "-m", "sed_log_adapter.cli", *argv],
            capture_output=True, text=True, env=env,
        )

    def test_cli_export(self, matrix_file, tmp_path):
        out = tmp_path / "cli.jsonl"
        proc = self.run_cli(
            "--model", "stub_models:se_model",
            "--dataset", "stub_models:dataset_factory",
            "--classes", ",".join(stub_models.CLASS_NAMES),
            "--concepts", ",".join(stub_models.CONCEPT_NAMES),
            "--matrix", matrix_file,
            "--out", str(out),
        )
        assert proc.returncode == 0, proc.stderr
        assert "wrote 10 records" in proc.stdout
        assert len(out.read_text().splitlines()) == 11

    def test_cli_bad_reference_exits_1(self, tmp_path):
        proc = self.run_cli(
            "--model", "stub_models:nope",
            "--dataset", "stub_models:DATASET",
            "--classes", "a,b",
            "--out", str(tmp_path / "x.jsonl"),
        )
        assert proc.returncode == 1
        assert "no attribute" in proc.stderr

    def test_cli_name_mismatch_exits_1(self, matrix_file, tmp_path):
        proc = self.run_cli(
            "--model", "stub_models:se_model",
            "--dataset", "stub_models:DATASET",
            "--classes", "a,b,c,d",
            "--concepts", ",".join(stub_models.CONCEPT_NAMES),
            "--matrix", matrix_file,
            "--out", str(tmp_path / "x.jsonl"),
        )
        assert proc.returncode == 1
        assert "class names" in proc.stderr
