import io

import pytest

from sedkit import (
    LogHeader,
    ParseError,
    PredictionRecord,
    ValidationError,
    project_records,
    read_log,
    validate_against_matrix,
    write_log,
)
from sedkit.logio import format_header, format_record


@pytest.fixture
def header(f4):
    return LogHeader(
        class_names=f4.class_names,
        selected_concepts=("Two cars", "Color black"),
    )


@pytest.fixture
def records():
    return [
        PredictionRecord("s0", 1, 3, predicted_explanation=(1, 1)),
        PredictionRecord("s1", 0, 0, predicted_explanation=(0, 0), predicted_class_b=0),
        PredictionRecord("s2", 2, 2),
    ]


class TestRoundTrip:
    def test_write_read(self, header, records, tmp_path):
        path = tmp_path / "pred.jsonl"
        count = write_log(path, header, records)
        assert count == 3
        got_header, got_records = read_log(path)
        assert got_header == header
        assert got_records == records

    def test_byte_stable(self, header, records):
        a, b = io.StringIO(), io.StringIO()
        write_log(a, header, records)
        write_log(b, header, records)
        assert a.getvalue() == b.getvalue()

    def test_absent_fields_are_omitted(self, records):
        line = format_record(records[2])
        assert "predicted_explanation" not in line
        assert "predicted_class_b" not in line
        line = format_record(records[1])
        assert "predicted_class_b" in line

    def test_header_line_shape(self, header):
        line = format_header(header)
        assert line.startswith('{"schema_version": 1, "class_names":')
        assert "\n" not in line

    def test_read_from_text_and_file_object(self, header, records):
        buf = io.StringIO()
        write_log(buf, header, records)
        text = buf.getvalue()
        assert read_log(text) == read_log(io.StringIO(text))


class TestParseErrors:
    def test_empty(self):
        with pytest.raises(ParseError, match="empty"):
            read_log("\n")

    def test_bad_header(self):
        with pytest.raises(ParseError, match="header"):
            read_log("not json\n")

    def test_missing_header_fields(self):
        with pytest.raises(ParseError, match="selected_concepts"):
            read_log('{"schema_version": 1, "class_names": ["a", "b"]}\n')

    def test_unsupported_schema_version(self):
        with pytest.raises(ParseError, match="schema_version"):
            read_log(
                '{"schema_version": 9, "class_names": ["a"], "selected_concepts": []}\n'
            )

    def test_record_errors_carry_line_numbers(self, header):
        head = format_header(header)
        bad_json = head + "\n{broken\n"
        with pytest.raises(ParseError, match="line 2"):
            read_log(bad_json)
        missing = head + '\n{"sample_id": "x", "true_class": 0}\n'
        with pytest.raises(ParseError, match="predicted_class_a"):
            read_log(missing)
        out_of_range = (
            head
            + '\n{"sample_id": "x", "true_class": 9, "predicted_class_a": 0}\n'
        )
        with pytest.raises(ParseError, match="line 2.*true_class"):
            read_log(out_of_range)

    def test_wrong_explanation_length(self, header):
        text = (
            format_header(header)
            + '\n{"sample_id": "x", "true_class": 0, "predicted_class_a": 0,'
            ' "predicted_explanation": [1]}\n'
        )
        with pytest.raises(ParseError, match="1 bits for 2"):
            read_log(text)

    def test_non_binary_bits(self, header):
        text = (
            format_header(header)
            + '\n{"sample_id": "x", "true_class": 0, "predicted_class_a": 0,'
            ' "predicted_explanation": [1, 2]}\n'
        )
        with pytest.raises(ParseError, match="0/1"):
            read_log(text)


class TestMatrixValidation:
    def test_valid_header_maps_indices(self, f4, header):
        assert validate_against_matrix(header, f4) == (0, 3)

    def test_class_name_mismatch(self, f4):
        bad = LogHeader(class_names=("x", "y"), selected_concepts=())
        with pytest.raises(ValidationError, match="class names"):
            validate_against_matrix(bad, f4)

    def test_class_order_matters(self, f4):
        shuffled = LogHeader(
            class_names=tuple(reversed(f4.class_names)), selected_concepts=()
        )
        with pytest.raises(ValidationError):
            validate_against_matrix(shuffled, f4)

    def test_unknown_concept(self, f4):
        bad = LogHeader(class_names=f4.class_names, selected_concepts=("Nope",))
        with pytest.raises(ValidationError, match="Nope"):
            validate_against_matrix(bad, f4)


class TestProjection:
    def test_subset_and_reorder(self):
        recs = [PredictionRecord("s0", 0, 1, predicted_explanation=(1, 0, 1))]
        out = project_records(recs, ["a", "b", "c"], ["c", "a"])
        assert out[0].predicted_explanation == (1, 1)

    def test_missing_concept_is_error(self):
        recs = [PredictionRecord("s0", 0, 1, predicted_explanation=(1,))]
        with pytest.raises(ValidationError, match="'b'"):
            project_records(recs, ["a"], ["b"])

    def test_records_without_explanation_pass_through(self):
        recs = [PredictionRecord("s0", 0, 1)]
        assert project_records(recs, ["a"], ["a"]) == recs
