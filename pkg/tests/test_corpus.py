import json
import random

import pytest

from sensekit.corpus import (
    Period,
    SensePrediction,
    load_dataset,
    load_predictions,
    save_predictions,
)
from sensekit.errors import InputDataError

from .conftest import DATASET_COLUMNS, write_dataset_tsv

THREE_ROWS = [
    {"usage_id": "u2", "word": "palo", "text": "first old usage", "period": "old",
     "gloss_id": "g1", "definition": "a burning."},
    {"usage_id": "u1", "word": "palo", "text": "second old usage", "period": "old",
     "gloss_id": "g2", "definition": "a stake."},
    {"usage_id": "u3", "word": "palo", "text": "one new usage", "period": "new"},
]


class TestLoadDataset:
    def test_empty_file_with_header_gives_empty_list(self, tmp_path):
        path = write_dataset_tsv(tmp_path / "d.tsv", [])
        assert load_dataset(path) == []

    def test_three_rows_one_lemma_two_glosses(self, tmp_path):
        path = write_dataset_tsv(tmp_path / "d.tsv", THREE_ROWS)
        targets = load_dataset(path)
        assert len(targets) == 1
        target = targets[0]
        assert target.lemma == "palo"
        assert len(target.usages) == 3
        assert [g.gloss_id for g in target.sense_inventory] == ["g1", "g2"]
        assert [u.usage_id for u in target.usages] == ["u1", "u2", "u3"]
        assert target.usages[2].period is Period.NEW
        assert target.usages[2].gold_sense_id is None

    def test_unknown_period_names_line(self, tmp_path):
        rows = THREE_ROWS[:1] + [dict(THREE_ROWS[1], period="middle")]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        with pytest.raises(InputDataError, match="line 3"):
            load_dataset(path)

    @pytest.mark.parametrize("alias,period", [
        ("old", Period.OLD), ("earlier", Period.OLD), ("0", Period.OLD),
        ("NEW", Period.NEW), ("later", Period.NEW), ("1", Period.NEW),
    ])
    def test_period_aliases(self, tmp_path, alias, period):
        rows = [{"usage_id": "u1", "word": "w", "text": "t", "period": alias}]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        assert load_dataset(path)[0].usages[0].period is period

    def test_duplicate_usage_id_rejected(self, tmp_path):
        rows = [dict(THREE_ROWS[0]), dict(THREE_ROWS[1], usage_id="u2")]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        with pytest.raises(InputDataError, match="duplicate usage_id"):
            load_dataset(path)

    def test_span_bounds_checked(self, tmp_path):
        rows = [{"usage_id": "u1", "word": "w", "text": "short", "period": "old", "span": "2:99"}]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        with pytest.raises(InputDataError, match="out of bounds"):
            load_dataset(path)

    def test_span_parsed_when_valid(self, tmp_path):
        rows = [{"usage_id": "u1", "word": "w", "text": "some text here", "period": "old", "span": "5:9"}]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        assert load_dataset(path)[0].usages[0].target_span == (5, 9)

    def test_malformed_row_names_line(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("\t".join(DATASET_COLUMNS) + "\nu1\tw\n", encoding="utf-8")
        with pytest.raises(InputDataError, match="line 2"):
            load_dataset(path)

    def test_missing_header_column_rejected(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("usage_id\tword\ttext\nu1\tw\tt\n", encoding="utf-8")
        with pytest.raises(InputDataError, match="period"):
            load_dataset(path)

    def test_loading_is_order_insensitive(self, tmp_path):
        rows = list(THREE_ROWS)
        path_a = write_dataset_tsv(tmp_path / "a.tsv", rows)
        shuffled = list(rows)
        random.Random(3).shuffle(shuffled)
        path_b = write_dataset_tsv(tmp_path / "b.tsv", shuffled)
        assert load_dataset(path_a) == load_dataset(path_b)

    def test_jsonl_equivalent_to_tsv(self, tmp_path):
        tsv = write_dataset_tsv(tmp_path / "d.tsv", THREE_ROWS)
        jsonl = tmp_path / "d.jsonl"
        jsonl.write_text(
            "\n".join(json.dumps({k: v for k, v in row.items()}) for row in THREE_ROWS) + "\n",
            encoding="utf-8",
        )
        assert load_dataset(tsv) == load_dataset(jsonl)

    def test_lemmas_sorted_and_grouped(self, tmp_path):
        rows = [
            {"usage_id": "u1", "word": "zebra", "text": "t", "period": "old"},
            {"usage_id": "u2", "word": "apple", "text": "t", "period": "old"},
        ]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        assert [t.lemma for t in load_dataset(path)] == ["apple", "zebra"]

    def test_gloss_without_definition_rejected(self, tmp_path):
        rows = [{"usage_id": "u1", "word": "w", "text": "t", "period": "old", "gloss_id": "g1"}]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        with pytest.raises(InputDataError, match="never carries a definition"):
            load_dataset(path)

    def test_conflicting_gloss_definitions_rejected(self, tmp_path):
        rows = [
            {"usage_id": "u1", "word": "w", "text": "t", "period": "old",
             "gloss_id": "g1", "definition": "one."},
            {"usage_id": "u2", "word": "w", "text": "t", "period": "old",
             "gloss_id": "g1", "definition": "two."},
        ]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        with pytest.raises(InputDataError, match="conflicting definitions"):
            load_dataset(path)

    def test_gloss_id_reuse_across_lemmas_rejected(self, tmp_path):
        rows = [
            {"usage_id": "u1", "word": "a", "text": "t", "period": "old",
             "gloss_id": "g1", "definition": "one."},
            {"usage_id": "u2", "word": "b", "text": "t", "period": "old",
             "gloss_id": "g1", "definition": "two."},
        ]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        with pytest.raises(InputDataError, match="unique"):
            load_dataset(path)

    def test_novel_reference_glosses_collected_from_new_rows(self, tmp_path):
        rows = THREE_ROWS + [
            {"usage_id": "u4", "word": "palo", "text": "t", "period": "new",
             "gloss_id": "g_new", "definition": "a novel thing."},
        ]
        path = write_dataset_tsv(tmp_path / "d.tsv", rows)
        target = load_dataset(path)[0]
        assert [g.gloss_id for g in target.sense_inventory] == ["g1", "g2"]
        assert [(g.gloss_id, g.is_novel) for g in target.novel_glosses] == [("g_new", True)]
        assert target.usages[3].gold_sense_id == "g_new"

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputDataError, match="not found"):
            load_dataset(tmp_path / "absent.tsv")


class TestPredictions:
    def make_preds(self):
        return [
            SensePrediction(usage_id="u2", lemma="b", predicted_sense_id="g1", is_novel=False),
            SensePrediction(usage_id="u1", lemma="a", predicted_sense_id="a_novel_1", is_novel=True),
        ]

    def test_empty_list_writes_header_only(self, tmp_path):
        path = tmp_path / "p.tsv"
        save_predictions([], path)
        assert path.read_text() == "usage_id\tlemma\tpredicted_sense_id\tis_novel\n"

    def test_two_predictions_make_three_lines(self, tmp_path):
        path = tmp_path / "p.tsv"
        save_predictions(self.make_preds(), path)
        assert len(path.read_text().splitlines()) == 3

    def test_rows_sorted_by_usage_id(self, tmp_path):
        path = tmp_path / "p.tsv"
        save_predictions(self.make_preds(), path)
        lines = path.read_text().splitlines()
        assert lines[1].startswith("u1\t")
        assert lines[2].startswith("u2\t")

    def test_round_trip_reproduces_predictions(self, tmp_path):
        path = tmp_path / "p.tsv"
        preds = self.make_preds()
        save_predictions(preds, path)
        loaded = load_predictions(path)
        assert loaded == sorted(preds, key=lambda p: p.usage_id)

    def test_unwritable_path_is_an_error(self, tmp_path):
        with pytest.raises(OSError):
            save_predictions([], tmp_path / "missing_dir" / "p.tsv")

    def test_bad_header_rejected_on_load(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("wrong\theader\n")
        with pytest.raises(InputDataError, match="header"):
            load_predictions(path)

    def test_bad_flag_rejected_on_load(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("usage_id\tlemma\tpredicted_sense_id\tis_novel\nu1\ta\tg1\tmaybe\n")
        with pytest.raises(InputDataError, match="is_novel"):
            load_predictions(path)
