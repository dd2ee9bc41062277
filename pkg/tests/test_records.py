from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segrank.errors import InputError
from segrank.records import (
    ALL_CASES,
    MetricRow,
    metrics_csv,
    read_cases_csv,
    read_metrics_csv,
    table_from_rows,
)

row_values = st.one_of(st.none(), st.floats(0, 1), st.integers(0, 50))


@settings(max_examples=50, deadline=None)
@given(st.lists(row_values, min_size=1, max_size=12))
def test_csv_round_trip(tmp_path_factory, values):
    rows = [MetricRow("t", "binary-seg", 1, f"c{i}", "DSC", v) for i, v in enumerate(values)]
    path = tmp_path_factory.mktemp("rt") / "m.csv"
    path.write_text(metrics_csv(rows))
    back = read_metrics_csv(path)
    assert [r.value for r in back] == [None if v is None else float(v) for v in values]


def test_integer_counts_written_plainly():
    text = metrics_csv([MetricRow("t", "multi-det", 2, "c", "TP", 3)])
    assert text.splitlines()[1] == "t,multi-det,2,c,TP,3"


def test_bad_header(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("team,value\na,1\n")
    with pytest.raises(InputError):
        read_metrics_csv(p)


def test_bad_value_names_line(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("team,task,stage,case_id,metric,value\na,binary-seg,1,c,DSC,0.1\na,binary-seg,1,d,DSC,high\n")
    with pytest.raises(InputError, match=":3:"):
        read_metrics_csv(p)


class TestTableFromRows:
    rows = [
        MetricRow("a", "binary-seg", 1, "x", "DSC", 0.5),
        MetricRow("a", "binary-seg", 2, "x", "DSC", 0.6),
        MetricRow("b", "binary-seg", 1, "x", "DSC", 0.7),
        MetricRow("a", "binary-seg", 1, "x", "NSD", 0.1),
        MetricRow("a", "multi-det", 1, ALL_CASES, "DSC", 0.9),
    ]

    def test_single_stage(self):
        t = table_from_rows(self.rows, "DSC", stage=1)
        assert t.cases == ["x"] and t.values[:, 0].tolist() == [0.5, 0.7]

    def test_pooled_stages_prefix_case_ids(self):
        t = table_from_rows(self.rows, "DSC")
        assert t.cases == ["1/x", "2/x"]
        assert np.isnan(t.values[1, 1])

    def test_unknown_metric(self):
        with pytest.raises(InputError, match="HD95"):
            table_from_rows(self.rows, "HD95")


def test_read_cases(tmp_path):
    p = tmp_path / "cases.csv"
    p.write_text("case_id,stage,surgery_type,instrument_count\nc1,3,sigmoid,2\nc2,1,,\n")
    recs = read_cases_csv(p)
    assert [(r.case_id, r.stage, r.surgery_type, r.instrument_count) for r in recs] == [
        ("c1", 3, "sigmoid", 2), ("c2", 1, "", 0)]


def test_read_cases_rejects_bad_count(tmp_path):
    p = tmp_path / "cases.csv"
    p.write_text("case_id,stage,instrument_count\nc1,1,many\n")
    with pytest.raises(InputError):
        read_cases_csv(p)
