import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierbench.errors import (
    DuplicateRecord,
    InconsistentFoldSet,
    MalformedRow,
    NoCommonDatasets,
    UnknownMethod,
    ValueOutOfRange,
)
from hierbench.results import (
    FoldRecord,
    ResultTable,
    SCALE_FLOOR,
    pairwise_differences,
    parse_results,
    population_scales,
)

CSV_BASIC = b"""dataset,method,fold,value
mosi,SimBaMM-CLS,0,0.31
mosi,SimBaMM-CLS,1,0.33
mosi,other,0,0.30
mosi,other,1,0.29
"""


def test_parse_single_row_fields():
    table = parse_results(CSV_BASIC, format="csv")
    rec = table.records[0]
    assert rec == FoldRecord("mosi", "SimBaMM-CLS", 0, 0.31, "")
    assert table.folds_per_dataset == {"mosi": 2}


def test_parse_with_metric_column():
    csv = b"dataset,method,fold,value,metric\nmosi,m,0,0.5,auroc\nmosi,m,1,0.6,auroc\n"
    table = parse_results(csv, format="csv")
    assert table.records[0].metric_name == "auroc"
    assert table.metric_names("mosi") == ("auroc",)


def test_parse_crlf_and_blank_lines():
    csv = b"dataset,method,fold,value\r\nmosi,m,0,0.5\r\nmosi,m,1,0.6\r\n\r\n"
    table = parse_results(csv, format="csv")
    assert len(table.records) == 2


def test_value_out_of_range_rejected():
    csv = b"dataset,method,fold,value\nmosi,m,0,1.2\n"
    with pytest.raises(ValueOutOfRange):
        parse_results(csv, format="csv")


def test_duplicate_record_rejected():
    csv = b"dataset,method,fold,value\nmosi,m,0,0.5\nmosi,m,0,0.5\n"
    with pytest.raises(DuplicateRecord):
        parse_results(csv, format="csv")


def test_partial_fold_set_rejected():
    csv = b"dataset,method,fold,value\nmosi,m,0,0.5\nmosi,m,1,0.6\nmosi,n,0,0.5\n"
    with pytest.raises(InconsistentFoldSet):
        parse_results(csv, format="csv")


def test_non_contiguous_folds_rejected():
    csv = b"dataset,method,fold,value\nmosi,m,0,0.5\nmosi,m,2,0.6\n"
    with pytest.raises(InconsistentFoldSet):
        parse_results(csv, format="csv")


def test_malformed_row_reports_line_number():
    csv = b"dataset,method,fold,value\nmosi,m,zero,0.5\n"
    with pytest.raises(MalformedRow) as err:
        parse_results(csv, format="csv")
    assert err.value.line == 2


def test_bad_header_rejected():
    with pytest.raises(MalformedRow):
        parse_results(b"a,b,c,d\n1,2,3,4\n", format="csv")


def test_json_roundtrip_equals_csv_parse():
    table = parse_results(CSV_BASIC, format="csv")
    again = parse_results(table.to_json_bytes(), format="json")
    assert again == table


def test_csv_roundtrip_identity():
    table = parse_results(CSV_BASIC, format="csv")
    again = parse_results(table.to_csv_bytes(), format="csv")
    assert again == table


@settings(max_examples=30, deadline=None)
@given(
    values=st.lists(
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=4, max_size=4
    )
)
def test_roundtrip_property(values):
    records = [
        FoldRecord("d1", "m1", 0, values[0]),
        FoldRecord("d1", "m1", 1, values[1]),
        FoldRecord("d1", "m2", 0, values[2]),
        FoldRecord("d1", "m2", 1, values[3]),
    ]
    table = ResultTable.from_records(records)
    assert parse_results(table.to_csv_bytes(), format="csv") == table
    assert parse_results(table.to_json_bytes(), format="json") == table


def _table(records):
    return ResultTable.from_records(records)


def _grid(datasets, methods, k, value_fn, skip=()):
    records = []
    for d in datasets:
        for m in methods:
            if (d, m) in skip:
                continue
            for f in range(k):
                records.append(FoldRecord(d, m, f, value_fn(d, m, f)))
    return _table(records)


def test_pairwise_constant_shift():
    table = _grid(["d"], ["i", "j"], 5, lambda d, m, f: 0.7 if m == "i" else 0.6)
    pair = pairwise_differences(table, "i", "j")
    np.testing.assert_allclose(pair.datasets[0].diffs, np.full(5, 0.1), atol=1e-15)


def test_pairwise_identity_is_zero():
    table = _grid(["d1", "d2"], ["i", "j"], 3, lambda d, m, f: 0.5 + 0.01 * f)
    pair = pairwise_differences(table, "i", "i")
    for ds in pair.datasets:
        assert np.all(ds.diffs == 0.0)


def test_pairwise_complete_case_exclusion():
    datasets = [f"d{i}" for i in range(9)]
    table = _grid(
        datasets, ["i", "j"], 5, lambda d, m, f: 0.5, skip=[("d3", "j")]
    )
    pair = pairwise_differences(table, "i", "j")
    assert pair.n_datasets == 8
    assert pair.excluded == ("d3",)


def test_pairwise_unknown_method():
    table = _grid(["d"], ["i", "j"], 5, lambda d, m, f: 0.5)
    with pytest.raises(UnknownMethod):
        pairwise_differences(table, "i", "nope")


def test_pairwise_no_common_datasets():
    records = [FoldRecord("a", "i", f, 0.5) for f in range(3)]
    records += [FoldRecord("b", "j", f, 0.5) for f in range(3)]
    with pytest.raises(NoCommonDatasets):
        pairwise_differences(_table(records), "i", "j")


def test_pairwise_antisymmetry():
    rng = np.random.default_rng(3)
    table = _grid(
        ["d1", "d2", "d3"], ["i", "j"], 4, lambda d, m, f: float(rng.uniform(0.2, 0.8))
    )
    fwd = pairwise_differences(table, "i", "j")
    rev = pairwise_differences(table, "j", "i")
    for a, b in zip(fwd.datasets, rev.datasets):
        np.testing.assert_array_equal(a.diffs, -b.diffs)


def test_dataset_order_lexicographic():
    table = _grid(["b", "a", "c"], ["i", "j"], 2, lambda d, m, f: 0.5)
    pair = pairwise_differences(table, "i", "j")
    assert pair.dataset_ids == ("a", "b", "c")


def test_population_scales_two_point():
    # xbar = (0.01, 0.03): sample SD (D-1) is 0.02/sqrt(2)
    records = []
    for d, base in (("a", 0.01), ("b", 0.03)):
        for f, off in enumerate((-0.005, 0.005)):
            records.append(FoldRecord(d, "i", f, 0.5 + base + off))
            records.append(FoldRecord(d, "j", f, 0.5))
    pair = pairwise_differences(_table(records), "i", "j")
    pair = population_scales(pair, bound_multiplier=1000.0)
    assert pair.s_xbar == pytest.approx(0.014142135623730952, rel=1e-12)
    assert pair.s0_bar == pytest.approx(14.142135623730951, rel=1e-12)
    assert not pair.degenerate_scale


def test_population_scales_zero_variance_floored():
    table = _grid(["a", "b"], ["i", "j"], 3, lambda d, m, f: 0.6 if m == "i" else 0.5)
    pair = population_scales(pairwise_differences(table, "i", "j"))
    assert pair.s0_bar == SCALE_FLOOR
    assert np.all(pair.sd_bar == SCALE_FLOOR)
    assert pair.degenerate_scale
    assert "s0_bar" in pair.degenerate_fields


def test_population_scales_multiplier_linearity():
    rng = np.random.default_rng(8)
    table = _grid(
        ["a", "b", "c"], ["i", "j"], 5, lambda d, m, f: float(rng.uniform(0.3, 0.7))
    )
    pair = pairwise_differences(table, "i", "j")
    full = population_scales(pair, 1000.0)
    tight = population_scales(pair, 100.0)
    assert tight.s0_bar == pytest.approx(0.1 * full.s0_bar, rel=1e-12)
    np.testing.assert_allclose(tight.sd_bar, 0.1 * full.sd_bar, rtol=1e-12)


def test_population_scales_permutation_invariant():
    rng = np.random.default_rng(9)
    values = {
        (d, m, f): float(rng.uniform(0.2, 0.8))
        for d in ["x", "y", "z"]
        for m in ["i", "j"]
        for f in range(4)
    }
    records_fwd = [FoldRecord(d, m, f, v) for (d, m, f), v in values.items()]
    records_rev = list(reversed(records_fwd))
    p1 = population_scales(pairwise_differences(_table(records_fwd), "i", "j"))
    p2 = population_scales(pairwise_differences(_table(records_rev), "i", "j"))
    assert p1.dataset_ids == p2.dataset_ids
    assert p1.s_xbar == p2.s_xbar
    np.testing.assert_array_equal(p1.sd_bar, p2.sd_bar)


def test_single_fold_dataset_excluded():
    records = [FoldRecord("solo", "i", 0, 0.5), FoldRecord("solo", "j", 0, 0.4)]
    records += [FoldRecord("full", m, f, 0.5) for m in ("i", "j") for f in range(3)]
    pair = pairwise_differences(_table(records), "i", "j")
    assert pair.dataset_ids == ("full",)
    assert "solo" in pair.excluded
