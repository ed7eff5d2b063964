import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexaft.data import (
    SurvivalDataset,
    kaplan_meier,
    nelson_aalen,
    read_csv,
    write_csv,
)
from flexaft.errors import DataValidationError


def dataset(time, event, **kw):
    return SurvivalDataset.from_arrays(time=time, event=event, **kw)


# -- SurvivalDataset invariants -------------------------------------------

def test_dataset_rejects_nonpositive_exit():
    with pytest.raises(DataValidationError, match="row 1"):
        dataset([1.0, 0.0], [1, 1])


def test_dataset_rejects_entry_at_or_after_exit():
    with pytest.raises(DataValidationError, match="exceed entry"):
        dataset([1.0], [1], entry=[2.0])
    with pytest.raises(DataValidationError):
        dataset([1.0], [1], entry=[1.0])


def test_dataset_rejects_bad_event_codes():
    with pytest.raises(DataValidationError, match="event"):
        dataset([1.0], [2])


def test_dataset_rejects_nonfinite():
    with pytest.raises(DataValidationError):
        dataset([np.nan], [1])
    with pytest.raises(DataValidationError):
        dataset([1.0], [1], covariates={"x": [np.inf]})


def test_dataset_rejects_ragged_covariates():
    with pytest.raises(DataValidationError):
        SurvivalDataset.from_arrays(
            time=[1.0, 2.0], event=[1, 1],
            covariates=np.zeros((3, 1)), names=("x",),
        )


def test_dataset_arrays_are_readonly():
    ds = dataset([1.0, 2.0], [1, 0], covariates={"x": [0.0, 1.0]})
    with pytest.raises(ValueError):
        ds.time[0] = 99.0
    with pytest.raises(ValueError):
        ds.covariates[0, 0] = 99.0


def test_dataset_summaries():
    ds = dataset([2.0, 3.0], [1, 0], entry=[0.5, 0.0])
    assert ds.n == 2
    assert ds.n_events == 1
    assert ds.total_exposure == pytest.approx(4.5)


def test_design_matrix_orders_columns():
    ds = dataset([1.0], [1], covariates={"a": [1.0], "b": [2.0]})
    np.testing.assert_array_equal(ds.design_matrix(("b", "a")), [[2.0, 1.0]])
    with pytest.raises(DataValidationError):
        ds.design_matrix(("c",))


# -- read_csv -------------------------------------------------------------

def test_read_csv_defaults_entry_to_zero(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("time,died,x\n1.0,1,0.5\n2.0,0,1.5\n3.0,1,2.5\n")
    ds = read_csv(p, time="time", event="died", covars=("x",))
    assert ds.n == 3
    np.testing.assert_array_equal(ds.entry, [0.0, 0.0, 0.0])
    assert ds.covariate_names == ("x",)


def test_read_csv_reports_offending_row(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("time,died\n1.0,1\n0.0,1\n")
    with pytest.raises(DataValidationError, match="row 1"):
        read_csv(p, time="time", event="died")


def test_read_csv_rejects_entry_after_exit(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("entry,time,died\n2.0,1.0,1\n")
    with pytest.raises(DataValidationError, match="row 0"):
        read_csv(p, time="time", event="died", entry="entry")


def test_read_csv_parse_failure_names_row_and_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("time,died\n1.0,1\nfoo,0\n")
    with pytest.raises(DataValidationError, match="row 1, column 'time'"):
        read_csv(p, time="time", event="died")


def test_read_csv_missing_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("time,died\n1.0,1\n")
    with pytest.raises(DataValidationError, match="missing columns"):
        read_csv(p, time="time", event="died", covars=("z",))


def test_csv_round_trip(tmp_path):
    ds = dataset([1.5, 2.25, 7.0], [1, 0, 1],
                 covariates={"x": [0.125, -3.5, 2.0], "z": [1.0, 0.0, -1.0]},
                 entry=[0.0, 0.75, 0.5])
    p = tmp_path / "rt.csv"
    write_csv(ds, p)
    back = read_csv(p, time="time", event="event", entry="entry",
                    covars=("x", "z"))
    np.testing.assert_array_equal(back.time, ds.time)
    np.testing.assert_array_equal(back.entry, ds.entry)
    np.testing.assert_array_equal(back.event, ds.event)
    np.testing.assert_array_equal(back.covariates, ds.covariates)


# -- Kaplan-Meier ----------------------------------------------------------

def test_km_single_event():
    km = kaplan_meier(dataset([1.0], [1]))
    np.testing.assert_array_equal(km.times, [1.0])
    np.testing.assert_array_equal(km.values, [0.0])
    assert km(0.999) == 1.0
    assert km(1.0) == 0.0


def test_km_all_censored():
    km = kaplan_meier(dataset([1.0, 2.0], [0, 0]))
    assert km.times.size == 0
    assert km(1.5) == 1.0
    assert km(100.0) == 1.0


def test_km_product_limit_hand_case():
    # events at 1 and 2, censorings at 1.5 and 3:
    # S = 3/4 on [1,2), then 3/4 * (1 - 1/2) = 3/8 on [2,inf)
    km = kaplan_meier(dataset([1.0, 1.5, 2.0, 3.0], [1, 0, 1, 0]))
    np.testing.assert_array_equal(km.times, [1.0, 2.0])
    np.testing.assert_allclose(km.values, [0.75, 0.375])
    np.testing.assert_array_equal(km.n_risk, [4, 2])
    np.testing.assert_array_equal(km.n_event, [1, 1])
    assert km(1.7) == 0.75
    assert km(10.0) == 0.375


def test_km_event_precedes_censoring_at_ties():
    # the censored subject at t=1 still counts in the risk set at t=1
    km = kaplan_meier(dataset([1.0, 1.0, 2.0], [1, 0, 1]))
    np.testing.assert_allclose(km.values, [2.0 / 3.0, 0.0])
    np.testing.assert_array_equal(km.n_risk, [3, 1])


def test_km_delayed_entry_shrinks_risk_set():
    # late entrant at 2.5 is not at risk for the t=2 event
    km = kaplan_meier(dataset([2.0, 3.0], [1, 1], entry=[0.0, 2.5]))
    np.testing.assert_array_equal(km.n_risk, [1, 1])


# -- Nelson-Aalen ----------------------------------------------------------

def test_na_single_event_unit_jump():
    na = nelson_aalen(dataset([1.0], [1]))
    np.testing.assert_array_equal(na.times, [1.0])
    np.testing.assert_array_equal(na.values, [1.0])
    assert na.kind == "cumulative_hazard"


def test_na_no_events_is_zero():
    na = nelson_aalen(dataset([1.0, 2.0], [0, 0]))
    assert na.times.size == 0
    assert na(5.0) == 0.0


def test_na_hand_case():
    na = nelson_aalen(dataset([1.0, 1.5, 2.0, 3.0], [1, 0, 1, 0]))
    np.testing.assert_allclose(na.values, [0.25, 0.75])
    assert na(2.0) == pytest.approx(0.75)


def test_na_nondecreasing_and_km_nonincreasing(rng):
    for _ in range(10):
        n = int(rng.integers(5, 60))
        t = rng.exponential(1.0, size=n) + 1e-3
        d = rng.integers(0, 2, size=n)
        if d.sum() == 0:
            d[0] = 1
        ds = dataset(t, d)
        km, na = kaplan_meier(ds), nelson_aalen(ds)
        assert np.all(np.diff(km.values) <= 1e-15)
        assert np.all(np.diff(na.values) >= -1e-15)
        assert np.all(km.values >= -1e-15) and np.all(km.values <= 1.0)


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=25, deadline=None)
def test_exp_neg_na_dominates_km(seed):
    # standard inequality: exp(-H_NA) >= S_KM pointwise
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 40))
    t = rng.exponential(1.0, size=n) + 1e-3
    d = rng.integers(0, 2, size=n)
    if d.sum() == 0:
        d[0] = 1
    ds = dataset(t, d)
    km, na = kaplan_meier(ds), nelson_aalen(ds)
    grid = np.unique(t)
    for g in grid:
        assert np.exp(-na(g)) >= km(g) - 1e-12
