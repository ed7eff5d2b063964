"""Survival dataset container, CSV round-trip and nonparametric estimates.

Times are dimensionless and never rescaled: the spline knots live on the
log of whatever scale the user supplies, so silent rescaling would move
them.
"""

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError

__all__ = [
    "SurvivalDataset",
    "StepFunctionEstimate",
    "read_csv",
    "write_csv",
    "kaplan_meier",
    "nelson_aalen",
]


@dataclass(frozen=True)
class SurvivalDataset:
    """Immutable survival data: (entry, exit, event, covariates) rows.

    Invariants enforced at construction: exit > entry >= 0 for every row,
    event coded 0/1, covariate matrix rectangular with one name per
    column, every numeric field finite. Arrays are made read-only.
    """

    entry: np.ndarray
    time: np.ndarray
    event: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        entry = np.ascontiguousarray(self.entry, dtype=np.float64)
        time = np.ascontiguousarray(self.time, dtype=np.float64)
        event = np.ascontiguousarray(self.event)
        covs = np.ascontiguousarray(self.covariates, dtype=np.float64)
        names = tuple(str(n) for n in self.covariate_names)
        n = time.shape[0]
        if covs.size == 0:
            covs = covs.reshape(n, 0)
        if covs.ndim != 2 or covs.shape[0] != n:
            raise DataValidationError(
                f"covariates must be (n, p) with n={n}, got {covs.shape}"
            )
        if len(names) != covs.shape[1]:
            raise DataValidationError(
                f"{covs.shape[1]} covariate columns but "
                f"{len(names)} names"
            )
        if entry.shape != (n,) or event.shape != (n,):
            raise DataValidationError("entry/time/event lengths differ")
        for label, arr in (("entry", entry), ("time", time)):
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise DataValidationError(
                    f"row {bad[0]}: non-finite {label} value"
                )
        bad = np.flatnonzero(~np.isfinite(covs).all(axis=1))
        if bad.size:
            raise DataValidationError(f"row {bad[0]}: non-finite covariate")
        if not np.isin(event, (0, 1)).all():
            bad = np.flatnonzero(~np.isin(event, (0, 1)))
            raise DataValidationError(
                f"row {bad[0]}: event must be 0 or 1, got {event[bad[0]]!r}"
            )
        event = event.astype(np.uint8)
        bad = np.flatnonzero(entry < 0)
        if bad.size:
            raise DataValidationError(
                f"row {bad[0]}: negative entry time {entry[bad[0]]}"
            )
        bad = np.flatnonzero(time <= entry)
        if bad.size:
            i = bad[0]
            raise DataValidationError(
                f"row {i}: exit time {time[i]} must exceed entry time "
                f"{entry[i]}"
            )
        for arr in (entry, time, event, covs):
            arr.setflags(write=False)
        object.__setattr__(self, "entry", entry)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "event", event)
        object.__setattr__(self, "covariates", covs)
        object.__setattr__(self, "covariate_names", names)

    @classmethod
    def from_arrays(cls, time, event, covariates=None, names=(),
                    entry=None, meta=None):
        """Build a dataset; ``covariates`` may be a name->column mapping
        or a (n, p) matrix paired with ``names``."""
        time = np.asarray(time, dtype=np.float64)
        if entry is None:
            entry = np.zeros_like(time)
        if covariates is None:
            covariates = np.empty((time.shape[0], 0))
        elif isinstance(covariates, dict):
            names = tuple(covariates.keys())
            cols = [np.asarray(covariates[n], dtype=np.float64)
                    for n in names]
            covariates = (np.column_stack(cols) if cols
                          else np.empty((time.shape[0], 0)))
        return cls(entry, time, np.asarray(event), covariates, tuple(names),
                   meta or {})

    @property
    def n(self):
        return self.time.shape[0]

    @property
    def n_events(self):
        return int(self.event.sum())

    @property
    def total_exposure(self):
        return float(np.sum(self.time - self.entry))

    def design_matrix(self, names):
        """Covariate columns in the requested order, shape (n, len(names))."""
        index = {n: i for i, n in enumerate(self.covariate_names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise DataValidationError(
                f"unknown covariates {missing}; available: "
                f"{list(self.covariate_names)}"
            )
        if not names:
            return np.empty((self.n, 0))
        return np.ascontiguousarray(
            self.covariates[:, [index[n] for n in names]]
        )

    def checksum(self):
        """Content hash used to refuse cross-dataset model comparisons."""
        h = hashlib.sha256()
        h.update(",".join(self.covariate_names).encode())
        for arr in (self.entry, self.time, self.event, self.covariates):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class StepFunctionEstimate:
    """Right-continuous step estimate over the distinct event times."""

    times: np.ndarray
    values: np.ndarray
    n_risk: np.ndarray
    n_event: np.ndarray
    kind: str  # "survival" or "cumulative_hazard"

    def __call__(self, t):
        """Value at time t (scalar or array); baseline value before the
        first event time is 1 for survival, 0 for cumulative hazard."""
        start = 1.0 if self.kind == "survival" else 0.0
        idx = np.searchsorted(self.times, np.asarray(t, dtype=np.float64),
                              side="right")
        padded = np.concatenate([[start], self.values])
        out = padded[idx]
        return float(out) if np.ndim(t) == 0 else out


def _risk_table(data):
    """Distinct event times with at-risk and event counts.

    Delayed entry: a subject is at risk at time t when entry < t <= exit.
    Ties between events and censorings at the same time keep the censored
    subject in the risk set (events precede censorings).
    """
    event_times = np.unique(data.time[data.event == 1])
    sorted_exit = np.sort(data.time)
    sorted_entry = np.sort(data.entry)
    n = data.n
    n_risk = (
        (n - np.searchsorted(sorted_exit, event_times, side="left"))
        - (n - np.searchsorted(sorted_entry, event_times, side="left"))
    )
    order = np.argsort(data.time, kind="stable")
    times = data.time[order]
    events = data.event[order].astype(np.int64)
    boundaries = np.searchsorted(times, event_times, side="left")
    cum = np.concatenate([[0], np.cumsum(events)])
    upper = np.searchsorted(times, event_times, side="right")
    n_event = cum[upper] - cum[boundaries]
    return event_times, n_risk.astype(np.int64), n_event


def kaplan_meier(data):
    """Product-limit survival estimate with delayed-entry risk sets."""
    times, n_risk, n_event = _risk_table(data)
    surv = np.cumprod(1.0 - n_event / n_risk)
    return StepFunctionEstimate(times, surv, n_risk, n_event, "survival")


def nelson_aalen(data):
    """Cumulative hazard estimate: increments n_event / n_risk."""
    times, n_risk, n_event = _risk_table(data)
    cumhaz = np.cumsum(n_event / n_risk)
    return StepFunctionEstimate(times, cumhaz, n_risk, n_event,
                                "cumulative_hazard")


def read_csv(path, time, event, entry=None, covars=()):
    """Load a survival dataset from a headed CSV file.

    Parameters
    ----------
    path : str
        File to read.
    time, event : str
        Column names for exit time and event indicator.
    entry : str, optional
        Entry-time column; omitted means every row enters at time zero.
    covars : sequence of str
        Covariate column names, loaded in the given order.

    Raises
    ------
    DataValidationError
        Missing columns, unparseable numerics (row and column named) or
        invariant violations.
    """
    covars = tuple(covars)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        wanted = [time, event, *covars] + ([entry] if entry else [])
        missing = [c for c in wanted if c not in header]
        if missing:
            raise DataValidationError(
                f"{path}: missing columns {missing}; header is {header}"
            )
        col = {name: header.index(name) for name in wanted}

        def parse(row_num, row, name):
            raw = row[col[name]]
            try:
                return float(raw)
            except ValueError:
                raise DataValidationError(
                    f"{path}: row {row_num}, column {name!r}: "
                    f"cannot parse {raw!r} as a number"
                ) from None

        times, events, entries, rows = [], [], [], []
        for i, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataValidationError(
                    f"{path}: row {i}: expected {len(header)} fields, "
                    f"got {len(row)}"
                )
            times.append(parse(i, row, time))
            events.append(parse(i, row, event))
            entries.append(parse(i, row, entry) if entry else 0.0)
            rows.append([parse(i, row, c) for c in covars])
    events_arr = np.asarray(events)
    if not np.isin(events_arr, (0.0, 1.0)).all():
        bad = int(np.flatnonzero(~np.isin(events_arr, (0.0, 1.0)))[0])
        raise DataValidationError(
            f"{path}: row {bad}: event must be 0 or 1, got {events[bad]!r}"
        )
    covs = np.asarray(rows, dtype=np.float64).reshape(len(times), len(covars))
    return SurvivalDataset(np.asarray(entries), np.asarray(times),
                           events_arr.astype(np.uint8), covs, covars)


def write_csv(data, path):
    """Write a dataset so that read_csv round-trips the numeric content."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["entry", "time", "event", *data.covariate_names])
        for i in range(data.n):
            writer.writerow(
                [repr(float(data.entry[i])), repr(float(data.time[i])),
                 int(data.event[i])]
                + [repr(float(v)) for v in data.covariates[i]]
            )
