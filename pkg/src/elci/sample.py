"""Right-censored samples, CSV ingestion and right-continuous step functions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateSample, ValidationError

__all__ = [
    "CensoredObservation",
    "CensoredSample",
    "CsvConfig",
    "RiskGroups",
    "StepFunction",
    "ingest_csv",
    "write_csv",
]


@dataclass(frozen=True)
class CensoredObservation:
    """One observed pair ``(time, event)``; ``event == 1`` means uncensored."""

    time: float
    event: int

    def __post_init__(self):
        if not math.isfinite(self.time) or self.time < 0:
            raise ValidationError(f"time must be finite and >= 0, got {self.time!r}")
        if self.event not in (0, 1):
            raise ValidationError(f"event must be 0 or 1, got {self.event!r}")


@dataclass(frozen=True)
class RiskGroups:
    """Observations grouped by distinct time.

    ``at_risk[k]`` is the number of observations with time >= ``times[k]``,
    i.e. ``n * Hbar_n(times[k]-)``. ``group[i]`` maps sorted observation
    ``i`` to its distinct time.
    """

    times: np.ndarray
    events: np.ndarray
    censored: np.ndarray
    at_risk: np.ndarray
    group: np.ndarray


class CensoredSample:
    """Sorted right-censored sample.

    Observations are ordered by time ascending and, within a tied time,
    events before censorings. Arrays are read-only; instances are immutable.

    Parameters
    ----------
    time : array-like
        Observed times ``Z_i = min(Y_i, C_i)``.
    event : array-like of {0, 1}
        ``delta_i = I[Y_i <= C_i]``.
    """

    def __init__(self, time, event):
        t = np.asarray(time, dtype=float).ravel()
        e_raw = np.asarray(event).ravel()
        if t.shape != e_raw.shape:
            raise ValidationError(
                f"time and event lengths differ ({t.size} vs {e_raw.size})"
            )
        bad = ~np.isfinite(t) | (t < 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValidationError(f"observation {i}: time must be finite and >= 0, got {t[i]!r}")
        e_float = e_raw.astype(float)
        bad = (e_float != 0) & (e_float != 1)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValidationError(f"observation {i}: event must be 0 or 1, got {e_raw[i]!r}")
        e = e_float.astype(np.int8)
        if t.size < 2:
            raise DegenerateSample(f"need at least 2 observations, got {t.size}")
        if not e.any():
            raise DegenerateSample("sample has no events")
        # time ascending, then event descending
        order = np.lexsort((-e, t))
        self._time = t[order]
        self._event = e[order]
        self._time.flags.writeable = False
        self._event.flags.writeable = False

    @classmethod
    def from_observations(cls, observations: Iterable[CensoredObservation]) -> CensoredSample:
        obs = list(observations)
        return cls([o.time for o in obs], [o.event for o in obs])

    @property
    def time(self) -> np.ndarray:
        return self._time

    @property
    def event(self) -> np.ndarray:
        return self._event

    @property
    def n(self) -> int:
        return self._time.size

    def __len__(self):
        return self.n

    @property
    def observations(self) -> tuple[CensoredObservation, ...]:
        return tuple(
            CensoredObservation(float(t), int(e)) for t, e in zip(self._time, self._event)
        )

    @property
    def censoring_fraction(self) -> float:
        return 1.0 - float(self._event.mean())

    @property
    def has_ties(self) -> bool:
        return bool(np.any(np.diff(self._time) == 0))

    @cached_property
    def groups(self) -> RiskGroups:
        times, group, counts = np.unique(self._time, return_inverse=True, return_counts=True)
        events = np.bincount(group, weights=self._event, minlength=times.size)
        censored = counts - events
        at_risk = self.n - np.concatenate(([0], np.cumsum(counts)[:-1]))
        return RiskGroups(times, events, censored, at_risk.astype(float), group)

    def scaled(self, c: float) -> CensoredSample:
        return CensoredSample(self._time * c, self._event)

    def shifted(self, c: float) -> CensoredSample:
        return CensoredSample(self._time + c, self._event)

    def __eq__(self, other):
        if not isinstance(other, CensoredSample):
            return NotImplemented
        return np.array_equal(self._time, other._time) and np.array_equal(
            self._event, other._event
        )

    def __hash__(self):
        return hash((self._time.tobytes(), self._event.tobytes()))

    def __repr__(self):
        return f"CensoredSample(n={self.n}, events={int(self._event.sum())})"


@dataclass(frozen=True)
class CsvConfig:
    """Column mapping for :func:`ingest_csv`."""

    time_column: str = "time"
    event_column: str = "event"
    delimiter: str = ","


def ingest_csv(path, config: CsvConfig | None = None) -> CensoredSample:
    """Read a censored sample from a CSV file with a header row.

    Extra columns are ignored. Validation errors name the offending line
    (1-based, header is line 1).
    """
    config = config or CsvConfig()
    path = Path(path)
    times, events = [], []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh, delimiter=config.delimiter)
        if reader.fieldnames is None:
            raise DegenerateSample(f"{path}: empty file")
        for col in (config.time_column, config.event_column):
            if col not in reader.fieldnames:
                raise ValidationError(f"{path}: missing column {col!r}")
        for lineno, row in enumerate(reader, start=2):
            t = _parse_float(row[config.time_column], path, lineno, "time")
            if not math.isfinite(t) or t < 0:
                raise ValidationError(f"{path}:{lineno}: time must be finite and >= 0, got {t!r}")
            e = _parse_float(row[config.event_column], path, lineno, "event")
            if e not in (0.0, 1.0):
                raise ValidationError(f"{path}:{lineno}: event must be 0 or 1, got {row[config.event_column]!r}")
            times.append(t)
            events.append(int(e))
    if len(times) < 2:
        raise DegenerateSample(f"{path}: need at least 2 rows, got {len(times)}")
    if not any(events):
        raise DegenerateSample(f"{path}: no events")
    return CensoredSample(times, events)


def _parse_float(raw, path, lineno, what):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"{path}:{lineno}: cannot parse {what} value {raw!r}") from None


def write_csv(sample: CensoredSample, path, config: CsvConfig | None = None) -> None:
    """Write ``sample`` so that :func:`ingest_csv` reads it back unchanged."""
    config = config or CsvConfig()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter=config.delimiter)
        w.writerow([config.time_column, config.event_column])
        for t, e in zip(sample.time, sample.event):
            w.writerow([repr(float(t)), int(e)])


class StepFunction:
    """Right-continuous piecewise-constant function.

    ``values[k]`` holds on ``[knots[k], knots[k+1])``; ``initial`` holds on
    ``(-inf, knots[0])``.
    """

    def __init__(self, knots: Sequence[float], values: Sequence[float], initial: float = 0.0,
                 monotone: bool = False):
        knots = np.asarray(knots, dtype=float).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if knots.shape != values.shape:
            raise ValidationError("knots and values must have equal length")
        if knots.size > 1 and not np.all(np.diff(knots) > 0):
            raise ValidationError("knots must be strictly ascending")
        if monotone and knots.size:
            if values[0] < initial or np.any(np.diff(values) < 0):
                raise ValidationError("values are not nondecreasing")
        self.knots = knots
        self.values = values
        self.initial = float(initial)
        self.monotone = monotone
        self.knots.flags.writeable = False
        self.values.flags.writeable = False
        self._padded = np.concatenate(([self.initial], values))

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Value at ``x`` (right-continuous)."""
        idx = np.searchsorted(self.knots, x, side="right")
        return _unwrap(self._padded[idx])

    def eval_left(self, x):
        """Left limit at ``x``."""
        idx = np.searchsorted(self.knots, x, side="left")
        return _unwrap(self._padded[idx])

    def jump_at(self, x):
        """``f(x) - f(x-)``; zero off the knot set."""
        hi = np.searchsorted(self.knots, x, side="right")
        lo = np.searchsorted(self.knots, x, side="left")
        return _unwrap(self._padded[hi] - self._padded[lo])

    @property
    def jumps(self) -> np.ndarray:
        return np.diff(self._padded)

    @property
    def terminal(self) -> float:
        return float(self._padded[-1])

    def __repr__(self):
        return f"StepFunction({self.knots.size} knots, initial={self.initial}, terminal={self.terminal})"


def _unwrap(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a
