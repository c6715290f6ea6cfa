"""Two-arm right-censored trial data: ingestion, validation, representation."""
import csv
import io
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import (ArmMissing, InvalidArm, InvalidEvent, MalformedRow,
                     NonPositiveTime)

TIME_UNITS = ("years", "months", "days")


@dataclass(frozen=True)
class SubjectRecord:
    """One subject: arm (0 control, 1 treatment), follow-up time, event flag."""
    arm: int
    time: float
    event: int


class TrialDataset:
    """Validated, immutable two-arm dataset.

    Parameters
    ----------
    records : sequence of SubjectRecord
        Kept in the given order; duplicate times (ties) are allowed.
    time_unit : {"years", "months", "days"}
        Metadata only; computation is unit-agnostic.  The default-penalty
        rule is the one consumer (see :mod:`rmstsel.criterion`).
    """

    def __init__(self, records: Sequence[SubjectRecord], time_unit: str = "years"):
        if time_unit not in TIME_UNITS:
            raise ValueError(f"time_unit must be one of {TIME_UNITS}, got {time_unit!r}")
        records = tuple(records)
        n1 = sum(1 for r in records if r.arm == 1)
        n0 = len(records) - n1
        if n0 < 2 or n1 < 2:
            raise ArmMissing(
                f"each arm needs >=2 subjects (control has {n0}, treatment has {n1})")
        self.records = records
        self.n = len(records)
        self.n1 = n1
        self.n0 = n0
        self.time_unit = time_unit

    @classmethod
    def from_arrays(cls, arm, time, event, time_unit: str = "years") -> "TrialDataset":
        """Build from parallel arrays, validating every row (1-based numbering)."""
        arm = np.asarray(arm, dtype=np.float64)
        time = np.asarray(time, dtype=np.float64)
        event = np.asarray(event, dtype=np.float64)
        if not (arm.shape == time.shape == event.shape):
            raise MalformedRow(0, "arm/time/event arrays differ in length")
        bad = ~((arm == 0.0) | (arm == 1.0))
        if bad.any():
            i = int(bad.argmax())
            raise InvalidArm(i + 1, arm[i])
        bad = ~(np.isfinite(time) & (time > 0.0))
        if bad.any():
            i = int(bad.argmax())
            raise NonPositiveTime(i + 1, time[i])
        bad = ~((event == 0.0) | (event == 1.0))
        if bad.any():
            i = int(bad.argmax())
            raise InvalidEvent(i + 1, event[i])
        recs = [SubjectRecord(int(a), float(t), int(e))
                for a, t, e in zip(arm, time, event)]
        return cls(recs, time_unit=time_unit)

    @cached_property
    def _arrays(self):
        arm = np.fromiter((r.arm for r in self.records), dtype=np.int64, count=self.n)
        time = np.fromiter((r.time for r in self.records), dtype=np.float64, count=self.n)
        event = np.fromiter((r.event for r in self.records), dtype=np.float64, count=self.n)
        return arm, time, event

    def arm_arrays(self, arm: int):
        """(times, events) for one arm, in record order."""
        arms, time, event = self._arrays
        mask = arms == arm
        return time[mask], event[mask]

    @cached_property
    def profiles(self):
        """Kernel-ready (control, treatment) ArmProfile pair."""
        t0, e0 = self.arm_arrays(0)
        t1, e1 = self.arm_arrays(1)
        return kernels.build_arm(t0, e0), kernels.build_arm(t1, e1)

    def __eq__(self, other):
        return (isinstance(other, TrialDataset)
                and self.records == other.records
                and self.time_unit == other.time_unit)

    def __repr__(self):
        return (f"TrialDataset(n={self.n}, n0={self.n0}, n1={self.n1}, "
                f"time_unit={self.time_unit!r})")


def _validated_record(line_no: int, arm: float, time: float, event: float) -> SubjectRecord:
    if arm not in (0.0, 1.0):
        raise InvalidArm(line_no, arm)
    if not np.isfinite(time) or time <= 0.0:
        raise NonPositiveTime(line_no, time)
    if event not in (0.0, 1.0):
        raise InvalidEvent(line_no, event)
    return SubjectRecord(int(arm), float(time), int(event))


def parse_dataset(source, time_unit: str = "years") -> TrialDataset:
    """Parse a CSV with header ``arm,time,event`` into a TrialDataset.

    ``source`` may be a path, a text/binary file object, or a str/bytes
    payload.  Line numbers in errors are 1-based including the header.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, "empty input") from None
    if [h.strip().lower() for h in header] != ["arm", "time", "event"]:
        raise MalformedRow(1, f"expected header 'arm,time,event', got {','.join(header)!r}")
    recs = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise MalformedRow(line_no, f"expected 3 fields, got {len(row)}")
        try:
            arm, time, event = (float(f) for f in row)
        except ValueError:
            raise MalformedRow(line_no, f"non-numeric field in {row!r}") from None
        recs.append(_validated_record(line_no, arm, time, event))
    return TrialDataset(recs, time_unit=time_unit)


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str) and "\n" not in source and "," not in source:
        # looks like a path, not a payload
        with open(source, "r", encoding="utf-8") as fh:
            return fh.read()
    if isinstance(source, str):
        return source
    if isinstance(source, os.PathLike):
        with open(source, "r", encoding="utf-8") as fh:
            return fh.read()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def write_csv(ds: TrialDataset, target) -> None:
    """Serialize to the same CSV layout parse_dataset reads (exact round-trip)."""
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", encoding="utf-8", newline="") if own else target
    try:
        fh.write("arm,time,event\n")
        for r in ds.records:
            fh.write(f"{r.arm},{r.time!r},{r.event}\n")
    finally:
        if own:
            fh.close()


def max_estimable_time(ds: TrialDataset) -> float:
    """Largest L at which both arms' KM curves are defined.

    Equals the minimum over arms of the arm's maximum follow-up time.
    """
    p0, p1 = ds.profiles
    return min(p0.tau, p1.tau)
