"""Domain types and cost evaluation for Leontief agents with finite work.

An allocation is always a *fixed* schedule: a contiguous list of segments,
each holding one dominant-share rate per agent. Agent ``i`` with share
``s`` receives ``s * demands[i]`` of every resource and completes ``s``
units of work per unit time. Agents are indexed from 0.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    EmptyInstance,
    NegativeDemand,
    NonPositiveCost,
    NonPositiveWork,
    ParseError,
    RowNotNormalized,
    UnfinishedAgent,
    ValidationError,
)

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-9  # slack on per-resource capacity
    work: float = 1e-9  # relative remaining work treated as done
    tie: float = 1e-9  # relative equality in comparisons

    @classmethod
    def from_env(cls, var: str = "FAIRSHARE_TOL") -> "Tolerances":
        """Defaults, with ``tie`` overridden by the environment if set."""
        raw = os.environ.get(var)
        if raw is None or raw.strip() == "":
            return cls()
        try:
            tie = float(raw)
        except ValueError:
            raise ValidationError(f"{var}={raw!r} is not a number") from None
        if not tie >= 0:
            raise ValidationError(f"{var} must be non-negative")
        return cls(tie=tie)


DEFAULT_TOL = Tolerances()


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Instance:
    """Normalized demand matrix plus per-agent work.

    Build through :func:`validate_instance`; the constructor itself does
    not check invariants.
    """

    demands: np.ndarray
    work: np.ndarray

    @property
    def n(self) -> int:
        return self.demands.shape[0]

    @property
    def m(self) -> int:
        return self.demands.shape[1]

    def total_resources(self) -> np.ndarray:
        """Per-agent resource totals ``k_i * d_i`` (never stored)."""
        return self.work[:, None] * self.demands

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return np.array_equal(self.demands, other.demands) and np.array_equal(
            self.work, other.work
        )

    def __hash__(self):
        return hash((self.demands.tobytes(), self.work.tobytes(), self.demands.shape))

    def to_dict(self) -> dict:
        return {
            "demands": [[float(x) for x in row] for row in self.demands],
            "work": [float(x) for x in self.work],
        }

    @classmethod
    def from_dict(cls, data) -> "Instance":
        if not isinstance(data, dict):
            raise ParseError("instance: expected a JSON object")
        for key in ("demands", "work"):
            if key not in data:
                raise ParseError(f"instance: missing field {key!r}")
        demands = data["demands"]
        if not isinstance(demands, list) or not all(isinstance(r, list) for r in demands):
            raise ParseError("demands: expected an array of arrays")
        for i, row in enumerate(demands):
            for r, x in enumerate(row):
                if isinstance(x, bool) or not isinstance(x, (int, float)):
                    raise ParseError(f"demands[{i}][{r}]: expected a number, got {x!r}")
        if len({len(r) for r in demands}) > 1:
            raise ParseError("demands: rows have different lengths")
        work = data["work"]
        if not isinstance(work, list):
            raise ParseError("work: expected an array")
        for i, x in enumerate(work):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ParseError(f"work[{i}]: expected a number, got {x!r}")
        return validate_instance(demands, work)


def validate_instance(demands, work) -> Instance:
    """Check normalization and positivity; never renormalizes."""
    d = np.asarray(demands, dtype=float)
    k = np.asarray(work, dtype=float)
    if d.size == 0 or d.ndim != 2 or k.ndim != 1 or k.size == 0:
        raise EmptyInstance("instance needs at least one agent and one resource")
    if d.shape[0] != k.shape[0]:
        raise ValidationError(
            f"{d.shape[0]} demand rows but {k.shape[0]} work entries"
        )
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(k))):
        raise ValidationError("demands and work must be finite")
    if np.any(d < 0):
        i, r = np.argwhere(d < 0)[0]
        raise NegativeDemand(f"demand[{i}][{r}] = {d[i, r]} is negative")
    if np.any(k <= 0):
        i = int(np.argmax(k <= 0))
        raise NonPositiveWork(f"work[{i}] = {k[i]} must be positive")
    row_max = d.max(axis=1)
    bad = np.abs(row_max - 1.0) > NORMALIZATION_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise RowNotNormalized(f"row {i} has max demand {row_max[i]}, expected 1")
    return Instance(_frozen(d), _frozen(k))


def progress_rate(bundle, demand) -> float:
    """Leontief progress rate: min over demanded resources of bundle/demand."""
    bundle = np.asarray(bundle, dtype=float)
    demand = np.asarray(demand, dtype=float)
    used = demand > 0
    if not np.any(used):
        return 0.0
    with np.errstate(over="ignore"):
        return max(0.0, float(np.min(bundle[used] / demand[used])))


def feasibility_excess(instance: Instance, shares) -> float:
    """Largest per-resource overuse ``max_r sum_i s_i d_ir - 1``."""
    load = np.asarray(shares, dtype=float) @ instance.demands
    return float(load.max() - 1.0)


@dataclass(frozen=True, eq=False)
class Segment:
    start: float
    end: float
    shares: np.ndarray

    @property
    def duration(self) -> float:
        return self.end - self.start

    def to_dict(self) -> dict:
        return {
            "start": float(self.start),
            "end": float(self.end),
            "shares": [float(x) for x in self.shares],
        }


def make_segment(start: float, end: float, shares, tol: Tolerances = DEFAULT_TOL) -> Segment:
    s = np.array(shares, dtype=float)
    if not end > start:
        raise ValidationError(f"segment [{start}, {end}) is empty")
    if np.any(s < -tol.feas):
        raise ValidationError(f"negative share in {s.tolist()}")
    s[s < 0] = 0.0
    return Segment(float(start), float(end), _frozen(s))


@dataclass(frozen=True, eq=False)
class Schedule:
    segments: tuple
    completion_times: np.ndarray

    @property
    def makespan(self) -> float:
        return float(self.completion_times.max())

    def to_dict(self) -> dict:
        return {
            "segments": [seg.to_dict() for seg in self.segments],
            "completion_times": [float(t) for t in self.completion_times],
        }

    @classmethod
    def from_dict(cls, data, instance: Instance, tol: Tolerances = DEFAULT_TOL) -> "Schedule":
        if not isinstance(data, dict) or "segments" not in data:
            raise ParseError("schedule: expected an object with 'segments'")
        segs = []
        for idx, raw in enumerate(data["segments"]):
            try:
                shares = raw["shares"]
                if len(shares) != instance.n:
                    raise ValidationError(
                        f"segments[{idx}].shares has {len(shares)} entries, "
                        f"instance has {instance.n} agents"
                    )
                segs.append(make_segment(raw["start"], raw["end"], shares, tol))
            except (KeyError, TypeError) as exc:
                raise ParseError(f"segments[{idx}]: malformed ({exc})") from None
        sched = schedule_from_segments(instance, segs, tol)
        stored = data.get("completion_times")
        if stored is not None:
            stored = np.asarray(stored, dtype=float)
            if stored.shape != sched.completion_times.shape or not np.allclose(
                stored, sched.completion_times, rtol=1e-9, atol=0
            ):
                raise ValidationError("stored completion_times disagree with segments")
        return sched


def completion_times(
    instance: Instance, segments: Sequence[Segment], tol: Tolerances = DEFAULT_TOL
) -> np.ndarray:
    """Forward-integrate shares; each agent finishes when its work is done."""
    k = instance.work
    done = np.zeros(instance.n)
    t = np.full(instance.n, np.nan)
    for seg in segments:
        dur = seg.duration
        for i in np.flatnonzero(np.isnan(t)):
            rate = seg.shares[i]
            if rate <= 0:
                continue
            rem = k[i] - done[i]
            if rem - rate * dur <= tol.work * k[i]:
                t[i] = seg.end
            elif rem / rate < dur:
                t[i] = seg.start + rem / rate
            done[i] += rate * dur
    unfinished = np.flatnonzero(np.isnan(t))
    if unfinished.size:
        raise UnfinishedAgent(int(unfinished[0]))
    return t


def schedule_from_segments(
    instance: Instance, segments: Sequence[Segment], tol: Tolerances = DEFAULT_TOL
) -> Schedule:
    segs = tuple(segments)
    times = completion_times(instance, segs, tol)
    return Schedule(segs, _frozen(times))


def log_cost_product(costs) -> float:
    c = np.asarray(costs, dtype=float)
    if np.any(~(c > 0)):
        raise NonPositiveCost(f"costs must be positive, got {c.tolist()}")
    return float(np.sum(np.log(c)))


def bundle_cost(
    instance: Instance,
    schedule: Schedule,
    i: int,
    j: int,
    tol: Tolerances = DEFAULT_TOL,
) -> float | None:
    """Time for agent ``i`` to finish its work on agent ``j``'s bundle.

    Returns None when ``j``'s bundle runs out before ``i`` could finish;
    the bundle is zero once ``j`` completes.
    """
    if i == j:
        return float(schedule.completion_times[i])
    d_i = instance.demands[i]
    used = d_i > 0
    # rate per unit of j's dominant share
    ratio = float(np.min(instance.demands[j][used] / d_i[used]))
    k = instance.work[i]
    done = 0.0
    for seg in schedule.segments:
        rate = seg.shares[j] * ratio
        if rate <= 0:
            continue
        rem = k - done
        if rem - rate * seg.duration <= tol.work * k:
            if rem / rate < seg.duration * (1 - 1e-12):
                return seg.start + rem / rate
            return seg.end
        done += rate * seg.duration
    return None


def equal_split_cost(instance: Instance, i: int) -> float:
    return instance.n * float(instance.work[i])


def check_schedule(instance: Instance, schedule: Schedule, tol: Tolerances = DEFAULT_TOL) -> None:
    """Raise ValidationError unless every schedule invariant holds."""
    segs = schedule.segments
    if not segs:
        raise ValidationError("schedule has no segments")
    if segs[0].start != 0:
        raise ValidationError("schedule must start at time 0")
    for a, b in zip(segs, segs[1:]):
        if a.end != b.start:
            raise ValidationError(f"gap between segments at {a.end} / {b.start}")
    for idx, seg in enumerate(segs):
        if not seg.end > seg.start:
            raise ValidationError(f"segment {idx} is empty")
        if np.any(seg.shares < 0):
            raise ValidationError(f"segment {idx} has a negative share")
        excess = feasibility_excess(instance, seg.shares)
        if excess > tol.feas:
            raise ValidationError(f"segment {idx} overuses a resource by {excess}")
    t = schedule.completion_times
    if t.shape != (instance.n,) or np.any(~(t > 0)):
        raise ValidationError("completion times must be positive, one per agent")
    boundaries = np.array([s.end for s in segs])
    for i in range(instance.n):
        scale = max(1.0, t[i])
        if np.min(np.abs(boundaries - t[i])) > 1e-9 * scale:
            raise ValidationError(f"agent {i} finishes inside a segment")
        work = 0.0
        for seg in segs:
            if seg.start >= t[i] - 1e-12 * scale:
                if seg.shares[i] > 0:
                    raise ValidationError(f"agent {i} still holds resources after finishing")
                continue
            work += seg.shares[i] * seg.duration
        if abs(work - instance.work[i]) > max(tol.work, 1e-9) * instance.work[i]:
            raise ValidationError(
                f"agent {i} receives {work} work, needs {instance.work[i]}"
            )
    if not math.isclose(segs[-1].end, t.max(), rel_tol=1e-12, abs_tol=0.0):
        raise ValidationError("last segment must end at the makespan")
    recomputed = completion_times(instance, segs, tol)
    if not np.allclose(recomputed, t, rtol=1e-9, atol=0):
        raise ValidationError("stored completion times disagree with the segments")


@dataclass
class _SegmentBuilder:
    """Accumulates (shares, duration) steps into a contiguous Schedule."""

    instance: Instance
    steps: list = field(default_factory=list)

    def add(self, shares, duration: float) -> None:
        self.steps.append((np.asarray(shares, dtype=float), float(duration)))

    def build(self, finish_times) -> Schedule:
        segs = []
        now = 0.0
        for shares, dur in self.steps:
            end = now + dur
            segs.append(Segment(now, end, _frozen(shares)))
            now = end
        return Schedule(tuple(segs), _frozen(finish_times))
