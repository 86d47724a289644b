"""Aggregate spot-price indices over capacity-normalized member prices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import VmSpec
from .errors import CoverageError, GapError, OutOfRangeError
from .prices import CAP_MULTIPLIER, CAP_RELATIVE_EPS, PriceTrace

DEFAULT_PERIOD = 300


def normalize(spec: VmSpec, price: float) -> float:
    """Price per unit of sqrt(cpu * mem) capacity."""
    return price / spec.capacity_scale


def denormalize(spec: VmSpec, normalized_price: float) -> float:
    return normalized_price * spec.capacity_scale


@dataclass(frozen=True)
class IndexSample:
    timestamp: int
    value: float
    low: float
    high: float
    n_effective: int


@dataclass(frozen=True)
class IndexSeries:
    """Index sampled on a regular grid, with per-sample spread and coverage."""

    composition: tuple[str, ...]
    period: int
    samples: list[IndexSample] = field(default_factory=list)
    gaps: list[int] = field(default_factory=list)

    def __post_init__(self):
        stamps = [s.timestamp for s in self.samples]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("sample grid must be strictly increasing")

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([s.timestamp for s in self.samples], dtype=np.int64)

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.samples], dtype=np.float64)

    def value_at(self, t: int) -> float:
        for sample in self.samples:
            if sample.timestamp == t:
                return sample.value
        raise CoverageError(f"index series has no sample at {t}")

    def mean(self) -> float:
        if not self.samples:
            raise GapError("index series is empty")
        return float(self.values.mean())


def _member_specs(catalog, composition) -> list[VmSpec]:
    specs = []
    seen = set()
    for vm_id in composition:
        if vm_id in seen:
            raise ValueError(f"composition repeats vm id {vm_id!r}")
        seen.add(vm_id)
        spec = catalog.get(vm_id)
        if spec is None:
            raise GapError(f"composition member {vm_id!r} not in catalog")
        specs.append(spec)
    if not specs:
        raise ValueError("composition is empty")
    return specs


def index_at(
    traces: dict[str, PriceTrace],
    catalog,
    composition,
    t: int,
    skip_missing: bool = False,
) -> float:
    """Equal-weighted mean of member normalized prices at time t.

    Members whose price sits on the provider cap are excluded from both the
    numerator and the member count. Missing traces raise unless skip_missing.
    """
    value, _, _, _ = index_sample(traces, catalog, composition, t, skip_missing)
    return value


def index_sample(traces, catalog, composition, t, skip_missing=False):
    """index_at plus (low, high, n_effective) for the contributing members."""
    total = 0.0
    low = math.inf
    high = -math.inf
    n_effective = 0
    for spec in _member_specs(catalog, composition):
        trace = traces.get(spec.id)
        if trace is None:
            if skip_missing:
                continue
            raise GapError(f"no trace for composition member {spec.id!r}")
        price = trace.price_at(t)
        cap = CAP_MULTIPLIER * spec.on_demand_price
        if abs(price - cap) <= CAP_RELATIVE_EPS * cap:
            continue
        normalized = price / spec.capacity_scale
        total += normalized
        low = min(low, normalized)
        high = max(high, normalized)
        n_effective += 1
    if n_effective == 0:
        raise GapError(f"no effective composition members at {t}")
    return total / n_effective, low, high, n_effective


def index_series(
    traces,
    catalog,
    composition,
    start: int,
    end: int,
    period: int = DEFAULT_PERIOD,
    skip_missing: bool = False,
) -> IndexSeries:
    """Sample the index on [start, end) every `period` seconds.

    Instants where no member contributes are recorded as gaps, not errors.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    if end <= start:
        raise ValueError("end must be after start")
    samples = []
    gaps = []
    for t in range(start, end, period):
        try:
            value, low, high, n_eff = index_sample(
                traces, catalog, composition, t, skip_missing
            )
        except (GapError, OutOfRangeError):
            gaps.append(t)
            continue
        samples.append(IndexSample(t, value, low, high, n_eff))
    composition_key = tuple(sorted(composition))
    return IndexSeries(composition_key, period, samples, gaps)


def on_demand_index(catalog, composition) -> float:
    """Equal-weighted mean of member normalized on-demand prices."""
    specs = _member_specs(catalog, composition)
    return sum(s.on_demand_price / s.capacity_scale for s in specs) / len(specs)


@dataclass(frozen=True)
class ComparisonReport:
    mean_a: float
    mean_b: float
    mean_ratio: float
    signs: list[int]
    timestamps: list[int]
    on_demand_sign: int | None
    inversions: list[tuple[int, int]]


def compare_indices(
    a: IndexSeries,
    b: IndexSeries,
    on_demand_a: float | None = None,
    on_demand_b: float | None = None,
) -> ComparisonReport:
    """Compare two index series on their common sample grid.

    When on-demand levels are supplied, intervals where the spot ordering
    contradicts the on-demand ordering are reported as inversions.
    """
    a_by_ts = {s.timestamp: s.value for s in a.samples}
    b_by_ts = {s.timestamp: s.value for s in b.samples}
    common = sorted(set(a_by_ts) & set(b_by_ts))
    if not common:
        raise CoverageError("index series share no sample timestamps")
    va = np.array([a_by_ts[t] for t in common])
    vb = np.array([b_by_ts[t] for t in common])
    signs = [int(np.sign(x)) for x in va - vb]
    od_sign = None
    inversions: list[tuple[int, int]] = []
    if on_demand_a is not None and on_demand_b is not None:
        od_sign = int(np.sign(on_demand_a - on_demand_b))
        run_start = None
        for i, (t, sign) in enumerate(zip(common, signs)):
            inverted = sign != 0 and od_sign != 0 and sign != od_sign
            if inverted and run_start is None:
                run_start = t
            if not inverted and run_start is not None:
                inversions.append((run_start, t))
                run_start = None
        if run_start is not None:
            inversions.append((run_start, common[-1] + a.period))
    mean_a = float(va.mean())
    mean_b = float(vb.mean())
    return ComparisonReport(
        mean_a=mean_a,
        mean_b=mean_b,
        mean_ratio=mean_a / mean_b,
        signs=signs,
        timestamps=list(common),
        on_demand_sign=od_sign,
        inversions=inversions,
    )


class IndexCurve:
    """The index as a step function, for integration and window statistics.

    Breakpoints are the union of member price-change instants; between
    breakpoints every member price is constant, so the index is too.
    """

    def __init__(self, traces, catalog, composition):
        specs = _member_specs(catalog, composition)
        for spec in specs:
            if spec.id not in traces:
                raise GapError(f"no trace for composition member {spec.id!r}")
        stamps = np.unique(
            np.concatenate([traces[s.id].timestamps for s in specs])
        )
        self.start = int(max(traces[s.id].first_ts for s in specs))
        stamps = stamps[stamps >= self.start]
        totals = np.zeros(len(stamps))
        counts = np.zeros(len(stamps), dtype=np.int64)
        for spec in specs:
            values = traces[spec.id].values_at(stamps)
            cap = CAP_MULTIPLIER * spec.on_demand_price
            live = np.abs(values - cap) > CAP_RELATIVE_EPS * cap
            totals[live] += values[live] / spec.capacity_scale
            counts += live.astype(np.int64)
        self.timestamps = stamps
        self._counts = counts
        with np.errstate(invalid="ignore", divide="ignore"):
            self._values = np.where(counts > 0, totals / np.maximum(counts, 1), np.nan)

    def value_at(self, t: int) -> float:
        if t < self.start:
            raise OutOfRangeError(f"index curve starts at {self.start}, asked for {t}")
        idx = int(np.searchsorted(self.timestamps, t, side="right")) - 1
        if self._counts[idx] == 0:
            raise GapError(f"no effective composition members at {t}")
        return float(self._values[idx])

    def values_at(self, grid) -> np.ndarray:
        grid = np.asarray(grid, dtype=np.int64)
        if grid.size and grid.min() < self.start:
            raise OutOfRangeError(
                f"index curve starts at {self.start}, asked for {int(grid.min())}"
            )
        idx = np.searchsorted(self.timestamps, grid, side="right") - 1
        if np.any(self._counts[idx] == 0):
            bad = grid[self._counts[idx] == 0][0]
            raise GapError(f"no effective composition members at {int(bad)}")
        return self._values[idx]

    def integrate(self, t0: int, t1: int) -> float:
        """Time integral of the index over [t0, t1), in value * seconds."""
        return sum((end - start) * value for start, end, value in self.segments(t0, t1))

    def window_mean(self, t: int, window: int) -> float:
        """Time-weighted mean over [t - window, t), clipped to curve start."""
        t0 = max(t - window, self.start)
        if t <= t0:
            return self.value_at(t)
        return self.integrate(t0, t) / (t - t0)

    def segments(self, t0: int, t1: int):
        """Yield (start, end, value) covering [t0, t1), split at breakpoints."""
        if t1 <= t0:
            return
        if t0 < self.start:
            raise OutOfRangeError(f"index curve starts at {self.start}, asked for {t0}")
        i = int(np.searchsorted(self.timestamps, t0, side="right")) - 1
        cursor = t0
        while cursor < t1:
            if self._counts[i] == 0:
                raise GapError(f"no effective composition members at {cursor}")
            seg_end = (
                int(self.timestamps[i + 1]) if i + 1 < len(self.timestamps) else t1
            )
            seg_end = min(seg_end, t1)
            yield cursor, seg_end, float(self._values[i])
            cursor = seg_end
            i += 1
