"""Sensor-stream deduplication.

A new reading is compared factor-by-factor against the last *stored* reading
of its stream.  Numeric factors contribute a relative change
|curr - prev| / max(|prev|, epsilon); categorical factors (presence, date)
contribute 0 or 1.  The aggregate distance is the Euclidean norm of the
per-factor deltas and is reported for logging, but the store/drop verdict is
per-factor: the reading is stored iff any factor exceeds its threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .ontology import EnvironmentReading

DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True)
class FactorSpec:
    """One monitored factor; threshold None means categorical (any change counts)."""

    name: str
    threshold: Optional[float]

    def __post_init__(self):
        if self.threshold is not None:
            if not math.isfinite(self.threshold) or self.threshold < 0:
                raise ValueError(f"threshold for {self.name} must be finite and >= 0")

    @property
    def is_categorical(self) -> bool:
        return self.threshold is None


# Default thresholds: temperature 0.1, illumination 0.5, humidity 0.35;
# presence and date are categorical.
DEFAULT_FACTORS = (
    FactorSpec("temperature", 0.1),
    FactorSpec("illumination", 0.5),
    FactorSpec("humidity", 0.35),
    FactorSpec("presence", None),
    FactorSpec("date", None),
)

_EXTRACTORS = {
    "temperature": lambda r: r.temperature,
    "illumination": lambda r: r.illumination,
    "humidity": lambda r: r.humidity,
    "presence": lambda r: r.persons_present,
    "date": lambda r: r.date,
}


@dataclass(frozen=True)
class DedupConfig:
    factors: Sequence[FactorSpec] = DEFAULT_FACTORS
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.factors:
            raise ValueError("at least one factor is required")
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise ValueError("factor names must be unique")
        unknown = set(names) - set(_EXTRACTORS)
        if unknown:
            raise ValueError(f"unknown factors: {sorted(unknown)}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def load_threshold_overrides(path) -> DedupConfig:
    """Build a config from a JSON file mapping factor name to threshold
    (a number) or the string "categorical"."""
    with open(path, encoding="utf-8") as fh:
        overrides = json.load(fh)
    factors = []
    for spec in DEFAULT_FACTORS:
        if spec.name in overrides:
            value = overrides[spec.name]
            factors.append(FactorSpec(spec.name,
                                      None if value == "categorical" else float(value)))
        else:
            factors.append(spec)
    extra = set(overrides) - {f.name for f in DEFAULT_FACTORS}
    if extra:
        raise ValueError(f"unknown factors in threshold file: {sorted(extra)}")
    return DedupConfig(factors=tuple(factors))


@dataclass(frozen=True)
class FactorDelta:
    name: str
    d: float
    exceeded: bool


@dataclass(frozen=True)
class DedupDecision:
    store: bool
    distance: float
    deltas: tuple
    reference: object = None  # id of the baseline reading, None if first


def normalized_delta(prev_value, curr_value, spec: FactorSpec,
                     epsilon: float = DEFAULT_EPSILON) -> float:
    """Per-factor change: relative for numerics, 0/1 for categoricals."""
    if spec.is_categorical:
        return 0.0 if prev_value == curr_value else 1.0
    if not (math.isfinite(prev_value) and math.isfinite(curr_value)):
        raise ValueError(f"non-finite value for factor {spec.name}")
    return abs(curr_value - prev_value) / max(abs(prev_value), epsilon)


def factor_deltas(prev: EnvironmentReading, curr: EnvironmentReading,
                  cfg: DedupConfig) -> tuple[FactorDelta, ...]:
    out = []
    for spec in cfg.factors:
        extract = _EXTRACTORS[spec.name]
        d = normalized_delta(extract(prev), extract(curr), spec, cfg.epsilon)
        exceeded = d == 1.0 if spec.is_categorical else d > spec.threshold
        out.append(FactorDelta(spec.name, d, exceeded))
    return tuple(out)


def distance(prev: EnvironmentReading, curr: EnvironmentReading,
             cfg: DedupConfig = DedupConfig()) -> float:
    """Euclidean aggregate of per-factor normalized deltas (baseline-relative)."""
    return math.sqrt(sum(d.d ** 2 for d in factor_deltas(prev, curr, cfg)))


def should_store(baseline: Optional[EnvironmentReading], curr: EnvironmentReading,
                 cfg: DedupConfig = DedupConfig()) -> DedupDecision:
    """Store when there is no baseline, or when any factor exceeds its threshold."""
    if baseline is None:
        return DedupDecision(store=True, distance=0.0, deltas=(), reference=None)
    deltas = factor_deltas(baseline, curr, cfg)
    return DedupDecision(
        store=any(d.exceeded for d in deltas),
        distance=math.sqrt(sum(d.d ** 2 for d in deltas)),
        deltas=deltas,
        reference=baseline.id,
    )


@dataclass
class StreamStats:
    input_count: int = 0
    stored_count: int = 0

    @property
    def reduction_factor(self) -> float:
        return self.input_count / max(self.stored_count, 1)


def filter_stream(readings: Iterable, cfg: DedupConfig = DedupConfig()):
    """Run the dedup over a timestamp-ordered sequence of readings.

    Items are either EnvironmentReading or (stream_id, EnvironmentReading)
    pairs; baselines are tracked per stream.  Returns (stored items, stats).
    """
    baselines: dict = {}
    last_stamp: dict = {}
    stored = []
    stats = StreamStats()
    for i, item in enumerate(readings):
        if isinstance(item, EnvironmentReading):
            stream, reading = None, item
        else:
            stream, reading = item
        stamp = (reading.date, reading.time.hour, reading.time.minute,
                 reading.time.second)
        if stream in last_stamp and stamp < last_stamp[stream]:
            raise ValueError(f"timestamp order violation at reading {i}")
        last_stamp[stream] = stamp
        stats.input_count += 1
        if should_store(baselines.get(stream), reading, cfg).store:
            baselines[stream] = reading
            stored.append(item)
            stats.stored_count += 1
    return stored, stats
