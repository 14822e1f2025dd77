"""Affine node clocks, GNSS-UTC time transfer, PPS error models, clock steering.

PPS pulse offsets decompose into a constant bias, a slowly varying first-order
autoregressive drift, and white pulse-to-pulse jitter. Sampling is random
access: prefix series are cached per model so pps_offset_at(model, k) is a
pure function of (model, k) regardless of query order.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import ar1_series
from .analysis import OffsetSeries
from .constants import DEFAULT_GPS_UTC_OFFSET_S
from .errors import ConfigurationError, DegenerateClockError, EmptyInputError
from .rng import derive_seed

MAX_ABS_SKEW = 1e-4


@dataclass(frozen=True)
class QuartzClock:
    """Affine local clock C(t) = drift_rate * t + offset_s."""

    drift_rate: float = 1.0
    offset_s: float = 0.0
    node_id: str = ""

    def __post_init__(self):
        if abs(self.drift_rate - 1.0) > MAX_ABS_SKEW:
            raise ConfigurationError(
                f"|drift_rate - 1| must be <= {MAX_ABS_SKEW} "
                f"(got {self.drift_rate})"
            )

    @property
    def skew(self) -> float:
        return self.drift_rate - 1.0


def read_clock(clock: QuartzClock, t_true):
    """Local reading of the true time: drift_rate * t + offset."""
    return clock.drift_rate * np.asarray(t_true, dtype=float) + clock.offset_s


@dataclass(frozen=True)
class TimeTransferState:
    """Receiver reading with its bias and the GNSS-UTC offset resolved."""

    t_r: float
    delta_t_r: float
    delta_t_utc: float
    t_gps: float
    t_utc: float

    def __post_init__(self):
        scale = max(abs(self.t_r), 1.0)
        if abs(self.delta_t_r - (self.t_r - self.t_gps)) > 1e-12 * scale:
            raise ConfigurationError("bias must equal t_r - t_gps")
        if abs(self.t_utc - (self.t_r - self.delta_t_r - self.delta_t_utc)) > (
            1e-12 * scale
        ):
            raise ConfigurationError("t_utc must equal t_r - bias - utc offset")


def gps_to_utc(
    t_r: float,
    delta_t_r: float,
    delta_t_utc: float = DEFAULT_GPS_UTC_OFFSET_S,
) -> float:
    """UTC time from a receiver reading, its bias, and the system-UTC offset."""
    return t_r - delta_t_r - delta_t_utc


def time_transfer(
    t_r: float,
    delta_t_r: float,
    delta_t_utc: float = DEFAULT_GPS_UTC_OFFSET_S,
) -> TimeTransferState:
    """Full transfer state: resolves both system time and UTC."""
    t_gps = t_r - delta_t_r
    return TimeTransferState(
        t_r=t_r,
        delta_t_r=delta_t_r,
        delta_t_utc=delta_t_utc,
        t_gps=t_gps,
        t_utc=t_gps - delta_t_utc,
    )


@dataclass(frozen=True)
class RelativeClockParams:
    """Affine relation between two clocks: C1(t) = theta * C2(t) + beta_s."""

    theta: float
    beta_s: float


def relative_clock_params(
    c1: QuartzClock, c2: QuartzClock
) -> RelativeClockParams:
    if c2.drift_rate == 0.0:
        raise DegenerateClockError("reference clock has zero rate")
    theta = c1.drift_rate / c2.drift_rate
    return RelativeClockParams(theta=theta, beta_s=c1.offset_s - theta * c2.offset_s)


@dataclass(frozen=True)
class DriftProcess:
    """Slow PPS wander: stationary AR(1) with the given std and time constant."""

    amplitude_ns: float = 0.0
    correlation_time_s: float = 600.0

    def __post_init__(self):
        if self.amplitude_ns < 0.0:
            raise ConfigurationError("drift amplitude must be non-negative")
        if self.correlation_time_s <= 0.0:
            raise ConfigurationError("correlation time must be positive")


@dataclass(frozen=True)
class PpsErrorModel:
    """Per-pulse timing error: bias + AR(1) drift + white jitter (all ns).

    drift_seed lets two receivers share one drift realization (common-mode
    wander that cancels pairwise) while keeping jitter streams independent;
    it defaults to a stream derived from `seed`.
    """

    bias_ns: float = 0.0
    drift: DriftProcess = DriftProcess()
    jitter_std_ns: float = 0.0
    seed: int = 0
    drift_seed: int | None = None

    def __post_init__(self):
        if self.jitter_std_ns < 0.0:
            raise ConfigurationError("jitter std must be non-negative")

    def with_seeds(self, seed: int, drift_seed: int | None = None):
        return replace(self, seed=seed, drift_seed=drift_seed)

    @property
    def effective_drift_seed(self) -> int:
        if self.drift_seed is not None:
            return self.drift_seed
        return derive_seed(self.seed, "pps-drift")


class _PrefixStream:
    """Growable cached sample prefix fed by one RNG stream, drawn in order."""

    def __init__(self, seed: int, make_block, init_state=None):
        self._rng = np.random.default_rng(seed)
        self._make_block = make_block
        self._state = init_state(self._rng) if init_state else None
        self._values = np.empty(0)

    def prefix(self, n: int) -> np.ndarray:
        if n > self._values.size:
            grow = max(n, 2 * self._values.size, 4096)
            block, self._state = self._make_block(
                self._rng, grow - self._values.size, self._state
            )
            self._values = np.concatenate([self._values, block])
        return self._values[:n]


_STREAM_CACHE: dict = {}
_STREAM_LOCK = threading.Lock()


def _drift_stream(model: PpsErrorModel) -> _PrefixStream:
    amp = model.drift.amplitude_ns
    tau = model.drift.correlation_time_s
    phi = math.exp(-1.0 / tau)

    def init_state(rng):
        return rng.normal(0.0, amp) if amp > 0.0 else 0.0

    def make_block(rng, count, state):
        if amp == 0.0:
            return np.zeros(count), state
        innov = rng.normal(0.0, amp * math.sqrt(1.0 - phi * phi), count)
        block = ar1_series(state, phi, innov)
        return block, float(block[-1])

    return _PrefixStream(model.effective_drift_seed, make_block, init_state)


def _jitter_stream(model: PpsErrorModel) -> _PrefixStream:
    sigma = model.jitter_std_ns

    def make_block(rng, count, state):
        if sigma == 0.0:
            return np.zeros(count), None
        return rng.normal(0.0, sigma, count), None

    return _PrefixStream(model.seed, make_block)


def _model_streams(model: PpsErrorModel):
    key = (
        model.bias_ns,
        model.drift.amplitude_ns,
        model.drift.correlation_time_s,
        model.jitter_std_ns,
        model.seed,
        model.effective_drift_seed,
    )
    with _STREAM_LOCK:
        entry = _STREAM_CACHE.get(key)
        if entry is None:
            entry = (_drift_stream(model), _jitter_stream(model))
            _STREAM_CACHE[key] = entry
    return entry


def pps_series_ns(model: PpsErrorModel, n_pulses: int) -> np.ndarray:
    """Offsets of pulses 0..n_pulses-1 in ns (bias + drift + jitter)."""
    if n_pulses < 1:
        raise EmptyInputError("need at least one pulse")
    drift, jitter = _model_streams(model)
    with _STREAM_LOCK:
        d = drift.prefix(n_pulses)
        j = jitter.prefix(n_pulses)
        return model.bias_ns + d + j


def clear_pps_stream_cache() -> None:
    """Drop cached sample prefixes (frees memory; values are reproducible)."""
    with _STREAM_LOCK:
        _STREAM_CACHE.clear()


def pps_offset_at(model: PpsErrorModel, pulse_index: int) -> float:
    """Offset of one pulse in ns; pure in (model, index)."""
    if pulse_index < 0:
        raise ConfigurationError("pulse_index must be non-negative")
    return float(pps_series_ns(model, pulse_index + 1)[pulse_index])


def pairwise_pps_series(
    model_a: PpsErrorModel,
    model_b: PpsErrorModel,
    n_pulses: int,
    rate_hz: float = 1.0,
) -> OffsetSeries:
    """Per-pulse offset difference a - b, as an oscilloscope would log it."""
    if n_pulses < 1:
        raise EmptyInputError("need at least one pulse")
    if rate_hz <= 0.0:
        raise ConfigurationError("rate_hz must be positive")
    diff = pps_series_ns(model_a, n_pulses) - pps_series_ns(model_b, n_pulses)
    times = np.arange(n_pulses, dtype=float) / rate_hz
    return OffsetSeries(times, diff, source="pairwise-pps")


PPS_PRESET_NAMES = ("same-model", "diff-model")


def pps_preset_fleet(name: str, n: int, seed: int = 0) -> tuple:
    """Calibrated receiver fleets for the two benchmark setups.

    same-model: every unit shares one slow-wander realization (common-mode,
    cancels pairwise) and differs only in independent 9 ns jitter.
    diff-model: alternating hardware bias plus independent slow wander and
    20 ns jitter per unit.
    """
    if n < 1:
        raise ConfigurationError("fleet size must be >= 1")
    key = name.strip().lower().replace("_", "-")
    if key == "same-model":
        drift = DriftProcess(amplitude_ns=6.0, correlation_time_s=600.0)
        shared = derive_seed(seed, "pps-shared-drift")
        return tuple(
            PpsErrorModel(
                bias_ns=0.0,
                drift=drift,
                jitter_std_ns=9.0,
                seed=derive_seed(seed, f"pps-{i}"),
                drift_seed=shared,
            )
            for i in range(n)
        )
    if key == "diff-model":
        drift = DriftProcess(amplitude_ns=3.0, correlation_time_s=7200.0)
        return tuple(
            PpsErrorModel(
                bias_ns=6.9 if i % 2 == 0 else 0.0,
                drift=drift,
                jitter_std_ns=20.0,
                seed=derive_seed(seed, f"pps-{i}"),
                drift_seed=derive_seed(seed, f"pps-drift-{i}"),
            )
            for i in range(n)
        )
    raise ConfigurationError(
        f"unknown PPS preset '{name}' (known: {', '.join(PPS_PRESET_NAMES)})"
    )


def pps_preset_pair(name: str, seed: int = 0):
    """The two-receiver bench form of pps_preset_fleet."""
    fleet = pps_preset_fleet(name, 2, seed)
    return fleet[0], fleet[1]


@dataclass(frozen=True)
class DisciplinedClock:
    """A quartz clock steered by PPS pulses.

    Between pulses the clock free-runs at its own rate from the latest pulse
    anchor; each pulse refreshes the offset estimate. The raw hardware clock
    is additionally stepped whenever its accumulated error reaches
    adjust_limit_s, without disturbing the corrected output.
    """

    clock: QuartzClock
    pulse_times_s: np.ndarray
    pulse_refs_s: np.ndarray
    adjust_limit_s: float
    step_times_s: np.ndarray
    step_offsets_s: np.ndarray

    def corrected(self, t):
        """Steered reading at true time t (scalar or array)."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.pulse_times_s, t, side="right") - 1
        free = read_clock(self.clock, t)
        anchored = np.where(
            idx >= 0,
            self.pulse_refs_s[np.maximum(idx, 0)]
            + self.clock.drift_rate
            * (t - self.pulse_times_s[np.maximum(idx, 0)]),
            free,
        )
        return anchored if anchored.ndim else float(anchored)

    def error(self, t):
        """Corrected-clock error vs true time."""
        t = np.asarray(t, dtype=float)
        out = self.corrected(t) - t
        return out if isinstance(out, np.ndarray) else float(out)

    def raw(self, t):
        """Hardware clock reading including any step adjustments."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.step_times_s, t, side="right")
        steps = np.concatenate([[0.0], np.cumsum(self.step_offsets_s)])
        out = read_clock(self.clock, t) + steps[idx]
        return out if out.ndim else float(out)


def discipline_clock(
    clock: QuartzClock,
    pps_events: OffsetSeries,
    adjust_limit_s: float = 0.1,
) -> DisciplinedClock:
    """Steer a clock with PPS pulses whose per-pulse errors are given in ns.

    pps_events timestamps are true pulse times; offsets are the pulse errors,
    so the reference time claimed at pulse k is t_k + offset_k.
    """
    if pps_events.n < 1:
        raise EmptyInputError("need at least one PPS pulse")
    if adjust_limit_s <= 0.0:
        raise ConfigurationError("adjust_limit_s must be positive")
    t_k = pps_events.times_s
    refs = t_k + pps_events.offsets_ns * 1e-9

    raw_at_pulse = read_clock(clock, t_k)
    disc = raw_at_pulse - refs
    step_times, step_offsets = [], []
    if np.max(np.abs(disc)) >= adjust_limit_s:
        total = 0.0
        for k in range(t_k.size):
            err = raw_at_pulse[k] + total - refs[k]
            if abs(err) >= adjust_limit_s:
                step_times.append(t_k[k])
                step_offsets.append(-err)
                total -= err
    return DisciplinedClock(
        clock=clock,
        pulse_times_s=t_k,
        pulse_refs_s=refs,
        adjust_limit_s=adjust_limit_s,
        step_times_s=np.array(step_times),
        step_offsets_s=np.array(step_offsets),
    )
