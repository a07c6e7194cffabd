"""Quadrature phase recovery and resonance-drift control simulation.

Motion phase is read from a signal and its 90-degree-shifted copy with a
four-quadrant arctangent. Three-tone signals are separated by sampling
both copies at frame start, middle and end and solving the 6x6 linear
system in {amp*cos(phase), amp*sin(phase)} per tone. The drift simulator
moves the plant resonance quasi-statically, evaluates the steady-state
oscillator phase at the fixed drive frequency, and optionally subtracts
the (noisily) measured error at every frame start.

All phases are reported in (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, IllConditioned, UndefinedPhase
from .scanner import ScannerConfig

COND_LIMIT = 1e8
_TWO_PI = 2.0 * math.pi


def wrap_phase(theta):
    """Wrap radians into (-pi, pi]; works on scalars and arrays."""
    wrapped = np.mod(np.asarray(theta, dtype=np.float64) + np.pi, _TWO_PI) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return float(wrapped) if np.isscalar(theta) or np.ndim(theta) == 0 else wrapped


@dataclass(frozen=True)
class QuadraturePair:
    """A motion sample and its 90-degree-shifted copy."""

    x: float
    xq: float


def quadrature_phase(pair: QuadraturePair) -> float:
    """Instantaneous phase of a quadrature pair, in (-pi, pi]."""
    if pair.x == 0.0 and pair.xq == 0.0:
        raise UndefinedPhase("quadrature pair (0, 0) has no direction")
    theta = math.atan2(pair.xq, pair.x)
    return math.pi if theta == -math.pi else theta


@dataclass(eq=False)
class MultitoneState:
    """Amplitudes and phases of three tones at fixed angular frequencies."""

    omegas: tuple[float, float, float]
    amps: tuple[float, float, float]
    phases: tuple[float, float, float]

    def __post_init__(self) -> None:
        self.omegas = tuple(float(w) for w in self.omegas)
        self.amps = tuple(float(a) for a in self.amps)
        self.phases = tuple(wrap_phase(float(p)) for p in self.phases)
        if len(self.omegas) != 3 or len(self.amps) != 3 or len(self.phases) != 3:
            raise DomainError("state must carry exactly three tones")
        if len(set(self.omegas)) != 3:
            raise DomainError("tone frequencies must be distinct")
        if any(a < 0 for a in self.amps):
            raise DomainError("amplitudes must be non-negative")


def synthesize_quadrature(state: MultitoneState, t) -> tuple[np.ndarray, np.ndarray]:
    """x(t) = sum A_i cos(w_i t + phi_i) and its quadrature copy with sin."""
    t = np.asarray(t, dtype=np.float64)
    w = np.array(state.omegas)
    a = np.array(state.amps)
    p = np.array(state.phases)
    arg = np.outer(t, w) + p
    return np.cos(arg) @ a, np.sin(arg) @ a


def _aliasing_message(omegas: np.ndarray, frame_time: float, cond: float) -> str:
    half = frame_time / 2.0
    clauses = []
    for i in range(3):
        for j in range(i + 1, 3):
            beats = (omegas[i] - omegas[j]) * half / _TWO_PI
            if abs(beats - round(beats)) < 1e-9:
                clauses.append(
                    f"tones {i} and {j} coincide on the sampling comb "
                    f"((omega[{i}]-omega[{j}])*T/2 = {round(beats)}*2*pi)")
    cycles = omegas * frame_time / _TWO_PI
    if np.all(np.abs(cycles - np.round(cycles)) < 1e-9):
        clauses.append("every tone completes whole cycles over T, so the "
                       "t = 0 and t = T samples coincide")
    detail = "; ".join(clauses) if clauses else "no aliasing pair identified"
    return f"recovery system condition number {cond:.3e} exceeds {COND_LIMIT:.0e}: {detail}"


def solve_multitone(x_samples: Sequence[float], xq_samples: Sequence[float],
                    omegas: Sequence[float], frame_time: float) -> MultitoneState:
    """Recover three tone amplitudes and phases from quadrature samples taken
    at t = 0, frame_time/2 and frame_time."""
    x = np.asarray(x_samples, dtype=np.float64)
    xq = np.asarray(xq_samples, dtype=np.float64)
    w = np.asarray(omegas, dtype=np.float64)
    if x.shape != (3,) or xq.shape != (3,) or w.shape != (3,):
        raise DomainError("need exactly three samples per signal and three frequencies")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xq)) and np.all(np.isfinite(w))):
        raise DomainError("samples and frequencies must be finite")
    if len(set(w.tolist())) != 3:
        raise DomainError("tone frequencies must be distinct")
    frame_time = float(frame_time)
    if frame_time <= 0:
        raise DomainError(f"frame_time must be positive, got {frame_time}")
    ts = np.array([0.0, frame_time / 2.0, frame_time])
    cos_block = np.cos(np.outer(ts, w))
    sin_block = np.sin(np.outer(ts, w))
    # unknowns: [A_i cos(phi_i)] then [A_i sin(phi_i)]
    mat = np.block([[cos_block, -sin_block], [sin_block, cos_block]])
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditioned(_aliasing_message(w, frame_time, cond))
    solution = np.linalg.solve(mat, np.concatenate([x, xq]))
    c, s = solution[:3], solution[3:]
    return MultitoneState(omegas=tuple(w),
                          amps=tuple(np.hypot(c, s)),
                          phases=tuple(np.arctan2(s, c)))


def plant_phase_lag(f_drive: float, f_res: float, q: float) -> float:
    """Steady-state phase lag of a driven harmonic oscillator, in (0, pi)."""
    if f_drive <= 0 or f_res <= 0 or q <= 0:
        raise DomainError("frequencies and quality factor must be positive")
    return math.atan2(f_drive * f_res / q, f_res * f_res - f_drive * f_drive)


def resonance_offset_for_phase_shift(f_drive: float, f_res: float, q: float,
                                     delta_deg: float) -> float:
    """Resonance offset that moves the steady-state phase by delta_deg.

    The lag is monotone decreasing in the resonant frequency, so the offset
    is found by bisection.
    """
    base = plant_phase_lag(f_drive, f_res, q)
    target = base + math.radians(delta_deg)
    if not 0.0 < target < math.pi:
        raise DomainError(f"target phase {math.degrees(target):.1f} deg leaves (0, 180)")
    lo, hi = f_res * 1e-3, f_res * 1e3
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if plant_phase_lag(f_drive, mid, q) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) - f_res


@dataclass
class DriftScenario:
    """Quasi-static resonance drift plus the per-frame measurement loop."""

    drift_fn: Callable[[float], float]   # time -> resonance offset, config units
    frame_time: float
    control_enabled: bool = True
    measurement_noise_deg: float = 0.0

    def __post_init__(self) -> None:
        if self.frame_time <= 0:
            raise DomainError(f"frame_time must be positive, got {self.frame_time}")
        if self.measurement_noise_deg < 0:
            raise DomainError("measurement noise must be non-negative")


@dataclass(eq=False)
class DriftTrace:
    """Per-frame phase errors (after correction, when control is on)."""

    t: np.ndarray
    phase_error_deg: np.ndarray
    correction_deg: np.ndarray

    def max_abs_error(self) -> float:
        return float(np.max(np.abs(self.phase_error_deg)))

    def error_std(self) -> float:
        return float(np.std(self.phase_error_deg))


def _drift_offsets(drift_fn, times: np.ndarray) -> np.ndarray:
    try:
        offsets = np.asarray(drift_fn(times), dtype=np.float64)
        if offsets.shape == times.shape:
            return offsets
    except (TypeError, ValueError):
        pass
    return np.array([float(drift_fn(t)) for t in times])


def simulate_drift_control(scenario: DriftScenario, config: ScannerConfig, axis: str,
                           f_drive: float, duration: float, seed: int = 0) -> DriftTrace:
    """Steady-state oscillator phase error at every frame start while the
    resonance wanders.

    With control enabled the error measured at each frame start (plus
    Gaussian read noise) is subtracted from the actuation phase, so the
    reported per-frame error is the post-correction one.
    """
    f_res, q = config.axis(axis)
    f_drive = float(f_drive)
    if f_drive <= 0:
        raise DomainError(f"drive frequency must be positive, got {f_drive}")
    if duration < scenario.frame_time:
        raise DomainError("duration must cover at least one frame")
    n_frames = int(math.floor(duration / scenario.frame_time)) + 1
    times = np.arange(n_frames) * scenario.frame_time
    res = f_res + _drift_offsets(scenario.drift_fn, times)
    if np.any(res <= 0):
        raise DomainError("drift drove the resonance non-positive")
    psi = np.arctan2(f_drive * res / q, res * res - f_drive * f_drive)
    psi0 = plant_phase_lag(f_drive, f_res, q)

    if not scenario.control_enabled:
        errors = wrap_phase(psi - psi0)
        corrections = np.zeros(n_frames)
    else:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(n_frames) * math.radians(scenario.measurement_noise_deg)
        # Closed loop: the correction cancels the measured error exactly, so
        # the pre-correction error at frame k is the drift accrued since the
        # previous frame minus the previous noise; post-correction it is just
        # the (negated) current read noise.
        pre = np.empty(n_frames)
        pre[0] = psi[0] - psi0
        pre[1:] = np.diff(psi) - noise[:-1]
        pre = wrap_phase(pre)
        corrections = wrap_phase(-(pre + noise))
        errors = wrap_phase(pre + corrections)
    return DriftTrace(t=times,
                      phase_error_deg=np.degrees(errors),
                      correction_deg=np.degrees(corrections))
