"""Pattern sampling and spatial coverage metrics.

Coverage is judged inside the axis-normalized [-1, 1] x [-1, 1] field of
view: samples are rescaled per axis by their own absolute maximum, a
uniform grid of patch centers is laid over the square, and the largest
patch-center-to-sample distance is the radius of the largest circle the
pattern leaves empty. fill-factor = 2 - that radius, so 2 is perfect
coverage. Scanning range is the product of the two axes' amplitude
responses, i.e. the fraction of the full field of view actually reached.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .design import (UnmodulatedDesign, as_fraction, baseline_repeating_design,
                     design_unmodulated)
from .errors import DegeneratePattern, DomainError, LissscanError
from .scanner import ScannerConfig, transfer_amplitude

N_SAMPLES_DEFAULT = 1000   # per frame
N_GRID_DEFAULT = 128       # patch centers per axis


@dataclass(eq=False)
class SampledPattern:
    """Uniformly timed trajectory samples plus frame bookkeeping."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    frame_len: float
    frames: int = 1

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=np.float64)
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if not (self.t.ndim == self.x.ndim == self.y.ndim == 1):
            raise DomainError("t, x, y must be one-dimensional arrays")
        if not (len(self.t) == len(self.x) == len(self.y)) or len(self.t) < 2:
            raise DomainError("t, x, y must share a length of at least 2")
        steps = np.diff(self.t)
        if steps[0] <= 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise DomainError("timestamps must be strictly increasing and uniform")
        self.frame_len = float(self.frame_len)
        self.frames = int(self.frames)
        if self.frame_len <= 0 or self.frames < 1:
            raise DomainError("frame_len must be positive and frames >= 1")


@dataclass(frozen=True)
class CoverageReport:
    fill_factor: float
    r_max: float
    scanning_range: float | None = None


def sample_unmodulated(design: UnmodulatedDesign, config: ScannerConfig,
                       frame_index: int = 0, n_samples: int = N_SAMPLES_DEFAULT,
                       amp_x: float | None = None, amp_y: float | None = None) -> SampledPattern:
    """Sample one frame of a single-tone pattern.

    n_samples uniform timestamps cover [frame_index*m, (frame_index+1)*m)
    with the endpoint excluded. Amplitudes default to the plant response at
    each tone; pass amp_x / amp_y to override (e.g. 0 to silence an axis).
    """
    if n_samples < 2:
        raise DomainError(f"need at least 2 samples, got {n_samples}")
    ax = transfer_amplitude(config, "x", float(design.fx)) if amp_x is None else float(amp_x)
    ay = transfer_amplitude(config, "y", float(design.fy)) if amp_y is None else float(amp_y)
    m = design.m
    t = frame_index * m + np.arange(n_samples) * (m / n_samples)
    x = ax * np.cos(2.0 * np.pi * float(design.fx) * t + design.phix)
    y = ay * np.cos(2.0 * np.pi * float(design.fy) * t + design.phiy)
    return SampledPattern(t=t, x=x, y=y, frame_len=m, frames=1)


def _patch_centers(n: int) -> np.ndarray:
    return -1.0 + (2.0 * np.arange(n) + 1.0) / n


def fill_factor(pattern: SampledPattern, n_grid: int = N_GRID_DEFAULT) -> CoverageReport:
    """Largest-empty-circle coverage of the normalized pattern.

    Each axis is rescaled by its own max |value| (origin preserved), then the
    minimum sample distance is taken at every patch center of an
    n_grid x n_grid grid; r_max is the worst of those minima.
    """
    if n_grid < 2:
        raise DomainError(f"grid must have at least 2 patches per axis, got {n_grid}")
    sx = float(np.max(np.abs(pattern.x)))
    sy = float(np.max(np.abs(pattern.y)))
    if sx == 0.0 or sy == 0.0:
        raise DegeneratePattern("pattern has zero extent on at least one axis")
    tree = cKDTree(np.column_stack([pattern.x / sx, pattern.y / sy]))
    centers = _patch_centers(n_grid)
    cx, cy = np.meshgrid(centers, centers, indexing="ij")
    dist, _ = tree.query(np.column_stack([cx.ravel(), cy.ravel()]))
    r_max = float(dist.max())
    return CoverageReport(fill_factor=2.0 - r_max, r_max=r_max)


def scanning_range(design: UnmodulatedDesign, config: ScannerConfig) -> float:
    """Product of the amplitude responses at the two drive tones."""
    return (transfer_amplitude(config, "x", float(design.fx))
            * transfer_amplitude(config, "y", float(design.fy)))


@dataclass(frozen=True)
class SweepRow:
    r: Fraction
    m: int
    rule: str                  # "proposed" | "baseline"
    fill_factor: float | None
    scanning_range: float | None
    status: str                # "ok" | "error:<Kind>"


def _sweep_cell(args: tuple) -> list[SweepRow]:
    r, m, qx, qy, n_samples, n_grid = args
    rows = []
    for rule, make in (("proposed", design_unmodulated), ("baseline", baseline_repeating_design)):
        try:
            design = make(r, m)
            config = ScannerConfig(fx_res=float(r), fy_res=1.0, qx=qx, qy=qy)
            pattern = sample_unmodulated(design, config, 0, n_samples)
            report = fill_factor(pattern, n_grid)
            rows.append(SweepRow(r, m, rule, report.fill_factor,
                                 scanning_range(design, config), "ok"))
        except LissscanError as exc:
            rows.append(SweepRow(r, m, rule, None, None, f"error:{type(exc).__name__}"))
    return rows


def sweep_designs(r_grid: Iterable, m_set: Iterable[int],
                  config: ScannerConfig | None = None,
                  n_samples: int = N_SAMPLES_DEFAULT, n_grid: int = N_GRID_DEFAULT,
                  workers: int | None = None) -> list[SweepRow]:
    """Evaluate both selection rules over a grid of (r, m) cells.

    Returns one row per (r, m, rule) in deterministic order. Cells where a
    rule errors come back flagged in the status column instead of being
    dropped. workers > 1 evaluates cells in a process pool; the row order
    does not depend on it.
    """
    r_grid = [as_fraction(r) for r in r_grid]
    m_set = [int(m) for m in m_set]
    if not r_grid or not m_set:
        raise DomainError("sweep grids must be non-empty")
    qx, qy = (config.qx, config.qy) if config is not None else (20.0, 20.0)
    cells = [(r, m, qx, qy, n_samples, n_grid) for r in r_grid for m in m_set]
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(_sweep_cell, cells, chunksize=8))
    else:
        per_cell = [_sweep_cell(cell) for cell in cells]
    return [row for rows in per_cell for row in rows]


def sweep_workers_from_env() -> int | None:
    """Worker cap from the LISSSCAN_THREADS environment variable, if set."""
    raw = os.environ.get("LISSSCAN_THREADS")
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError as exc:
        raise DomainError(f"LISSSCAN_THREADS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise DomainError(f"LISSSCAN_THREADS must be >= 1, got {value}")
    return value


def phase_tolerance_sweep(design: UnmodulatedDesign, config: ScannerConfig,
                          deltas: Sequence[float], frame_index: int = 0,
                          n_samples: int = N_SAMPLES_DEFAULT,
                          n_grid: int = N_GRID_DEFAULT) -> list[tuple[float, float]]:
    """Fill-factor of the design with its x phase offset by each delta (rad)."""
    out = []
    for delta in deltas:
        shifted = UnmodulatedDesign(fx=design.fx, phix=design.phix + float(delta),
                                    m=design.m, fy=design.fy, phiy=design.phiy)
        pattern = sample_unmodulated(shifted, config, frame_index, n_samples)
        out.append((float(delta), fill_factor(pattern, n_grid).fill_factor))
    return out
