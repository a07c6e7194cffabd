"""Multi-tone pattern parameterization and weighted-coverage optimization.

Each axis moves as a short Fourier sum on the frequency grid n / (L*m);
the plant attenuates every tone by its own amplitude response, so samples
are a linear function of the cosine/sine coefficient vectors. Actuation is
bounded per axis either in RMS (root of the summed squared coefficients)
or, optionally, in summed tone magnitude.

The objective scores an importance-weighted patch grid over the fixed
[-1, 1] x [-1, 1] field of view: every patch pays its weight times the
squared distance to its nearest sample, and patches that already hold a
sample within a small threshold are zeroed regardless of weight. Gradients
are taken with the patch-to-sample assignment frozen; minimizing is plain
projected gradient descent with step backtracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .coverage import SampledPattern, _patch_centers, sample_unmodulated
from .design import as_fraction, design_unmodulated
from .errors import DomainError, InvalidParams, OptimizationFailed
from .scanner import ScannerConfig, transfer_amplitude

FEASIBILITY_SLACK = 1e-9

# Reference regions used by tests and CLI reporting, as (xmin, xmax, ymin, ymax).
ROI_A = (-0.9, -0.3, -0.3, 0.3)
ROI_B = (0.2, 0.9, 0.2, 0.8)

# Default tone ladder: five tones at {6/7, 13/14, 1, 15/14, 8/7} times the
# axis resonance (the middle three for the 3-tone variant), snapped to the
# n / (L*m) grid.
_TONE_STEPS = {5: range(12, 17), 3: range(13, 16)}


@dataclass(eq=False)
class WeightMap:
    """Square per-patch importance map over the field of view.

    w[ix, iy] with ix increasing to the right (x from -1 to 1) and iy
    increasing upward (y from -1 to 1).
    """

    w: np.ndarray

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 2 or self.w.shape[0] != self.w.shape[1] or self.w.shape[0] < 1:
            raise DomainError(f"weight map must be square and 2-D, got shape {self.w.shape}")
        if not np.all(np.isfinite(self.w)) or np.any(self.w < 0):
            raise DomainError("weights must be finite and non-negative")

    @property
    def size(self) -> int:
        return self.w.shape[0]

    @classmethod
    def uniform(cls, size: int = 32, value: float = 1.0) -> "WeightMap":
        return cls(np.full((size, size), float(value)))

    @classmethod
    def from_rectangles(cls, rois, size: int = 32) -> "WeightMap":
        """Binary map: weight 1 on patches whose center falls in any rectangle."""
        centers = _patch_centers(size)
        w = np.zeros((size, size))
        for xmin, xmax, ymin, ymax in rois:
            in_x = (centers >= xmin) & (centers <= xmax)
            in_y = (centers >= ymin) & (centers <= ymax)
            w[np.ix_(in_x, in_y)] = 1.0
        return cls(w)


@dataclass(eq=False)
class ModulatedParams:
    """Per-axis tone indices and cosine/sine actuation coefficients.

    Tone n actuates at frequency n / (L*m); alpha/gamma drive x, beta/delta
    drive y. Per-axis RMS of the coefficients must stay within 1.
    """

    alpha: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    delta: np.ndarray
    nx: tuple[int, ...]
    ny: tuple[int, ...]
    L: int
    m: int
    config: ScannerConfig

    def __post_init__(self) -> None:
        for name in ("alpha", "gamma", "beta", "delta"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise InvalidParams(f"{name} must be a finite 1-D array")
            setattr(self, name, arr)
        self.nx = tuple(int(n) for n in self.nx)
        self.ny = tuple(int(n) for n in self.ny)
        for name, tones in (("nx", self.nx), ("ny", self.ny)):
            if not tones or any(n < 1 for n in tones) or list(tones) != sorted(set(tones)):
                raise InvalidParams(f"{name} must be distinct positive integers in ascending order")
        if len(self.alpha) != len(self.nx) or len(self.gamma) != len(self.nx):
            raise InvalidParams("alpha/gamma length must match nx")
        if len(self.beta) != len(self.ny) or len(self.delta) != len(self.ny):
            raise InvalidParams("beta/delta length must match ny")
        if self.L < 1 or self.m < 1:
            raise InvalidParams("L and m must be positive integers")
        for axis, rms in (("x", self.rms_x), ("y", self.rms_y)):
            if rms > 1.0 + FEASIBILITY_SLACK:
                raise InvalidParams(f"{axis}-axis coefficient RMS {rms:.6f} exceeds 1")

    @property
    def rms_x(self) -> float:
        return float(np.sqrt(np.sum(self.alpha ** 2) + np.sum(self.gamma ** 2)))

    @property
    def rms_y(self) -> float:
        return float(np.sqrt(np.sum(self.beta ** 2) + np.sum(self.delta ** 2)))

    @property
    def fx_tones(self) -> np.ndarray:
        return np.array(self.nx, dtype=np.float64) / (self.L * self.m)

    @property
    def fy_tones(self) -> np.ndarray:
        return np.array(self.ny, dtype=np.float64) / (self.L * self.m)

    def with_coefficients(self, alpha=None, gamma=None, beta=None, delta=None) -> "ModulatedParams":
        pick = lambda new, old: old if new is None else np.array(new, dtype=float)
        return replace(self, alpha=pick(alpha, self.alpha), gamma=pick(gamma, self.gamma),
                       beta=pick(beta, self.beta), delta=pick(delta, self.delta))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(), "gamma": self.gamma.tolist(),
            "beta": self.beta.tolist(), "delta": self.delta.tolist(),
            "nx": list(self.nx), "ny": list(self.ny),
            "L": self.L, "m": self.m,
            "scanner": self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModulatedParams":
        try:
            return cls(alpha=data["alpha"], gamma=data["gamma"],
                       beta=data["beta"], delta=data["delta"],
                       nx=tuple(data["nx"]), ny=tuple(data["ny"]),
                       L=int(data["L"]), m=int(data["m"]),
                       config=ScannerConfig.from_dict(data["scanner"]))
        except KeyError as exc:
            raise InvalidParams(f"params record missing field {exc}") from exc


def polar_coefficients(amplitudes, phases_rad) -> tuple[np.ndarray, np.ndarray]:
    """Cosine/sine coefficients of sum_i A_i cos(2 pi f_i t + phi_i)."""
    amps = np.asarray(amplitudes, dtype=np.float64)
    phases = np.asarray(phases_rad, dtype=np.float64)
    return amps * np.cos(phases), -amps * np.sin(phases)


def default_tone_indices(r, n_tones: int = 5, m: int = 7, L: int = 2) -> tuple[int, ...]:
    """Tone indices for one axis with resonance ratio r, snapped to n/(L*m).

    Exact whenever c*r*L*m/14 is an integer for every ladder step c (always
    true for r = 1 and r = 2 with the defaults); otherwise each tone rounds
    to the nearest grid index.
    """
    if n_tones not in _TONE_STEPS:
        raise InvalidParams(f"n_tones must be one of {sorted(_TONE_STEPS)}, got {n_tones}")
    r = as_fraction(r)
    if r <= 0:
        raise InvalidParams("resonance ratio must be positive")
    indices = []
    for c in _TONE_STEPS[n_tones]:
        n = round(Fraction(c, 14) * r * L * m)
        if n < 1 or (indices and n <= indices[-1]):
            raise InvalidParams(f"tone ladder collapsed for r = {float(r)}, m = {m}, L = {L}")
        indices.append(n)
    return tuple(indices)


def initial_params(r, m: int = 7, n_tones: int = 5, qx: float = 20.0, qy: float = 20.0,
                   amplitude: float = 0.95, y_single_tone: bool = False,
                   L: int = 2) -> ModulatedParams:
    """Single-tone starting point on the default tone ladder.

    All actuation sits on the center (near-resonance) tone of each axis as a
    cosine, matching the zero-phase convention of the unmodulated designs;
    this pattern doubles as the unmodulated reference for focusing ratios.
    """
    if not 0.0 < amplitude <= 1.0:
        raise InvalidParams(f"amplitude must lie in (0, 1], got {amplitude}")
    r = as_fraction(r)
    nx = default_tone_indices(r, n_tones, m, L)
    ny = (round(Fraction(1) * L * m),) if y_single_tone else default_tone_indices(1, n_tones, m, L)
    config = ScannerConfig(fx_res=float(r), fy_res=1.0, qx=qx, qy=qy)
    alpha = np.zeros(len(nx))
    gamma = np.zeros(len(nx))
    beta = np.zeros(len(ny))
    delta = np.zeros(len(ny))
    alpha[len(nx) // 2] = amplitude
    beta[len(ny) // 2] = amplitude
    return ModulatedParams(alpha=alpha, gamma=gamma, beta=beta, delta=delta,
                           nx=nx, ny=ny, L=L, m=m, config=config)


def _bases(params: ModulatedParams, t: np.ndarray):
    """Plant-weighted cosine/sine basis matrices, shape (len(t), tones)."""
    hx = np.array([transfer_amplitude(params.config, "x", f) for f in params.fx_tones])
    hy = np.array([transfer_amplitude(params.config, "y", f) for f in params.fy_tones])
    ax = 2.0 * np.pi * np.outer(t, params.fx_tones)
    ay = 2.0 * np.pi * np.outer(t, params.fy_tones)
    return np.cos(ax) * hx, np.sin(ax) * hx, np.cos(ay) * hy, np.sin(ay) * hy


def synthesize_modulated(params: ModulatedParams, n_samples: int = 500,
                         frames: int = 1) -> SampledPattern:
    """n_samples uniform samples of the two-axis sum over t in [0, frames*m),
    endpoint excluded.  One frame is the evaluation window everywhere; the
    full coefficient period spans L frames."""
    if n_samples < 2:
        raise DomainError(f"need at least 2 samples, got {n_samples}")
    if frames < 1:
        raise DomainError(f"need at least 1 frame, got {frames}")
    t = np.arange(n_samples) * (frames * params.m / n_samples)
    bxc, bxs, byc, bys = _bases(params, t)
    x = bxc @ params.alpha + bxs @ params.gamma
    y = byc @ params.beta + bys @ params.delta
    return SampledPattern(t=t, x=x, y=y, frame_len=float(params.m), frames=frames)


@dataclass(eq=False)
class Assignment:
    """Nearest-sample index and occupancy flag for every patch."""

    n_idx: np.ndarray     # (M, M) int, flat sample index per patch
    occupied: np.ndarray  # (M, M) bool, nearest sample closer than threshold


def _assign(x: np.ndarray, y: np.ndarray, wmap: WeightMap,
            threshold: float) -> tuple[float, Assignment]:
    size = wmap.size
    centers = _patch_centers(size)
    dx2 = (centers[:, None] - x[None, :]) ** 2   # (M, N)
    dy2 = (centers[:, None] - y[None, :]) ** 2
    n_idx = np.empty((size, size), dtype=np.intp)
    best = np.empty((size, size))
    rows = np.arange(size)
    for ix in range(size):                        # row loop keeps memory flat
        d2 = dx2[ix][None, :] + dy2
        idx = np.argmin(d2, axis=1)
        n_idx[ix] = idx
        best[ix] = d2[rows, idx]
    occupied = best < threshold * threshold
    wbar = np.where(occupied, 0.0, wmap.w)
    return float(np.sum(wbar * best)), Assignment(n_idx=n_idx, occupied=occupied)


def objective(pattern: SampledPattern, wmap: WeightMap,
              threshold: float) -> tuple[float, Assignment]:
    """Weighted squared distance from every non-occupied patch center to its
    nearest sample, plus the assignment that produced it."""
    if threshold < 0:
        raise DomainError(f"threshold must be non-negative, got {threshold}")
    return _assign(pattern.x, pattern.y, wmap, float(threshold))


def _loss_fixed(x: np.ndarray, y: np.ndarray, wmap: WeightMap, asg: Assignment) -> float:
    """Objective with assignment and occupancy frozen (the surrogate the
    gradient differentiates)."""
    size = wmap.size
    centers = _patch_centers(size)
    d2 = (centers[:, None] - x[asg.n_idx]) ** 2 + (centers[None, :] - y[asg.n_idx]) ** 2
    wbar = np.where(asg.occupied, 0.0, wmap.w)
    return float(np.sum(wbar * d2))


@dataclass(eq=False)
class ModulatedGradient:
    alpha: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    delta: np.ndarray


def _gradient_fixed(x, y, wmap, asg, bxc, bxs, byc, bys) -> ModulatedGradient:
    size = wmap.size
    n = len(x)
    centers = _patch_centers(size)
    wbar = np.where(asg.occupied, 0.0, wmap.w).ravel()
    idx = asg.n_idx.ravel()
    cxp = np.repeat(centers, size)   # patch x centers, ix-major flattening
    cyp = np.tile(centers, size)
    s1 = np.bincount(idx, weights=wbar, minlength=n)
    sx = np.bincount(idx, weights=wbar * cxp, minlength=n)
    sy = np.bincount(idx, weights=wbar * cyp, minlength=n)
    gx = 2.0 * (x * s1 - sx)         # dLoss / d(sample position)
    gy = 2.0 * (y * s1 - sy)
    return ModulatedGradient(alpha=bxc.T @ gx, gamma=bxs.T @ gx,
                             beta=byc.T @ gy, delta=bys.T @ gy)


def gradient(params: ModulatedParams, wmap: WeightMap, n_samples: int,
             threshold: float) -> ModulatedGradient:
    """Exact objective gradient in coefficient space with the current
    patch-to-sample assignment held fixed."""
    pattern = synthesize_modulated(params, n_samples)
    _, asg = objective(pattern, wmap, threshold)
    bxc, bxs, byc, bys = _bases(params, pattern.t)
    return _gradient_fixed(pattern.x, pattern.y, wmap, asg, bxc, bxs, byc, bys)


def project_rms(cos_coef: np.ndarray, sin_coef: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Radial projection of one axis onto the RMS unit ball."""
    norm = math.sqrt(float(np.sum(cos_coef ** 2) + np.sum(sin_coef ** 2)))
    if norm <= 1.0:
        return cos_coef.copy(), sin_coef.copy()
    return cos_coef / norm, sin_coef / norm


def _project_simplex(v: np.ndarray, z: float = 1.0) -> np.ndarray:
    """Euclidean projection of non-negative v onto {u >= 0, sum(u) <= z}."""
    if v.sum() <= z:
        return v.copy()
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, len(u) + 1) > (cumulative - z))[0][-1]
    theta = (cumulative[rho] - z) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_absolute(cos_coef: np.ndarray, sin_coef: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Projection onto summed-tone-magnitude <= 1: per-tone radial shrink by
    the simplex projection of the magnitude vector."""
    mags = np.hypot(cos_coef, sin_coef)
    if mags.sum() <= 1.0:
        return cos_coef.copy(), sin_coef.copy()
    target = _project_simplex(mags, 1.0)
    scale = np.divide(target, mags, out=np.zeros_like(mags), where=mags > 0)
    return cos_coef * scale, sin_coef * scale

_PROJECTIONS = {"rms": project_rms, "absolute": project_absolute}


@dataclass
class OptimizeOptions:
    max_iters: int = 200
    step: float = 0.05
    threshold: float | None = None   # None: half a patch side, 1/M
    seed: int = 0                    # reserved; the descent itself is deterministic
    n_samples: int = 500
    constraint: str = "rms"          # "rms" | "absolute"
    max_backtracks: int = 10
    rel_tol: float = 1e-5
    patience: int = 10


@dataclass(eq=False)
class OptimizeResult:
    params: ModulatedParams          # best-seen iterate
    loss: float
    loss_trace: np.ndarray           # true loss per iterate, index 0 = init
    norm_trace: np.ndarray           # per-iterate constraint norm (max of both axes)
    iterations: int
    converged: bool


def _constraint_norm(params: ModulatedParams, constraint: str) -> float:
    if constraint == "rms":
        return max(params.rms_x, params.rms_y)
    return max(float(np.hypot(params.alpha, params.gamma).sum()),
               float(np.hypot(params.beta, params.delta).sum()))


def optimize(init: ModulatedParams, wmap: WeightMap,
             opts: OptimizeOptions | None = None) -> OptimizeResult:
    """Projected gradient descent on the weighted-coverage objective.

    Per iteration: gradient with the assignment frozen, step with halving
    backtracking judged against the frozen-assignment loss, projection onto
    the constraint set, then a fresh assignment. Returns the best-seen
    iterate; raises OptimizationFailed (with the trace) if the loss stops
    being finite.
    """
    opts = opts or OptimizeOptions()
    if opts.constraint not in _PROJECTIONS:
        raise DomainError(f"constraint must be one of {sorted(_PROJECTIONS)}, got {opts.constraint!r}")
    if not np.any(wmap.w > 0):
        raise InvalidParams("weight map has no positive entries")
    threshold = (1.0 / wmap.size) if opts.threshold is None else float(opts.threshold)
    if threshold < 0:
        raise DomainError(f"threshold must be non-negative, got {threshold}")
    project = _PROJECTIONS[opts.constraint]

    t = np.arange(opts.n_samples) * (init.m / opts.n_samples)
    bxc, bxs, byc, bys = _bases(init, t)

    def synth(p: ModulatedParams) -> tuple[np.ndarray, np.ndarray]:
        return bxc @ p.alpha + bxs @ p.gamma, byc @ p.beta + bys @ p.delta

    params = init
    x, y = synth(params)
    loss, asg = _assign(x, y, wmap, threshold)
    trace = [loss]
    norms = [_constraint_norm(params, opts.constraint)]
    best_params, best_loss = params, loss
    best_hist = [loss]
    converged = False
    iterations = 0

    for iterations in range(1, opts.max_iters + 1):
        grad = _gradient_fixed(x, y, wmap, asg, bxc, bxs, byc, bys)
        step = opts.step
        cand = cx = cy = None
        for attempt in range(opts.max_backtracks + 1):
            a, g = project(params.alpha - step * grad.alpha, params.gamma - step * grad.gamma)
            b, d = project(params.beta - step * grad.beta, params.delta - step * grad.delta)
            cand = params.with_coefficients(a, g, b, d)
            cx, cy = synth(cand)
            if _loss_fixed(cx, cy, wmap, asg) <= trace[-1]:
                break
            step *= 0.5
            # the last halved candidate is taken even if it still increases;
            # best-seen tracking protects the returned iterate
        params, x, y = cand, cx, cy
        loss, asg = _assign(x, y, wmap, threshold)
        if not math.isfinite(loss):
            raise OptimizationFailed("objective became non-finite", trace=np.array(trace + [loss]))
        trace.append(loss)
        norms.append(_constraint_norm(params, opts.constraint))
        if loss < best_loss:
            best_loss, best_params = loss, params
        best_hist.append(best_loss)
        if iterations >= opts.patience:
            before = best_hist[-1 - opts.patience]
            if before - best_hist[-1] <= opts.rel_tol * max(before, 1e-12):
                converged = True
                break

    return OptimizeResult(params=best_params, loss=best_loss,
                          loss_trace=np.array(trace), norm_trace=np.array(norms),
                          iterations=iterations, converged=converged)


def roi_density(pattern: SampledPattern, rois) -> int:
    """Number of samples inside the union of closed rectangles
    (xmin, xmax, ymin, ymax)."""
    inside = np.zeros(len(pattern.x), dtype=bool)
    for xmin, xmax, ymin, ymax in rois:
        if xmin > xmax or ymin > ymax:
            raise DomainError(f"malformed rectangle {(xmin, xmax, ymin, ymax)}")
        inside |= ((pattern.x >= xmin) & (pattern.x <= xmax)
                   & (pattern.y >= ymin) & (pattern.y <= ymax))
    return int(np.count_nonzero(inside))


def reference_pattern(r, m: int = 7, config: ScannerConfig | None = None,
                      n_samples: int = 500) -> SampledPattern:
    """Unmodulated baseline for focusing comparisons: the single-tone design
    for the same (r, m) at its physical plant amplitudes, sampled over one
    frame with the same point budget."""
    r = as_fraction(r)
    design = design_unmodulated(r, m)
    if config is None:
        config = ScannerConfig.normalized(float(r))
    return sample_unmodulated(design, config, n_samples=n_samples)
