"""Single-tone frequency and phase selection for coverage-optimal scanning.

The y axis is driven at frequency 1 with phase 0 (normalized units) and the
x axis at a rational frequency near the resonance ratio r. All frequencies
are exact rationals so pattern periods and retrace structure are decided in
integer arithmetic; floats appear only once a pattern is sampled.

m is the frame time in y cycles: a pattern is useful when the traced point
set keeps covering new ground for at least one whole frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator

from .errors import DomainError, NoFeasibleDesign

# Beyond half a unit of resonance ratio the off-resonance attenuation makes
# any design useless, so the search gives up there.
SEARCH_CAP = Fraction(1, 2)
M_MIN, M_MAX = 2, 64
R_MIN, R_MAX = Fraction(1), Fraction(3)


class DesignCase(str, Enum):
    CASE1 = "Case1"        # point set closes after two frames, phase 0
    CASE2 = "Case2"        # closes after one frame, phase 0
    CASE3 = "Case3"        # closes after one frame, quarter-gap phase pi/(2m)
    BASELINE = "Baseline"  # every-frame repeating comparison rule


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like '41/28' or '1.5', floats and Fractions."""
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise DomainError(f"expected a rational number, got {value!r}") from exc


def format_rational(value: Fraction) -> str:
    return str(as_fraction(value))


def _validate_m(m: int) -> None:
    if not isinstance(m, int) or isinstance(m, bool) or not M_MIN <= m <= M_MAX:
        raise DomainError(f"frame time m must be an integer in [{M_MIN}, {M_MAX}], got {m!r}")


@dataclass(frozen=True)
class UnmodulatedDesign:
    """One single-tone pattern: x tone (fx, phix) against the unit y tone.

    case and k are present when the design came out of one of the selection
    rules; hand-built patterns leave them as None.
    """

    fx: Fraction
    phix: float
    m: int
    fy: Fraction = Fraction(1)
    phiy: float = 0.0
    case: DesignCase | None = None
    k: int | None = None
    note: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "fx", as_fraction(self.fx))
        object.__setattr__(self, "fy", as_fraction(self.fy))
        _validate_m(self.m)
        if self.fx <= 0 or self.fy <= 0:
            raise DomainError("tone frequencies must be positive")
        if (self.case is None) != (self.k is None):
            raise DomainError("case and k must be set together")
        if self.case is not None:
            self._check_case()

    def _check_case(self) -> None:
        m, k = self.m, self.k
        if self.case is DesignCase.BASELINE:
            ok = math.gcd(k, m) == 1 and self.fx == Fraction(k, m) and self.phix == math.pi / (2 * m)
        else:
            g = math.gcd(k, 4 * m)
            ok = self.fx == Fraction(k, 4 * m)
            if self.case is DesignCase.CASE1:
                ok = ok and g == 1 and self.phix == 0.0
            elif self.case is DesignCase.CASE2:
                ok = ok and g == 2 and self.phix == 0.0
            else:
                ok = ok and g == 4 and self.phix == math.pi / (2 * m)
        if not ok:
            raise DomainError(f"design fields inconsistent with {self.case.value}")

    def to_dict(self) -> dict:
        return {
            "fx": format_rational(self.fx),
            "fy": format_rational(self.fy),
            "phix": self.phix,
            "phiy": self.phiy,
            "m": self.m,
            "case": None if self.case is None else self.case.value,
            "k": self.k,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UnmodulatedDesign":
        try:
            case = data.get("case")
            return cls(
                fx=as_fraction(data["fx"]),
                phix=float(data["phix"]),
                m=int(data["m"]),
                fy=as_fraction(data.get("fy", 1)),
                phiy=float(data.get("phiy", 0.0)),
                case=None if case is None else DesignCase(case),
                k=None if data.get("k") is None else int(data["k"]),
                note=data.get("note"),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DomainError(f"malformed design record: {exc}") from exc


@dataclass(frozen=True)
class PeriodReport:
    signal_period: Fraction    # both tones complete whole cycles
    coverage_period: Fraction  # traced point set repeats (possibly half of the above)


def case1_criterion(k: int, m: int) -> bool:
    """Mid-frame retrace check for two-frame-period candidates.

    True iff k*n mod 4m stays away from +-1 for every n in the window
    {floor(m/2), ..., 3*floor(m/2)}. A near-miss residue in that window means
    the trajectory comes back onto itself around mid-frame, collapsing the
    covered area even though the nominal period is fine.
    """
    _validate_m(m)
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    q = 4 * m
    if math.gcd(k, q) != 1:
        raise DomainError(f"case1_criterion requires gcd(k, 4m) == 1, got gcd({k}, {q}) = {math.gcd(k, q)}")
    half = m // 2
    return all((k * n) % q not in (1, q - 1) for n in range(half, 3 * half + 1))


def _nearest_k(center: Fraction, max_dist: Fraction) -> Iterator[int]:
    """Positive integers ordered by ascending |k - center|, ties to smaller k."""
    lo = math.floor(center)
    hi = lo + 1
    while True:
        d_lo = center - lo
        d_hi = Fraction(hi) - center
        if d_lo <= d_hi:
            k, dist = lo, d_lo
            lo -= 1
        else:
            k, dist = hi, d_hi
            hi += 1
        if dist > max_dist:
            return
        if k >= 1:
            yield k


_INTEGER_R_NOTE = (
    "integer resonance ratio: nearby tones sit close to a degenerate pattern, "
    "expect a weak fill-factor / scanning-range trade-off"
)


def design_unmodulated(r, m: int, *, search_cap: Fraction = SEARCH_CAP) -> UnmodulatedDesign:
    """Pick the x tone k/(4m) closest to r whose pattern keeps covering new
    ground for a whole frame.

    Candidates are visited by increasing |k/(4m) - r| (ties to the smaller k)
    and the first one falling in an acceptable class, keyed to gcd(k, 4m),
    wins: gcd 1 passing the mid-frame criterion (phase 0), gcd 2 (phase 0),
    or gcd 4 (phase pi/(2m)). Raises NoFeasibleDesign when nothing within
    the search cap qualifies.
    """
    r = as_fraction(r)
    _validate_m(m)
    if not R_MIN <= r <= R_MAX:
        raise DomainError(f"resonance ratio must lie in [{R_MIN}, {R_MAX}], got {float(r)}")
    denom = 4 * m
    note = _INTEGER_R_NOTE if r.denominator == 1 else None
    for k in _nearest_k(r * denom, search_cap * denom):
        g = math.gcd(k, denom)
        if g == 1:
            if case1_criterion(k, m):
                return UnmodulatedDesign(fx=Fraction(k, denom), phix=0.0, m=m,
                                         case=DesignCase.CASE1, k=k, note=note)
        elif g == 2:
            return UnmodulatedDesign(fx=Fraction(k, denom), phix=0.0, m=m,
                                     case=DesignCase.CASE2, k=k, note=note)
        elif g == 4:
            return UnmodulatedDesign(fx=Fraction(k, denom), phix=math.pi / (2 * m), m=m,
                                     case=DesignCase.CASE3, k=k, note=note)
    raise NoFeasibleDesign(
        f"no acceptable tone with |k/(4m) - r| <= {search_cap} for r = {float(r)}, m = {m}"
    )


def _tie_groups(center: Fraction) -> Iterator[list[int]]:
    """Integers grouped by ascending |k - center|; ties come out together."""
    lo = math.floor(center)
    hi = lo + 1
    if Fraction(lo) == center:
        yield [lo]
        lo -= 1
    while True:
        d_lo = center - lo
        d_hi = Fraction(hi) - center
        if d_lo == d_hi:
            yield [lo, hi]
            lo -= 1
            hi += 1
        elif d_lo < d_hi:
            yield [lo]
            lo -= 1
        else:
            yield [hi]
            hi += 1


def baseline_repeating_design(r, m: int) -> UnmodulatedDesign:
    """Every-frame repeating comparison rule: coprime k/m closest to r with
    the quarter-gap phase pi/(2m).

    Equidistant candidates prefer an odd k, then the smaller one. With m odd
    an even k makes the second half-frame the mirror image of the first about
    the x axis, and that forced symmetry costs fill-factor.
    """
    r = as_fraction(r)
    _validate_m(m)
    if r <= 0:
        raise DomainError(f"resonance ratio must be positive, got {float(r)}")
    for group in _tie_groups(r * m):
        for k in sorted(group, key=lambda k: (k % 2 == 0, k)):
            if k >= 1 and math.gcd(k, m) == 1:
                return UnmodulatedDesign(fx=Fraction(k, m), phix=math.pi / (2 * m), m=m,
                                         case=DesignCase.BASELINE, k=k)
    raise NoFeasibleDesign("unreachable: k = 1 is coprime with every m")  # pragma: no cover


def _has_reflection(fx: Fraction, fy: Fraction, phix: float, phiy: float, period: Fraction) -> bool:
    """Is there an instant where both instantaneous phases are multiples of pi?

    At such an instant the trajectory runs into its own time reversal, so the
    second half of every signal period retraces the first half's points.
    """
    # Zeros of sin(2*pi*fy*t + phiy) lie at t_n = (n - phiy/pi) / (2*fy).
    count = 2 * fy * period
    assert count.denominator == 1
    phiy_pi = phiy / math.pi
    phix_pi = phix / math.pi
    ratio = float(fx / fy)
    n0 = math.ceil(phiy_pi - 1e-12)
    for n in range(n0, n0 + int(count)):
        value = ratio * (n - phiy_pi) + phix_pi  # x phase / pi at the y zero
        if abs(value - round(value)) < 1e-9:
            return True
    return False


def repeat_period(fx, fy, phix: float = 0.0, phiy: float = 0.0) -> PeriodReport:
    """Signal period of the two-tone trajectory and the possibly shorter
    period after which the traced point set repeats.

    The point set halves its period whenever some instant has both
    instantaneous phases at a multiple of pi (for example phix = phiy = 0 at
    t = 0): cosine symmetry then folds the second half-period onto the first.
    """
    fx = as_fraction(fx)
    fy = as_fraction(fy)
    if fx <= 0 or fy <= 0:
        raise DomainError("tone frequencies must be positive")
    signal = Fraction(math.lcm(fx.denominator, fy.denominator),
                      math.gcd(fx.numerator, fy.numerator))
    if _has_reflection(fx, fy, float(phix), float(phiy), signal):
        return PeriodReport(signal, signal / 2)
    return PeriodReport(signal, signal)
