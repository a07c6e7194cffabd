"""Harmonic-oscillator model of a biaxial resonant scanner.

Amplitude response only: each axis behaves as a driven second-order
oscillator whose response is normalized to 1 when driven exactly at its
resonant frequency, rolling off on both sides and settling to 1/Q at DC.
Configs may carry frequencies in Hz or in normalized units (y-axis scan
cycles); every derived quantity keeps the units of its config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError

AXES = ("x", "y")


@dataclass(frozen=True)
class ScannerConfig:
    """Resonant frequency and quality factor for each scanning axis."""

    fx_res: float
    fy_res: float = 1.0
    qx: float = 20.0
    qy: float = 20.0

    def __post_init__(self) -> None:
        for name in ("fx_res", "fy_res", "qx", "qy"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.fx_res <= 0.0 or self.fy_res <= 0.0:
            raise ConfigError("resonant frequencies must be positive")
        if self.qx < 1.0 or self.qy < 1.0:
            raise ConfigError("quality factors must be >= 1")

    @classmethod
    def normalized(cls, r: float, qx: float = 20.0, qy: float = 20.0) -> "ScannerConfig":
        """Config in normalized units: y resonance fixed at 1, x at r in [1, 3]."""
        r = float(r)
        if not 1.0 <= r <= 3.0:
            raise ConfigError(f"normalized resonance ratio must lie in [1, 3], got {r}")
        return cls(fx_res=r, fy_res=1.0, qx=qx, qy=qy)

    def axis(self, axis: str) -> tuple[float, float]:
        """(resonant frequency, quality factor) of one axis."""
        if axis == "x":
            return self.fx_res, self.qx
        if axis == "y":
            return self.fy_res, self.qy
        raise DomainError(f"axis must be 'x' or 'y', got {axis!r}")

    def to_dict(self) -> dict:
        return {"fx_res": self.fx_res, "fy_res": self.fy_res, "qx": self.qx, "qy": self.qy}

    @classmethod
    def from_dict(cls, data: dict) -> "ScannerConfig":
        if "fx_res" not in data:
            raise ConfigError("scanner config missing required field 'fx_res'")
        try:
            return cls(
                fx_res=float(data["fx_res"]),
                fy_res=float(data.get("fy_res", 1.0)),
                qx=float(data.get("qx", 20.0)),
                qy=float(data.get("qy", 20.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed scanner config: {exc}") from exc


def transfer_amplitude(config: ScannerConfig, axis: str, f: float) -> float:
    """Amplitude response of one axis at drive frequency f.

    Normalized so the on-resonance response is exactly 1; the DC limit
    is 1/Q.
    """
    f_res, q = config.axis(axis)
    f = float(f)
    if not math.isfinite(f) or f <= 0.0:
        raise DomainError(f"drive frequency must be positive and finite, got {f}")
    u = f / f_res
    return 1.0 / (q * math.sqrt((u * u - 1.0) ** 2 + (u / q) ** 2))


def settle_time(config: ScannerConfig, axis: str) -> float:
    """Time for one axis to settle after an actuation change: Q / (pi * f_res)."""
    f_res, q = config.axis(axis)
    return q / (math.pi * f_res)


def peak_frequency(config: ScannerConfig, axis: str) -> float:
    """Drive frequency of the true amplitude maximum, slightly below resonance."""
    f_res, q = config.axis(axis)
    return f_res * math.sqrt(1.0 - 1.0 / (2.0 * q * q))
