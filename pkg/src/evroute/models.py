"""Vehicle physics: speed-dependent consumption and CC-CV / CP-CV charging.

Charging is integrated in fixed one-second steps with the power evaluated at
the start of each step. Inside each protocol phase the step recursion is
affine in the SOC, so the step count is solved in closed form instead of
looping; :func:`charge_time_stepped` is the literal loop used as a reference.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

STEP_S = 1.0
SWITCH_SOC = 0.8
TERMINAL_SOC = 0.99


@dataclass(frozen=True)
class ConsumptionModel:
    """B(v) = a + b*v**2 + c/v in kWh/km for speed v in km/h."""

    a: float = 0.05
    b: float = 1.0 / 90000.0
    c: float = 2.0

    def __call__(self, v: float) -> float:
        if not v > 0:
            raise ValueError(f"speed must be positive, got {v}")
        return self.a + self.b * v * v + self.c / v

    def optimal_speed(self) -> float:
        return (self.c / (2.0 * self.b)) ** (1.0 / 3.0)


DEFAULT_CONSUMPTION = ConsumptionModel()


def consumption(v: float) -> float:
    return DEFAULT_CONSUMPTION(v)


class Protocol(str, enum.Enum):
    CC_CV = "cc-cv"
    CP_CV = "cp-cv"


@dataclass(frozen=True)
class ChargeCurve:
    p_max: float  # kW
    protocol: Protocol = Protocol.CP_CV
    u_low: float = 3.8
    u_high: float = 4.2

    def __post_init__(self) -> None:
        if not self.p_max > 0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        object.__setattr__(self, "protocol", Protocol(self.protocol))

    @property
    def i_max(self) -> float:
        return self.p_max / self.u_high


@dataclass
class Battery:
    capacity: float  # kWh
    soc: float = 1.0

    def __post_init__(self) -> None:
        if not self.capacity > 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError(f"soc must lie in [0, 1], got {self.soc}")

    @property
    def energy(self) -> float:
        return self.capacity * self.soc


def charge_power(curve: ChargeCurve, soc: float) -> float:
    if not 0.0 <= soc < 1.0:
        raise ValueError(f"soc must lie in [0, 1), got {soc}")
    if soc < SWITCH_SOC:
        if curve.protocol is Protocol.CP_CV:
            return curve.p_max
        u = curve.u_low + soc / SWITCH_SOC * (curve.u_high - curve.u_low)
        return u * curve.i_max
    return curve.u_high * curve.i_max * (1.0 - soc) / (1.0 - SWITCH_SOC)


def charge_time_stepped(curve: ChargeCurve, capacity: float, soc_from: float, soc_to: float) -> float:
    """Literal 1 s explicit-Euler loop; slow, kept as a reference."""
    t = 0.0
    soc = soc_from
    per_kw = STEP_S / 3600.0 / capacity
    while soc < soc_to:
        ds = charge_power(curve, soc) * per_kw
        if soc + ds >= soc_to:
            return t + (soc_to - soc) / ds * STEP_S
        soc += ds
        t += STEP_S
    return t


class _Phase:
    """Affine step map s -> s + k*(alpha + beta*s), valid on [lo, hi)."""

    def __init__(self, alpha: float, beta: float, k: float):
        self.alpha = alpha
        self.beta = beta
        self.k = k
        self.ratio = 1.0 + k * beta

    def after(self, s0: float, n: int) -> float:
        if self.beta == 0.0:
            return s0 + n * self.k * self.alpha
        fixed = -self.alpha / self.beta
        return fixed + (s0 - fixed) * self.ratio**n

    def delta(self, s: float) -> float:
        return self.k * (self.alpha + self.beta * s)

    def steps_to(self, s0: float, target: float) -> int:
        """Smallest n >= 1 with after(s0, n) >= target (target > s0)."""
        if self.beta == 0.0:
            n = math.ceil((target - s0) / (self.k * self.alpha))
        else:
            fixed = -self.alpha / self.beta
            n = math.ceil(math.log((target - fixed) / (s0 - fixed)) / math.log(self.ratio))
        n = max(n, 1)
        while n > 1 and self.after(s0, n - 1) >= target:
            n -= 1
        while self.after(s0, n) < target:
            n += 1
        return n


def _phases(curve: ChargeCurve, capacity: float) -> tuple[_Phase, _Phase]:
    k = STEP_S / 3600.0 / capacity
    if curve.protocol is Protocol.CP_CV:
        first = _Phase(curve.p_max, 0.0, k)
    else:
        slope = (curve.u_high - curve.u_low) / SWITCH_SOC
        first = _Phase(curve.i_max * curve.u_low, curve.i_max * slope, k)
    scale = curve.u_high * curve.i_max / (1.0 - SWITCH_SOC)
    second = _Phase(scale, -scale, k)
    return first, second


def charge_time(curve: ChargeCurve, capacity: float, soc_from: float, soc_to: float) -> float:
    """Seconds to charge from ``soc_from`` to ``soc_to`` (last step prorated)."""
    if soc_to > TERMINAL_SOC + 1e-12:
        raise ValueError(f"cannot charge beyond soc {TERMINAL_SOC}, requested {soc_to}")
    if not 0.0 <= soc_from <= soc_to:
        raise ValueError(f"need 0 <= soc_from <= soc_to, got {soc_from}, {soc_to}")
    if soc_to == soc_from:
        return 0.0
    first, second = _phases(curve, capacity)
    t = 0.0
    s = soc_from
    if s < SWITCH_SOC:
        goal = min(soc_to, SWITCH_SOC)
        n = first.steps_to(s, goal)
        end = first.after(s, n)
        if end >= soc_to:
            prev = first.after(s, n - 1)
            return t + (n - 1) * STEP_S + (soc_to - prev) / first.delta(prev) * STEP_S
        t += n * STEP_S
        s = end
    n = second.steps_to(s, soc_to)
    prev = second.after(s, n - 1)
    return t + (n - 1) * STEP_S + (soc_to - prev) / second.delta(prev) * STEP_S


def charged_soc(curve: ChargeCurve, capacity: float, soc_from: float, duration: float) -> float:
    """SOC after charging for ``duration`` seconds; never exceeds the terminal SOC."""
    if duration < 0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    if not 0.0 <= soc_from <= 1.0:
        raise ValueError(f"soc must lie in [0, 1], got {soc_from}")
    if soc_from >= TERMINAL_SOC or duration == 0:
        return soc_from
    first, second = _phases(curve, capacity)
    steps = math.floor(duration / STEP_S)
    frac = duration / STEP_S - steps
    s = soc_from
    if s < SWITCH_SOC:
        n_first = first.steps_to(s, SWITCH_SOC)
        if steps < n_first:
            s = first.after(s, steps)
            return min(TERMINAL_SOC, s + frac * first.delta(s))
        s = first.after(s, n_first)
        steps -= n_first
    # Beyond the terminal soc charging has stopped.
    if s >= TERMINAL_SOC:
        return TERMINAL_SOC
    s = second.after(s, steps)
    return min(TERMINAL_SOC, s + frac * second.delta(s))
