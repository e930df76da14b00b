"""Time integration and invariant-drift bookkeeping shared by all systems.

Explicit classical RK4 is the workhorse; explicit midpoint is available as a
lower-order cross-check, and 'if_rk4' dispatches to the integrating-factor
KdV stepper.  The spatial discretization is what preserves Casimirs; the
temporal drift of conserved functionals is controlled by the O(dt^4)
convergence tests, not by exact conservation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import ion_kdv
from .field_core import FieldError
from .poisson import Functional, State


class BlowupError(RuntimeError):
    """A step produced non-finite values."""


class IntegrationError(RuntimeError):
    """Blow-up mid-run; carries the partial series and the failing step."""

    def __init__(self, message: str, series: "DiagnosticSeries", step_index: int, last_state: State):
        super().__init__(message)
        self.series = series
        self.step_index = step_index
        self.last_state = last_state


@dataclass(frozen=True)
class Integrator:
    scheme: str = "rk4"
    dt: float = 1e-2

    def __post_init__(self):
        if self.scheme not in ("rk4", "midpoint", "if_rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


def step(integ: Integrator, rhs: Callable[[State], State] | None, z: State) -> State:
    """One explicit step; raises BlowupError on non-finite output."""
    dt = integ.dt
    if integ.scheme == "if_rk4":
        if z.kind != "kdv":
            raise ValueError("if_rk4 integrates the KdV system only")
        try:
            out = State("kdv", (ion_kdv.kdv_if_rk4_step(z.parts[0], dt),))
        except FieldError as exc:
            raise BlowupError(str(exc)) from exc
        return out
    if integ.scheme == "rk4":
        k1 = rhs(z)
        k2 = rhs(z + (0.5 * dt) * k1)
        k3 = rhs(z + (0.5 * dt) * k2)
        k4 = rhs(z + dt * k3)
        out = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:  # midpoint
        k1 = rhs(z)
        out = z + dt * rhs(z + (0.5 * dt) * k1)
    if not out.all_finite():
        raise BlowupError("non-finite state after step")
    return out


@dataclass
class DiagnosticSeries:
    """Time-indexed records of watched functionals, serializable to CSV."""

    labels: tuple[str, ...]
    times: list[float] = field(default_factory=list)
    values: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        for lab in self.labels:
            self.values.setdefault(lab, [])

    def record(self, t: float, vals: Sequence[float]):
        if self.times and t <= self.times[-1]:
            raise ValueError("times must be strictly increasing")
        self.times.append(t)
        for lab, v in zip(self.labels, vals):
            self.values[lab].append(float(v))

    def initial(self, label: str) -> float:
        return self.values[label][0]

    def final(self, label: str) -> float:
        return self.values[label][-1]

    def drift(self, label: str) -> tuple[float, float]:
        """(max absolute drift from the initial value, relative version).

        The relative drift divides by |initial| when that is nonzero and
        falls back to the absolute drift otherwise.
        """
        series = self.values[label]
        v0 = series[0]
        abs_drift = max(abs(v - v0) for v in series)
        rel_drift = abs_drift / abs(v0) if v0 != 0.0 else abs_drift
        return abs_drift, rel_drift

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(["t", *self.labels]) + "\n")
            for i, t in enumerate(self.times):
                row = [t] + [self.values[lab][i] for lab in self.labels]
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def run_and_record(
    integ: Integrator,
    rhs: Callable[[State], State] | None,
    z0: State,
    t_end: float,
    watch: Sequence[Functional] = (),
    output_every: float | None = None,
) -> tuple[DiagnosticSeries, State]:
    """Integrate to t_end, sampling the watched functionals.

    On blow-up raises IntegrationError carrying the partial series and the
    index of the failing step.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    n_steps = int(round(t_end / integ.dt))
    if n_steps < 1 or abs(n_steps * integ.dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be an integer number of steps")
    stride = 1 if output_every is None else max(1, int(round(output_every / integ.dt)))

    series = DiagnosticSeries(tuple(f.label for f in watch))
    series.record(0.0, [f.value(z0) for f in watch])
    z = z0
    for n in range(1, n_steps + 1):
        try:
            z = step(integ, rhs, z)
        except (BlowupError, FieldError, FloatingPointError) as exc:
            raise IntegrationError(
                f"blow-up at step {n} (t = {n * integ.dt:g}): {exc}", series, n, z
            ) from exc
        if n % stride == 0 or n == n_steps:
            series.record(n * integ.dt, [f.value(z) for f in watch])
    return series, z


def estimate_frequency(times: Sequence[float], values: Sequence[float]) -> float:
    """Oscillation frequency from linearly interpolated zero crossings.

    Needs at least three crossings of the demeaned signal; accuracy is set
    by the sampling stride, not the run length.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    v = v - np.mean(v)
    sign_change = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
    if sign_change.size < 3:
        raise ValueError("too few zero crossings to estimate a frequency")
    crossings = []
    for i in sign_change:
        frac = v[i] / (v[i] - v[i + 1])
        crossings.append(t[i] + frac * (t[i + 1] - t[i]))
    gaps = np.diff(crossings)
    return math.pi / float(np.mean(gaps))
