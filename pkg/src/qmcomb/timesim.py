"""Time-domain propagation through resonator circuits.

Two independent engines: ``ode_propagate`` integrates the coupled-mode
equations with fixed-step RK4, ``tf_propagate`` multiplies the spectrum by
the cascade transfer function.  Their agreement is the main consistency
check of the frequency-domain model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import kernels
from .core import Block, Circuit, cascade_response, delay_at_zero
from .errors import InvalidParameterError, InvalidStepError, WindowTooShortError

DEFAULT_DT = 0.005
# max(rate) * dt must stay below this
STABILITY_LIMIT = 0.1
# residual amplitude the default window lets the slowest mode decay to
RINGDOWN_LEVEL = 1e-6


@dataclass(frozen=True)
class Waveform:
    t0: float
    dt: float
    samples: NDArray[np.complex128]

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise InvalidParameterError("dt must be > 0")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.complex128))

    @property
    def times(self) -> NDArray[np.float64]:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def same_grid(self, other: "Waveform") -> bool:
        return (
            len(self.samples) == len(other.samples)
            and math.isclose(self.dt, other.dt, rel_tol=1e-12)
            and math.isclose(self.t0, other.t0, rel_tol=1e-12, abs_tol=1e-12)
        )

    def scaled(self, factor: complex) -> "Waveform":
        return Waveform(self.t0, self.dt, self.samples * factor)


@dataclass(frozen=True)
class BlockState:
    b1: complex
    b2: complex
    b3: complex


@dataclass(frozen=True)
class StorageMetrics:
    efficiency: float
    fidelity: float
    measured_delay: float

    def to_dict(self) -> dict:
        return {
            "efficiency": self.efficiency,
            "fidelity": self.fidelity,
            "measured_delay": self.measured_delay,
        }


def gaussian_pulse(
    center: float,
    sigma: float,
    carrier_detuning: float = 0.0,
    *,
    t0: float = 0.0,
    t_end: float,
    dt: float = DEFAULT_DT,
) -> Waveform:
    """Unit-peak pulse exp(-(t - center)^2 / (2 sigma^2)) exp(-i detuning t)."""
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    if not dt > 0:
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    if not t_end > t0:
        raise InvalidParameterError("t_end must be after t0")
    n = int(round((t_end - t0) / dt)) + 1
    t = t0 + dt * np.arange(n)
    a = np.exp(-((t - center) ** 2) / (2 * sigma**2)) * np.exp(-1j * carrier_detuning * t)
    return Waveform(t0, dt, a)


def default_window(circuit: Circuit, center: float, sigma: float) -> float:
    """End time of the default simulation window starting at t = 0.

    Covers the pulse (6 sigma past its centre) plus the longer of ten
    band-centre delays and the ring-down of the slowest mode, which decays
    at k_min / 2.
    """
    kmin = circuit.min_coupling
    ringdown = 2 * math.log(1 / RINGDOWN_LEVEL) / kmin if kmin > 0 else 0.0
    try:
        T0 = abs(delay_at_zero(circuit))
    except Exception:
        T0 = 0.0
    return center + 6 * sigma + max(10 * T0, ringdown)


def pulse_for(
    circuit: Circuit,
    sigma: float,
    center: float | None = None,
    carrier_detuning: float = 0.0,
    dt: float = DEFAULT_DT,
) -> Waveform:
    """Gaussian input on the default window; centred 7 sigma after t = 0 by default."""
    if center is None:
        center = 7 * sigma
    return gaussian_pulse(center, sigma, carrier_detuning, t0=0.0, t_end=default_window(circuit, center, sigma), dt=dt)


def _midpoints(a: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Drive at t_i + dt/2 by 4-point cubic interpolation (one-sided at the ends)."""
    n = len(a)
    if n < 2:
        return np.zeros(0, dtype=np.complex128)
    if n < 4:
        return 0.5 * (a[:-1] + a[1:])
    mid = np.empty(n - 1, dtype=np.complex128)
    mid[1:-1] = (-a[:-3] + 9 * a[1:-2] + 9 * a[2:-1] - a[3:]) / 16
    mid[0] = (5 * a[0] + 15 * a[1] - 5 * a[2] + a[3]) / 16
    mid[-1] = (a[-4] - 5 * a[-3] + 15 * a[-2] + 5 * a[-1]) / 16
    return mid


def check_step(circuit: Circuit, dt: float) -> None:
    rate = circuit.max_rate
    if rate * dt >= STABILITY_LIMIT:
        raise InvalidStepError(
            f"dt={dt} too large: max rate {rate:.3g} gives rate*dt={rate * dt:.3g} >= {STABILITY_LIMIT}"
        )


def ode_propagate(circuit: Circuit, input: Waveform, return_state: bool = False):
    """Integrate the coupled-mode equations element by element.

    Within a block, resonator 3 is driven by a1 - sqrt(k) b1 at the same
    instant; each element's output drives the next with no transit delay.
    With ``return_state`` the final mode amplitudes are returned as well,
    one entry per element (a :class:`BlockState`, or a tuple for a comb).
    """
    check_step(circuit, input.dt)
    a = input.samples
    states = []
    for el in circuit.elements:
        if isinstance(el, Block):
            d1, d2, d3 = el.detunings
            a, (b1, b2, b3) = kernels.rk4_block(a, _midpoints(a), input.dt, d1, d2, d3, el.k, el.g)
            states.append(BlockState(complex(b1), complex(b2), complex(b3)))
        else:
            bs = []
            for d in el.detunings:
                a, b = kernels.rk4_resonator(a, _midpoints(a), input.dt, d, el.k)
                bs.append(complex(b))
            states.append(tuple(bs))
    out = Waveform(input.t0, input.dt, np.asarray(a))
    return (out, states) if return_state else out


def tf_propagate(
    circuit: Circuit,
    input: Waveform,
    pad_factor: int = 2,
    edge_tol: float = 1e-4,
) -> Waveform:
    """Multiply the input spectrum by the cascade transfer function.

    With a(t) ~ int exp(-i nu t) a(nu), the FFT bin at angular frequency w
    carries nu = -w.  The record is zero-padded ``pad_factor`` times so the
    circular convolution matches the causal response on the window.
    """
    if pad_factor < 1:
        raise InvalidParameterError("pad_factor must be >= 1")
    n = len(input.samples)
    size = n * pad_factor
    spectrum = np.fft.fft(input.samples, size)
    omega = 2 * np.pi * np.fft.fftfreq(size, input.dt)
    out = np.fft.ifft(spectrum * cascade_response(circuit, -omega))[:n]
    peak = np.max(np.abs(out)) if n else 0.0
    if peak > 0 and max(abs(out[0]), abs(out[-1])) > edge_tol * peak:
        raise WindowTooShortError(
            f"output at the window edges reaches {max(abs(out[0]), abs(out[-1])) / peak:.2e} of the peak"
        )
    return Waveform(input.t0, input.dt, out)


def relative_l2(a: Waveform, b: Waveform) -> float:
    """||a - b|| / ||b|| on a shared grid."""
    if not a.same_grid(b):
        raise InvalidParameterError("waveforms are on different time grids")
    den = np.linalg.norm(b.samples)
    if den == 0:
        return 0.0 if np.linalg.norm(a.samples) == 0 else math.inf
    return float(np.linalg.norm(a.samples - b.samples) / den)


def storage_metrics(input: Waveform, output: Waveform) -> StorageMetrics:
    """Energy ratio, best normalised overlap and the shift that achieves it."""
    if not input.same_grid(output):
        raise InvalidParameterError("input and output must share a time grid")
    e_in = input.energy
    if e_in == 0:
        raise InvalidParameterError("input has zero energy")
    e_out = output.energy
    efficiency = e_out / e_in
    if e_out == 0:
        return StorageMetrics(efficiency, 0.0, 0.0)
    x = input.samples
    y = output.samples
    n = len(x)
    size = 2 * n
    # corr[m] = sum_t conj(x[t]) y[t + m]; negative lags wrap to the end
    corr = np.fft.ifft(np.conj(np.fft.fft(x, size)) * np.fft.fft(y, size))
    mag = np.abs(corr)
    m = int(np.argmax(mag))
    shift = 0.0
    peak = mag[m]
    if 0 < m < size - 1:
        lo, hi = mag[m - 1], mag[m + 1]
        curv = lo - 2 * peak + hi
        if curv < 0:
            shift = 0.5 * (lo - hi) / curv
            peak = peak - 0.25 * (lo - hi) * shift
    lag = m if m < n else m - size
    norm = np.sum(np.abs(x) ** 2) * np.sum(np.abs(y) ** 2)
    fidelity = min(1.0, float(peak**2 / norm))
    return StorageMetrics(float(efficiency), fidelity, float((lag + shift) * input.dt))


@dataclass(frozen=True)
class SimulationResult:
    input: Waveform
    ode: Waveform
    tf: Waveform
    ode_metrics: StorageMetrics
    tf_metrics: StorageMetrics
    discrepancy: float


def simulate(
    circuit: Circuit,
    sigma: float,
    center: float | None = None,
    carrier_detuning: float = 0.0,
    dt: float = DEFAULT_DT,
) -> SimulationResult:
    """Run both engines on a Gaussian pulse and compare them."""
    pulse = pulse_for(circuit, sigma, center, carrier_detuning, dt)
    ode = ode_propagate(circuit, pulse)
    tf = tf_propagate(circuit, pulse)
    return SimulationResult(
        pulse,
        ode,
        tf,
        storage_metrics(pulse, ode),
        storage_metrics(pulse, tf),
        relative_l2(ode, tf),
    )
