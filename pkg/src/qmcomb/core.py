"""Frequency-domain model of resonator blocks, combs and their cascades.

All frequencies are in units of the block detuning Delta and all times in
units of 1/Delta.  Fields are classical complex amplitudes with the Fourier
convention a(t) = (2 pi)^(-1/2) int dnu exp(-i nu t) a(nu), so steady state
means d/dt -> -i nu and a pulse delayed by tau picks up the phase +nu tau.

The normalised spectral delay is T(nu) = phase(nu) / (2 nu), where
``phase`` is the unwrapped argument of the transfer function anchored to
zero at nu = 0.  The factor 1/2 is fixed by the linear solve: for a single
block tan(phase/2) = 4 k nu / (8 g^2 + k^2 + 4 - 4 nu^2) holds exactly.
The physical group delay at band centre is therefore 2 T(0).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import kernels
from .errors import (
    ContractViolationError,
    GridTooCoarseError,
    InvalidParameterError,
    PoleError,
    SingularSystemError,
)

# phase(nu) = PHASE_DELAY_FACTOR**-1 * nu * T(nu)
PHASE_DELAY_FACTOR = 0.5

DEFAULT_MAX_JUMP = 0.5 * math.pi


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class Block:
    """Symmetric three-resonator memory block.

    Resonators sit at ``center - delta``, ``center`` and ``center + delta``.
    The outer two couple to the waveguide at rate ``k``; neighbours couple to
    each other at rate ``g``.
    """

    k: float
    g: float = 0.0
    delta: float = 1.0
    center: float = 0.0

    def __post_init__(self) -> None:
        for name in ("k", "g", "delta", "center"):
            _check_finite(name, getattr(self, name))
        if self.delta <= 0:
            raise InvalidParameterError(f"delta must be > 0, got {self.delta}")
        if self.k < 0:
            raise InvalidParameterError(f"k must be >= 0, got {self.k}")
        if self.g < 0:
            raise InvalidParameterError(f"g must be >= 0, got {self.g}")

    @property
    def detunings(self) -> tuple[float, float, float]:
        return (self.center - self.delta, self.center, self.center + self.delta)

    def shifted(self, center: float) -> "Block":
        return Block(k=self.k, g=self.g, delta=self.delta, center=center)

    def mirrored(self) -> "Block":
        return self.shifted(-self.center)


@dataclass(frozen=True)
class Comb:
    """Chain of independent resonators, each side-coupled to the waveguide."""

    detunings: tuple[float, ...]
    k: float

    def __post_init__(self) -> None:
        dets = tuple(float(d) for d in self.detunings)
        object.__setattr__(self, "detunings", dets)
        if not dets:
            raise InvalidParameterError("comb needs at least one resonator")
        for d in dets:
            _check_finite("detuning", d)
        if any(b <= a for a, b in zip(dets, dets[1:])):
            raise InvalidParameterError("comb detunings must be strictly increasing")
        _check_finite("k", self.k)
        if self.k < 0:
            raise InvalidParameterError(f"k must be >= 0, got {self.k}")

    @property
    def center(self) -> float:
        return 0.0

    def mirrored(self) -> "Comb":
        return Comb(tuple(sorted(-d for d in self.detunings)), self.k)

    def with_k(self, k: float) -> "Comb":
        return Comb(self.detunings, k)


Element = Union[Block, Comb]


def equidistant_comb(n: int, spacing: float, k: float) -> Comb:
    """``n`` resonators spaced by ``spacing`` and centred on zero."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if spacing <= 0:
        raise InvalidParameterError("spacing must be > 0")
    offsets = (np.arange(n) - (n - 1) / 2) * spacing
    return Comb(tuple(float(x) for x in offsets), k)


@dataclass(frozen=True)
class Circuit:
    """Ordered cascade of elements along one waveguide."""

    elements: tuple[Element, ...]

    def __post_init__(self) -> None:
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        if not elements:
            raise InvalidParameterError("circuit must contain at least one element")
        for el in elements:
            if not isinstance(el, (Block, Comb)):
                raise InvalidParameterError(f"unsupported element {el!r}")

    @classmethod
    def of(cls, *elements: Element) -> "Circuit":
        return cls(tuple(elements))

    @property
    def is_single_centered_block(self) -> bool:
        return (
            len(self.elements) == 1
            and isinstance(self.elements[0], Block)
            and self.elements[0].center == 0.0
        )

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """True if mirroring every element about nu = 0 gives the same cascade.

        Cascades commute, so the comparison is on the multiset of elements.
        """

        def key(el: Element):
            if isinstance(el, Block):
                return ("b", round(el.k / tol), round(el.g / tol), round(el.delta / tol), round(el.center / tol))
            return ("c", round(el.k / tol), tuple(round(d / tol) for d in el.detunings))

        return Counter(map(key, self.elements)) == Counter(key(el.mirrored()) for el in self.elements)

    @property
    def min_coupling(self) -> float:
        return min(el.k for el in self.elements)

    @property
    def max_rate(self) -> float:
        """Largest rate entering the time-domain equations."""
        rates = []
        for el in self.elements:
            if isinstance(el, Block):
                rates += [el.k, el.g] + [abs(d) for d in el.detunings]
            else:
                rates += [el.k] + [abs(d) for d in el.detunings]
        return max(rates)


@dataclass(frozen=True)
class FrequencyGrid:
    nu_min: float
    nu_max: float
    n_points: int

    def __post_init__(self) -> None:
        if self.n_points < 3:
            raise InvalidParameterError("a grid needs at least 3 points")
        if not self.nu_min < self.nu_max:
            raise InvalidParameterError("nu_min must be < nu_max")

    @classmethod
    def symmetric(cls, halfwidth: float, n_points: int) -> "FrequencyGrid":
        return cls(-halfwidth, halfwidth, n_points)

    @property
    def values(self) -> NDArray[np.float64]:
        v = np.linspace(self.nu_min, self.nu_max, self.n_points)
        if self.is_symmetric:
            # exact mirror symmetry; exact zero in the middle for odd n
            v = 0.5 * (v - v[::-1])
        return v

    @property
    def step(self) -> float:
        return (self.nu_max - self.nu_min) / (self.n_points - 1)

    @property
    def is_symmetric(self) -> bool:
        return self.nu_min == -self.nu_max

    @property
    def zero_index(self) -> int | None:
        if self.is_symmetric and self.n_points % 2 == 1:
            return self.n_points // 2
        v = np.linspace(self.nu_min, self.nu_max, self.n_points)
        hits = np.flatnonzero(v == 0.0)
        return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class SpectralResponse:
    grid: FrequencyGrid
    s: NDArray[np.complex128]
    phase: NDArray[np.float64]
    circuit: Circuit | None = field(default=None, compare=False)
    anchored: bool = True


@dataclass(frozen=True)
class DelayProfile:
    grid: FrequencyGrid
    T: NDArray[np.float64]
    T0: float
    T_rel: NDArray[np.float64]


# ---------------------------------------------------------------------------
# transfer functions


def single_resonator_response(detuning: float, k: float, nu: ArrayLike):
    """a_out / a_in of one resonator side-coupled to the waveguide.

    S = (i(detuning - nu) - k/2) / (i(detuning - nu) + k/2).
    """
    if not k >= 0:
        raise InvalidParameterError(f"k must be >= 0, got {k}")
    x = 1j * (detuning - np.asarray(nu, dtype=np.float64))
    s = (x - k / 2) / (x + k / 2)
    if np.ndim(s) == 0:
        return complex(s)
    return s


def block_response(block: Block, nu: ArrayLike):
    """Solve the steady-state 3x3 system of ``block`` at each ``nu``.

    The block matrix is exactly singular at ``nu == block.center`` (a dark
    state with b1 = -b3 that never reaches the waveguide); the solver picks
    a particular solution there, which leaves a4 unaffected.
    """
    if not isinstance(block, Block):
        raise InvalidParameterError(f"expected a Block, got {type(block).__name__}")
    nu_arr = np.asarray(nu, dtype=np.float64)
    if not np.all(np.isfinite(nu_arr)):
        raise InvalidParameterError("nu must be finite")
    d1, d2, d3 = block.detunings
    s = kernels.block_response_grid(nu_arr.ravel(), d1, d2, d3, block.k, block.g)
    if np.isnan(s).any():
        bad = nu_arr.ravel()[np.isnan(s)][0]
        raise SingularSystemError(f"inconsistent steady-state system at nu={bad!r}")
    s = s.reshape(nu_arr.shape)
    if s.ndim == 0:
        return complex(s)
    return s


def comb_response(comb: Comb, nu: ArrayLike):
    nu_arr = np.asarray(nu, dtype=np.float64)
    s = np.ones(nu_arr.shape, dtype=np.complex128)
    for d in comb.detunings:
        s = s * single_resonator_response(d, comb.k, nu_arr)
    if s.ndim == 0:
        return complex(s)
    return s


def element_response(element: Element, nu: ArrayLike):
    if isinstance(element, Block):
        return block_response(element, nu)
    return comb_response(element, nu)


def closed_form_tan_phase(k: float, g: float, nu: float, delta: float = 1.0) -> float:
    """tan of half the block phase: 4 k nu / (8 g^2 + k^2 + 4 delta^2 - 4 nu^2).

    Raises :class:`PoleError` where the denominator vanishes.
    """
    den = 8 * g * g + k * k + 4 * delta * delta - 4 * nu * nu
    if den == 0.0 or abs(den) < 1e-300:
        raise PoleError(f"denominator vanishes at nu={nu!r}")
    return 4 * k * nu / den


def cascade_response(circuit: Circuit, nu: ArrayLike):
    """Product of element responses; elements are evaluated where they sit.

    Blocks carry their offset in ``center``; comb detunings are absolute.
    """
    nu_arr = np.asarray(nu, dtype=np.float64)
    s = np.ones(nu_arr.shape, dtype=np.complex128)
    for el in circuit.elements:
        s = s * element_response(el, nu_arr)
    if s.ndim == 0:
        return complex(s)
    return s


# ---------------------------------------------------------------------------
# phase and delay


def _continuous(raw: NDArray[np.float64], max_jump: float) -> NDArray[np.float64]:
    diffs = np.diff(raw)
    wraps = np.round(diffs / (2 * np.pi))
    steps = diffs - 2 * np.pi * wraps
    if steps.size and np.max(np.abs(steps)) > max_jump:
        i = int(np.argmax(np.abs(steps)))
        raise GridTooCoarseError(
            f"phase step {steps[i]:.3f} rad between samples {i} and {i + 1} exceeds {max_jump:.3f}; refine the grid"
        )
    # add whole turns to the raw values instead of summing steps: no drift
    turns = np.concatenate([[0.0], np.cumsum(wraps)])
    return raw - 2 * np.pi * turns


def unwrap_phase(
    raw_args: ArrayLike,
    grid: FrequencyGrid,
    symmetric: bool = False,
    max_jump: float = DEFAULT_MAX_JUMP,
) -> NDArray[np.float64]:
    """Continuous phase from principal-value arguments sampled on ``grid``.

    The result is anchored to 0 at nu = 0 when the grid contains it, and made
    exactly odd when ``symmetric`` is set and the grid is symmetric.
    """
    raw = np.asarray(raw_args, dtype=np.float64)
    if raw.shape != (grid.n_points,):
        raise InvalidParameterError("raw_args must have one value per grid point")
    phase = _continuous(raw, max_jump)
    i0 = grid.zero_index
    if i0 is not None:
        phase = phase - phase[i0]
        if symmetric and grid.is_symmetric:
            phase = 0.5 * (phase - phase[::-1])
    return phase


def spectral_response(
    circuit: Circuit, grid: FrequencyGrid, max_jump: float = DEFAULT_MAX_JUMP
) -> SpectralResponse:
    nus = grid.values
    s = cascade_response(circuit, nus)
    phase = unwrap_phase(np.angle(s), grid, symmetric=circuit.is_symmetric(), max_jump=max_jump)
    return SpectralResponse(grid, s, phase, circuit, anchored=grid.zero_index is not None)


def block_delay_at_zero(block: Block) -> float:
    """Small-nu limit of T for a block centred on zero."""
    den = 8 * block.g**2 + block.k**2 + 4 * block.delta**2
    return 4 * block.k / den


def extrapolate_to_zero(t1: float, t2: float, t3: float) -> float:
    """Quadratic through (h, t1), (2h, t2), (3h, t3), evaluated at 0."""
    return 3 * t1 - 3 * t2 + t3


def delay_profile(response: SpectralResponse) -> DelayProfile:
    grid = response.grid
    i0 = grid.zero_index
    if i0 is None or not response.anchored or response.phase[i0] != 0.0:
        raise ContractViolationError("phase must be anchored to 0 at nu = 0 on the grid")
    nus = grid.values
    with np.errstate(divide="ignore", invalid="ignore"):
        T = PHASE_DELAY_FACTOR * response.phase / nus
    circuit = response.circuit
    if circuit is not None and circuit.is_single_centered_block:
        T0 = block_delay_at_zero(circuit.elements[0])
    else:
        sides = []
        if i0 + 3 < grid.n_points:
            sides.append(extrapolate_to_zero(*T[i0 + 1 : i0 + 4]))
        if i0 - 3 >= 0:
            sides.append(extrapolate_to_zero(T[i0 - 1], T[i0 - 2], T[i0 - 3]))
        if not sides:
            raise ContractViolationError("need three samples beside nu = 0 to extrapolate T(0)")
        T0 = float(np.mean(sides))
    T[i0] = T0
    if T0 == 0.0:
        T_rel = np.full_like(T, np.nan)
        if np.all(T == 0.0):
            T_rel[i0] = 1.0
    else:
        T_rel = T / T0
        T_rel[i0] = 1.0
    return DelayProfile(grid, T, float(T0), T_rel)


def delay_spread(profile: DelayProfile, band: Sequence[float]) -> float:
    """max - min of T_rel over the samples inside ``band``."""
    lo, hi = float(band[0]), float(band[1])
    nus = profile.grid.values
    tol = 1e-9 * max(1.0, abs(lo), abs(hi))
    if lo > hi:
        raise InvalidParameterError("band must satisfy lo <= hi")
    if lo < nus[0] - tol or hi > nus[-1] + tol:
        raise InvalidParameterError(f"band [{lo}, {hi}] exceeds the grid range")
    mask = (nus >= lo - tol) & (nus <= hi + tol)
    if not mask.any():
        raise InvalidParameterError(f"band [{lo}, {hi}] contains no grid samples")
    vals = profile.T_rel[mask]
    return float(np.max(vals) - np.min(vals))


def default_grid(circuit: Circuit, n_points: int = 4001) -> FrequencyGrid:
    """4001 points over [-4, 4] for a single centred block, [-6, 6] otherwise."""
    half = 4.0 if circuit.is_single_centered_block else 6.0
    return FrequencyGrid.symmetric(half, n_points)


def analyze(circuit: Circuit, grid: FrequencyGrid | None = None) -> tuple[SpectralResponse, DelayProfile]:
    response = spectral_response(circuit, grid or default_grid(circuit))
    return response, delay_profile(response)


def circuit_spread(circuit: Circuit, band: Sequence[float], n_points: int = 4001) -> float:
    """Delay spread over ``band`` on a symmetric grid that just covers it."""
    half = max(abs(band[0]), abs(band[1]))
    _, profile = analyze(circuit, FrequencyGrid.symmetric(half, n_points))
    return delay_spread(profile, band)


def _phase_path_step(circuit: Circuit) -> float:
    # phase slope near a pole of width k peaks at ~4/k; keep steps ~ pi/10
    kmin = max(circuit.min_coupling, 1e-6)
    return min(0.05, 0.08 * kmin)


def delay_at(circuit: Circuit, nus: ArrayLike) -> NDArray[np.float64]:
    """T(nu) at arbitrary points, unwrapping along a fine path from nu = 0.

    T(0) is taken from the analytic limit for a single centred block and by
    quadratic extrapolation otherwise.
    """
    nus = np.asarray(nus, dtype=np.float64)
    reach = float(np.max(np.abs(nus))) if nus.size else 0.0
    step = _phase_path_step(circuit)
    n_half = max(int(math.ceil(reach / step)), 1)
    fine = np.linspace(-reach, reach, 2 * n_half + 1)
    path = np.union1d(np.union1d(fine, nus), [0.0])
    phase = _continuous(np.angle(cascade_response(circuit, path)), DEFAULT_MAX_JUMP)
    phase = phase - phase[np.searchsorted(path, 0.0)]
    at = phase[np.searchsorted(path, nus)]
    with np.errstate(divide="ignore", invalid="ignore"):
        T = PHASE_DELAY_FACTOR * at / nus
    if np.any(nus == 0.0):
        T[nus == 0.0] = delay_at_zero(circuit)
    return T


def delay_at_zero(circuit: Circuit, h: float = 1e-3) -> float:
    if circuit.is_single_centered_block:
        return block_delay_at_zero(circuit.elements[0])
    ref = cascade_response(circuit, 0.0)
    nus = np.array([h, 2 * h, 3 * h, -h, -2 * h, -3 * h])
    ph = np.angle(cascade_response(circuit, nus) * np.conj(ref))
    T = PHASE_DELAY_FACTOR * ph / nus
    return 0.5 * (extrapolate_to_zero(*T[:3]) + extrapolate_to_zero(*T[3:]))


def group_delay(circuit: Circuit, nu: float = 0.0, h: float = 1e-4) -> float:
    """d(phase)/d(nu) by a central difference; positive for a delay."""
    ratio = cascade_response(circuit, nu + h) * np.conj(cascade_response(circuit, nu - h))
    return float(np.angle(ratio) / (2 * h))


def delay_curvature(circuit: Circuit, h: float = 1e-3) -> float:
    """d^2 T / d nu^2 at nu = 0.

    For an even T, phase = 2 nu T, so T''(0) = phase'''(0) / 6; the third
    derivative comes from the 5-point central stencil.
    """
    ref = cascade_response(circuit, 0.0)
    nus = np.array([-2 * h, -h, h, 2 * h])
    ph = np.angle(cascade_response(circuit, nus) * np.conj(ref))
    third = (ph[3] - 2 * ph[2] + 2 * ph[1] - ph[0]) / (2 * h**3)
    return float(PHASE_DELAY_FACTOR * third / 3)
