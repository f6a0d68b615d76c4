"""Block optimisation, block gluing and the equidistant-comb baseline."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import minimize

from .core import (
    Block,
    Circuit,
    Comb,
    circuit_spread,
    delay_at,
    delay_at_zero,
    delay_curvature,
)
from .errors import (
    BudgetExceededError,
    ContractViolationError,
    InvalidParameterError,
    NoSolutionError,
    QMCombError,
)

K_LIMITS = (0.0, 10.0)
G_LIMITS = (0.0, 5.0)

# among multistart minima this close to the best, prefer small k then small g
TIE_TOL = 1e-10


@dataclass(frozen=True)
class ObjectiveSpec:
    """Symmetric uniform sample grid for the flatness objective.

    ``relative=True`` scores (T_rel - 1)^2 instead of (T - T(0))^2.
    """

    band_halfwidth: float = 1.0
    n_samples: int = 41
    relative: bool = False

    def __post_init__(self) -> None:
        if not self.band_halfwidth > 0:
            raise InvalidParameterError("band_halfwidth must be > 0")
        if self.n_samples < 5 or self.n_samples % 2 == 0:
            raise InvalidParameterError("n_samples must be an odd integer >= 5")

    @property
    def nodes(self) -> np.ndarray:
        v = np.linspace(-self.band_halfwidth, self.band_halfwidth, self.n_samples)
        return 0.5 * (v - v[::-1])


@dataclass(frozen=True)
class SearchConfig:
    k_bounds: tuple[float, float] = (0.01, 10.0)
    g_bounds: tuple[float, float] = (0.0, 5.0)
    starts: int = 25
    tol: float = 1e-4
    budget: int = 100_000
    seed: int | None = None

    def __post_init__(self) -> None:
        klo, khi = self.k_bounds
        glo, ghi = self.g_bounds
        if not (K_LIMITS[0] < klo < khi <= K_LIMITS[1]):
            raise InvalidParameterError(f"k bounds must satisfy 0 < lo < hi <= 10, got {self.k_bounds}")
        if not (G_LIMITS[0] <= glo < ghi <= G_LIMITS[1]):
            raise InvalidParameterError(f"g bounds must satisfy 0 <= lo < hi <= 5, got {self.g_bounds}")
        if self.starts < 1:
            raise InvalidParameterError("starts must be >= 1")
        if not self.tol > 0:
            raise InvalidParameterError("tol must be > 0")
        if self.budget < 1:
            raise InvalidParameterError("budget must be >= 1")


@dataclass(frozen=True)
class OptimResult:
    k: float
    g: float
    objective_value: float
    spread_in_band: float
    n_evaluations: int
    mode: str
    converged: bool = True
    history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    @property
    def block(self) -> Block:
        return Block(k=self.k, g=self.g)


@dataclass(frozen=True)
class GlueResult:
    delta_shift: float
    composite: Circuit
    spread_in_band: float
    residual: float = 0.0


@dataclass(frozen=True)
class DesignComparison:
    spread_a: float
    spread_b: float
    ratio: float


def flatness_objective(circuit: Circuit, spec: ObjectiveSpec = ObjectiveSpec()) -> float:
    """Sum over the sample grid of (T(nu_m) - T(0))^2."""
    nus = spec.nodes
    T = delay_at(circuit, nus)
    T0 = T[spec.n_samples // 2]
    if spec.relative:
        if T0 == 0.0:
            return 0.0 if np.all(T == 0.0) else math.inf
        return float(np.sum((T / T0 - 1.0) ** 2))
    return float(np.sum((T - T0) ** 2))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QMCOMB_THREADS", "1")))
    except ValueError:
        return 1


def _start_points(mode: str, search: SearchConfig) -> list[tuple[float, ...]]:
    side = max(1, math.isqrt(search.starts)) if mode == "full" else search.starts
    rng = np.random.default_rng(search.seed) if search.seed is not None else None

    def axis(lo: float, hi: float) -> np.ndarray:
        offs = np.arange(side) + 0.5
        if rng is not None:
            offs = np.arange(side) + rng.uniform(0.05, 0.95, side)
        return lo + offs * (hi - lo) / side

    ks = axis(*search.k_bounds)
    if mode == "partial":
        return [(float(k),) for k in ks]
    gs = axis(*search.g_bounds)
    return [(float(k), float(g)) for k in ks for g in gs]


def _allocate(budget: int, n: int) -> list[int]:
    base, extra = divmod(budget, n)
    return [base + (1 if i < extra else 0) for i in range(n)]


def optimize_block(
    mode: Literal["partial", "full"] = "full",
    spec: ObjectiveSpec = ObjectiveSpec(),
    search: SearchConfig = SearchConfig(),
    starts: Sequence[Sequence[float]] | None = None,
) -> OptimResult:
    """Multistart Nelder-Mead on the flatness of a centred unit block.

    ``mode="partial"`` fixes g = 0 and varies k only.  Explicit ``starts``
    replace the start grid.  Raises :class:`BudgetExceededError` (carrying
    the best point found) if any start fails to converge within its share
    of ``search.budget``.
    """
    if mode not in ("partial", "full"):
        raise InvalidParameterError(f"mode must be 'partial' or 'full', got {mode!r}")
    points = [tuple(p) for p in starts] if starts is not None else _start_points(mode, search)
    dim = 1 if mode == "partial" else 2
    if any(len(p) != dim for p in points):
        raise InvalidParameterError(f"start points must have {dim} coordinates for mode={mode}")
    bounds = [search.k_bounds] if mode == "partial" else [search.k_bounds, search.g_bounds]
    allocation = _allocate(search.budget, len(points))

    def objective(x: np.ndarray) -> float:
        k = float(x[0])
        g = float(x[1]) if dim == 2 else 0.0
        try:
            return flatness_objective(Circuit.of(Block(k=k, g=g)), spec)
        except QMCombError:
            return math.inf

    def run(args):
        x0, maxfev = args
        if maxfev < 1:
            return None
        trace: list[float] = []

        def f(x):
            return objective(x)

        def callback(intermediate_result):
            trace.append(float(intermediate_result.fun))

        res = minimize(
            f,
            np.array(x0, dtype=float),
            method="Nelder-Mead",
            bounds=bounds,
            callback=callback,
            options={"xatol": search.tol, "fatol": 1e-15, "maxfev": maxfev, "maxiter": maxfev},
        )
        converged = bool(res.success) and res.nfev <= maxfev
        return res.x, float(res.fun), int(res.nfev), converged, tuple(trace)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        outcomes = list(pool.map(run, zip(points, allocation)))

    done = [o for o in outcomes if o is not None]
    n_evals = sum(o[2] for o in done)
    if not done:
        raise BudgetExceededError("budget too small to start any search", best=None)
    fbest = min(o[1] for o in done)
    ties = [o for o in done if o[1] <= fbest + TIE_TOL]
    x, fun, _, conv, trace = min(ties, key=lambda o: (float(o[0][0]), float(o[0][1]) if dim == 2 else 0.0))
    k = float(x[0])
    g = float(x[1]) if dim == 2 else 0.0
    spread = circuit_spread(Circuit.of(Block(k=k, g=g)), (-spec.band_halfwidth, spec.band_halfwidth))
    all_converged = len(done) == len(outcomes) and all(o[3] for o in done)
    result = OptimResult(
        k=k,
        g=g,
        objective_value=fun,
        spread_in_band=spread,
        n_evaluations=n_evals,
        mode=mode,
        converged=all_converged,
        history=trace,
    )
    if not all_converged:
        raise BudgetExceededError(
            f"{sum(1 for o in outcomes if o is None or not o[3])} of {len(outcomes)} starts did not converge "
            f"within a budget of {search.budget} evaluations",
            best=result,
        )
    return result


def curvature_flat_k(comb: Comb, k_max: float = 20.0, n_scan: int = 400) -> float:
    """Coupling k > 0 at which d^2 T / d nu^2 vanishes at nu = 0.

    Scans (0, k_max] for the first sign change of the stencil curvature and
    bisects it to machine resolution.
    """
    if not Circuit.of(comb).is_symmetric():
        raise ContractViolationError("curvature_flat_k needs a comb symmetric about 0")

    def curv(k: float) -> float:
        return delay_curvature(Circuit.of(comb.with_k(k)))

    ks = np.linspace(k_max / n_scan, k_max, n_scan)
    vals = [curv(k) for k in ks]
    for i in range(n_scan - 1):
        if vals[i] == 0.0:
            return float(ks[i])
        if np.sign(vals[i]) != np.sign(vals[i + 1]):
            return _bisect(curv, ks[i], ks[i + 1], vals[i])
    raise NoSolutionError(f"no sign change of the delay curvature for k in (0, {k_max}]")


def _bisect(f, lo: float, hi: float, flo: float, ftol: float = 0.0, max_iter: int = 200) -> float:
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0.0 or abs(fm) < ftol:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def glued_pair(block: Block, delta_shift: float) -> Circuit:
    return Circuit.of(block.shifted(-delta_shift), block.shifted(delta_shift))


def glue_mismatch(block: Block, delta_shift: float) -> float:
    """T(delta) - T(0) of the pair glued at +/- delta_shift."""
    composite = glued_pair(block, delta_shift)
    return float(delay_at(composite, [delta_shift])[0] - delay_at_zero(composite))


def glue_delta(
    block: Block,
    band_halfwidth: float = 1.0,
    spread_band: Sequence[float] | None = None,
    n_scan: int = 120,
) -> GlueResult:
    """Shift delta at which two copies of ``block`` at -/+delta give T(delta) = T(0).

    The composite itself depends on delta, so the equal-delay condition is
    solved self-consistently: every sign change in (0, 6 * band_halfwidth]
    is bisected to |T(delta) - T(0)| < 1e-8, and the root whose composite
    has the smallest delay spread over ``spread_band`` (default
    +/- 3 * band_halfwidth) is returned.
    """
    if block.center != 0.0:
        raise ContractViolationError("glue_delta expects a block centred on 0")
    if not band_halfwidth > 0:
        raise InvalidParameterError("band_halfwidth must be > 0")
    top = 6.0 * band_halfwidth
    deltas = np.linspace(top / n_scan, top, n_scan)

    def f(d: float) -> float:
        return glue_mismatch(block, d)

    vals = [f(d) for d in deltas]
    band = spread_band if spread_band is not None else (-3.0 * band_halfwidth, 3.0 * band_halfwidth)
    candidates = []
    for i in range(n_scan - 1):
        if np.sign(vals[i]) != np.sign(vals[i + 1]):
            root = _bisect(f, deltas[i], deltas[i + 1], vals[i], ftol=1e-12)
            residual = f(root)
            if abs(residual) < 1e-8:
                composite = glued_pair(block, root)
                candidates.append(GlueResult(float(root), composite, circuit_spread(composite, band), float(residual)))
    if not candidates:
        raise NoSolutionError(f"T(delta) - T(0) has no usable root for delta in (0, {top}]")
    # several shifts satisfy the equal-delay rule (tiny shifts just trace the
    # single block's own ripple); keep the flattest composite
    return min(candidates, key=lambda r: (r.spread_in_band, r.delta_shift))


def compare_designs(a: Circuit, b: Circuit, band: Sequence[float]) -> DesignComparison:
    """Delay spreads of two designs over ``band`` and their ratio a/b."""
    sa = circuit_spread(a, band)
    sb = circuit_spread(b, band)
    if sb == 0.0:
        ratio = 1.0 if sa == 0.0 else math.inf
    else:
        ratio = sa / sb
    return DesignComparison(sa, sb, ratio)
