"""``qmcomb`` command line.

Exit codes: 0 success, 2 input error, 3 numeric error, 4 optimizer budget
exhausted.  Every command writes a ``*.manifest.json`` after its other
outputs; its presence means the run completed.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import Callable, Sequence

from . import __version__, io
from .core import Block, Circuit, FrequencyGrid, analyze, circuit_spread, default_grid, equidistant_comb, group_delay
from .design import ObjectiveSpec, SearchConfig, curvature_flat_k, glue_delta, optimize_block
from .errors import BudgetExceededError, InvalidParameterError, QMCombError
from .timesim import DEFAULT_DT, ode_propagate, pulse_for, relative_l2, storage_metrics, tf_propagate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_BUDGET = 4

# reference two-parameter block; the full search itself runs to the box edge
REFERENCE_BLOCK = Block(k=3.47, g=0.29)


class UsageError(InvalidParameterError):
    pass


def parse_range(text: str, parts: int) -> tuple[float, ...]:
    pieces = text.split(":")
    if len(pieces) != parts:
        raise UsageError(f"expected {parts} ':'-separated values, got {text!r}")
    try:
        return tuple(float(p) for p in pieces)
    except ValueError as exc:
        raise UsageError(f"bad number in {text!r}") from exc


def parse_grid(text: str) -> FrequencyGrid:
    lo, hi, n = parse_range(text, 3)
    if n != int(n):
        raise UsageError(f"grid point count must be an integer, got {n}")
    return FrequencyGrid(lo, hi, int(n))


def parse_band(text: str) -> tuple[float, float]:
    lo, hi = parse_range(text, 2)
    if lo > hi:
        raise UsageError(f"band lower edge exceeds upper edge: {text!r}")
    return lo, hi


def parse_pulse(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in filter(None, text.split(",")):
        if "=" not in item:
            raise UsageError(f"pulse field must be name=value, got {item!r}")
        name, value = item.split("=", 1)
        name = name.strip()
        if name not in ("sigma", "center", "detuning"):
            raise UsageError(f"unknown pulse field {name!r}")
        try:
            out[name] = float(value)
        except ValueError as exc:
            raise UsageError(f"bad number for pulse {name}: {value!r}") from exc
    if "sigma" not in out:
        raise UsageError("--pulse needs sigma=S")
    return out


def sibling(path: Path, suffix: str) -> Path:
    """out.json -> out.<suffix>"""
    return path.with_name(f"{path.stem}.{suffix}")


def manifest_path(out: Path) -> Path:
    return sibling(out, "manifest.json") if out.suffix else out / "manifest.json"


def _start(args: argparse.Namespace, command: str) -> io.RunManifest:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command") and v is not None}
    inputs = [str(args.circuit)] if getattr(args, "circuit", None) else []
    if getattr(args, "config", None):
        inputs.append(str(args.config))
    return io.RunManifest(command, inputs, {k: str(v) for k, v in params.items()}, version=__version__)


# commands


def cmd_analyze(args: argparse.Namespace) -> int:
    manifest = _start(args, "analyze")
    t0 = time.perf_counter()
    circuit = io.load_circuit(args.circuit)
    grid = parse_grid(args.grid) if args.grid else default_grid(circuit)
    response, profile = analyze(circuit, grid)
    out = Path(args.out)
    manifest.add_output(io.write_response_csv(out, response, profile))
    print(f"T(0) = {profile.T0:.6g}")
    if args.band:
        band = parse_band(args.band)
        spread = circuit_spread(circuit, band)
        print(f"spread[{band[0]:g},{band[1]:g}] = {spread:.6g}")
    manifest.duration_s = time.perf_counter() - t0
    manifest.write(manifest_path(out))
    return EXIT_OK


def _objective_spec(args: argparse.Namespace) -> ObjectiveSpec:
    half = 1.0
    if args.band:
        lo, hi = parse_band(args.band)
        if not math.isclose(lo, -hi):
            raise UsageError("the optimization band must be symmetric about 0")
        half = hi
    return ObjectiveSpec(band_halfwidth=half, n_samples=args.samples, relative=args.relative)


def cmd_optimize(args: argparse.Namespace) -> int:
    manifest = _start(args, "optimize")
    t0 = time.perf_counter()
    spec = _objective_spec(args)
    base = io.read_json(args.config) if args.config else {}
    search = io.search_config_from_dict(base, budget=args.budget, seed=args.seed, starts=args.starts)
    out = Path(args.out)
    code = EXIT_OK
    try:
        result = optimize_block(args.mode, spec, search)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_BUDGET
        result = exc.best
    if result is None:
        payload = {"mode": args.mode, "converged": False}
    else:
        payload = io.optim_result_to_dict(result)
        print(f"k = {result.k:.6g}  g = {result.g:.6g}  objective = {result.objective_value:.6g}  "
              f"spread = {result.spread_in_band:.6g}")
        manifest.add_output(io.save_circuit(sibling(out, "circuit.json"), Circuit.of(result.block)))
    payload["search"] = io.search_config_to_dict(search)
    payload["objective"] = {"band_halfwidth": spec.band_halfwidth, "n_samples": spec.n_samples,
                            "relative": spec.relative}
    manifest.add_output(io.write_json(out, payload))
    manifest.duration_s = time.perf_counter() - t0
    manifest.write(manifest_path(out))
    return code


def _block_from_args(args: argparse.Namespace) -> Block:
    if args.circuit:
        circuit = io.load_circuit(args.circuit)
        if not circuit.is_single_centered_block:
            raise UsageError("glue needs a circuit holding one block centred on 0")
        return circuit.elements[0]
    if args.k is None:
        raise UsageError("glue needs --circuit, --k/--g or --comb")
    return Block(k=args.k, g=args.g)


def cmd_glue(args: argparse.Namespace) -> int:
    manifest = _start(args, "glue")
    t0 = time.perf_counter()
    out = Path(args.out)
    band = parse_band(args.band) if args.band else None
    if args.comb:
        comb = equidistant_comb(args.comb, args.spacing, 1.0)
        k = curvature_flat_k(comb)
        comb = comb.with_k(k)
        circuit = Circuit.of(comb)
        band = band or (-3.0, 3.0)
        spread = circuit_spread(circuit, band)
        payload = {"type": "comb", "n": args.comb, "spacing": args.spacing, "k": k,
                   "band": list(band), "spread_in_band": spread}
        print(f"k = {k:.6g}  spread[{band[0]:g},{band[1]:g}] = {spread:.6g}")
    else:
        block = _block_from_args(args)
        result = glue_delta(block, spread_band=band)
        circuit = result.composite
        band = band or (-3.0, 3.0)
        payload = {"type": "glue", "block": io.element_to_dict(block), "delta_shift": result.delta_shift,
                   "band": list(band), "spread_in_band": result.spread_in_band, "residual": result.residual}
        print(f"delta = {result.delta_shift:.6g}  spread[{band[0]:g},{band[1]:g}] = {result.spread_in_band:.6g}")
    manifest.add_output(io.save_circuit(sibling(out, "circuit.json"), circuit))
    manifest.add_output(io.write_json(out, payload))
    manifest.duration_s = time.perf_counter() - t0
    manifest.write(manifest_path(out))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    manifest = _start(args, "simulate")
    t0 = time.perf_counter()
    circuit = io.load_circuit(args.circuit)
    pulse = parse_pulse(args.pulse)
    pin = pulse_for(circuit, pulse["sigma"], pulse.get("center"), pulse.get("detuning", 0.0), args.dt)
    ode = ode_propagate(circuit, pin)
    tf = tf_propagate(circuit, pin)
    m_ode = storage_metrics(pin, ode)
    m_tf = storage_metrics(pin, tf)
    gap = relative_l2(ode, tf)
    out = Path(args.out)
    for name, w in (("input", pin), ("ode", ode), ("tf", tf)):
        manifest.add_output(io.write_waveform_csv(sibling(out, f"{name}.csv"), w))
    payload = m_ode.to_dict()
    payload.update({
        "tf": m_tf.to_dict(),
        "discrepancy_l2": gap,
        "group_delay": group_delay(circuit),
        "dt": args.dt,
        "n_samples": len(pin.samples),
    })
    manifest.add_output(io.write_json(out, payload))
    print(f"efficiency = {m_ode.efficiency:.9f}  fidelity = {m_ode.fidelity:.6f}  "
          f"delay = {m_ode.measured_delay:.6g}  ode/tf L2 = {gap:.3e}")
    manifest.duration_s = time.perf_counter() - t0
    manifest.write(manifest_path(out))
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    """Optimize, analyze, glue and analyze again; one directory of CSV/JSON."""
    manifest = _start(args, "reproduce-figures")
    t0 = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    search = SearchConfig(seed=args.seed) if args.seed is not None else SearchConfig()
    grid2 = FrequencyGrid.symmetric(4.0, 4001)
    grid3 = FrequencyGrid.symmetric(6.0, 6001)
    code = EXIT_OK

    def emit(name: str, circuit: Circuit, grid: FrequencyGrid) -> None:
        manifest.add_output(io.save_circuit(out / f"{name}.circuit.json", circuit))
        response, profile = analyze(circuit, grid)
        manifest.add_output(io.write_response_csv(out / f"{name}.csv", response, profile))

    summary: dict = {}
    for mode in ("partial", "full"):
        try:
            result = optimize_block(mode, search=search)
        except BudgetExceededError as exc:
            code = EXIT_BUDGET
            result = exc.best
            print(f"warning: {exc}", file=sys.stderr)
        summary[mode] = io.optim_result_to_dict(result)
        emit(f"block_{mode}", Circuit.of(result.block), grid2)
        print(f"{mode}: k = {result.k:.6g}  g = {result.g:.6g}  spread[-1,1] = {result.spread_in_band:.6g}")

    ref = Circuit.of(REFERENCE_BLOCK)
    emit("block_reference", ref, grid2)
    summary["reference"] = {"k": REFERENCE_BLOCK.k, "g": REFERENCE_BLOCK.g,
                            "spread_in_band": circuit_spread(ref, (-1.0, 1.0))}

    glued = glue_delta(REFERENCE_BLOCK)
    emit("glued_pair", glued.composite, grid3)
    summary["glued"] = {"delta_shift": glued.delta_shift, "spread_in_band": glued.spread_in_band}
    print(f"glued: delta = {glued.delta_shift:.6g}  spread[-3,3] = {glued.spread_in_band:.6g}")

    comb = equidistant_comb(4, 2.0, 1.0)
    comb = comb.with_k(curvature_flat_k(comb))
    emit("comb_baseline", Circuit.of(comb), grid3)
    comb_spread = circuit_spread(Circuit.of(comb), (-3.0, 3.0))
    summary["comb"] = {"k": comb.k, "spread_in_band": comb_spread}
    print(f"comb: k = {comb.k:.6g}  spread[-3,3] = {comb_spread:.6g}")

    manifest.add_output(io.write_json(out / "summary.json", summary))
    manifest.duration_s = time.perf_counter() - t0
    manifest.write(out / "manifest.json")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmcomb", description="Ring-resonator comb memory design tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="transfer function and delay profile of a circuit")
    a.add_argument("--circuit", required=True)
    a.add_argument("--grid", help="lo:hi:n frequency grid")
    a.add_argument("--band", help="lo:hi band for the printed delay spread")
    a.add_argument("--out", required=True, help="response CSV path")
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("optimize", help="flatness-optimize a single block")
    o.add_argument("--mode", choices=("partial", "full"), default="full")
    o.add_argument("--band", help="symmetric lo:hi objective band (default -1:1)")
    o.add_argument("--samples", type=int, default=41, help="objective sample count")
    o.add_argument("--relative", action="store_true", help="score T_rel instead of T")
    o.add_argument("--config", help="search config JSON")
    o.add_argument("--starts", type=int)
    o.add_argument("--budget", type=int)
    o.add_argument("--seed", type=int)
    o.add_argument("--out", required=True, help="result JSON path")
    o.set_defaults(func=cmd_optimize)

    g = sub.add_parser("glue", help="glue two copies of a block, or tune an equidistant comb")
    g.add_argument("--circuit", help="circuit file holding one centred block")
    g.add_argument("--k", type=float)
    g.add_argument("--g", type=float, default=0.0)
    g.add_argument("--comb", type=int, help="tune an N-resonator equidistant comb instead")
    g.add_argument("--spacing", type=float, default=2.0, help="comb spacing (default 2)")
    g.add_argument("--band", help="lo:hi band for the spread (default -3:3)")
    g.add_argument("--out", required=True, help="result JSON path")
    g.set_defaults(func=cmd_glue)

    s = sub.add_parser("simulate", help="propagate a Gaussian pulse with both engines")
    s.add_argument("--circuit", required=True)
    s.add_argument("--pulse", required=True, help="sigma=S[,center=C][,detuning=D]")
    s.add_argument("--dt", type=float, default=DEFAULT_DT)
    s.add_argument("--out", required=True, help="metrics JSON path")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reproduce-figures", help="emit the single-block and glued-pair datasets")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_reproduce)
    return p


RANGE_FLAGS = ("--grid", "--band")


def _glue_ranges(argv: Sequence[str]) -> list[str]:
    # argparse reads "-1:1" as an option; bind range values to their flag
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in RANGE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_glue_ranges(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except (OSError, InvalidParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (QMCombError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
