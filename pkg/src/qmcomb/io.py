"""File formats: circuit JSON, response and waveform CSV, result JSON.

All writers go through :func:`atomic_write` (temp file in the target
directory, then rename), so a reader never sees a half-written file.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .core import Block, Circuit, Comb, DelayProfile, SpectralResponse
from .design import OptimResult, SearchConfig
from .errors import InvalidParameterError
from .timesim import StorageMetrics, Waveform

UNIT = "Delta"


def fmt(x: float) -> str:
    """12 significant digits, period decimal separator, empty for NaN."""
    if math.isnan(x):
        return ""
    return f"{x + 0.0:.11e}"  # + 0.0 turns -0.0 into 0.0


def atomic_write(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def write_json(path: str | os.PathLike, obj: Any) -> Path:
    return atomic_write(path, dumps(obj))


def read_json(path: str | os.PathLike) -> Any:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"{path}: invalid JSON ({exc})") from exc


# circuits


def element_to_dict(el: Block | Comb) -> dict:
    if isinstance(el, Block):
        return {"type": "block", "center": el.center, "delta": el.delta, "k": el.k, "g": el.g}
    return {"type": "comb", "detunings": list(el.detunings), "k": el.k}


def circuit_to_dict(circuit: Circuit) -> dict:
    return {"unit": UNIT, "elements": [element_to_dict(el) for el in circuit.elements]}


def _number(d: dict, key: str, default: float | None = None) -> float:
    if key not in d:
        if default is None:
            raise InvalidParameterError(f"element is missing '{key}'")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidParameterError(f"'{key}' must be a number, got {v!r}")
    return float(v)


def element_from_dict(d: dict) -> Block | Comb:
    if not isinstance(d, dict):
        raise InvalidParameterError(f"element must be an object, got {d!r}")
    kind = d.get("type")
    if kind == "block":
        return Block(
            k=_number(d, "k"),
            g=_number(d, "g", 0.0),
            delta=_number(d, "delta", 1.0),
            center=_number(d, "center", 0.0),
        )
    if kind == "comb":
        dets = d.get("detunings")
        if not isinstance(dets, list):
            raise InvalidParameterError("comb needs a 'detunings' list")
        return Comb(tuple(_number({"d": x}, "d") for x in dets), _number(d, "k"))
    raise InvalidParameterError(f"unknown element type {kind!r}")


def circuit_from_dict(d: Any) -> Circuit:
    if not isinstance(d, dict):
        raise InvalidParameterError("circuit file must hold a JSON object")
    unit = d.get("unit", UNIT)
    if unit != UNIT:
        raise InvalidParameterError(f"unsupported unit {unit!r}; frequencies must be in units of {UNIT}")
    elements = d.get("elements")
    if not isinstance(elements, list) or not elements:
        raise InvalidParameterError("circuit needs a non-empty 'elements' list")
    return Circuit(tuple(element_from_dict(e) for e in elements))


def load_circuit(path: str | os.PathLike) -> Circuit:
    return circuit_from_dict(read_json(path))


def save_circuit(path: str | os.PathLike, circuit: Circuit) -> Path:
    return write_json(path, circuit_to_dict(circuit))


# spectra and waveforms


def response_csv(response: SpectralResponse, profile: DelayProfile) -> str:
    lines = ["nu,re_S,im_S,phase_unwrapped,T,T_rel"]
    nus = response.grid.values
    for i in range(len(nus)):
        s = response.s[i]
        row = (nus[i], s.real, s.imag, response.phase[i], profile.T[i], profile.T_rel[i])
        lines.append(",".join(fmt(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def write_response_csv(path, response: SpectralResponse, profile: DelayProfile) -> Path:
    return atomic_write(path, response_csv(response, profile))


def waveform_csv(w: Waveform) -> str:
    lines = ["t,re_a,im_a"]
    for t, a in zip(w.times, w.samples):
        lines.append(f"{fmt(t)},{fmt(a.real)},{fmt(a.imag)}")
    return "\n".join(lines) + "\n"


def write_waveform_csv(path, w: Waveform) -> Path:
    return atomic_write(path, waveform_csv(w))


def read_waveform_csv(path) -> Waveform:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] < 2:
        raise InvalidParameterError(f"{path}: need at least two samples")
    t = data[:, 0]
    return Waveform(float(t[0]), float(t[1] - t[0]), data[:, 1] + 1j * data[:, 2])


def metrics_to_dict(m: StorageMetrics) -> dict:
    return m.to_dict()


def optim_result_to_dict(r: OptimResult) -> dict:
    return {
        "mode": r.mode,
        "k": r.k,
        "g": r.g,
        "objective_value": r.objective_value,
        "spread_in_band": r.spread_in_band,
        "n_evaluations": r.n_evaluations,
        "converged": r.converged,
    }


def search_config_from_dict(d: Any, **overrides) -> SearchConfig:
    """Parse {"bounds": {"k": [lo, hi], "g": [lo, hi]}, "starts", "tol", "budget", "seed"}."""
    if not isinstance(d, dict):
        raise InvalidParameterError("search config must be a JSON object")
    kwargs: dict[str, Any] = {}
    bounds = d.get("bounds", {})
    if not isinstance(bounds, dict):
        raise InvalidParameterError("'bounds' must be an object")
    for name in ("k", "g"):
        if name in bounds:
            b = bounds[name]
            if not (isinstance(b, list) and len(b) == 2):
                raise InvalidParameterError(f"bounds.{name} must be [lo, hi]")
            kwargs[f"{name}_bounds"] = (float(b[0]), float(b[1]))
    for key, cast in (("starts", int), ("tol", float), ("budget", int), ("seed", int)):
        if key in d and d[key] is not None:
            kwargs[key] = cast(d[key])
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return SearchConfig(**kwargs)


def search_config_to_dict(c: SearchConfig) -> dict:
    return {
        "bounds": {"k": list(c.k_bounds), "g": list(c.g_bounds)},
        "starts": c.starts,
        "tol": c.tol,
        "budget": c.budget,
        "seed": c.seed,
    }


@dataclass
class RunManifest:
    command: str
    inputs: list[str] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    version: str = ""
    duration_s: float = 0.0

    def add_output(self, path: str | os.PathLike) -> None:
        self.outputs.append(str(path))

    def add_outputs(self, paths: Iterable[str | os.PathLike]) -> None:
        for p in paths:
            self.add_output(p)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "parameters": self.parameters,
            "outputs": self.outputs,
            "version": self.version,
            "duration_s": self.duration_s,
        }

    def write(self, path: str | os.PathLike) -> Path:
        return write_json(path, self.to_dict())
