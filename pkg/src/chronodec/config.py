"""Declarative experiment configuration (TOML).

A config file has four top-level keys::

    kind = "spin_bath"          # experiment to run
    seed = 0                    # reserved; every experiment is deterministic

    [params]                    # kind-specific, validated against SCHEMAS
    n_spins = 2
    couplings = [0.5, 1.0]
    t_max = 10

    [output]
    dir = "results"
    formats = ["csv", "json"]

Validation is complete before anything is computed: unknown keys, missing
keys and type mismatches raise :class:`~chronodec.errors.ConfigError` with a
distinct ``code``. Domain objects (clocks, Hamiltonians, states) are built
during validation so that value errors also surface up front.
"""

from __future__ import annotations

import copy
import difflib
import math
import re
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import qalg
from .bounds import GaussianSuperposition, PhysicalConstants
from .clock import ClockModel
from .errors import ChronodecError, ConfigError
from .evolve import StepControl
from .qalg import DensityMatrix, HermitianOperator

KINDS = ("spin_bath", "reversal", "event_scan", "relational", "bounds_eval", "master_trajectory")
FORMATS = ("csv", "json", "svg")


class _Required:
    def __repr__(self):
        return "REQUIRED"


REQUIRED = _Required()


@dataclass(frozen=True)
class Field:
    type: str  # int | float | str | bool | floats | matrix | table | scan
    default: Any = REQUIRED
    choices: tuple | None = None
    schema: dict | None = None  # for fixed-shape tables


def F(default=REQUIRED, **kw):
    return Field("float", default, **kw)


CLOCK = {
    "ideal": {},
    "gaussian": {"b0": F(0.0), "rate": F()},
    "optimal": {"t_planck": F()},
}
CONSTANTS = {
    "natural": {"t_planck": F(1.0)},
    "SI": {},
}
HAMILTONIAN = {
    "qubit": {"gap": F(2.0), "axis": Field("str", "z", choices=("x", "y", "z"))},
    "diagonal": {"energies": Field("floats")},
    "matrix": {"real": Field("matrix"), "imag": Field("matrix", None)},
}
OBSERVABLE = {
    "coherence": {"j": Field("int", 0), "k": Field("int", 1)},
    "pauli": {"axis": Field("str", "x", choices=("x", "y", "z"))},
    "matrix": {"real": Field("matrix"), "imag": Field("matrix", None)},
}
STATE = {"amplitudes": Field("floats"), "phases": Field("floats", None)}
OUTPUT = {
    "dir": Field("str", "results"),
    "formats": Field("strs", ["csv", "json"]),
    "svg_logy": Field("bool", False),
}

# variant tables: (selector key, variants, default table)
VARIANTS = {
    "clock": ("kind", CLOCK, {"kind": "ideal"}),
    "constants": ("units", CONSTANTS, {"units": "natural"}),
    "hamiltonian": ("preset", HAMILTONIAN, {"preset": "qubit"}),
    "observable": ("preset", OBSERVABLE, {"preset": "coherence"}),
}

STEP = {"rel_tol": F(1e-10), "abs_tol": F(1e-12), "initial_step": F(1e-3)}

_GAUSS = {
    "a_re": F(math.sqrt(0.5)),
    "a_im": F(0.0),
    "b_re": F(0.0),
    "b_im": F(math.sqrt(0.5)),
    "L": F(),
    "sigma": F(),
    "delta_L": F(0.0),
    "delta_sigma": F(0.0),
}

BOUND_ARGS = {
    "dilated_uncertainty": {"t_c": F(), "delta_t_c": F(), "r": F(), "r_s": F(), "delta_r_s": F()},
    "min_time_uncertainty": {"t": F()},
    "decay_factor": {"omega": F(), "T": F()},
    "momentum_discriminator": _GAUSS,
    "preparation_uncertainty": _GAUSS,
    "distinguishability_bound": {"tau_D": F(), "T": F(), "baseline": F(1.0)},
    "event_time": {"tau_D": F(), "L": F()},
    "event_condition_satisfied": {"decayed_discriminator": F(), "prep_uncertainty": F()},
}
BOUND_COMMON = {
    "units": Field("str", "natural", choices=("natural", "SI")),
    "t_planck": F(1.0),
}

SCHEMAS = {
    "spin_bath": {
        "n_spins": Field("int"),
        "couplings": Field("floats"),
        "system_gap": F(1.0),
        "clock": Field("clock"),
        "t_max": F(),
        "n_samples": Field("int", 512),
        "noise_floor": F(1e-3),
    },
    "reversal": {
        "hamiltonian": Field("hamiltonian"),
        "state": Field("table", {"amplitudes": [1.0, 1.0]}, schema=STATE),
        "observable": Field("observable"),
        "clock": Field("clock"),
        "T_list": Field("scan"),
        "tau_D": F(1.0),
        "constants": Field("constants"),
        "method": Field("str", "master", choices=("master", "analytic")),
        **STEP,
    },
    "event_scan": {
        **_GAUSS,
        "tau_D": F(),
        "constants": Field("constants"),
        "T_scan": Field("scan"),
    },
    "relational": {
        "system_gap": F(2.0),
        "system_axis": Field("str", "x", choices=("x", "y", "z")),
        "state": Field("table", {"amplitudes": [1.0, 0.0]}, schema=STATE),
        "observable": Field("observable", {"preset": "pauli", "axis": "z"}),
        "o_center": F(1.0),
        "o_half_width": F(0.5),
        "clock_dim": Field("int", 16),
        "tick": F(0.02),
        "spread": F(2.0),
        "grid_points": Field("int", 4001),
        "T0_list": Field("scan"),
    },
    "bounds_eval": None,  # op-dependent, see _validate_bounds
    "master_trajectory": {
        "hamiltonian": Field("hamiltonian"),
        "state": Field("table", {"amplitudes": [1.0, 1.0]}, schema=STATE),
        "clock": Field("clock"),
        "t_start": F(0.0),
        "t_end": F(),
        "n_samples": Field("int", 101),
        **STEP,
    },
}

SCAN = {
    "start": F(),
    "stop": F(),
    "num": Field("int"),
    "spacing": Field("str", "linear", choices=("linear", "log")),
}


@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    output: dict
    seed: int = 0
    objects: dict = field(default_factory=dict, repr=False, compare=False)

    def echo(self) -> dict:
        """Resolved config as plain data (defaults applied)."""
        return {"kind": self.kind, "seed": self.seed, "params": self.params, "output": self.output}


# -- validation helpers --------------------------------------------------------


def _path(prefix, key):
    return f"{prefix}.{key}" if prefix else key


def _unknown(key, allowed, prefix):
    hint = difflib.get_close_matches(key, list(allowed), n=1)
    msg = f"unknown key {_path(prefix, key)!r}"
    if hint:
        msg += f"; did you mean {hint[0]!r}?"
    raise ConfigError("E_UNKNOWN_KEY", msg, key=_path(prefix, key))


def _type_error(path, expected, value):
    raise ConfigError(
        "E_TYPE", f"{path!r} must be {expected}, got {type(value).__name__} {value!r}", key=path
    )


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(path: str, f: Field, value):
    t = f.type
    if t == "float":
        if not _is_num(value):
            _type_error(path, "a number", value)
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError("E_VALUE", f"{path!r} must be finite", key=path)
        return value
    if t == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            _type_error(path, "an integer", value)
        return value
    if t == "bool":
        if not isinstance(value, bool):
            _type_error(path, "a boolean", value)
        return value
    if t == "str":
        if not isinstance(value, str):
            _type_error(path, "a string", value)
        if f.choices and value not in f.choices:
            raise ConfigError("E_VALUE", f"{path!r} must be one of {list(f.choices)}, got {value!r}", key=path)
        return value
    if t == "strs":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            _type_error(path, "an array of strings", value)
        return list(value)
    if t == "floats":
        if not isinstance(value, list) or not all(_is_num(v) for v in value):
            _type_error(path, "an array of numbers", value)
        return [float(v) for v in value]
    if t == "matrix":
        if (
            not isinstance(value, list)
            or not value
            or not all(isinstance(r, list) and all(_is_num(v) for v in r) for r in value)
            or len({len(r) for r in value}) != 1
        ):
            _type_error(path, "a rectangular array of number arrays", value)
        return [[float(v) for v in r] for r in value]
    if t == "scan":
        if isinstance(value, list):
            return _coerce(path, Field("floats"), value)
        if isinstance(value, dict):
            return _validate_table(path, SCAN, value)
        _type_error(path, "an array of numbers or a {start, stop, num, spacing} table", value)
    if t == "table":
        if not isinstance(value, dict):
            _type_error(path, "a table", value)
        return _validate_table(path, f.schema, value)
    if t in VARIANTS:
        if not isinstance(value, dict):
            _type_error(path, "a table", value)
        selector, variants, _ = VARIANTS[t]
        if selector not in value:
            raise ConfigError("E_MISSING_KEY", f"missing required key {_path(path, selector)!r}", key=_path(path, selector))
        sel = value[selector]
        if sel not in variants:
            raise ConfigError(
                "E_VALUE", f"{_path(path, selector)!r} must be one of {list(variants)}, got {sel!r}", key=path
            )
        rest = {k: v for k, v in value.items() if k != selector}
        return {selector: sel, **_validate_table(path, variants[sel], rest)}
    raise AssertionError(t)


def _validate_table(prefix: str, schema: dict, data: dict) -> dict:
    for key in data:
        if key not in schema:
            _unknown(key, schema, prefix)
    out = {}
    for key, f in schema.items():
        path = _path(prefix, key)
        if key in data:
            out[key] = _coerce(path, f, data[key])
        elif f.default is REQUIRED and f.type not in VARIANTS:
            raise ConfigError("E_MISSING_KEY", f"missing required key {path!r}", key=path)
        else:
            default = f.default
            if f.type in VARIANTS:
                default = VARIANTS[f.type][2] if default is REQUIRED else default
                out[key] = _coerce(path, f, copy.deepcopy(default))
            elif f.type == "table" and default is not None:
                out[key] = _coerce(path, f, copy.deepcopy(default))
            else:
                out[key] = copy.deepcopy(default)
    return out


def _validate_bounds(data: dict) -> dict:
    if "op" not in data:
        raise ConfigError("E_MISSING_KEY", "missing required key 'params.op'", key="params.op")
    op = data["op"]
    if op not in BOUND_ARGS:
        hint = difflib.get_close_matches(str(op), list(BOUND_ARGS), n=1)
        msg = f"unknown bounds op {op!r}" + (f"; did you mean {hint[0]!r}?" if hint else "")
        raise ConfigError("E_VALUE", msg, key="params.op")
    rest = {k: v for k, v in data.items() if k != "op"}
    out = {"op": op, **_validate_table("params", {**BOUND_COMMON, **BOUND_ARGS[op]}, rest)}
    if out["units"] == "SI":
        if "t_planck" in rest:
            raise ConfigError("E_VALUE", "t_planck is fixed by CODATA in SI units", key="params.t_planck")
        del out["t_planck"]
    return out


# -- object builders -----------------------------------------------------------


def build_clock(d: dict) -> ClockModel:
    kind = d["kind"]
    if kind == "ideal":
        return ClockModel.ideal()
    if kind == "gaussian":
        return ClockModel.gaussian(d["b0"], d["rate"])
    return ClockModel.optimal(d["t_planck"])


def build_constants(d: dict) -> PhysicalConstants:
    if d["units"] == "SI":
        return PhysicalConstants.si()
    return PhysicalConstants.natural(d.get("t_planck", 1.0))


def _complex_matrix(d: dict) -> np.ndarray:
    re = np.array(d["real"], dtype=float)
    im = np.zeros_like(re) if d.get("imag") is None else np.array(d["imag"], dtype=float)
    if re.shape != im.shape:
        raise ConfigError("E_VALUE", "real and imag parts have different shapes")
    return re + 1j * im


def build_hamiltonian(d: dict) -> HermitianOperator:
    preset = d["preset"]
    if preset == "qubit":
        from .relational import qubit_hamiltonian

        return qubit_hamiltonian(d["gap"], d["axis"])
    if preset == "diagonal":
        return HermitianOperator(np.diag(d["energies"]).astype(complex), "energy")
    return HermitianOperator(_complex_matrix(d), "energy")


def build_state(d: dict) -> DensityMatrix:
    amp = np.array(d["amplitudes"], dtype=float)
    ph = np.zeros_like(amp) if d.get("phases") is None else np.array(d["phases"], dtype=float)
    if amp.shape != ph.shape:
        raise ConfigError("E_VALUE", "amplitudes and phases differ in length")
    return DensityMatrix.from_pure(amp * np.exp(1j * ph))


def build_observable(d: dict, h: HermitianOperator | None = None) -> HermitianOperator:
    preset = d["preset"]
    if preset == "pauli":
        return HermitianOperator({"x": qalg.SIGMA_X, "y": qalg.SIGMA_Y, "z": qalg.SIGMA_Z}[d["axis"]])
    if preset == "matrix":
        return HermitianOperator(_complex_matrix(d))
    spectrum = qalg.eigendecompose(h)
    j, k = d["j"], d["k"]
    if not (0 <= j < h.dim and 0 <= k < h.dim and j != k):
        raise ConfigError("E_VALUE", f"coherence indices j={j}, k={k} invalid for dimension {h.dim}")
    v = spectrum.eigenvectors
    op = np.outer(v[:, j], v[:, k].conj())
    return HermitianOperator(op + op.conj().T)


def build_scan(v) -> tuple:
    if isinstance(v, list):
        return tuple(v)
    if v["spacing"] == "log":
        if v["start"] <= 0 or v["stop"] <= 0:
            raise ConfigError("E_VALUE", "log scan needs positive start and stop")
        return tuple(np.geomspace(v["start"], v["stop"], v["num"]).tolist())
    return tuple(np.linspace(v["start"], v["stop"], v["num"]).tolist())


def build_step(p: dict) -> StepControl:
    return StepControl(initial_step=p["initial_step"], rel_tol=p["rel_tol"], abs_tol=p["abs_tol"])


def build_superposition(p: dict) -> GaussianSuperposition:
    return GaussianSuperposition(
        complex(p["a_re"], p["a_im"]),
        complex(p["b_re"], p["b_im"]),
        p["L"],
        p["sigma"],
        p["delta_L"],
        p["delta_sigma"],
    )


def build_objects(kind: str, p: dict) -> dict:
    """Construct the domain objects a run needs; raises on invalid values."""
    from . import experiments as ex

    if kind == "spin_bath":
        return {
            "config": ex.SpinBathConfig(
                p["n_spins"], tuple(p["couplings"]), p["system_gap"], build_clock(p["clock"]),
                p["t_max"], p["n_samples"], p["noise_floor"],
            )
        }
    if kind == "reversal":
        h = build_hamiltonian(p["hamiltonian"])
        return {
            "config": ex.ReversalConfig(
                h, build_state(p["state"]), build_observable(p["observable"], h), build_clock(p["clock"]),
                build_scan(p["T_list"]), p["tau_D"], build_constants(p["constants"]), p["method"], build_step(p),
            )
        }
    if kind == "event_scan":
        return {
            "config": ex.EventConfig(
                build_superposition(p), p["tau_D"], build_constants(p["constants"]), build_scan(p["T_scan"])
            )
        }
    if kind == "relational":
        from .relational import OutcomeWindow

        state = build_state(p["state"])
        if state.dim != 2:
            raise ConfigError("E_VALUE", "relational system is a qubit; state needs 2 amplitudes")
        if p["clock_dim"] < 2 or p["grid_points"] < 3:
            raise ConfigError("E_VALUE", "clock_dim must be >= 2 and grid_points >= 3")
        return {
            "state": state,
            "observable": build_observable(p["observable"], build_hamiltonian({"preset": "qubit", "gap": p["system_gap"], "axis": p["system_axis"]})),
            "o_win": OutcomeWindow(p["o_center"], p["o_half_width"]),
            "T0_list": build_scan(p["T0_list"]),
        }
    if kind == "bounds_eval":
        return {"constants": build_constants(p)}
    if kind == "master_trajectory":
        from .evolve import EvolutionSpec

        h = build_hamiltonian(p["hamiltonian"])
        state = build_state(p["state"])
        if state.dim != h.dim:
            raise ConfigError("E_VALUE", "state and hamiltonian dimensions differ")
        if p["n_samples"] < 2:
            raise ConfigError("E_VALUE", "n_samples must be >= 2")
        return {
            "spec": EvolutionSpec(h, build_clock(p["clock"]), p["t_start"], p["t_end"], build_step(p)),
            "state": state,
        }
    raise AssertionError(kind)


# -- entry points --------------------------------------------------------------

_LOC = re.compile(r"line (\d+), column (\d+)")


def parse_config(text: str) -> ExperimentConfig:
    if not text.strip():
        raise ConfigError("E_SYNTAX", "empty configuration", line=1, column=1)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        if line is None:
            m = _LOC.search(str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (1, 1)
        msg = getattr(exc, "msg", str(exc))
        raise ConfigError("E_SYNTAX", msg, line=line, column=col) from None

    top = {"kind": None, "seed": None, "params": None, "output": None}
    for key in raw:
        if key not in top:
            _unknown(key, top, "")
    if "kind" not in raw:
        raise ConfigError("E_MISSING_KEY", "missing required key 'kind'", key="kind")
    kind = raw["kind"]
    if not isinstance(kind, str):
        _type_error("kind", "a string", kind)
    if kind not in KINDS:
        hint = difflib.get_close_matches(kind, KINDS, n=1)
        raise ConfigError(
            "E_VALUE", f"unknown kind {kind!r}" + (f"; did you mean {hint[0]!r}?" if hint else ""), key="kind"
        )
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        _type_error("seed", "a non-negative integer", seed)
    params = raw.get("params", {})
    if not isinstance(params, dict):
        _type_error("params", "a table", params)
    params = _validate_bounds(params) if kind == "bounds_eval" else _validate_table("params", SCHEMAS[kind], params)
    output = raw.get("output", {})
    if not isinstance(output, dict):
        _type_error("output", "a table", output)
    output = _validate_table("output", OUTPUT, output)
    bad = [f for f in output["formats"] if f not in FORMATS]
    if bad:
        raise ConfigError("E_VALUE", f"unsupported output formats {bad}; choose from {list(FORMATS)}", key="output.formats")

    try:
        objects = build_objects(kind, params)
    except ConfigError:
        raise
    except ChronodecError as exc:
        raise ConfigError("E_VALUE", str(exc)) from exc
    return ExperimentConfig(kind, params, output, seed, objects)
