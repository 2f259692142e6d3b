"""Run a validated :class:`ExperimentConfig` and write its artifacts.

Result files (CSV/JSON) depend only on the resolved config, so reruns are
byte-identical. Wall-clock timestamps live only in ``manifest.json``.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, bounds, experiments, relational
from .config import ExperimentConfig
from .errors import ChronodecError, ConfigError, NumericalError
from .evolve import evolve_master
from .experiments import Table


class RunError(NumericalError):
    """A computation failed; the message carries the experiment context."""


@dataclass
class RunManifest:
    config_echo: dict
    version: str
    started: str
    finished: str
    outputs: list  # [{"path": str, "sha256": str}]

    def to_dict(self) -> dict:
        return {
            "config_echo": self.config_echo,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "outputs": self.outputs,
        }

    def verify(self) -> bool:
        return all(
            Path(o["path"]).is_file() and sha256_file(o["path"]) == o["sha256"] for o in self.outputs
        )


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return format(float(x), ".17g")


def table_to_csv(table: Table) -> str:
    buf = io.StringIO()
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(format_number(v) for v in row) + "\n")
    return buf.getvalue()


def _plain(x):
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def to_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- dispatch ----------------------------------------------------------------------


def _bounds_value(params: dict, constants):
    op = params["op"]
    p = params
    if op == "dilated_uncertainty":
        q = bounds.ClockDilationQuery(p["t_c"], p["delta_t_c"], p["r"], p["r_s"], p["delta_r_s"])
        return bounds.dilated_uncertainty(q)
    if op == "min_time_uncertainty":
        return bounds.min_time_uncertainty(p["t"], constants)
    if op == "decay_factor":
        return bounds.decay_factor(p["omega"], p["T"], constants)
    if op in ("momentum_discriminator", "preparation_uncertainty"):
        from .config import build_superposition

        g = build_superposition(p)
        fn = getattr(bounds, op)
        return fn(g, constants.hbar)
    if op == "distinguishability_bound":
        return bounds.distinguishability_bound(p["tau_D"], p["T"], constants, p["baseline"])
    if op == "event_time":
        return bounds.event_time(p["tau_D"], p["L"], constants)
    if op == "event_condition_satisfied":
        return bounds.event_condition_satisfied(p["decayed_discriminator"], p["prep_uncertainty"])
    raise AssertionError(op)


def evaluate_bound(params: dict, constants) -> dict:
    """``{inputs, value, units}`` for one bounds operation."""
    op = params["op"]
    value = _bounds_value(params, constants)
    unit = bounds.UNITS[op]
    if unit == "time":
        unit = constants.time_unit if constants.units == "SI" else "time (natural)"
    return {"op": op, "inputs": dict(params), "value": value, "units": unit}


def _run_relational(cfg: ExperimentConfig) -> Table:
    p, obj = cfg.params, cfg.objects
    lc = relational.ladder_clock(p["clock_dim"], p["tick"], p["spread"])
    hs = relational.qubit_hamiltonian(p["system_gap"], p["system_axis"])
    grid = np.linspace(0.0, lc.period, p["grid_points"])
    setup = relational.RelationalSetup(hs, lc.hamiltonian, obj["state"], lc.state, lc.pointer, grid)
    o_win = obj["o_win"]
    proj = relational.window_projector(obj["observable"], o_win)
    rows = []
    for T0 in obj["T0_list"]:
        t_win = relational.OutcomeWindow(T0, 0.5 * p["tick"])
        try:
            cond = relational.conditional_probability(setup, o_win, t_win, observable=obj["observable"])
        except ChronodecError as exc:
            raise RunError(f"relational at T0={T0!r}: {exc}") from exc
        ordinary = relational.ordinary_probability(hs, obj["state"], proj, T0)
        rows.append([T0, cond, ordinary, cond - ordinary])
    return Table(["T0", "conditional", "ordinary", "difference"], rows)


def _run_master(cfg: ExperimentConfig) -> Table:
    spec, state = cfg.objects["spec"], cfg.objects["state"]
    times = np.linspace(spec.t_start, spec.t_end, cfg.params["n_samples"])
    traj = evolve_master(spec, state, times)
    return Table(traj.columns(), traj.rows(), {"n_steps": traj.n_steps})


def compute(cfg: ExperimentConfig):
    """Compute the result of a config in memory: a Table, or a dict for bounds_eval."""
    kind = cfg.kind
    try:
        if kind == "bounds_eval":
            return evaluate_bound(cfg.params, cfg.objects["constants"])
        if kind == "spin_bath":
            return experiments.run_spin_bath(cfg.objects["config"])
        if kind == "reversal":
            return experiments.run_reversal(cfg.objects["config"])
        if kind == "event_scan":
            return experiments.run_event_scan(cfg.objects["config"])
        if kind == "relational":
            return _run_relational(cfg)
        if kind == "master_trajectory":
            return _run_master(cfg)
    except RunError:
        raise
    except ChronodecError as exc:
        raise RunError(f"{kind}: {exc}") from exc
    raise AssertionError(kind)


def _svg(table: Table, title: str, logy: bool) -> bytes:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "chronodec", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        x = table.column(table.columns[0])
        for name in table.columns[1:]:
            y = table.column(name).astype(float)
            ax.plot(x, np.abs(y) if logy else y, label=name)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(table.columns[0])
        ax.set_title(title)
        ax.legend()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def resolve_output_dir(cfg: ExperimentConfig, override: str | None = None) -> Path:
    """Flag beats ``CHRONODEC_OUT`` beats the config's ``output.dir``."""
    if override:
        return Path(override)
    env = os.environ.get("CHRONODEC_OUT")
    return Path(env) if env else Path(cfg.output["dir"])


def check_output_dir(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("E_OUTPUT", f"cannot create output dir {str(out)!r}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError("E_OUTPUT", f"output dir {str(out)!r} is not writable")


def run(cfg: ExperimentConfig, out_dir: str | None = None, formats=None) -> RunManifest:
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    out = resolve_output_dir(cfg, out_dir)
    formats = list(formats or cfg.output["formats"])
    check_output_dir(out)
    result = compute(cfg)

    echo = cfg.echo()
    files: dict[str, bytes] = {}
    stem = cfg.kind
    if isinstance(result, dict):
        if "csv" in formats:
            files[f"{stem}.csv"] = (
                f"op,value,units\n{result['op']},{format_number(result['value'])},{result['units']}\n"
            ).encode()
        if "json" in formats:
            files[f"{stem}.json"] = to_json({**result, "config_echo": echo, "version": __version__}).encode()
    else:
        if "csv" in formats:
            files[f"{stem}.csv"] = table_to_csv(result).encode()
        if "json" in formats:
            doc = {
                "kind": cfg.kind,
                "columns": result.columns,
                "rows": result.rows,
                "scalars": result.scalars,
                "config_echo": echo,
                "version": __version__,
            }
            files[f"{stem}.json"] = to_json(doc).encode()
        if "svg" in formats:
            files[f"{stem}.svg"] = _svg(result, stem, cfg.output["svg_logy"])

    outputs = []
    for name, data in files.items():
        path = out / name
        atomic_write(path, data)
        outputs.append({"path": str(path), "sha256": hashlib.sha256(data).hexdigest()})
    manifest = RunManifest(
        echo, __version__, started, _dt.datetime.now(_dt.timezone.utc).isoformat(), outputs
    )
    atomic_write(out / "manifest.json", to_json(manifest.to_dict()).encode())
    return manifest
