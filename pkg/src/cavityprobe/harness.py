"""Run harness: YAML config in, reproducible estimates and files out.

A run builds one field state, generates the polarization signals its
requested moments need, reconstructs those moments (attaching oracle values
computed directly from the state), optionally combines them into a squeezing
report, and optionally sweeps one parameter re-running the pipeline per
point. `emit` writes the result as CSV/JSON (and optional figures) with
fully deterministic bytes: floats are printed with 17 significant digits and
wall-clock timings are kept out of the serialized payload.

Config schema (strict: unknown keys are errors):

  name: demo                  # optional label
  seed: 7                     # default 0
  state:
    kind: coherent            # coherent | fock | squeezed | amplitudes
    dim: 64
    alpha: 2.0                # number or [re, im]   (coherent, squeezed)
    n: 3                      # fock level           (fock)
    r: 0.5                    # squeeze magnitude    (squeezed)
    theta: 0.0                # squeeze angle        (squeezed, default 0)
    values: [[1, 0], [0, 1]]  # amplitudes           (amplitudes)
  protocol:
    transition: one_photon    # one_photon | two_photon | both
    entry: excited            # excited | ground
  grid: {t_start: 0.0, t_end: 300.0, points: 12001}
  noise:                      # optional; omit for noise-free signals
    shots_per_point: 10000
    seed: 11                  # default: top-level seed
  transforms:
    - moment: adagger         # adagger | adagger2 | sg1 | sg2
      backend: component_fit  # | direct_quadrature
      tail:                   # optional quadrature tail overrides
        t_max: 300.0
        damping_widths: [...]
        extrapolation_order: 2
        taper_fraction: 0.4
        convergence_tol: 1.0e-3
  squeezing: {n_mean: oracle} # optional; needs adagger and adagger2
  sweep:                      # optional
    parameter: alpha          # alpha | shots_per_point
    values: [1.0, 2.0, 3.0]
  outputs: {signals: true, figures: false}
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import fock, reconstruct
from .dynamics import (
    AtomEntry,
    PolarizationSignal,
    ShotConfig,
    TimeGrid,
    TransitionKind,
    signal_closed_form,
    signal_from_shots,
)
from .errors import CavityProbeError, ConfigError
from .fock import HilbertSpec
from .reconstruct import DEFAULT_CONSTANTS, MomentEstimate, SqueezingReport
from .transforms import Backend, TailPolicy

_MOMENTS = {
    "adagger": (TransitionKind.ONE_PHOTON, AtomEntry.EXCITED),
    "adagger2": (TransitionKind.TWO_PHOTON, AtomEntry.EXCITED),
    "sg1": (TransitionKind.ONE_PHOTON, AtomEntry.GROUND),
    "sg2": (TransitionKind.TWO_PHOTON, AtomEntry.GROUND),
}

_ESTIMATORS = {
    "adagger": reconstruct.estimate_adagger,
    "adagger2": reconstruct.estimate_adagger2,
    "sg1": reconstruct.estimate_sg,
    "sg2": reconstruct.estimate_sg,
}


# ---------------------------------------------------------------------------
# config parsing


def _require_mapping(obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return obj


def _reject_unknown(obj: dict, allowed, path):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key {sorted(unknown)[0]!r}")


def _get(obj: dict, key, path, required=True, default=None):
    if key not in obj:
        if required:
            raise ConfigError(f"{path}: missing required key {key!r}")
        return default
    return obj[key]


def _as_number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(value)


def _as_int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    return value


def _as_complex(value, path):
    if isinstance(value, complex):
        return complex(value)  # re-validation of an already-normalized config
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value), 0.0)
    if isinstance(value, list) and len(value) == 2:
        return complex(_as_number(value[0], path), _as_number(value[1], path))
    raise ConfigError(f"{path}: expected a number or [re, im] pair")


def _parse_state(raw, path="state") -> dict:
    raw = _require_mapping(raw, path)
    kind = _get(raw, "kind", path)
    if kind == "coherent":
        _reject_unknown(raw, {"kind", "dim", "alpha"}, path)
        return {
            "kind": kind,
            "dim": _as_int(_get(raw, "dim", path), f"{path}.dim", minimum=2),
            "alpha": _as_complex(_get(raw, "alpha", path), f"{path}.alpha"),
        }
    if kind == "fock":
        _reject_unknown(raw, {"kind", "dim", "n"}, path)
        return {
            "kind": kind,
            "dim": _as_int(_get(raw, "dim", path), f"{path}.dim", minimum=2),
            "n": _as_int(_get(raw, "n", path), f"{path}.n", minimum=0),
        }
    if kind == "squeezed":
        _reject_unknown(raw, {"kind", "dim", "alpha", "r", "theta"}, path)
        return {
            "kind": kind,
            "dim": _as_int(_get(raw, "dim", path), f"{path}.dim", minimum=2),
            "alpha": _as_complex(raw.get("alpha", 0.0), f"{path}.alpha"),
            "r": _as_number(_get(raw, "r", path), f"{path}.r"),
            "theta": _as_number(raw.get("theta", 0.0), f"{path}.theta"),
        }
    if kind == "amplitudes":
        _reject_unknown(raw, {"kind", "values"}, path)
        values = _get(raw, "values", path)
        if not isinstance(values, list) or len(values) < 2:
            raise ConfigError(f"{path}.values: expected a list of at least 2 amplitudes")
        return {
            "kind": kind,
            "values": [_as_complex(v, f"{path}.values[{i}]") for i, v in enumerate(values)],
        }
    raise ConfigError(f"{path}.kind: unknown state kind {kind!r}")


def _parse_tail(raw, path) -> dict | None:
    if raw is None:
        return None
    raw = _require_mapping(raw, path)
    allowed = {
        "t_max",
        "damping_widths",
        "extrapolation_order",
        "taper_fraction",
        "convergence_tol",
    }
    _reject_unknown(raw, allowed, path)
    out = {}
    if "t_max" in raw:
        out["t_max"] = _as_number(raw["t_max"], f"{path}.t_max")
    if "damping_widths" in raw:
        widths = raw["damping_widths"]
        if not isinstance(widths, list) or not widths:
            raise ConfigError(f"{path}.damping_widths: expected a non-empty list")
        out["damping_widths"] = [
            _as_number(v, f"{path}.damping_widths[{i}]") for i, v in enumerate(widths)
        ]
    if "extrapolation_order" in raw:
        out["extrapolation_order"] = _as_int(
            raw["extrapolation_order"], f"{path}.extrapolation_order", minimum=1
        )
    if "taper_fraction" in raw:
        out["taper_fraction"] = _as_number(raw["taper_fraction"], f"{path}.taper_fraction")
    if "convergence_tol" in raw:
        out["convergence_tol"] = _as_number(raw["convergence_tol"], f"{path}.convergence_tol")
    return out


def parse_config(raw: dict) -> dict:
    """Validate a raw config mapping and fill defaults.

    Returns the normalized config (plain data, fit for serialization).
    Raises ConfigError naming the offending key on any violation.
    """
    raw = _require_mapping(raw, "config")
    top_allowed = {
        "name",
        "seed",
        "state",
        "protocol",
        "grid",
        "noise",
        "transforms",
        "squeezing",
        "sweep",
        "outputs",
    }
    _reject_unknown(raw, top_allowed, "config")

    name = raw.get("name")
    if name is not None and not isinstance(name, str):
        raise ConfigError("name: expected a string")
    seed = _as_int(raw.get("seed", 0), "seed")

    state = _parse_state(_get(raw, "state", "config"))

    proto = _require_mapping(_get(raw, "protocol", "config"), "protocol")
    _reject_unknown(proto, {"transition", "entry"}, "protocol")
    transition = _get(proto, "transition", "protocol")
    if transition not in ("one_photon", "two_photon", "both"):
        raise ConfigError(f"protocol.transition: unknown value {transition!r}")
    entry = _get(proto, "entry", "protocol")
    if entry not in ("excited", "ground"):
        raise ConfigError(f"protocol.entry: unknown value {entry!r}")

    grid = _require_mapping(_get(raw, "grid", "config"), "grid")
    _reject_unknown(grid, {"t_start", "t_end", "points"}, "grid")
    t_start = _as_number(grid.get("t_start", 0.0), "grid.t_start")
    t_end = _as_number(_get(grid, "t_end", "grid"), "grid.t_end")
    points = _as_int(_get(grid, "points", "grid"), "grid.points", minimum=2)
    if t_start < 0:
        raise ConfigError("grid.t_start: must be >= 0")
    if not t_end > t_start:
        raise ConfigError("grid.t_end: must exceed grid.t_start")

    noise = raw.get("noise")
    if noise is not None:
        noise = _require_mapping(noise, "noise")
        _reject_unknown(noise, {"shots_per_point", "seed"}, "noise")
        noise = {
            "shots_per_point": _as_int(
                _get(noise, "shots_per_point", "noise"), "noise.shots_per_point", minimum=1
            ),
            "seed": _as_int(noise.get("seed", seed), "noise.seed"),
        }

    transforms_raw = _get(raw, "transforms", "config")
    if not isinstance(transforms_raw, list) or not transforms_raw:
        raise ConfigError("transforms: expected a non-empty list")
    transforms = []
    for i, entry_raw in enumerate(transforms_raw):
        path = f"transforms[{i}]"
        entry_raw = _require_mapping(entry_raw, path)
        _reject_unknown(entry_raw, {"moment", "backend", "tail"}, path)
        moment = _get(entry_raw, "moment", path)
        if moment not in _MOMENTS:
            raise ConfigError(f"{path}.moment: unknown moment {moment!r}")
        backend = entry_raw.get("backend", "component_fit")
        if backend not in ("component_fit", "direct_quadrature"):
            raise ConfigError(f"{path}.backend: unknown backend {backend!r}")
        transforms.append(
            {
                "moment": moment,
                "backend": backend,
                "tail": _parse_tail(entry_raw.get("tail"), f"{path}.tail"),
            }
        )
    moments = [t["moment"] for t in transforms]
    if len(set(moments)) != len(moments):
        raise ConfigError("transforms: duplicate moment entries")

    # quadrature-backend grids must satisfy the composite-rule shape and the
    # tail window must fit inside the sampled range
    for i, t in enumerate(transforms):
        if t["backend"] != "direct_quadrature":
            continue
        if points < 5 or (points - 1) % 2 != 0:
            raise ConfigError(
                f"grid.points: direct_quadrature needs 4k+1 (or 2k+1) samples "
                f"with at least 5, got {points}"
            )
        tail = t["tail"]
        if tail and "t_max" in tail and tail["t_max"] > t_end * (1.0 + 1e-12):
            raise ConfigError(
                f"transforms[{i}].tail.t_max: {tail['t_max']} exceeds grid.t_end {t_end}"
            )

    # protocol consistency
    for i, t in enumerate(transforms):
        need_kind, need_entry = _MOMENTS[t["moment"]]
        if need_entry.value != entry:
            raise ConfigError(
                f"transforms[{i}].moment: {t['moment']} needs {need_entry.value} entry, "
                f"protocol says {entry}"
            )
        if transition != "both" and need_kind.name.lower() != transition:
            raise ConfigError(
                f"transforms[{i}].moment: {t['moment']} needs transition "
                f"{need_kind.name.lower()}, protocol says {transition}"
            )

    squeezing = raw.get("squeezing")
    if squeezing is not None:
        squeezing = _require_mapping(squeezing, "squeezing")
        _reject_unknown(squeezing, {"n_mean"}, "squeezing")
        n_mean = squeezing.get("n_mean", "oracle")
        if n_mean != "oracle":
            n_mean = _as_number(n_mean, "squeezing.n_mean")
            if n_mean < 0:
                raise ConfigError("squeezing.n_mean: must be >= 0")
        squeezing = {"n_mean": n_mean}
        if not {"adagger", "adagger2"} <= set(moments):
            raise ConfigError("squeezing: needs both adagger and adagger2 transforms")

    sweep = raw.get("sweep")
    if sweep is not None:
        sweep = _require_mapping(sweep, "sweep")
        _reject_unknown(sweep, {"parameter", "values"}, "sweep")
        parameter = _get(sweep, "parameter", "sweep")
        values = _get(sweep, "values", "sweep")
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep.values: expected a non-empty list")
        if parameter == "alpha":
            if state["kind"] not in ("coherent", "squeezed"):
                raise ConfigError("sweep.parameter: alpha sweep needs a coherent or squeezed state")
            values = [_as_number(v, f"sweep.values[{i}]") for i, v in enumerate(values)]
        elif parameter == "shots_per_point":
            if noise is None:
                raise ConfigError("sweep.parameter: shots sweep needs a noise block")
            values = [
                _as_int(v, f"sweep.values[{i}]", minimum=1) for i, v in enumerate(values)
            ]
        else:
            raise ConfigError(f"sweep.parameter: unknown parameter {parameter!r}")
        sweep = {"parameter": parameter, "values": values}

    outputs = raw.get("outputs", {})
    outputs = _require_mapping(outputs, "outputs")
    _reject_unknown(outputs, {"signals", "figures"}, "outputs")
    for key in ("signals", "figures"):
        if key in outputs and not isinstance(outputs[key], bool):
            raise ConfigError(f"outputs.{key}: expected a boolean")
    outputs = {
        "signals": outputs.get("signals", True),
        "figures": outputs.get("figures", False),
    }

    return {
        "name": name,
        "seed": seed,
        "state": state,
        "protocol": {"transition": transition, "entry": entry},
        "grid": {"t_start": t_start, "t_end": t_end, "points": points},
        "noise": noise,
        "transforms": transforms,
        "squeezing": squeezing,
        "sweep": sweep,
        "outputs": outputs,
    }


def load_config(path) -> dict:
    """Read and validate a YAML config file."""
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config is not valid YAML: {e}") from e
    return parse_config(raw)


# ---------------------------------------------------------------------------
# running


@dataclass(frozen=True, eq=False)
class EstimateEntry:
    """One requested moment: either an estimate or a tagged error."""

    moment: str
    estimate: MomentEstimate | None = None
    error: str | None = None
    error_type: str | None = None


@dataclass(frozen=True, eq=False)
class SweepPoint:
    parameter_value: float | int
    entries: list


@dataclass(eq=False)
class RunResult:
    config: dict
    signals: dict = field(default_factory=dict)
    estimates: list = field(default_factory=list)
    squeezing: SqueezingReport | None = None
    squeezing_error: str | None = None
    sweep: list | None = None
    diagnostics: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)


def _build_state(state_cfg: dict):
    kind = state_cfg["kind"]
    if kind == "amplitudes":
        values = state_cfg["values"]
        return fock.state_from_amplitudes(HilbertSpec(len(values)), values)
    space = HilbertSpec(state_cfg["dim"])
    if kind == "coherent":
        return fock.make_coherent(space, state_cfg["alpha"])
    if kind == "fock":
        return fock.make_fock(space, state_cfg["n"])
    return fock.make_squeezed(
        space, alpha=state_cfg["alpha"], r=state_cfg["r"], theta=state_cfg["theta"]
    )


def _needed_transitions(config: dict):
    needed = []
    for t in config["transforms"]:
        kind, _ = _MOMENTS[t["moment"]]
        if kind not in needed:
            needed.append(kind)
    return needed


def _make_signal(state, config: dict, kind: TransitionKind, noise_seed: int | None):
    entry = AtomEntry(config["protocol"]["entry"])
    grid_cfg = config["grid"]
    grid = TimeGrid.linspace(grid_cfg["t_start"], grid_cfg["t_end"], grid_cfg["points"])
    noise = config["noise"]
    if noise is None:
        return signal_closed_form(state, grid, kind, entry)
    seed = noise["seed"] if noise_seed is None else noise_seed
    cfg = ShotConfig(shots_per_point=noise["shots_per_point"], seed=seed)
    return signal_from_shots(state, grid, kind, entry, cfg)


def _tail_policy(tail_cfg: dict | None, grid_end: float) -> TailPolicy | None:
    if tail_cfg is None:
        return None
    t_max = tail_cfg.get("t_max", grid_end)
    widths = tail_cfg.get("damping_widths")
    if widths is None:
        from .transforms import default_damping_widths

        widths = default_damping_widths(t_max)
    kwargs = {}
    for key in ("extrapolation_order", "taper_fraction", "convergence_tol"):
        if key in tail_cfg:
            kwargs[key] = tail_cfg[key]
    return TailPolicy(t_max=t_max, damping_widths=tuple(widths), **kwargs)


def _run_point(config: dict, state, noise_seed: int | None = None) -> tuple[dict, list]:
    """Signals and estimates for one parameter point."""
    signals = {}
    for kind in _needed_transitions(config):
        signals[kind.name.lower()] = _make_signal(state, config, kind, noise_seed)
    entries = []
    for t in config["transforms"]:
        kind, _ = _MOMENTS[t["moment"]]
        signal = signals[kind.name.lower()]
        estimator = _ESTIMATORS[t["moment"]]
        tail = _tail_policy(t["tail"], float(signal.grid.times[-1]))
        try:
            est = estimator(
                signal,
                backend=Backend(t["backend"]),
                tail=tail,
                constants=DEFAULT_CONSTANTS,
                oracle_state=state,
            )
            entries.append(EstimateEntry(moment=t["moment"], estimate=est))
        except CavityProbeError as e:
            entries.append(
                EstimateEntry(moment=t["moment"], error=str(e), error_type=type(e).__name__)
            )
    return signals, entries


def _point_noise_seed(base_seed: int, index: int) -> int:
    # worker-count independent per-point stream
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _sweep_config(config: dict, value) -> dict:
    out = {
        **config,
        "state": {**config["state"]},
        "noise": None if config["noise"] is None else {**config["noise"]},
    }
    if config["sweep"]["parameter"] == "alpha":
        # sweep the magnitude, keep the phase
        alpha = config["state"]["alpha"]
        phase = float(np.angle(alpha)) if abs(alpha) else 0.0
        out["state"]["alpha"] = complex(value) * complex(np.exp(1j * phase))
    else:
        out["noise"]["shots_per_point"] = int(value)
    return out


def _squeezing_from(entries, state, config) -> tuple[SqueezingReport | None, str | None]:
    sq_cfg = config["squeezing"]
    if sq_cfg is None:
        return None, None
    by_moment = {e.moment: e for e in entries}
    for m in ("adagger", "adagger2"):
        e = by_moment.get(m)
        if e is None or e.estimate is None:
            return None, f"squeezing needs the {m} estimate, which failed or is missing"
    if sq_cfg["n_mean"] == "oracle":
        n_mean = fock.expect_moment(state, fock.NUMBER).real
        source = "oracle"
    else:
        n_mean = float(sq_cfg["n_mean"])
        source = "given"
    try:
        report = reconstruct.squeezing_report(
            by_moment["adagger"].estimate, by_moment["adagger2"].estimate, n_mean, source
        )
    except CavityProbeError as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return report, None


def run(config: dict, workers: int = 1) -> RunResult:
    """Execute a validated (or raw) config; see `parse_config` for schema."""
    config = parse_config(config)
    result = RunResult(config=config)
    t0 = time.perf_counter()

    state = _build_state(config["state"])
    result.timings["state"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    signals, entries = _run_point(config, state)
    result.signals = signals
    result.estimates = entries
    result.timings["signals_and_estimates"] = time.perf_counter() - t1

    result.squeezing, result.squeezing_error = _squeezing_from(entries, state, config)
    if result.squeezing_error:
        result.diagnostics.append(result.squeezing_error)

    if config["sweep"] is not None:
        t2 = time.perf_counter()
        values = config["sweep"]["values"]

        def one(idx_value):
            idx, value = idx_value
            cfg = _sweep_config(config, value)
            st = _build_state(cfg["state"])
            seed = None if cfg["noise"] is None else _point_noise_seed(cfg["noise"]["seed"], idx)
            _, point_entries = _run_point(cfg, st, noise_seed=seed)
            return SweepPoint(parameter_value=value, entries=point_entries)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                result.sweep = list(pool.map(one, enumerate(values)))
        else:
            result.sweep = [one(iv) for iv in enumerate(values)]
        result.timings["sweep"] = time.perf_counter() - t2

    if config["noise"] is None:
        result.diagnostics.append("signals are noise-free (closed form)")
    result.timings["total"] = time.perf_counter() - t0
    return result


# ---------------------------------------------------------------------------
# serialization


def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError("refusing to serialize a non-finite number")
    return "%.17g" % x


def _plain(obj):
    """Config values to JSON-compatible plain data (complex -> [re, im])."""
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _json_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [f"{inner}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rows = [f"{inner}{_json_text(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _complex_doc(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _estimate_doc(entry: EstimateEntry) -> dict:
    doc = {"moment": entry.moment}
    if entry.estimate is None:
        doc["error"] = entry.error
        doc["error_type"] = entry.error_type
        return doc
    est = entry.estimate
    doc["value"] = _complex_doc(est.value)
    doc["stat_error"] = est.stat_error
    doc["oracle"] = None if est.oracle_value is None else _complex_doc(est.oracle_value)
    doc["abs_error"] = est.abs_error
    doc["method"] = _plain(est.method)
    doc["aux"] = {k: _complex_doc(v) if isinstance(v, complex) else v for k, v in est.aux.items()}
    return doc


def result_document(result: RunResult) -> dict:
    """Serializable view of a run (timings intentionally excluded)."""
    doc = {
        "name": result.config.get("name"),
        "config": _plain(result.config),
        "estimates": [_estimate_doc(e) for e in result.estimates],
        "squeezing": None,
        "sweep": None,
        "diagnostics": list(result.diagnostics),
    }
    if result.squeezing is not None:
        s = result.squeezing
        doc["squeezing"] = {
            "mean_x": s.mean_x,
            "mean_y": s.mean_y,
            "var_x": s.var_x,
            "var_y": s.var_y,
            "squeezed": s.squeezed,
            "n_mean": s.n_mean,
            "n_mean_source": s.n_mean_source,
        }
    if result.sweep is not None:
        doc["sweep"] = [
            {
                "parameter_value": p.parameter_value,
                "estimates": [_estimate_doc(e) for e in p.entries],
            }
            for p in result.sweep
        ]
    return doc


def emit_signal_csv(signal: PolarizationSignal, path: Path):
    """Signal samples as CSV; zero-length signals produce a header-only file."""
    lines = ["T,re_sigma_plus,im_sigma_plus,stderr_re,stderr_im"]
    n = len(signal.grid)
    err_re = signal.stderr_re if signal.stderr_re is not None else np.zeros(n)
    err_im = signal.stderr_im if signal.stderr_im is not None else np.zeros(n)
    for i in range(n):
        lines.append(
            ",".join(
                _fmt_float(x)
                for x in (
                    signal.grid.times[i],
                    signal.values[i].real,
                    signal.values[i].imag,
                    err_re[i],
                    err_im[i],
                )
            )
        )
    path.write_text("\n".join(lines) + "\n")


def _emit_sweep_csv(result: RunResult, path: Path):
    lines = ["parameter,moment,value_re,value_im,stat_error,oracle_re,oracle_im,abs_error"]
    for point in result.sweep:
        for entry in point.entries:
            if entry.estimate is None:
                lines.append(
                    f"{_fmt_float(float(point.parameter_value))},{entry.moment},,,,,,"
                )
                continue
            est = entry.estimate
            cells = [
                _fmt_float(float(point.parameter_value)),
                entry.moment,
                _fmt_float(est.value.real),
                _fmt_float(est.value.imag),
                _fmt_float(est.stat_error),
                "" if est.oracle_value is None else _fmt_float(est.oracle_value.real),
                "" if est.oracle_value is None else _fmt_float(est.oracle_value.imag),
                "" if est.abs_error is None else _fmt_float(est.abs_error),
            ]
            lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def emit(result: RunResult, out_dir, formats=("csv", "json"), figures: bool | None = None):
    """Write the run to disk; returns the list of paths written.

    formats: any of "csv", "json". figures=None defers to the config's
    outputs.figures flag; matplotlib is only imported when figures are on.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if figures is None:
        figures = result.config["outputs"]["figures"]

    if "json" in formats:
        path = out_dir / "result.json"
        path.write_text(_json_text(result_document(result)) + "\n")
        written.append(path)

    if "csv" in formats:
        if result.config["outputs"]["signals"]:
            for name, signal in result.signals.items():
                path = out_dir / f"signal_{name}.csv"
                emit_signal_csv(signal, path)
                written.append(path)
        if result.sweep is not None:
            path = out_dir / "sweep.csv"
            _emit_sweep_csv(result, path)
            written.append(path)

    if figures:
        from . import plotting

        for name, signal in result.signals.items():
            path = out_dir / f"signal_{name}.png"
            plotting.save_signal_figure(signal, path, title=f"{name} polarization")
            written.append(path)
        if result.sweep is not None:
            path = out_dir / "sweep.png"
            plotting.save_sweep_figure(result.sweep, path)
            written.append(path)

    return written


def read_result(path) -> dict:
    """Parse a result.json written by `emit`."""
    return json.loads(Path(path).read_text())
