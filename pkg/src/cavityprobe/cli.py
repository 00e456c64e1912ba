"""Command line interface.

Subcommands:

  run         execute a YAML config, write CSV/JSON (and figures) to --out
  check       validate a config and print the normalized form
  calibrate   fit the two-photon constant over reference states
  identities  spot-check the kernel closed forms against quadrature

Exit codes: 0 success, 2 invalid config or usage, 3 numeric failure
(non-convergence, leakage, calibration gate), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness, reconstruct, transforms
from .dynamics import AtomEntry, PolarizationSignal, SignalMeta, TimeGrid, TransitionKind
from .errors import CavityProbeError, ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavityprobe",
        description="Reconstruct cavity-field moments from simulated polarization signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config and write results")
    p_run.add_argument("--config", required=True, help="YAML config path")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--workers", type=int, default=1, help="sweep worker threads")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument(
        "--format", choices=("csv", "json", "both"), default="both", help="output formats"
    )
    fig = p_run.add_mutually_exclusive_group()
    fig.add_argument("--figures", dest="figures", action="store_true", default=None)
    fig.add_argument("--no-figures", dest="figures", action="store_false")

    p_check = sub.add_parser("check", help="validate a config")
    p_check.add_argument("--config", required=True, help="YAML config path")

    p_cal = sub.add_parser("calibrate", help="fit the two-photon constant")
    p_cal.add_argument("--dim", type=int, default=128, help="reference-state space size")
    p_cal.add_argument("--out", default=None, help="write the record as JSON")

    p_id = sub.add_parser("identities", help="kernel closed forms vs quadrature")
    p_id.add_argument("--pairs", type=int, default=12, help="random Fresnel (a, b) pairs")
    p_id.add_argument("--seed", type=int, default=0)

    return parser


def _synthetic_signal(times: np.ndarray, values: np.ndarray) -> PolarizationSignal:
    meta = SignalMeta(
        transition=TransitionKind.ONE_PHOTON,
        entry=AtomEntry.EXCITED,
        generator="synthetic",
        dim=2,
        n_support=0,
    )
    return PolarizationSignal(TimeGrid(times), values.astype(np.complex128), meta)


def _cmd_run(args) -> int:
    try:
        config = harness.load_config(args.config)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        config["seed"] = args.seed
        if config["noise"] is not None:
            config["noise"]["seed"] = args.seed
    formats = ("csv", "json") if args.format == "both" else (args.format,)
    try:
        result = harness.run(config, workers=args.workers)
        written = harness.emit(result, args.out, formats=formats, figures=args.figures)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CavityProbeError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    for entry in result.estimates:
        if entry.estimate is None:
            print(f"{entry.moment}: FAILED ({entry.error_type}: {entry.error})")
        else:
            est = entry.estimate
            err = "" if est.abs_error is None else f"  |err|={est.abs_error:.3e}"
            print(f"{entry.moment}: {est.value.real:+.6f}{est.value.imag:+.6f}j{err}")
    if result.squeezing is not None:
        s = result.squeezing
        print(
            f"squeezing: var_x={s.var_x:.6f} var_y={s.var_y:.6f} "
            f"squeezed={'yes' if s.squeezed else 'no'}"
        )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_check(args) -> int:
    try:
        config = harness.load_config(args.config)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    import yaml

    print("config OK")
    print(yaml.safe_dump(harness._plain(config), sort_keys=True).rstrip())
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    from .fock import HilbertSpec

    try:
        states = reconstruct.reference_states(HilbertSpec(args.dim))
        record = reconstruct.k2_calibration_record(states)
    except CavityProbeError as e:
        print(f"calibration failed to run: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"least-squares K2 = {record.k2.real:+.6f}{record.k2.imag:+.6f}j")
    for label, ratio in zip(record.state_labels, record.ratios):
        rel = ratio / record.k2
        print(f"  {label}: ratio/K2 = {rel.real:+.4f}{rel.imag:+.4f}j")
    print(f"dispersion = {record.dispersion:.4f}")
    for name, cand in record.candidates.items():
        scale = abs(record.k2 / cand)
        print(f"  candidate {name} = {cand.real:+.4f}{cand.imag:+.4f}j  |K2/candidate| = {scale:.4f}")
    if args.out:
        doc = {
            "k2": {"re": record.k2.real, "im": record.k2.imag},
            "dispersion": record.dispersion,
            "ratios": [{"re": r.real, "im": r.imag} for r in record.ratios],
            "state_labels": record.state_labels,
            "candidates": {
                k: {"re": v.real, "im": v.imag} for k, v in record.candidates.items()
            },
            "grid_points": record.grid_points,
            "grid_end": record.grid_end,
        }
        try:
            from pathlib import Path

            Path(args.out).write_text(harness._json_text(doc) + "\n")
            print(f"wrote {args.out}")
        except OSError as e:
            print(f"I/O error: {e}", file=sys.stderr)
            return EXIT_IO
    if record.dispersion > 0.05:
        print("dispersion gate (5%) FAILED: no single constant fits the reference set")
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_identities(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst_rel = 0.0
    failures = 0
    print("Fresnel kernel: quadrature vs closed form")
    for _ in range(args.pairs):
        a = float(rng.uniform(1.0, 30.0))
        b = float(rng.uniform(0.1, 10.0))
        t_max = transforms.FRESNEL_WINDOW_FACTOR * a
        step = transforms.suggested_step(transforms.kernel_omega_max(transforms.FresnelKernel(a), t_max, b))
        n = transforms.quadrature_point_count(t_max, step)
        T = np.linspace(0.0, t_max, n)
        sig = _synthetic_signal(T, np.sin(b * T))
        spec = transforms.TransformSpec(
            transforms.FresnelKernel(a), transforms.Backend.DIRECT_QUADRATURE
        )
        try:
            got = transforms.transform_signal(sig, spec).real
        except CavityProbeError as e:
            print(f"  a={a:7.3f} b={b:6.3f}  FAIL ({e})")
            failures += 1
            continue
        want = transforms.fresnel_closed_form(a, b)
        rel = abs(got - want) / max(abs(want), 1e-12)
        worst_rel = max(worst_rel, rel)
        status = "ok" if rel <= 1e-4 else "FAIL"
        if status == "FAIL":
            failures += 1
        print(f"  a={a:7.3f} b={b:6.3f}  rel={rel:.2e}  {status}")
    print(f"worst relative deviation: {worst_rel:.2e}")

    print("Dirichlet kernel: quadrature vs closed form")
    t_max = transforms.DIRICHLET_TIME_CUTOFF
    cases = [(2.0, 1.0), (1.0, 2.0), (1.5, 1.5), (3.0, 0.5), (0.7, 0.3), (5.0, 4.0)]
    omega = max(a + b for a, b in cases)
    # half the suggested step: the 1e-4 gate needs margin on the fastest case
    n = transforms.quadrature_point_count(t_max, 0.5 * transforms.suggested_step(omega))
    T = np.linspace(0.0, t_max, n)
    for a, b in cases:
        sig = _synthetic_signal(T, np.sin(a * T) * np.cos(b * T))
        spec = transforms.TransformSpec(
            transforms.DirichletKernel(), transforms.Backend.DIRECT_QUADRATURE
        )
        try:
            got = transforms.transform_signal(sig, spec).real
        except CavityProbeError as e:
            print(f"  a={a:4.2f} b={b:4.2f}  FAIL ({e})")
            failures += 1
            continue
        want = transforms.dirichlet_closed_form(a, b)
        dev = abs(got - want)
        status = "ok" if dev <= 1e-4 else "FAIL"
        if status == "FAIL":
            failures += 1
        print(f"  a={a:4.2f} b={b:4.2f}  abs={dev:.2e}  {status}")

    if failures:
        print(f"{failures} identity check(s) failed")
        return EXIT_NUMERIC
    print("all identity checks passed")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, matching our config exit code
        return int(e.code) if e.code else EXIT_OK
    handlers = {
        "run": _cmd_run,
        "check": _cmd_check,
        "calibrate": _cmd_calibrate,
        "identities": _cmd_identities,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
