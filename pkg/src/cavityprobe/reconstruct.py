"""Field-moment reconstruction from polarization signals.

Each estimator runs one integral transform on a signal and divides by the
method's calibration constant:

- <a^dag>  : excited entry, one photon, Fresnel kernel a = 4 pi,
             constant K1 = -i sqrt(2) pi^2
- <a^dag 2>: excited entry, two photons, Fresnel kernel a = 8 pi,
             constant K2 (see below)
- <(V^dag)^k>: ground entry, k-photon transition, Dirichlet kernel,
             constant KP = i pi / 2

K1 and KP follow from the kernel closed forms in the large photon number
limit. For the two-photon chain, composing the same steps gives
K2 = -4i pi^2 (`K2_COMPOSED`, the default); the alternative value
-8i pi^4 is retained as `K2_PRINTED` for comparison, and `calibrate_k2`
fits the constant empirically over reference states and reports both
candidates next to the fit.

The constants are exact only in the large-n limit. The residual per-term
ratio (derived from the Fresnel closed form at the difference sideband)

  one photon:  cos(pi d) - sqrt((n+2)/(n+1)) sin(pi d),
               d(n) = 2n + 3 - 2 sqrt((n+1)(n+2))
  two photons: cos(2 pi g) - sqrt((n+3)(n+4)/((n+1)(n+2))) sin(2 pi g),
               g(n) = 2 (m - sqrt(m^2 - 1)), m = n^2 + 5n + 5

tends to 1 from below as n grows, so estimates improve with photon number;
`systematic_ratio` exposes it for error budgeting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fock
from .dynamics import (
    AtomEntry,
    PolarizationSignal,
    TimeGrid,
    TransitionKind,
    signal_closed_form,
)
from .errors import CalibrationError, ProvenanceError
from .fock import FockVector, HilbertSpec, MomentKind, expect_moment
from .transforms import (
    Backend,
    DirichletKernel,
    FresnelKernel,
    TransformSpec,
    protocol_frequencies,
    transform_report,
)

K1 = -1j * math.sqrt(2.0) * math.pi**2
KP = 0.5j * math.pi
K2_COMPOSED = -4j * math.pi**2
K2_PRINTED = -8j * math.pi**4

FRESNEL_A_ONE = 4.0 * math.pi
FRESNEL_A_TWO = 8.0 * math.pi


@dataclass(frozen=True)
class CalibrationConstants:
    """Division constants used by the estimators.

    `provenance` holds the fit record when k2 came out of `calibrate_k2`;
    it stays None for the analytic defaults.
    """

    k1: complex = K1
    k2: complex = K2_COMPOSED
    kp: complex = KP
    note: str = "analytic composition"
    provenance: "CalibrationRecord | None" = None


DEFAULT_CONSTANTS = CalibrationConstants()


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """One reconstructed moment with provenance and (optional) oracle gap."""

    kind: MomentKind
    value: complex
    stat_error: float
    method: dict
    oracle_value: complex | None = None
    abs_error: float | None = None
    aux: dict = field(default_factory=dict)


def systematic_ratio(n, kind: TransitionKind):
    """Per-term estimate/truth ratio of the Fresnel reconstruction at index n.

    Approaches 1 from below as n grows; at n = 0 it is 0.13 (one photon)
    and -2.04 (two photons, a sign flip).
    """
    n = np.asarray(n, dtype=np.float64)
    if kind is TransitionKind.ONE_PHOTON:
        d = 2.0 * n + 3.0 - 2.0 * np.sqrt((n + 1.0) * (n + 2.0))
        out = np.cos(np.pi * d) - np.sqrt((n + 2.0) / (n + 1.0)) * np.sin(np.pi * d)
    else:
        m = n * n + 5.0 * n + 5.0
        g = 2.0 * (m - np.sqrt(m * m - 1.0))
        out = np.cos(2.0 * np.pi * g) - np.sqrt(
            (n + 3.0) * (n + 4.0) / ((n + 1.0) * (n + 2.0))
        ) * np.sin(2.0 * np.pi * g)
    return out if out.ndim else float(out)


def _check_provenance(signal: PolarizationSignal, kind: TransitionKind, entry: AtomEntry):
    if signal.meta.transition is not kind:
        raise ProvenanceError(
            f"signal was generated for {signal.meta.transition.name}, "
            f"estimator needs {kind.name}"
        )
    if signal.meta.entry is not entry:
        raise ProvenanceError(
            f"signal was generated for {signal.meta.entry.name} entry, "
            f"estimator needs {entry.name}"
        )


def _dictionary_for(signal: PolarizationSignal) -> np.ndarray:
    meta = signal.meta
    order = meta.transition.order
    n_max = min(meta.n_support + 2, meta.dim - 1 - order)
    n_max = max(n_max, 0)
    return protocol_frequencies(meta.transition, meta.entry, n_max)


def _run(signal, spec: TransformSpec):
    freqs = _dictionary_for(signal) if spec.backend is Backend.COMPONENT_FIT else None
    report = transform_report(signal, spec, freqs)
    return report, freqs


def _method_dict(spec: TransformSpec, report, constant: complex) -> dict:
    method = {
        "backend": spec.backend.value,
        "kernel": type(spec.kernel).__name__,
        "constant_re": constant.real,
        "constant_im": constant.imag,
        "n_points": report.n_points,
    }
    if isinstance(spec.kernel, FresnelKernel):
        method["fresnel_a"] = spec.kernel.a
    for key in ("dictionary_size", "fit_residual", "rule", "diagnostic"):
        if key in report.details:
            method[key] = report.details[key]
    return method


def _finish(kind, report, constant, spec, oracle_value, aux=None) -> MomentEstimate:
    value = report.value / constant
    stat = 0.0 if report.stat_error is None else report.stat_error / abs(constant)
    abs_err = None if oracle_value is None else abs(value - oracle_value)
    return MomentEstimate(
        kind=kind,
        value=value,
        stat_error=stat,
        method=_method_dict(spec, report, constant),
        oracle_value=oracle_value,
        abs_error=abs_err,
        aux=aux or {},
    )


def _default_spec(kernel, backend, tail) -> TransformSpec:
    return TransformSpec(kernel=kernel, backend=backend, tail=tail)


def estimate_adagger(
    signal: PolarizationSignal,
    *,
    backend: Backend = Backend.COMPONENT_FIT,
    tail=None,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
    oracle_state: FockVector | None = None,
) -> MomentEstimate:
    """<a^dag> from an excited-entry one-photon signal."""
    _check_provenance(signal, TransitionKind.ONE_PHOTON, AtomEntry.EXCITED)
    spec = _default_spec(FresnelKernel(FRESNEL_A_ONE), backend, tail)
    report, _ = _run(signal, spec)
    oracle = None
    if oracle_state is not None:
        oracle = expect_moment(oracle_state, fock.adag_pow(1))
    return _finish(fock.adag_pow(1), report, constants.k1, spec, oracle)


def estimate_adagger2(
    signal: PolarizationSignal,
    *,
    backend: Backend = Backend.COMPONENT_FIT,
    tail=None,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
    oracle_state: FockVector | None = None,
) -> MomentEstimate:
    """<(a^dag)^2> from an excited-entry two-photon signal."""
    _check_provenance(signal, TransitionKind.TWO_PHOTON, AtomEntry.EXCITED)
    spec = _default_spec(FresnelKernel(FRESNEL_A_TWO), backend, tail)
    report, _ = _run(signal, spec)
    oracle = None
    if oracle_state is not None:
        oracle = expect_moment(oracle_state, fock.adag_pow(2))
    return _finish(fock.adag_pow(2), report, constants.k2, spec, oracle)


def estimate_sg(
    signal: PolarizationSignal,
    order: int | None = None,
    *,
    backend: Backend = Backend.COMPONENT_FIT,
    tail=None,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
    oracle_state: FockVector | None = None,
) -> MomentEstimate:
    """<(V^dag)^k> from a ground-entry k-photon signal.

    `order` defaults to the one recorded in the signal provenance and must
    match it when given. The transform lands on the shift-operator moment
    exactly (the Dirichlet weights of the low-n terms conspire); for the
    two-photon case the operator-ordered target <(V^dag)^4 V^2> is reported
    alongside in `aux`.
    """
    if signal.meta.entry is not AtomEntry.GROUND:
        raise ProvenanceError(
            f"signal was generated for {signal.meta.entry.name} entry, "
            f"estimator needs GROUND"
        )
    if order is not None and order != signal.meta.transition.order:
        raise ProvenanceError(
            f"signal was generated for a {signal.meta.transition.order}-photon "
            f"transition, estimator asked for order {order}"
        )
    order = signal.meta.transition.order
    spec = _default_spec(DirichletKernel(), backend, tail)
    report, _ = _run(signal, spec)
    oracle = None
    aux = {}
    if oracle_state is not None:
        oracle = expect_moment(oracle_state, fock.sg_raise_pow(order))
        if order == 2:
            aux["sg_mixed_oracle"] = expect_moment(oracle_state, fock.SG_MIXED)
    return _finish(fock.sg_raise_pow(order), report, constants.kp, spec, oracle, aux)


# ---------------------------------------------------------------------------
# squeezing


_NEGATIVE_VARIANCE_TOL = -1e-6


@dataclass(frozen=True)
class SqueezingReport:
    """Quadrature means/variances from first and second moment estimates."""

    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    squeezed: bool
    n_mean: float
    n_mean_source: str


def squeezing_report(
    est_adag: MomentEstimate,
    est_adag2: MomentEstimate,
    n_mean: float,
    n_mean_source: str,
) -> SqueezingReport:
    """Combine <a^dag> and <(a^dag)^2> estimates with a photon number.

    X = a + a^dag and Y = -i(a - a^dag), so with v = <a^dag>, w = <(a^dag)^2>:
    <X> = 2 Re v, <Y> = -2 Im v, <X^2> = 2 Re w + 2 n + 1,
    <Y^2> = -2 Re w + 2 n + 1. `squeezed` flags either variance strictly
    below 1; n_mean comes from outside (oracle or measured) and its source
    string is recorded. A variance below -1e-6 is impossible for any state,
    so it raises CalibrationError rather than being reported.
    """
    if est_adag.kind != fock.adag_pow(1) or est_adag2.kind != fock.adag_pow(2):
        raise ValueError("squeezing needs <a^dag> and <(a^dag)^2> estimates")
    if n_mean < 0:
        raise ValueError("n_mean must be >= 0")
    v = est_adag.value
    w = est_adag2.value
    mean_x = 2.0 * v.real
    mean_y = -2.0 * v.imag
    var_x = 2.0 * w.real + 2.0 * n_mean + 1.0 - mean_x**2
    var_y = -2.0 * w.real + 2.0 * n_mean + 1.0 - mean_y**2
    if min(var_x, var_y) < _NEGATIVE_VARIANCE_TOL:
        raise CalibrationError(
            f"reconstructed variance is negative (var_x={var_x:.6g}, "
            f"var_y={var_y:.6g}); the moment estimates are inconsistent "
            f"with any physical state"
        )
    squeezed = min(var_x, var_y) < 1.0
    return SqueezingReport(
        mean_x=mean_x,
        mean_y=mean_y,
        var_x=var_x,
        var_y=var_y,
        squeezed=bool(squeezed),
        n_mean=float(n_mean),
        n_mean_source=n_mean_source,
    )


# ---------------------------------------------------------------------------
# two-photon constant calibration


@dataclass(frozen=True, eq=False)
class CalibrationRecord:
    """Least-squares K2 fit over reference states, with per-state ratios."""

    k2: complex
    ratios: list
    dispersion: float
    candidates: dict
    state_labels: list
    grid_points: int
    grid_end: float


def reference_states(space: HilbertSpec | None = None):
    """Standard two-photon calibration set: two coherent, one squeezed."""
    if space is None:
        space = HilbertSpec(128)
    return [
        ("coherent(3)", fock.make_coherent(space, 3.0)),
        ("coherent(2 e^{i pi/6})", fock.make_coherent(space, 2.0 * np.exp(1j * np.pi / 6))),
        ("squeezed(2, r=0.3)", fock.make_squeezed(space, alpha=2.0, r=0.3)),
    ]


def k2_calibration_record(
    states=None,
    grid: TimeGrid | None = None,
    backend: Backend = Backend.COMPONENT_FIT,
) -> CalibrationRecord:
    """Fit K2 = transform / oracle in least squares over reference states.

    No gate is applied here; `calibrate_k2` wraps this with the dispersion
    check. The record always carries the two analytic candidates for
    comparison. `states` may be bare FockVectors or (label, state) pairs.
    """
    if states is None:
        states = reference_states()
    states = [
        item if isinstance(item, tuple) else (f"state {i}", item)
        for i, item in enumerate(states)
    ]
    if not states:
        raise ValueError("calibration needs at least one reference state")
    if grid is None:
        grid = TimeGrid.linspace(0.0, 300.0, 12001)
    labels, transforms, oracles = [], [], []
    for label, state in states:
        sig = signal_closed_form(state, grid, TransitionKind.TWO_PHOTON, AtomEntry.EXCITED)
        spec = TransformSpec(FresnelKernel(FRESNEL_A_TWO), backend)
        freqs = _dictionary_for(sig) if backend is Backend.COMPONENT_FIT else None
        t = transform_report(sig, spec, freqs).value
        o = expect_moment(state, fock.adag_pow(2))
        if abs(o) < 1e-12:
            raise ValueError(f"reference state {label} has no two-photon coherence")
        labels.append(label)
        transforms.append(t)
        oracles.append(o)
    transforms = np.asarray(transforms)
    oracles = np.asarray(oracles)
    k2 = complex(np.sum(np.conj(oracles) * transforms) / np.sum(np.abs(oracles) ** 2))
    ratios = transforms / oracles
    dispersion = float(np.max(np.abs(ratios - k2)) / abs(k2))
    return CalibrationRecord(
        k2=k2,
        ratios=[complex(r) for r in ratios],
        dispersion=dispersion,
        candidates={"composed": K2_COMPOSED, "printed": K2_PRINTED},
        state_labels=labels,
        grid_points=len(grid),
        grid_end=float(grid.times[-1]),
    )


def calibrate_k2(
    states=None,
    grid: TimeGrid | None = None,
    backend: Backend = Backend.COMPONENT_FIT,
    max_dispersion: float = 0.05,
) -> CalibrationConstants:
    """Empirical K2 with a dispersion gate.

    Raises CalibrationError (carrying the record) when the per-state ratios
    disagree with the fit by more than `max_dispersion` relative; the
    two-photon reconstruction error depends on where the state's coherence
    weight sits, so a single constant cannot serve disparate states better
    than this gate allows.
    """
    record = k2_calibration_record(states, grid, backend)
    if record.dispersion > max_dispersion:
        raise CalibrationError(
            f"two-photon calibration dispersion {record.dispersion:.3f} exceeds "
            f"{max_dispersion:.3f}; no single constant fits the reference set",
            record=record,
        )
    return CalibrationConstants(
        k1=K1,
        k2=record.k2,
        kp=KP,
        note="least-squares calibration",
        provenance=record,
    )
