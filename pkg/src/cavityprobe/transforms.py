"""Integral transforms that turn polarization signals into field moments.

Two kernel families act on a signal S(T):

- Fresnel kernel T sin(T^2/a): against a pure tone sin(bT) it has the
  closed form

    integral_0^inf T sin(T^2/a) sin(bT) dT
        = (a b / 4) sqrt(pi a / 2) (cos(a b^2 / 4) + sin(a b^2 / 4))

- Dirichlet kernel 1/T: against sin(aT) cos(bT) it selects by frequency
  ordering,

    integral_0^inf sin(aT) cos(bT) / T dT = pi/2 (a > b >= 0),
                                            pi/4 (a = b > 0),
                                            0    (b > a >= 0 or a = 0).

Each transform runs on one of two backends. COMPONENT_FIT regresses the
signal onto a dictionary of sine columns and applies the kernel closed form
per component. DIRECT_QUADRATURE integrates kernel * signal on the sample
grid with composite high-order weights, a smooth window taper over the tail
of the integration range, a decreasing family of Gaussian dampings
exp(-(eps T)^2), and polynomial extrapolation of the damped values to
eps = 0. Both backends propagate per-sample shot-noise error bars through
their (linear) estimator weights.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import AtomEntry, PolarizationSignal, TransitionKind, _entry_frequencies
from .errors import ConvergenceError, DictionaryError

# frequencies closer than this (relative to max(1, omega_max)) make the
# sine dictionary degenerate beyond what min-norm regression can carry
_COLLISION_RTOL = 1e-9

FRESNEL_WINDOW_FACTOR = 40.0  # default t_max = 40 a
DIRICHLET_TIME_CUTOFF = 2000.0
PHASE_STEP_BUDGET = 0.35  # max kernel+signal phase advance per sample, radians


class Backend(enum.Enum):
    COMPONENT_FIT = "component_fit"
    DIRECT_QUADRATURE = "direct_quadrature"


@dataclass(frozen=True)
class FresnelKernel:
    """T sin(T^2 / a); a > 0 sets the chirp scale."""

    a: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError("fresnel scale a must be positive and finite")


@dataclass(frozen=True)
class DirichletKernel:
    """1/T frequency-ordering kernel."""


Kernel = FresnelKernel | DirichletKernel


def fresnel_closed_form(a: float, b: float) -> float:
    """integral_0^inf T sin(T^2/a) sin(bT) dT, odd in b."""
    if not (a > 0 and math.isfinite(a)):
        raise ValueError("a must be positive and finite")
    phase = a * b * b / 4.0
    return (a * b / 4.0) * math.sqrt(math.pi * a / 2.0) * (math.cos(phase) + math.sin(phase))


def dirichlet_closed_form(a: float, b: float) -> float:
    """integral_0^inf sin(aT) cos(bT) / T dT for a, b >= 0."""
    if a < 0 or b < 0:
        raise ValueError("frequencies must be non-negative")
    if a == 0.0:
        return 0.0
    if a > b:
        return math.pi / 2.0
    if a == b:
        return math.pi / 4.0
    return 0.0


def kernel_weight(kernel: Kernel, freq: float) -> float:
    """Closed-form kernel response to a unit sin(freq T) component."""
    if isinstance(kernel, FresnelKernel):
        return fresnel_closed_form(kernel.a, freq)
    return dirichlet_closed_form(freq, 0.0)


# ---------------------------------------------------------------------------
# tail policy and grids


@dataclass(frozen=True)
class TailPolicy:
    """How DIRECT_QUADRATURE treats the truncated integration tail.

    The window [0, t_max] is tapered smoothly to zero over its last
    `taper_fraction`, then integrated once per damping width with
    exp(-(eps T)^2) applied, and the family is extrapolated to eps = 0 by a
    least-squares polynomial of degree `extrapolation_order` in eps^2. The
    extrapolation spread plus fit residual, relative to 1 + |value|, must
    stay below `convergence_tol`.
    """

    t_max: float
    damping_widths: tuple[float, ...]
    extrapolation_order: int = 2
    taper_fraction: float = 0.4
    convergence_tol: float = 1e-3

    def __post_init__(self):
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ValueError("t_max must be positive and finite")
        w = tuple(float(x) for x in self.damping_widths)
        if len(w) < self.extrapolation_order + 1:
            raise ValueError("need at least extrapolation_order + 1 damping widths")
        if any(x <= 0 for x in w):
            raise ValueError("damping widths must be positive")
        if any(b >= a for a, b in zip(w, w[1:])):
            raise ValueError("damping widths must decrease")
        if not 0.0 <= self.taper_fraction < 1.0:
            raise ValueError("taper_fraction must be in [0, 1)")
        if self.extrapolation_order < 1:
            raise ValueError("extrapolation_order must be >= 1")
        object.__setattr__(self, "damping_widths", w)


def default_damping_widths(t_max: float, count: int = 4) -> tuple[float, ...]:
    """Geometric family from 1/t_max downward, ratio 1/2."""
    return tuple((1.0 / t_max) * 0.5**k for k in range(count))


def default_tail(kernel: Kernel, grid_end: float | None = None) -> TailPolicy:
    """Default policy: t_max = 40a (Fresnel) or 2000 (Dirichlet), capped by the grid."""
    if isinstance(kernel, FresnelKernel):
        t_max = FRESNEL_WINDOW_FACTOR * kernel.a
    else:
        t_max = DIRICHLET_TIME_CUTOFF
    if grid_end is not None:
        t_max = min(t_max, grid_end)
    return TailPolicy(t_max=t_max, damping_widths=default_damping_widths(t_max))


def suggested_step(omega_max: float) -> float:
    """Sample spacing that keeps per-step phase under the budget."""
    if omega_max <= 0:
        raise ValueError("omega_max must be positive")
    return PHASE_STEP_BUDGET / omega_max


def quadrature_point_count(t_max: float, step: float) -> int:
    """Smallest 4k+1 count whose uniform spacing does not exceed `step`."""
    panels = max(1, math.ceil(t_max / (4.0 * step)))
    return 4 * panels + 1


def kernel_omega_max(kernel: Kernel, t_max: float, signal_omega_max: float) -> float:
    """Largest instantaneous frequency of kernel * signal on [0, t_max]."""
    if isinstance(kernel, FresnelKernel):
        return 2.0 * t_max / kernel.a + signal_omega_max
    return signal_omega_max


def _taper(T: np.ndarray, t1: float, t_max: float) -> np.ndarray:
    """C^3 smootherstep window: 1 on [0, t1], 0 at t_max."""
    if t_max <= t1:
        return np.ones_like(T)
    s = np.clip((T - t1) / (t_max - t1), 0.0, 1.0)
    return 1.0 - (35.0 * s**4 - 84.0 * s**5 + 70.0 * s**6 - 20.0 * s**7)


def _composite_weights(n: int, h: float) -> tuple[np.ndarray, str]:
    """Panel-wise Newton-Cotes weights on n uniform samples."""
    if n < 3:
        raise ValueError("quadrature needs at least 3 samples")
    w = np.zeros(n)
    if (n - 1) % 4 == 0:
        pat = np.array([7.0, 32.0, 12.0, 32.0, 7.0]) * (2.0 * h / 45.0)
        for s in range(0, n - 4, 4):
            w[s : s + 5] += pat
        return w, "boole"
    if (n - 1) % 2 == 0:
        pat = np.array([1.0, 4.0, 1.0]) * (h / 3.0)
        for s in range(0, n - 2, 2):
            w[s : s + 3] += pat
        return w, "simpson"
    raise ValueError("grid length must be 4k+1 (preferred) or 2k+1 samples")


# ---------------------------------------------------------------------------
# component fit


@dataclass(frozen=True, eq=False)
class ComponentDecomposition:
    """Least-squares sine decomposition of a signal."""

    frequencies: np.ndarray
    amplitudes: np.ndarray
    residual: float  # rms of (model - signal)


def _validate_dictionary(freqs: np.ndarray):
    if freqs.size == 0:
        raise DictionaryError("frequency dictionary is empty")
    if not np.all(np.isfinite(freqs)):
        raise DictionaryError("frequency dictionary contains non-finite entries")
    if np.any(freqs <= 0):
        raise DictionaryError("dictionary frequencies must be positive")
    if freqs.size > 1:
        srt = np.sort(freqs)
        gaps = np.diff(srt)
        scale = max(1.0, float(srt[-1]))
        j = int(np.argmin(gaps))
        if gaps[j] < _COLLISION_RTOL * scale:
            raise DictionaryError(
                f"dictionary frequencies {srt[j]!r} and {srt[j + 1]!r} collide; "
                f"gap {gaps[j]:.3e} is below the resolvable threshold"
            )


def _design_pinv(times: np.ndarray, freqs: np.ndarray):
    X = np.sin(np.outer(times, freqs))
    # crowded dictionaries (difference sidebands pile up near a limit
    # frequency) make X numerically rank deficient; truncate like lstsq
    P = np.linalg.pinv(X, rcond=np.finfo(np.float64).eps * max(X.shape))
    return X, P


def fit_components(signal: PolarizationSignal, frequencies) -> ComponentDecomposition:
    """Regress the signal onto sin(omega_j T) columns (min-norm least squares).

    The dictionary must be positive, collision-free, and ideally complete:
    a missing component leaves its energy in the residual.
    """
    freqs = np.asarray(frequencies, dtype=np.float64).reshape(-1)
    _validate_dictionary(freqs)
    T = signal.grid.times
    if T.size < freqs.size:
        raise DictionaryError(
            f"{T.size} samples cannot determine {freqs.size} dictionary amplitudes"
        )
    X, P = _design_pinv(T, freqs)
    b = P @ signal.values
    resid = float(np.sqrt(np.mean(np.abs(X @ b - signal.values) ** 2)))
    return ComponentDecomposition(freqs, b, resid)


def protocol_frequencies(kind: TransitionKind, entry: AtomEntry, n_max: int) -> np.ndarray:
    """Sine frequencies present in a closed-form signal with support n <= n_max.

    Excited entry contributes the sideband pairs hi +- lo per coherence
    index; ground entry contributes the same algebra with its own pair
    frequencies. Exact duplicates (ground low-n terms) are merged.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    n = np.arange(n_max + 1, dtype=np.float64)
    hi, lo = _entry_frequencies(kind, entry, n)
    freqs = np.concatenate([hi + lo, hi - lo])
    freqs = np.unique(np.round(freqs, 12))
    return freqs[freqs > 0.0]


# ---------------------------------------------------------------------------
# transform driver


@dataclass(frozen=True)
class TransformSpec:
    """Kernel plus backend choice (and optional tail policy for quadrature)."""

    kernel: Kernel
    backend: Backend = Backend.COMPONENT_FIT
    tail: TailPolicy | None = None


@dataclass(frozen=True, eq=False)
class TransformReport:
    """Transform value with backend diagnostics and propagated shot error."""

    value: complex
    backend: Backend
    stat_error: float | None
    n_points: int
    details: dict


def _propagated_error(u: np.ndarray, signal: PolarizationSignal) -> float | None:
    if not signal.has_noise:
        return None
    var = np.sum(np.abs(u) ** 2 * (signal.stderr_re**2 + signal.stderr_im**2))
    return float(np.sqrt(var))


def _component_fit_report(signal, spec, freqs) -> TransformReport:
    if freqs is None:
        raise DictionaryError("COMPONENT_FIT needs a frequency dictionary")
    freqs = np.asarray(freqs, dtype=np.float64).reshape(-1)
    _validate_dictionary(freqs)
    T = signal.grid.times
    if T.size < freqs.size:
        raise DictionaryError(
            f"{T.size} samples cannot determine {freqs.size} dictionary amplitudes"
        )
    X, P = _design_pinv(T, freqs)
    b = P @ signal.values
    resid = float(np.sqrt(np.mean(np.abs(X @ b - signal.values) ** 2)))
    K = np.array([kernel_weight(spec.kernel, f) for f in freqs])
    value = complex(np.sum(K * b))
    u = K @ P
    return TransformReport(
        value=value,
        backend=Backend.COMPONENT_FIT,
        stat_error=_propagated_error(u, signal),
        n_points=int(T.size),
        details={"dictionary_size": int(freqs.size), "fit_residual": resid},
    )


def _dirichlet_zero_sample(values: np.ndarray, h: float) -> complex:
    # limit of S(T)/T at T = 0 is S'(0); one-sided 4th order stencil
    y = values[:5]
    return complex((-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h))


def _direct_quadrature_report(signal, spec) -> TransformReport:
    grid = signal.grid
    if len(grid) < 5:
        raise ValueError("DIRECT_QUADRATURE needs at least 5 samples")
    if not grid.is_uniform:
        raise ValueError("DIRECT_QUADRATURE needs a uniform grid")
    tail = spec.tail if spec.tail is not None else default_tail(spec.kernel, float(grid.times[-1]))
    T_all = grid.times
    if tail.t_max > T_all[-1] * (1.0 + 1e-12):
        raise ValueError(
            f"tail t_max {tail.t_max} exceeds the signal grid end {T_all[-1]}"
        )
    n_used = int(np.searchsorted(T_all, tail.t_max * (1.0 + 1e-12), side="right"))
    T = T_all[:n_used]
    y = signal.values[:n_used]
    h = grid.step
    w, rule = _composite_weights(T.size, h)

    stencil = None
    if isinstance(spec.kernel, FresnelKernel):
        kern = T * np.sin(T * T / spec.kernel.a)
        f = kern * y
    else:
        scale = float(np.max(np.abs(y))) or 1.0
        if T[0] == 0.0:
            kern = np.zeros(T.size)
            kern[1:] = 1.0 / T[1:]
            if abs(y[0]) > 1e-9 * scale:
                raise ValueError("signal must vanish at T = 0 under the 1/T kernel")
            f = kern * y
            f[0] = _dirichlet_zero_sample(y, h)
            stencil = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
        else:
            kern = 1.0 / T
            f = kern * y

    tp = _taper(T, tail.t_max * (1.0 - tail.taper_fraction), tail.t_max)
    base = w * tp
    eps = np.asarray(tail.damping_widths)
    damp = np.exp(-np.outer(eps, T) ** 2)  # (K, N)
    vals = damp @ (base * f)  # damped integral per width

    # extrapolate to eps = 0: least-squares polynomial in (eps/eps0)^2
    u_var = (eps / eps[0]) ** 2
    V = np.vander(u_var, tail.extrapolation_order + 1, increasing=True)
    P = np.linalg.pinv(V)
    lam = P[0]  # linear functional giving the value at 0
    value = complex(lam @ vals)
    model = V @ (P @ vals)
    fit_rms = float(np.sqrt(np.mean(np.abs(model - vals) ** 2)))
    spread = abs(value - vals[-1])

    stat_error = None
    allowance = 0.0
    if signal.has_noise:
        var_pt = signal.stderr_re[: T.size] ** 2 + signal.stderr_im[: T.size] ** 2
        # estimator weight per sample: sum_k lam_k base_i kern_i damp_ki
        u_w = (lam @ damp) * base * kern
        if stencil is not None:
            # the T=0 limit is a stencil over the first five samples; its
            # damping factors are exp(0) = 1 and sum(lam) = 1
            u_w[:5] += base[0] * stencil
        stat_error = float(np.sqrt(np.sum(np.abs(u_w) ** 2 * var_pt)))
        # the convergence gate compares damped values against each other;
        # the same noisy samples enter all of them, so only the difference
        # functionals feel the noise. Budget 3 sigma of those differences.
        u_sp = ((lam @ damp) - damp[-1]) * base * kern
        sig_sp = float(np.sqrt(np.sum(u_sp**2 * var_pt)))
        R = (V @ P - np.eye(eps.size)) @ damp
        sig_r = float(np.sqrt(np.mean(np.sum((R * (base * kern)) ** 2 * var_pt, axis=1))))
        allowance = 3.0 * (sig_sp + sig_r)

    diagnostic = max(0.0, spread + fit_rms - allowance) / (1.0 + abs(value))
    if diagnostic > tail.convergence_tol:
        raise ConvergenceError(
            f"damping extrapolation did not converge: diagnostic {diagnostic:.3e} "
            f"exceeds {tail.convergence_tol:.1e}",
            widths=tuple(float(e) for e in eps),
            values=[complex(v) for v in vals],
            diagnostic=float(diagnostic),
        )

    return TransformReport(
        value=value,
        backend=Backend.DIRECT_QUADRATURE,
        stat_error=stat_error,
        n_points=int(T.size),
        details={
            "rule": rule,
            "t_max": float(tail.t_max),
            "damping_widths": [float(e) for e in eps],
            "damped_values": [complex(v) for v in vals],
            "diagnostic": float(diagnostic),
            "noise_allowance": float(allowance),
        },
    )


def transform_report(
    signal: PolarizationSignal, spec: TransformSpec, frequencies=None
) -> TransformReport:
    """Run one transform and return the value plus diagnostics."""
    if spec.backend is Backend.COMPONENT_FIT:
        return _component_fit_report(signal, spec, frequencies)
    if spec.backend is Backend.DIRECT_QUADRATURE:
        return _direct_quadrature_report(signal, spec)
    raise ValueError(f"unknown backend {spec.backend!r}")


def transform_signal(
    signal: PolarizationSignal, spec: TransformSpec, frequencies=None
) -> complex:
    """Transform value only; see `transform_report` for diagnostics."""
    return transform_report(signal, spec, frequencies).value
