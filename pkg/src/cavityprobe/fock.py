"""Truncated single-mode field space: states, operators, moments.

Everything lives in the photon-number basis |0> .. |dim-1>. Conventions:

- annihilation a|n> = sqrt(n)|n-1>, creation a^dag|n> = sqrt(n+1)|n+1>
- quadratures X = a + a^dag, Y = -i(a - a^dag), vacuum variance 1
- phase shift operators (one-sided): V|n> = |n-1> (V|0> = 0),
  V^dag|n> = |n+1>; on a truncated space V^dag drops the top level

State factories refuse silently lossy truncations: if the untruncated state
would carry more than `leakage_tol` weight at or above the cutoff, they raise
LeakageError instead of returning a quietly renormalized vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import LeakageError, TruncationEdgeError

DEFAULT_LEAKAGE_TOL = 1e-10

# Weight dropped by a raising operator below this is ignored by the
# "warn" truncation policy.
_TRUNCATION_WARN_TOL = 1e-12


@dataclass(frozen=True)
class HilbertSpec:
    """Photon-number truncation: levels 0 .. dim-1."""

    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or isinstance(self.dim, bool):
            raise ValueError("dim must be an integer")
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.dim)


@dataclass(frozen=True, eq=False)
class FockVector:
    """Complex amplitude vector over a HilbertSpec basis.

    Amplitudes are copied and frozen on construction. The vector is not
    forced to unit norm; factories return normalized states and `normalized`
    rescales explicitly.
    """

    space: HilbertSpec
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128, copy=True).reshape(-1)
        if amps.shape != (self.space.dim,):
            raise ValueError(
                f"amplitude vector has length {amps.size}, space has dim {self.space.dim}"
            )
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise ValueError("amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "FockVector":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockVector(self.space, self.amps / n)

    def overlap(self, other: "FockVector") -> complex:
        """<self|other>; spaces must match."""
        if other.space.dim != self.space.dim:
            raise ValueError("overlap requires matching spaces")
        return complex(np.vdot(self.amps, other.amps))


@dataclass(frozen=True)
class MomentKind:
    """Tagged moment request for `expect_moment`.

    tag is one of: a, adag, n, sg_raise, sg_mixed, x, x2, y, y2, var_x,
    var_y. order is the operator power where it applies (a, adag, sg_raise).
    """

    tag: str
    order: int = 1

    def __post_init__(self):
        if self.tag in ("a", "adag", "sg_raise"):
            if self.order not in (1, 2):
                raise ValueError(f"{self.tag} moment takes order 1 or 2")
        elif self.order != 1:
            raise ValueError(f"{self.tag} moment does not take an order")


def a_pow(order: int = 1) -> MomentKind:
    """<a^order>."""
    return MomentKind("a", order)


def adag_pow(order: int = 1) -> MomentKind:
    """<(a^dag)^order>."""
    return MomentKind("adag", order)


def sg_raise_pow(order: int = 1) -> MomentKind:
    """<(V^dag)^order>, the phase-shift raising moment."""
    return MomentKind("sg_raise", order)


NUMBER = MomentKind("n")
SG_MIXED = MomentKind("sg_mixed")  # <(V^dag)^4 V^2>, net raise by two
QUAD_X = MomentKind("x")
QUAD_X2 = MomentKind("x2")
QUAD_Y = MomentKind("y")
QUAD_Y2 = MomentKind("y2")
VAR_X = MomentKind("var_x")
VAR_Y = MomentKind("var_y")


# ---------------------------------------------------------------------------
# factories


def make_fock(space: HilbertSpec, n: int) -> FockVector:
    """Number state |n>."""
    if not 0 <= n < space.dim:
        raise ValueError(f"fock level {n} outside space of dim {space.dim}")
    amps = np.zeros(space.dim, dtype=np.complex128)
    amps[n] = 1.0
    return FockVector(space, amps)


def coherent_tail_weight(alpha: complex, dim: int) -> float:
    """Probability a coherent state carries at levels >= dim.

    Poisson tail with mean |alpha|^2: P(N >= dim) = gammainc(dim, |alpha|^2)
    (regularized lower incomplete gamma).
    """
    lam = abs(alpha) ** 2
    if lam == 0.0:
        return 0.0
    return float(special.gammainc(dim, lam))


def make_coherent(
    space: HilbertSpec, alpha: complex, leakage_tol: float = DEFAULT_LEAKAGE_TOL
) -> FockVector:
    """Coherent state, truncated and renormalized.

    c_n proportional to alpha^n / sqrt(n!), evaluated in the log domain so
    large |alpha| does not overflow.
    """
    tail = coherent_tail_weight(alpha, space.dim)
    if tail > leakage_tol:
        raise LeakageError(
            f"coherent alpha={alpha!r} leaks {tail:.3e} past dim={space.dim} "
            f"(tolerance {leakage_tol:.1e})",
            tail_weight=tail,
        )
    if alpha == 0:
        return make_fock(space, 0)
    n = np.arange(space.dim)
    lam = abs(alpha) ** 2
    # log |c_n|^2 of the untruncated Poisson weights
    logw = n * math.log(lam) - special.gammaln(n + 1) - lam
    mags = np.exp(0.5 * logw)
    phases = np.exp(1j * n * np.angle(alpha))
    return FockVector(space, mags * phases).normalized()


def _squeezed_recurrence(alpha: complex, r: float, theta: float, dim: int) -> np.ndarray:
    """Unnormalized displaced-squeezed amplitudes up to level dim-1.

    Two-term recurrence from (mu a + nu a^dag - beta)|psi> = 0 with
    mu = cosh r, nu = e^{i theta} sinh r, beta = mu alpha + nu conj(alpha):
    c_{n+1} = (beta c_n - nu sqrt(n) c_{n-1}) / (mu sqrt(n+1)).
    """
    mu = math.cosh(r)
    nu = math.sinh(r) * np.exp(1j * theta)
    beta = mu * alpha + nu * np.conj(alpha)
    c = np.zeros(dim, dtype=np.complex128)
    c[0] = 1.0
    if dim > 1:
        c[1] = beta / mu
    for n in range(1, dim - 1):
        c[n + 1] = (beta * c[n] - nu * math.sqrt(n) * c[n - 1]) / (mu * math.sqrt(n + 1))
        # guard against overflow for extreme displacements; the relative
        # shape is all that matters before normalization
        m = abs(c[n + 1])
        if m > 1e120:
            c[: n + 2] /= m
    return c


def make_squeezed(
    space: HilbertSpec,
    alpha: complex = 0.0,
    r: float = 0.0,
    theta: float = 0.0,
    leakage_tol: float = DEFAULT_LEAKAGE_TOL,
) -> FockVector:
    """Displaced squeezed state D(alpha) S(r e^{i theta}) |0>, truncated.

    theta = 0 squeezes the X = a + a^dag quadrature: Var(X) = e^{-2r}.
    Leakage is estimated on an extended recurrence before truncation.
    """
    if r < 0:
        raise ValueError("squeeze magnitude r must be >= 0")
    dim_ext = max(2 * space.dim, space.dim + 64)
    ext = _squeezed_recurrence(alpha, r, theta, dim_ext)
    w = np.abs(ext) ** 2
    total = w.sum()
    if total == 0.0 or not np.isfinite(total):
        raise LeakageError("squeezed-state recurrence did not converge", tail_weight=1.0)
    tail = float(w[space.dim :].sum() / total)
    # the extension must itself have decayed, or the tail estimate is moot
    edge = float(w[-8:].sum() / total)
    if tail > leakage_tol or edge > leakage_tol * 1e-2:
        raise LeakageError(
            f"squeezed state (alpha={alpha!r}, r={r}, theta={theta}) leaks "
            f"{tail:.3e} past dim={space.dim} (tolerance {leakage_tol:.1e})",
            tail_weight=tail,
        )
    return FockVector(space, ext[: space.dim]).normalized()


def state_from_amplitudes(space: HilbertSpec, amps) -> FockVector:
    """Normalize an explicit amplitude list into a state."""
    vec = FockVector(space, np.asarray(amps, dtype=np.complex128))
    return vec.normalized()


# ---------------------------------------------------------------------------
# operators


def _check_truncation(dropped_weight: float, norm_sq: float, policy: str, what: str):
    if policy not in ("warn", "error", "ignore"):
        raise ValueError(f"unknown truncation policy {policy!r}")
    if norm_sq > 0 and dropped_weight / norm_sq > _TRUNCATION_WARN_TOL:
        msg = f"{what} dropped relative weight {dropped_weight / norm_sq:.3e} at the truncation edge"
        if policy == "error":
            raise TruncationEdgeError(msg)
        if policy == "warn":
            import warnings

            warnings.warn(msg, RuntimeWarning, stacklevel=3)


def apply_ladder(state: FockVector, which: str, on_truncation: str = "warn") -> FockVector:
    """Apply a, a^dag, or the number operator. Returns an unnormalized vector.

    a^dag pushes the top amplitude out of the space; `on_truncation` says
    whether that is ignored, warned about, or an error.
    """
    c = state.amps
    dim = state.space.dim
    out = np.zeros(dim, dtype=np.complex128)
    if which == "lower":
        n = np.arange(1, dim)
        out[:-1] = np.sqrt(n) * c[1:]
    elif which == "raise":
        n = np.arange(dim - 1)
        out[1:] = np.sqrt(n + 1) * c[:-1]
        dropped = dim * abs(c[-1]) ** 2
        _check_truncation(dropped, float(np.vdot(c, c).real), on_truncation, "a^dag")
    elif which == "number":
        out = np.arange(dim) * c
    else:
        raise ValueError(f"unknown ladder operator {which!r}")
    return FockVector(state.space, out)


def apply_sg(
    state: FockVector, which: str, power: int = 1, on_truncation: str = "warn"
) -> FockVector:
    """Apply the phase shift operator V (lower) or V^dag (raise), `power` times."""
    if power < 1:
        raise ValueError("power must be >= 1")
    c = state.amps
    dim = state.space.dim
    out = np.zeros(dim, dtype=np.complex128)
    k = min(power, dim)
    if which == "lower":
        out[: dim - k] = c[k:]
    elif which == "raise":
        out[k:] = c[: dim - k]
        dropped = float(np.sum(np.abs(c[dim - k :]) ** 2))
        _check_truncation(dropped, float(np.vdot(c, c).real), on_truncation, "V^dag")
    else:
        raise ValueError(f"unknown shift operator {which!r}")
    return FockVector(state.space, out)


# ---------------------------------------------------------------------------
# moments


def _lower_pow(c: np.ndarray, k: int) -> complex:
    """<a^k> from the coherence sum sum_n conj(c_n) c_{n+k} sqrt((n+1)..(n+k))."""
    dim = c.size
    if k >= dim:
        return 0.0 + 0.0j
    n = np.arange(dim - k)
    fac = np.ones(dim - k)
    for j in range(1, k + 1):
        fac *= n + j
    return complex(np.sum(np.conj(c[: dim - k]) * c[k:] * np.sqrt(fac)))


def _sg_raise(c: np.ndarray, k: int) -> complex:
    """<(V^dag)^k> = sum_n conj(c_{n+k}) c_n."""
    dim = c.size
    if k >= dim:
        return 0.0 + 0.0j
    return complex(np.sum(np.conj(c[k:]) * c[: dim - k]))


def expect_moment(state: FockVector, kind: MomentKind) -> complex:
    """Expectation value of the requested moment; always returns complex.

    Hermitian kinds (n, quadratures, variances) come out with zero imaginary
    part by construction. Quadrature squares use the commutator identity
    <X^2> = <a^2> + <a^dag 2> + 2<n> + 1, which is the untruncated-operator
    meaning; states with weight at the top two levels see the truncated and
    untruncated values differ.
    """
    c = state.amps
    tag = kind.tag
    if tag == "a":
        return _lower_pow(c, kind.order)
    if tag == "adag":
        return complex(np.conj(_lower_pow(c, kind.order)))
    if tag == "n":
        return complex(np.sum(np.arange(c.size) * np.abs(c) ** 2))
    if tag == "sg_raise":
        return _sg_raise(c, kind.order)
    if tag == "sg_mixed":
        # (V^dag)^4 V^2 nets a raise by two with no sqrt factors, but kills
        # the two lowest levels first: sum_{n>=2} conj(c_{n+2}) c_n
        dim = c.size
        idx = np.arange(2, max(dim - 2, 2))
        if idx.size == 0:
            return 0.0 + 0.0j
        return complex(np.sum(np.conj(c[idx + 2]) * c[idx]))
    a1 = _lower_pow(c, 1)
    a2 = _lower_pow(c, 2)
    nbar = float(np.sum(np.arange(c.size) * np.abs(c) ** 2))
    mean_x = 2.0 * a1.real
    mean_y = 2.0 * a1.imag  # <Y> = -i(<a> - <a^dag>) = 2 Im <a>
    x2 = 2.0 * a2.real + 2.0 * nbar + 1.0
    y2 = -2.0 * a2.real + 2.0 * nbar + 1.0
    if tag == "x":
        return complex(mean_x)
    if tag == "y":
        return complex(mean_y)
    if tag == "x2":
        return complex(x2)
    if tag == "y2":
        return complex(y2)
    if tag == "var_x":
        return complex(x2 - mean_x**2)
    if tag == "var_y":
        return complex(y2 - mean_y**2)
    raise ValueError(f"unknown moment kind {kind!r}")
