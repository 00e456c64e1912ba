"""Atomic polarization signals from resonant atom-field interaction.

A two-level atom crosses the cavity for a scaled interaction time T (coupling
absorbed into T). Two couplings are supported:

- one-photon exchange: |e,n> <-> |g,n+1>, pair frequency sqrt(n+1)
- two-photon exchange: |e,n> <-> |g,n+2>, pair frequency sqrt((n+1)(n+2))

The atom enters excited or in the ground state; after time T the complex
polarization <sigma_+>(T) = <psi_e(T)|psi_g(T)> is read out, either exactly
or by simulating projective measurements of the rotated spin components
sigma_x = (sigma_+ + sigma_-)/2 and sigma_y = (sigma_+ - sigma_-)/(2i).

Closed-form signals (verified against the propagator to machine precision):

  excited entry:  -i sum_n conj(c_{n+k}) c_n cos(T f_hi(n)) sin(T f_lo(n))
  ground entry:   +i sum_n conj(c_{n+k}) c_n sin(T g_hi(n)) cos(T g_lo(n))

with k the transition order and, indexed by the lower coherence index n:

  one-photon, excited: f_hi = sqrt(n+2),          f_lo = sqrt(n+1)
  two-photon, excited: f_hi = sqrt((n+3)(n+4)),   f_lo = sqrt((n+1)(n+2))
  one-photon, ground:  g_hi = sqrt(n+1),          g_lo = sqrt(n)
  two-photon, ground:  g_hi = sqrt((n+1)(n+2)),   g_lo = sqrt(n(n-1))

The ground sums start at n = 0; the low-n terms are the vacuum-manifold
coherences the dynamics retains.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationEdgeError
from .fock import FockVector

# relative amplitude allowed at the top coupled levels before signal
# generation refuses the state
_EDGE_AMP_TOL = 1e-8

# smallest n with cumulative weight >= 1 - this defines the dictionary
# support carried in the signal metadata
_SUPPORT_TOL = 1e-12


class TransitionKind(enum.Enum):
    """Photon exchange order of the atom-field coupling."""

    ONE_PHOTON = 1
    TWO_PHOTON = 2

    @property
    def order(self) -> int:
        return self.value


class AtomEntry(enum.Enum):
    """Atomic state at cavity entry."""

    EXCITED = "excited"
    GROUND = "ground"


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Scaled interaction times: finite, non-negative, strictly increasing."""

    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=np.float64, copy=True).reshape(-1)
        if t.size:
            if not np.all(np.isfinite(t)):
                raise ValueError("grid times must be finite")
            if t[0] < 0:
                raise ValueError("grid times must be non-negative")
            if t.size > 1 and not np.all(np.diff(t) > 0):
                raise ValueError("grid times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def linspace(cls, start: float, stop: float, num: int) -> "TimeGrid":
        if num < 2:
            raise ValueError("need at least 2 points")
        if not stop > start:
            raise ValueError("stop must exceed start")
        return cls(np.linspace(start, stop, num))

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def step(self) -> float:
        """Uniform spacing; raises if the grid is not uniform."""
        if len(self) < 2:
            raise ValueError("grid too short to have a step")
        d = np.diff(self.times)
        h = float(d[0])
        if not np.allclose(d, h, rtol=1e-9, atol=0.0):
            raise ValueError("grid is not uniform")
        return h

    @property
    def is_uniform(self) -> bool:
        if len(self) < 2:
            return True
        d = np.diff(self.times)
        return bool(np.allclose(d, d[0], rtol=1e-9, atol=0.0))


@dataclass(frozen=True)
class ShotConfig:
    """Projective-measurement budget: M shots per time point per spin axis."""

    shots_per_point: int | None
    seed: int = 0

    def __post_init__(self):
        if self.shots_per_point is not None and self.shots_per_point < 1:
            raise ValueError("shots_per_point must be >= 1 (or None for exact)")


@dataclass(frozen=True)
class SignalMeta:
    """Provenance carried by a signal into the reconstruction layer."""

    transition: TransitionKind
    entry: AtomEntry
    generator: str
    dim: int
    n_support: int
    shots_per_point: int | None = None
    seed: int | None = None


@dataclass(frozen=True, eq=False)
class PolarizationSignal:
    """<sigma_+>(T) samples on a time grid, with optional shot noise bars."""

    grid: TimeGrid
    values: np.ndarray
    meta: SignalMeta
    stderr_re: np.ndarray | None = None
    stderr_im: np.ndarray | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True).reshape(-1)
        if v.size != len(self.grid):
            raise ValueError("values length must match grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        for name in ("stderr_re", "stderr_im"):
            e = getattr(self, name)
            if e is not None:
                e = np.array(e, dtype=np.float64, copy=True).reshape(-1)
                if e.size != v.size:
                    raise ValueError(f"{name} length must match grid")
                e.setflags(write=False)
                object.__setattr__(self, name, e)

    @property
    def has_noise(self) -> bool:
        return self.stderr_re is not None


@dataclass(frozen=True)
class ShotSample:
    """One time point: spin-axis estimates and their standard errors."""

    sx: float
    sy: float
    stderr_x: float
    stderr_y: float

    @property
    def sigma_plus(self) -> complex:
        return complex(self.sx, self.sy)


# ---------------------------------------------------------------------------
# frequencies and weights


def pair_frequency(n, kind: TransitionKind):
    """Exchange frequency of the |e,n> <-> |g,n+order> pair.

    Accepts scalars or arrays; n < 0 is invalid.
    """
    n = np.asarray(n, dtype=np.float64)
    if np.any(n < 0):
        raise ValueError("photon number must be >= 0")
    if kind is TransitionKind.ONE_PHOTON:
        out = np.sqrt(n + 1.0)
    else:
        out = np.sqrt((n + 1.0) * (n + 2.0))
    return out if out.ndim else float(out)


def delta_frequencies(n, kind: TransitionKind):
    """Sum and difference sidebands of the excited-entry signal term n.

    Returns (plus, minus) with plus = f_hi + f_lo, minus = f_hi - f_lo;
    the index n is the lower index of the coherence c*_{n+order} c_n.
    For one photon: sqrt(n+2) +- sqrt(n+1). For two photons:
    sqrt((n+3)(n+4)) +- sqrt((n+1)(n+2)), which squeezes toward
    (2n+5)/... -> minus ~ 2 as n grows.
    """
    n = np.asarray(n, dtype=np.float64)
    if np.any(n < 0):
        raise ValueError("coherence index must be >= 0")
    if kind is TransitionKind.ONE_PHOTON:
        hi = np.sqrt(n + 2.0)
        lo = np.sqrt(n + 1.0)
    else:
        hi = np.sqrt((n + 3.0) * (n + 4.0))
        lo = np.sqrt((n + 1.0) * (n + 2.0))
    plus, minus = hi + lo, hi - lo
    if plus.ndim:
        return plus, minus
    return float(plus), float(minus)


def coherence_weights(state: FockVector, kind: TransitionKind) -> np.ndarray:
    """w_n = conj(c_{n+order}) c_n for n = 0 .. dim-1-order."""
    k = kind.order
    c = state.amps
    return np.conj(c[k:]) * c[: c.size - k]


def support_bound(state: FockVector) -> int:
    """Smallest n such that levels 0..n hold all but 1e-12 of the weight."""
    w = np.abs(state.amps) ** 2
    total = w.sum()
    if total == 0:
        return 0
    cum = np.cumsum(w) / total
    idx = np.searchsorted(cum, 1.0 - _SUPPORT_TOL)
    return int(min(idx, w.size - 1))


def _check_edge(state: FockVector, kind: TransitionKind):
    """Top 2*order amplitudes must be negligible or the pair structure is cut."""
    k = 2 * kind.order
    c = state.amps
    norm = np.linalg.norm(c)
    if norm == 0:
        return
    edge = np.max(np.abs(c[-k:])) / norm
    if edge > _EDGE_AMP_TOL:
        raise TruncationEdgeError(
            f"state has relative amplitude {edge:.3e} within {k} levels of the "
            f"truncation edge; enlarge dim before generating signals"
        )


def _entry_frequencies(kind: TransitionKind, entry: AtomEntry, n: np.ndarray):
    """(hi, lo) frequency arrays of the signal term at lower index n."""
    if entry is AtomEntry.EXCITED:
        if kind is TransitionKind.ONE_PHOTON:
            return np.sqrt(n + 2.0), np.sqrt(n + 1.0)
        return np.sqrt((n + 3.0) * (n + 4.0)), np.sqrt((n + 1.0) * (n + 2.0))
    if kind is TransitionKind.ONE_PHOTON:
        return np.sqrt(n + 1.0), np.sqrt(n)
    return np.sqrt((n + 1.0) * (n + 2.0)), np.sqrt(np.maximum(n * (n - 1.0), 0.0))


# ---------------------------------------------------------------------------
# signal generators


def _meta(state, kind, entry, generator, shots=None, seed=None) -> SignalMeta:
    return SignalMeta(
        transition=kind,
        entry=entry,
        generator=generator,
        dim=state.space.dim,
        n_support=support_bound(state),
        shots_per_point=shots,
        seed=seed,
    )


def signal_closed_form(
    state: FockVector, grid: TimeGrid, kind: TransitionKind, entry: AtomEntry
) -> PolarizationSignal:
    """Noise-free <sigma_+>(T) from the analytic coherence sum."""
    _check_edge(state, kind)
    w = coherence_weights(state, kind)
    n = np.arange(w.size, dtype=np.float64)
    hi, lo = _entry_frequencies(kind, entry, n)
    T = grid.times
    vals = np.zeros(T.size, dtype=np.complex128)
    sign = -1.0j if entry is AtomEntry.EXCITED else 1.0j
    # accumulate per coherence term; hi rides in cos for excited entry and
    # in sin for ground entry
    for j in range(w.size):
        if w[j] == 0:
            continue
        if entry is AtomEntry.EXCITED:
            vals += (sign * w[j]) * (np.cos(T * hi[j]) * np.sin(T * lo[j]))
        else:
            vals += (sign * w[j]) * (np.sin(T * hi[j]) * np.cos(T * lo[j]))
    return PolarizationSignal(grid, vals, _meta(state, kind, entry, "closed_form"))


def evolved_components(
    state: FockVector, times: np.ndarray, kind: TransitionKind, entry: AtomEntry
):
    """Propagated joint state, split by atomic level.

    Returns (psi_e, psi_g) with shape (len(times), dim); row t holds the
    field amplitudes conditioned on the atom being excited / ground. Levels
    with no exchange partner inside the space evolve trivially.
    """
    c = state.amps
    dim = c.size
    k = kind.order
    T = np.asarray(times, dtype=np.float64).reshape(-1)
    psi_e = np.zeros((T.size, dim), dtype=np.complex128)
    psi_g = np.zeros((T.size, dim), dtype=np.complex128)
    if entry is AtomEntry.EXCITED:
        # |e,n> couples to |g,n+k> at pair_frequency(n) when n+k < dim
        f = np.zeros(dim)
        m = np.arange(dim - k)
        f[: dim - k] = pair_frequency(m, kind)
        phases = np.outer(T, f)
        psi_e = np.cos(phases) * c[None, :]
        psi_g[:, k:] = -1j * np.sin(phases[:, : dim - k]) * c[None, : dim - k]
    else:
        # |g,m> couples down to |e,m-k> at pair_frequency(m-k)
        g = np.zeros(dim)
        m = np.arange(k, dim)
        g[k:] = pair_frequency(m - k, kind)
        phases = np.outer(T, g)
        psi_g = np.cos(phases) * c[None, :]
        psi_e[:, : dim - k] = -1j * np.sin(phases[:, k:]) * c[None, k:]
    return psi_e, psi_g


def signal_unitary(
    state: FockVector, grid: TimeGrid, kind: TransitionKind, entry: AtomEntry
) -> PolarizationSignal:
    """<sigma_+>(T) from the propagated joint state (independent route)."""
    _check_edge(state, kind)
    vals = np.zeros(len(grid), dtype=np.complex128)
    # chunk the time axis so the (T, dim) trig tables stay small
    chunk = max(1, 2_000_000 // max(state.space.dim, 1))
    T = grid.times
    for s in range(0, T.size, chunk):
        pe, pg = evolved_components(state, T[s : s + chunk], kind, entry)
        vals[s : s + chunk] = np.sum(np.conj(pe) * pg, axis=1)
    return PolarizationSignal(grid, vals, _meta(state, kind, entry, "unitary"))


# ---------------------------------------------------------------------------
# projective sampling


def rotated_excited_probability(psi_e: np.ndarray, psi_g: np.ndarray, axis: str):
    """Probability of the +1/2 outcome of sigma_x or sigma_y.

    psi_e, psi_g are joint-state components (last axis = field); the x
    rotation maps the +x spin state to the excited level, so
    p_x = |psi_e + psi_g|^2 / 2 and p_y = |psi_e - i psi_g|^2 / 2.
    """
    if axis == "x":
        comb = psi_e + psi_g
    elif axis == "y":
        comb = psi_e - 1j * psi_g
    else:
        raise ValueError(f"unknown spin axis {axis!r}")
    p = 0.5 * np.sum(np.abs(comb) ** 2, axis=-1)
    return np.clip(p, 0.0, 1.0)


def sample_inversion(p: float, shots: int, rng: np.random.Generator):
    """Estimate 2p-1 from `shots` Bernoulli draws.

    Returns (estimate, stderr) with stderr = 2 sqrt(phat (1-phat) / M);
    p = 1 gives exactly (+1.0, 0.0).
    """
    successes = int(rng.binomial(shots, p))
    phat = successes / shots
    est = 2.0 * phat - 1.0
    stderr = 2.0 * np.sqrt(phat * (1.0 - phat) / shots)
    return est, float(stderr)


def _point_rng(seed: int, point_index: int, axis_index: int) -> np.random.Generator:
    # seeding by (seed, point, axis) keeps sweeps identical for any worker count
    return np.random.default_rng((seed, point_index, axis_index))


def sample_sigma_xy(
    state: FockVector,
    t: float,
    kind: TransitionKind,
    entry: AtomEntry,
    shots: int,
    seed: int = 0,
    point_index: int = 0,
) -> ShotSample:
    """Simulated projective readout of both spin axes at one time point.

    sigma_x and sigma_y carry the half-Pauli normalization, so each axis
    estimate is (2 S/M - 1)/2 and |<sigma_+>| <= 1/2.
    """
    pe, pg = evolved_components(state, np.array([t]), kind, entry)
    px = float(rotated_excited_probability(pe, pg, "x")[0])
    py = float(rotated_excited_probability(pe, pg, "y")[0])
    inv_x, err_x = sample_inversion(px, shots, _point_rng(seed, point_index, 0))
    inv_y, err_y = sample_inversion(py, shots, _point_rng(seed, point_index, 1))
    return ShotSample(inv_x / 2.0, inv_y / 2.0, err_x / 2.0, err_y / 2.0)


def signal_from_shots(
    state: FockVector,
    grid: TimeGrid,
    kind: TransitionKind,
    entry: AtomEntry,
    cfg: ShotConfig,
) -> PolarizationSignal:
    """<sigma_+>(T) estimated from M projective shots per point and axis.

    cfg.shots_per_point = None is the exact limit: values equal the
    closed-form signal and the error bars are zero.
    """
    _check_edge(state, kind)
    if cfg.shots_per_point is None:
        exact = signal_closed_form(state, grid, kind, entry)
        zeros = np.zeros(len(grid))
        return PolarizationSignal(
            grid,
            exact.values,
            _meta(state, kind, entry, "shots_exact", None, cfg.seed),
            stderr_re=zeros,
            stderr_im=zeros.copy(),
        )
    M = cfg.shots_per_point
    T = grid.times
    pe, pg = evolved_components(state, T, kind, entry)
    px = rotated_excited_probability(pe, pg, "x")
    py = rotated_excited_probability(pe, pg, "y")
    vals = np.zeros(T.size, dtype=np.complex128)
    err_re = np.zeros(T.size)
    err_im = np.zeros(T.size)
    for i in range(T.size):
        inv_x, ex = sample_inversion(float(px[i]), M, _point_rng(cfg.seed, i, 0))
        inv_y, ey = sample_inversion(float(py[i]), M, _point_rng(cfg.seed, i, 1))
        vals[i] = complex(inv_x / 2.0, inv_y / 2.0)
        err_re[i] = ex / 2.0
        err_im[i] = ey / 2.0
    meta = _meta(state, kind, entry, "shots", M, cfg.seed)
    return PolarizationSignal(grid, vals, meta, stderr_re=err_re, stderr_im=err_im)
