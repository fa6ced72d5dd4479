"""
Propagation of two-atom states under constant and Doppler-modulated drives.

Three routes are available:

    * ``evolve_constant``: exp(-i t H) from a Hermitian eigendecomposition;
    * ``evolve_timedep``: fixed-step unitary substeps with the step count
      doubled until the result stops changing;
    * the rotating frame: every drive in this package is a pure tone
      exp(i f t), so a diagonal gauge D(t) = diag(exp(i theta t)) with
      theta_row - theta_col = f turns the segment into a constant matrix
      H(0) + diag(theta). The lab-frame propagator is then
      U(t1, t0) = D(t1) exp(-i (t1 - t0) H_rot) D(t0)^dagger.

"""

import math
import logging
from collections import deque
from dataclasses import dataclass

import numpy as np
from numba import jit
from scipy.integrate import trapezoid

from tsdgate import qmodel
from tsdgate.qmodel import AtomState

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
INITIAL_STEPS = 16
MAX_STEPS = 2**18

# Gauss-Legendre nodes and weights of the fourth-order commutator-free scheme.
_CF4_NODES = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
_CF4_ALPHA = ((3 - 2 * math.sqrt(3)) / 12, (3 + 2 * math.sqrt(3)) / 12)


class ConvergenceError(RuntimeError):
    """Step doubling did not reach the requested tolerance.

    Attributes
    ----------
    distance : float
        Max-norm difference between the last two iterates.
    steps : int
        Substep count of the last iterate.
    """

    def __init__(self, message, distance, steps):
        super().__init__(message)
        self.distance = distance
        self.steps = steps


@dataclass
class PropagationRecord:
    """Population time series of one propagation.

    Attributes
    ----------
    basis : tuple of str
    times : ndarray
        Monotone sample times in s.
    populations : ndarray
        Shape (len(times), len(basis)).
    final_unitary : ndarray
        Propagator over the whole recorded interval.
    """

    basis: tuple
    times: np.ndarray
    populations: np.ndarray
    final_unitary: np.ndarray = None

    def population(self, label):
        """Time series of one basis population (zeros if ``label`` is absent)."""
        if label not in self.basis:
            return np.zeros_like(self.times)
        return self.populations[:, self.basis.index(label)]

    def time_integral(self, labels):
        """Trapezoidal integral of the summed populations of ``labels`` in s."""
        total = sum(self.population(label) for label in labels)
        if np.isscalar(total):
            return 0.0
        return float(trapezoid(total, self.times))

    def max_population(self, label):
        return float(np.max(self.population(label)))

    def norm_drift(self):
        """max |sum of populations - 1| over the samples."""
        return float(np.max(np.abs(self.populations.sum(axis=1) - 1)))

    def concatenate(self, other):
        """Join a record that starts where this one ends."""
        if self.basis != other.basis:
            raise ValueError("Records over different bases cannot be joined")
        skip = 1 if other.times.size and self.times.size and (
            other.times[0] == self.times[-1]
        ) else 0
        final = None
        if self.final_unitary is not None and other.final_unitary is not None:
            final = other.final_unitary @ self.final_unitary
        return PropagationRecord(
            self.basis,
            np.concatenate([self.times, other.times[skip:]]),
            np.concatenate([self.populations, other.populations[skip:]]),
            final,
        )


def _as_amplitudes(psi0, dim):
    amplitudes = psi0.amplitudes if isinstance(psi0, AtomState) else np.asarray(psi0)
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if amplitudes.shape != (dim,):
        raise ValueError(f"State of shape {amplitudes.shape} does not fit dimension {dim}")
    return amplitudes


def expm_hermitian(h, t):
    """exp(-i t h) for a Hermitian matrix or a stack of them."""
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * w * t)
    return (v * phases[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def unitary_constant(h, t):
    """Propagator exp(-i t h) of a constant Hermitian matrix.

    Parameters
    ----------
    h : ndarray
        Hermitian matrix in rad/s.
    t : float
        Duration in s, >= 0.

    Returns
    -------
    ndarray
        Unitary matrix.

    Raises
    ------
    ValueError
        ``h`` is not Hermitian or ``t`` < 0.
    """
    qmodel.check_hermitian(h)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return expm_hermitian(np.asarray(h, dtype=complex), t)


def evolve_constant(h, t, psi0):
    """Return exp(-i t h)|psi0> as an AtomState over the basis of ``psi0``."""
    if not isinstance(psi0, AtomState):
        raise TypeError("psi0 must be an AtomState")
    u = unitary_constant(h, t)
    return AtomState(psi0.basis, u @ _as_amplitudes(psi0, u.shape[0]))


def sample_constant(h, t0, t1, psi0, basis, n_samples=201):
    """Exact population samples of a constant-Hamiltonian segment.

    Returns
    -------
    PropagationRecord
        ``n_samples`` equally spaced samples over [t0, t1].
    """
    h = qmodel.check_hermitian(h)
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    amplitudes = _as_amplitudes(psi0, h.shape[0])
    w, v = np.linalg.eigh(h)
    times = np.linspace(t0, t1, n_samples)
    coefficients = v.conj().T @ amplitudes
    states = (np.exp(-1j * np.outer(times - t0, w)) * coefficients) @ v.T
    return PropagationRecord(
        tuple(basis),
        times,
        np.abs(states) ** 2,
        expm_hermitian(h, t1 - t0),
    )


@jit(nopython=True)
def accumulate_steps(steps, vector):
    """Multiply substep propagators in time order.

    Parameters
    ----------
    steps : ndarray
        Substep unitaries, shape (n, d, d), earliest first.
    vector : ndarray
        Initial state, shape (d,).

    Returns
    -------
    u : ndarray
        Product steps[n-1] ... steps[0].
    populations : ndarray
        |amplitudes|^2 of the vector before the first and after every substep,
        shape (n + 1, d).
    """
    n, d, _ = steps.shape
    u = np.eye(d).astype(np.complex128)
    populations = np.empty((n + 1, d))
    for i in range(d):
        populations[0, i] = abs(vector[i]) ** 2
    for k in range(n):
        nxt = np.zeros((d, d), dtype=np.complex128)
        for i in range(d):
            for l in range(d):
                s = steps[k, i, l]
                if s != 0:
                    for j in range(d):
                        nxt[i, j] += s * u[l, j]
        u = nxt
        for i in range(d):
            acc = 0j
            for j in range(d):
                acc += u[i, j] * vector[j]
            populations[k + 1, i] = abs(acc) ** 2
    return u, populations


def _sample_hamiltonian(h_of_t, times):
    if hasattr(h_of_t, "batch"):
        return h_of_t.batch(times)
    return np.stack([np.asarray(h_of_t(t), dtype=complex) for t in times])


def substep_unitaries(h_of_t, t0, t1, n_steps, scheme="midpoint"):
    """Per-substep propagators over [t0, t1], shape (n_steps, d, d).

    ``scheme="midpoint"`` samples the Hamiltonian at each substep midpoint;
    ``scheme="magnus4"`` uses two Gauss-point exponentials per substep
    (fourth order, for stiff blocks with a finite |rr> energy).
    """
    dt = (t1 - t0) / n_steps
    starts = t0 + dt * np.arange(n_steps)
    if scheme == "midpoint":
        return expm_hermitian(_sample_hamiltonian(h_of_t, starts + dt / 2), dt)
    if scheme == "magnus4":
        h1 = _sample_hamiltonian(h_of_t, starts + _CF4_NODES[0] * dt)
        h2 = _sample_hamiltonian(h_of_t, starts + _CF4_NODES[1] * dt)
        first = expm_hermitian(_CF4_ALPHA[1] * h1 + _CF4_ALPHA[0] * h2, dt)
        second = expm_hermitian(_CF4_ALPHA[0] * h1 + _CF4_ALPHA[1] * h2, dt)
        return second @ first
    raise ValueError(f"Unknown scheme {scheme!r}; use 'midpoint' or 'magnus4'")


def _converge(h_of_t, t0, t1, vector, tol, scheme, max_steps, initial_steps):
    n_steps = initial_steps
    u, populations = accumulate_steps(
        substep_unitaries(h_of_t, t0, t1, n_steps, scheme), vector
    )
    distance = math.inf
    while True:
        if 2 * n_steps > max_steps:
            raise ConvergenceError(
                f"No convergence to {tol:g} within {max_steps} substeps "
                f"(distance {distance:.3e})",
                distance,
                n_steps,
            )
        n_steps *= 2
        u_next, populations_next = accumulate_steps(
            substep_unitaries(h_of_t, t0, t1, n_steps, scheme), vector
        )
        distance = float(np.max(np.abs(u_next @ vector - u @ vector)))
        logger.debug("substeps %d: distance %.3e", n_steps, distance)
        u, populations = u_next, populations_next
        if distance < tol:
            return u, populations, n_steps


def evolve_timedep(
    h_of_t,
    t0,
    t1,
    psi0,
    tol=DEFAULT_TOL,
    scheme="midpoint",
    max_steps=MAX_STEPS,
    initial_steps=INITIAL_STEPS,
):
    """Solve i d|psi>/dt = H(t)|psi> with convergence-controlled substeps.

    Parameters
    ----------
    h_of_t : callable
        Time-indexed Hamiltonian source; ``h_of_t(t)`` returns a Hermitian
        matrix. Objects with a ``batch(times)`` method are sampled in one call.
    t0, t1 : float
        Interval in s, t1 >= t0.
    psi0 : AtomState
        Initial state.
    tol : float, default 1e-10
        Max-norm change of the final state at which doubling stops.
    scheme : {"midpoint", "magnus4"}
        Substep rule.
    max_steps : int, default 2**18
        Largest substep count tried.

    Returns
    -------
    state : AtomState
        Final state.
    record : PropagationRecord
        Populations at every accepted substep and the interval propagator.

    Raises
    ------
    ValueError
        ``t1 < t0`` or ``tol <= 0``.
    ConvergenceError
        Tolerance not reached within ``max_steps`` substeps.
    """
    if t1 < t0:
        raise ValueError(f"t1={t1} must be >= t0={t0}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if not isinstance(psi0, AtomState):
        raise TypeError("psi0 must be an AtomState")
    vector = psi0.amplitudes
    if t1 == t0:
        record = PropagationRecord(
            psi0.basis,
            np.array([t0]),
            psi0.populations()[None, :],
            np.eye(vector.size, dtype=complex),
        )
        return psi0, record
    u, populations, n_steps = _converge(
        h_of_t, t0, t1, vector, tol, scheme, max_steps, initial_steps
    )
    record = PropagationRecord(
        psi0.basis, np.linspace(t0, t1, n_steps + 1), populations, u
    )
    return AtomState(psi0.basis, u @ vector, check_norm=False), record


def timedep_unitary(
    h_of_t, t0, t1, dim, tol=DEFAULT_TOL, scheme="midpoint", max_steps=MAX_STEPS
):
    """Full propagator over [t0, t1], converged on every column."""
    if t1 == t0:
        return np.eye(dim, dtype=complex)
    columns = []
    for j in range(dim):
        vector = np.zeros(dim, dtype=complex)
        vector[j] = 1
        u, _, _ = _converge(h_of_t, t0, t1, vector, tol, scheme, max_steps, INITIAL_STEPS)
        columns.append(u[:, j])
    return np.stack(columns, axis=1)


def gauge_coefficients(driven):
    """Integer gauge rates per unit k v for every basis state.

    Returns
    -------
    (ndarray, ndarray)
        ``(a_c, a_t)`` such that theta = k (v_c a_c + v_t a_t) satisfies
        theta_row - theta_col = tone frequency for every coupling.

    Raises
    ------
    ValueError
        The tones around a closed coupling loop do not add up, so no diagonal
        gauge removes them.
    """
    dim = driven.dim
    coefficients = np.full((dim, 2), np.nan)
    neighbours = {i: [] for i in range(dim)}
    for c in driven.couplings:
        neighbours[c.col].append((c.row, np.array(c.tone, dtype=float)))
        neighbours[c.row].append((c.col, -np.array(c.tone, dtype=float)))
    roots = [driven.basis.index(a) for a in driven.anchors if a in driven.basis]
    roots += list(range(dim))
    for root in roots:
        if not np.isnan(coefficients[root, 0]):
            continue
        coefficients[root] = 0
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for other, tone in neighbours[node]:
                value = coefficients[node] + tone
                if np.isnan(coefficients[other, 0]):
                    coefficients[other] = value
                    queue.append(other)
                elif not np.array_equal(coefficients[other], value):
                    raise ValueError(
                        f"Tones around the loop through {driven.basis[other]!r} are "
                        "inconsistent; no rotating frame exists"
                    )
    return coefficients[:, 0], coefficients[:, 1]


@dataclass
class RotatingFrame:
    """Constant-matrix equivalent of a pure-tone Hamiltonian.

    Couplings carry <upper|H|lower> = (Omega/2) exp(+i sigma k v t), so an
    excited level sits sigma k v above the level it is driven from. The
    conjugate convention gives -sigma k v; at rest every Hamiltonian here is
    real, so it amounts to reversing all velocities and conjugates the gate
    map.

    Attributes
    ----------
    basis : tuple of str
    hamiltonian : ndarray
        H(0) + diag(theta), constant and Hermitian.
    theta : ndarray
        Gauge rates in rad/s.
    """

    basis: tuple
    hamiltonian: np.ndarray
    theta: np.ndarray

    def gauge(self, t):
        """Diagonal of D(t) = diag(exp(i theta t))."""
        return np.exp(1j * self.theta * t)

    def propagator(self, t0, t1):
        """Lab-frame U(t1, t0)."""
        u = expm_hermitian(self.hamiltonian, t1 - t0)
        return self.gauge(t1)[:, None] * u * np.conj(self.gauge(t0))[None, :]

    def record(self, t0, t1, psi0, n_samples=201):
        """Populations over [t0, t1]; the gauge is a pure phase per state."""
        phi0 = np.conj(self.gauge(t0)) * _as_amplitudes(psi0, len(self.basis))
        record = sample_constant(self.hamiltonian, t0, t1, phi0, self.basis, n_samples)
        record.final_unitary = self.propagator(t0, t1)
        return record


def rotating_frame(driven):
    """RotatingFrame of a DrivenHamiltonian at its velocities."""
    a_c, a_t = gauge_coefficients(driven)
    theta = driven.wavevector_k * (driven.v_c * a_c + driven.v_t * a_t)
    return RotatingFrame(
        driven.basis, driven.static_part() + np.diag(theta), theta
    )


def block_hamiltonian(cfg, segment, v_c=0.0, v_t=0.0, block="c1"):
    """DrivenHamiltonian of one block during ``segment``."""
    if block == "c1":
        return qmodel.c1_hamiltonian(
            cfg, segment.omega_t_sign, segment.channel_k_signs, v_c, v_t
        )
    if block == "c0":
        return qmodel.c0_hamiltonian(
            cfg, segment.omega_t_sign, segment.channel_k_signs, v_c, v_t
        )
    raise ValueError(f"block must be 'c0' or 'c1', got {block!r}")


def rotating_frame_equivalent(cfg, segment, v_c, v_t, block="c1"):
    """Constant Hermitian matrix equivalent to the Doppler-modulated segment.

    Parameters
    ----------
    cfg : GateChannelConfig
    segment : PulseSegment
    v_c, v_t : float
        Velocities in m/s.
    block : {"c1", "c0"}

    Returns
    -------
    ndarray
        H(0) + diag(theta). Conjugated by D(t) = diag(exp(i theta t)) at the
        segment endpoints its evolution equals the lab-frame evolution. The
        gauge is anchored at |11> (c1) or |00> (c0); under the phase
        convention of ``qmodel`` the |r0> entry shifts by +sigma_c k v_c.
    """
    return rotating_frame(block_hamiltonian(cfg, segment, v_c, v_t, block)).hamiltonian


def batched_frame_unitaries(driven, v_c, v_t, t0, t1):
    """Lab-frame propagators of ``driven`` for arrays of velocities.

    The static matrix does not depend on velocity and the gauge rates are
    linear in (v_c, v_t), so every velocity pair shares one stacked
    eigendecomposition.

    Parameters
    ----------
    driven : DrivenHamiltonian
        Template; its own velocities are ignored.
    v_c, v_t : array_like
        Velocities in m/s, broadcast to a common shape (n,).
    t0, t1 : float
        Segment endpoints in s.

    Returns
    -------
    ndarray
        Shape (n, d, d).
    """
    v_c, v_t = np.broadcast_arrays(
        np.atleast_1d(np.asarray(v_c, dtype=float)),
        np.atleast_1d(np.asarray(v_t, dtype=float)),
    )
    a_c, a_t = gauge_coefficients(driven)
    theta = driven.wavevector_k * (np.outer(v_c, a_c) + np.outer(v_t, a_t))
    h = np.broadcast_to(driven.static_part(), (v_c.size, driven.dim, driven.dim)).copy()
    h[:, np.arange(driven.dim), np.arange(driven.dim)] += theta
    u = expm_hermitian(h, t1 - t0)
    return (
        np.exp(1j * theta * t1)[:, :, None] * u * np.exp(-1j * theta * t0)[:, None, :]
    )


def free_unitary(driven, duration):
    """Propagator of the diagonal part alone (drives off)."""
    return np.diag(np.exp(-1j * driven.diagonal * duration))
