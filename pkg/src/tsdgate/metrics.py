"""
Gate-quality functionals.

"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import jit

from tsdgate import qmodel


def cnot_matrix():
    """CNOT over (|00>, |01>, |10>, |11>), control first."""
    u = np.eye(4, dtype=complex)
    u[2:, 2:] = [[0, 1], [1, 0]]
    return u


def cz_matrix():
    return np.diag([1, 1, 1, -1]).astype(complex)


def cphase_matrix(alpha, beta):
    """diag(1, e^{i alpha}, e^{i alpha}, e^{i beta}), the two-qubit phase gate family."""
    return np.diag([1, np.exp(1j * alpha), np.exp(1j * alpha), np.exp(1j * beta)])


@dataclass(frozen=True)
class IdealGate:
    """Target map of a two-qubit gate.

    Attributes
    ----------
    name : str
    u_ideal : ndarray
        4x4 unitary over (|00>, |01>, |10>, |11>).
    """

    name: str = "cnot"
    u_ideal: np.ndarray = field(default_factory=cnot_matrix)

    def __post_init__(self):
        u = np.asarray(self.u_ideal, dtype=complex)
        if u.shape != (4, 4):
            raise ValueError(f"u_ideal must be 4x4, got {u.shape}")
        if qmodel.unitarity_error(u) > qmodel.UNITARY_ATOL:
            raise ValueError("u_ideal is not unitary")
        object.__setattr__(self, "u_ideal", u)

    def rotation_error(self, u_realized):
        return rotation_error(u_realized, self.u_ideal)


@jit(nopython=True)
def trace_functional(u_realized, u_ideal):
    """1 - (|Tr(U^dag V)|^2 + Tr(U^dag V V^dag U)) / (n(n+1)) for one pair."""
    n = u_ideal.shape[0]
    m = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            acc = 0j
            for l in range(n):
                acc += np.conj(u_ideal[l, i]) * u_realized[l, j]
            m[i, j] = acc
    trace = 0j
    for i in range(n):
        trace += m[i, i]
    # Tr(M M^dagger) with M = U^dag V is the squared Frobenius norm of M.
    frobenius = 0.0
    for i in range(n):
        for j in range(n):
            frobenius += abs(m[i, j]) ** 2
    return 1.0 - (abs(trace) ** 2 + frobenius) / (n * (n + 1))


@jit(nopython=True)
def trace_functional_batch(u_realized, u_ideal):
    out = np.empty(u_realized.shape[0])
    for k in range(u_realized.shape[0]):
        out[k] = trace_functional(u_realized[k], u_ideal)
    return out


def _check_pair(u_realized, u_ideal):
    u_realized = np.ascontiguousarray(u_realized, dtype=np.complex128)
    u_ideal = np.ascontiguousarray(u_ideal, dtype=np.complex128)
    if u_ideal.shape != (4, 4) or u_realized.shape[-2:] != (4, 4):
        raise ValueError(
            f"rotation_error needs 4x4 maps, got {u_realized.shape} and {u_ideal.shape}"
        )
    return u_realized, u_ideal


def rotation_error(u_realized, u_ideal=None):
    """Rotation error 1 - (|Tr(U^dag V)|^2 + Tr(U^dag V V^dag U)) / 20.

    Parameters
    ----------
    u_realized : ndarray
        Realized 4x4 map V; leaked population (columns of norm < 1) is kept.
    u_ideal : ndarray, optional
        Ideal 4x4 gate U; defaults to the CNOT.

    Returns
    -------
    float

    Raises
    ------
    ValueError
        Either map is not 4x4.
    """
    u_ideal = cnot_matrix() if u_ideal is None else u_ideal
    u_realized, u_ideal = _check_pair(u_realized, u_ideal)
    if u_realized.ndim != 2:
        raise ValueError("use rotation_errors for stacks of maps")
    return float(trace_functional(u_realized, u_ideal))


def rotation_errors(u_stack, u_ideal=None):
    """rotation_error over a stack of maps, shape (..., 4, 4)."""
    u_ideal = cnot_matrix() if u_ideal is None else u_ideal
    u_stack, u_ideal = _check_pair(u_stack, u_ideal)
    shape = u_stack.shape[:-2]
    flat = np.ascontiguousarray(u_stack.reshape((-1, 4, 4)))
    return trace_functional_batch(flat, u_ideal).reshape(shape)


def bell_target():
    """(|00> + |11>)/sqrt(2) over the computational basis."""
    return qmodel.AtomState.superposition(qmodel.BASIS_COMPUTATIONAL, {"00": 1, "11": 1})


def bell_error(psi_final):
    """1 - |<Phi|psi>|^2 with Phi = (|00> + |11>)/sqrt(2).

    ``psi_final`` may live on any basis containing |00> and |11>; amplitudes
    outside the computational states count as loss.
    """
    if "00" not in psi_final.basis or "11" not in psi_final.basis:
        raise ValueError("psi_final must be expressed over a basis with |00> and |11>")
    overlap = (psi_final.amplitude("00") + psi_final.amplitude("11")) / math.sqrt(2)
    return float(1 - abs(overlap) ** 2)


def bell_error_from_gate(u_realized):
    """Bell error of the map applied to (|00> + |10>)/sqrt(2)."""
    u = np.asarray(u_realized)
    psi = (u[..., :, 0] + u[..., :, 2]) / math.sqrt(2)
    overlap = (psi[..., 0] + psi[..., 3]) / math.sqrt(2)
    return 1 - np.abs(overlap) ** 2


def truth_table_error(u_realized, u_ideal=None):
    """1 - min over inputs of |<ideal output|realized column>|^2."""
    u_ideal = cnot_matrix() if u_ideal is None else np.asarray(u_ideal)
    u = np.asarray(u_realized)
    if u.shape != (4, 4):
        raise ValueError(f"truth_table_error needs a 4x4 map, got {u.shape}")
    overlaps = np.abs(np.einsum("ij,ij->j", u_ideal.conj(), u)) ** 2
    return float(1 - overlaps.min())


def figure_of_merit(t_coherence, t_gate):
    """Ratio of coherence time to gate duration."""
    if not (t_coherence > 0 and t_gate > 0):
        raise ValueError("t_coherence and t_gate must be > 0")
    return t_coherence / t_gate


def gate_duration(omega_t):
    """sqrt(6) pi / omega_t in s, the two pulses without the gap."""
    if not omega_t > 0:
        raise ValueError(f"omega_t must be > 0, got {omega_t}")
    return math.sqrt(6) * math.pi / omega_t
