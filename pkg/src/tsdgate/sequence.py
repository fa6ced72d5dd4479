"""
TSD pulse sequences, the realized gate map and protocol-level demonstrations.

The CNOT sequence is two pulses of duration pi/omega_c separated by a gap
epsilon. The second pulse flips the sign of both target Rabi frequencies
(spin echo for the c0 block). In case 2 the second pulse also reverses the
target beams, which flips the wavevector signs of the two target channels
(``case2_scope="target"``, the default). ``case2_scope="all"`` reverses the
control beam as well.

Timeline (absolute time, used in every Doppler phase):

    pulse 1 : [0, t_pi)
    gap     : [t_pi, t_pi + epsilon)
    pulse 2 : [t_pi + epsilon, 2 t_pi + epsilon)

"""

import math
import time
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from tsdgate import metrics
from tsdgate import qmodel
from tsdgate import propagator
from tsdgate.qmodel import AtomState, PulseSegment

logger = logging.getLogger(__name__)

DESIGN_RATIO = math.sqrt(6) / 2
RATIO_RTOL = 1e-9
CASE2_SCOPES = ("all", "target")
INPUT_LABELS = qmodel.BASIS_COMPUTATIONAL
DECAY_LABELS = ("0r", "1r", "r0", "r1")
# both atoms can decay from |rr>
DOUBLE_EXCITATION_WEIGHT = 2
COMPLETION_ATOL = 1e-9


def _block_of(label):
    return "c0" if label[0] == "0" else "c1"


def _block_basis(cfg, block):
    return qmodel.BASIS_C0 if block == "c0" else cfg.c1_basis


def check_design_ratio(cfg, override_ratio=False):
    """Raise ValueError unless omega_t/omega_c = sqrt(6)/2 or the check is overridden."""
    ratio = cfg.omega_t / cfg.omega_c
    if override_ratio:
        return ratio
    if abs(ratio - DESIGN_RATIO) > RATIO_RTOL * DESIGN_RATIO:
        raise ValueError(
            f"omega_t/omega_c = {ratio:.12g} differs from the design value "
            f"sqrt(6)/2 = {DESIGN_RATIO:.12g}; pass override_ratio=True for "
            "sensitivity studies"
        )
    if cfg.omega_t2 != cfg.omega_t:
        raise ValueError("omega_t2 differs from omega_t; pass override_ratio=True")
    return ratio


def tsd_schedule(cfg, case_id=1, epsilon=0.0, case2_scope="target"):
    """The two PulseSegments of the TSD CNOT.

    Parameters
    ----------
    cfg : GateChannelConfig
    case_id : {1, 2}
        Case 2 reverses the target beams during the second pulse.
    epsilon : float
        Gap before the second pulse in s.
    case2_scope : {"target", "all"}
        Channels whose wavevector sign flips in case 2, the two target
        channels by default.

    Returns
    -------
    tuple of PulseSegment
    """
    if case_id not in (1, 2):
        raise ValueError(f"case_id must be 1 or 2, got {case_id}")
    if case2_scope not in CASE2_SCOPES:
        raise ValueError(f"case2_scope must be one of {CASE2_SCOPES}, got {case2_scope!r}")
    t_pi = cfg.pulse_duration
    if case_id == 1:
        signs = (1, 1, 1)
    elif case2_scope == "all":
        signs = (-1, -1, -1)
    else:
        signs = (1, -1, -1)
    return (
        PulseSegment(t_pi, omega_t_sign=1, channel_k_signs=(1, 1, 1)),
        PulseSegment(t_pi, omega_t_sign=-1, channel_k_signs=signs, gap_before=epsilon),
    )


def timeline(schedule):
    """Yield ``(segment, gap_start, pulse_start, pulse_end)`` in absolute time."""
    t = 0.0
    for segment in schedule:
        gap_start = t
        t_start = t + segment.gap_before
        t = t_start + segment.duration
        yield segment, gap_start, t_start, t


def sequence_duration(schedule):
    return sum(s.gap_before + s.duration for s in schedule)


def block_propagator(
    cfg,
    schedule,
    v_c=0.0,
    v_t=0.0,
    block="c1",
    method="rotating",
    tol=propagator.DEFAULT_TOL,
):
    """Lab-frame propagator of one block over the whole schedule.

    ``method="rotating"`` uses the constant rotating-frame matrix of each
    segment; ``method="timedep"`` integrates the Doppler-modulated matrix
    directly with the fourth-order substep rule.
    """
    u = None
    for segment, gap_start, t_start, t_end in timeline(schedule):
        driven = propagator.block_hamiltonian(cfg, segment, v_c, v_t, block)
        if u is None:
            u = np.eye(driven.dim, dtype=complex)
        if segment.gap_before > 0:
            u = propagator.free_unitary(driven, segment.gap_before) @ u
        if method == "rotating":
            step = propagator.rotating_frame(driven).propagator(t_start, t_end)
        elif method == "timedep":
            step = propagator.timedep_unitary(
                driven, t_start, t_end, driven.dim, tol=tol, scheme="magnus4"
            )
        else:
            raise ValueError(f"method must be 'rotating' or 'timedep', got {method!r}")
        u = step @ u
    return u


def batched_block_propagators(cfg, schedule, v_c, v_t, block="c1"):
    """Block propagators for arrays of velocities, shape (n, d, d)."""
    u = None
    for segment, gap_start, t_start, t_end in timeline(schedule):
        driven = propagator.block_hamiltonian(cfg, segment, 0.0, 0.0, block)
        step = propagator.batched_frame_unitaries(driven, v_c, v_t, t_start, t_end)
        if segment.gap_before > 0:
            step = step @ propagator.free_unitary(driven, segment.gap_before)
        u = step if u is None else step @ u
    return u


def _map_indices(basis, labels):
    return [tuple(basis).index(label) for label in labels]


def c0_block_map(u_c0):
    """2x2 map on (|00>, |01>) from the c0 propagator (stacks allowed)."""
    idx = _map_indices(qmodel.BASIS_C0, ("00", "01"))
    return np.asarray(u_c0)[..., idx, :][..., :, idx]


def c1_block_map(u_c1, basis=qmodel.BASIS_C1):
    """2x2 map on (|10>, |11>) from the c1 propagator (stacks allowed)."""
    idx = _map_indices(basis, ("10", "11"))
    return np.asarray(u_c1)[..., idx, :][..., :, idx]


def assemble_gate(c0_map, c1_map):
    """4x4 map over (|00>, |01>, |10>, |11>) from the two 2x2 blocks."""
    c0_map = np.asarray(c0_map)
    c1_map = np.asarray(c1_map)
    if c0_map.ndim == 2 and c1_map.ndim == 2:
        return block_diag(c0_map, c1_map)
    c0_map, c1_map = np.broadcast_arrays(c0_map, c1_map)
    gate = np.zeros(c0_map.shape[:-2] + (4, 4), dtype=complex)
    gate[..., :2, :2] = c0_map
    gate[..., 2:, 2:] = c1_map
    return gate


def gate_map(
    cfg,
    v_c=0.0,
    v_t=0.0,
    case_id=1,
    epsilon=0.0,
    *,
    override_ratio=False,
    case2_scope="target",
    method="rotating",
    tol=propagator.DEFAULT_TOL,
):
    """Realized 4x4 gate map without population records."""
    check_design_ratio(cfg, override_ratio)
    schedule = tsd_schedule(cfg, case_id, epsilon, case2_scope)
    u_c0 = block_propagator(cfg, schedule, v_c, v_t, "c0", method, tol)
    u_c1 = block_propagator(cfg, schedule, v_c, v_t, "c1", method, tol)
    return assemble_gate(c0_block_map(u_c0), c1_block_map(u_c1, cfg.c1_basis))


@dataclass
class GateResult:
    """Outcome of one TSD CNOT run at fixed velocities.

    Attributes
    ----------
    u_realized : ndarray
        4x4 map over (|00>, |01>, |10>, |11>); column j holds the raw final
        amplitudes of input j, without rephasing.
    records : dict
        Input label -> PropagationRecord over that input's block basis.
    rydberg_time_integrals : dict
        Input label -> time integral in s of the |0r>, |1r>, |r0>, |r1>
        populations plus twice the |rr> population. |rr> only appears at
        finite blockade strength.
    rydberg_integrals_by_state : dict
        Input label -> {Rydberg label: time integral in s}.
    schedule : tuple of PulseSegment
    """

    u_realized: np.ndarray
    records: dict = field(default_factory=dict)
    rydberg_time_integrals: dict = field(default_factory=dict)
    rydberg_integrals_by_state: dict = field(default_factory=dict)
    schedule: tuple = ()

    @property
    def duration(self):
        return sequence_duration(self.schedule)

    def truth_table_error(self):
        return metrics.truth_table_error(self.u_realized)

    def rotation_error(self):
        return metrics.rotation_error(self.u_realized, metrics.cnot_matrix())

    def bell_error(self):
        return metrics.bell_error_from_gate(self.u_realized)

    def mean_rydberg_integral(self):
        """Average over the four inputs of the Rydberg time integral, in s."""
        return float(np.mean(list(self.rydberg_time_integrals.values())))

    def max_population(self, label):
        """Largest population of ``label`` over every input and sample."""
        return max(record.max_population(label) for record in self.records.values())


def _segment_records(cfg, schedule, v_c, v_t, block, psi0, method, tol, n_samples):
    record = None
    state = psi0
    for segment, gap_start, t_start, t_end in timeline(schedule):
        driven = propagator.block_hamiltonian(cfg, segment, v_c, v_t, block)
        pieces = []
        if segment.gap_before > 0:
            free = propagator.sample_constant(
                driven.free_part(), gap_start, t_start, state.amplitudes, driven.basis, 3
            )
            state = AtomState(driven.basis, free.final_unitary @ state.amplitudes, False)
            pieces.append(free)
        if method == "rotating":
            piece = propagator.rotating_frame(driven).record(
                t_start, t_end, state.amplitudes, n_samples
            )
            state = AtomState(driven.basis, piece.final_unitary @ state.amplitudes, False)
        elif method == "timedep":
            state, piece = propagator.evolve_timedep(
                driven, t_start, t_end, state, tol=tol, scheme="magnus4"
            )
        else:
            raise ValueError(f"method must be 'rotating' or 'timedep', got {method!r}")
        pieces.append(piece)
        for p in pieces:
            record = p if record is None else record.concatenate(p)
    return state, record


def run_tsd_cnot(
    cfg,
    v_c=0.0,
    v_t=0.0,
    case_id=1,
    epsilon=0.0,
    *,
    override_ratio=False,
    case2_scope="target",
    method="rotating",
    tol=propagator.DEFAULT_TOL,
    n_samples=401,
):
    """Evolve every computational input through the TSD sequence.

    Parameters
    ----------
    cfg : GateChannelConfig
    v_c, v_t : float
        Control and target velocities in m/s.
    case_id : {1, 2}
    epsilon : float
        Gap between the pulses in s.
    override_ratio : bool, default False
        Allow omega_t/omega_c away from sqrt(6)/2.
    case2_scope : {"target", "all"}
    method : {"rotating", "timedep"}
        Propagation route.
    tol : float
        Convergence tolerance of the time-dependent route.
    n_samples : int
        Population samples per pulse on the rotating route.

    Returns
    -------
    GateResult

    Raises
    ------
    ValueError
        Ratio check failed or invalid arguments.
    ConvergenceError
        Time-dependent route did not converge.
    """
    check_design_ratio(cfg, override_ratio)
    schedule = tsd_schedule(cfg, case_id, epsilon, case2_scope)
    start = time.time()
    u_realized = np.zeros((4, 4), dtype=complex)
    records, integrals, by_state = {}, {}, {}
    for j, label in enumerate(INPUT_LABELS):
        block = _block_of(label)
        basis = _block_basis(cfg, block)
        psi0 = AtomState.basis_state(basis, label)
        state, record = _segment_records(
            cfg, schedule, v_c, v_t, block, psi0, method, tol, n_samples
        )
        for i, out in enumerate(INPUT_LABELS):
            u_realized[i, j] = state.amplitude(out)
        records[label] = record
        integrals[label] = record.time_integral(DECAY_LABELS) + (
            DOUBLE_EXCITATION_WEIGHT * record.time_integral(("rr",))
        )
        by_state[label] = {
            r: record.time_integral((r,)) for r in qmodel.RYDBERG_LABELS
        }
    logger.debug("TSD CNOT at (%g, %g) m/s: %.3f s", v_c, v_t, time.time() - start)
    return GateResult(u_realized, records, integrals, by_state, schedule)


def key_relation_residuals(cfg):
    """Residuals of the spin-echo key relation for the c1 inputs.

    || exp(-i t_pi H(+omega_t))|x> - exp(-i t_pi H(-omega_t))|x> ||_2 for
    x = |10>, |11>, in the blockaded 5-state model.

    Returns
    -------
    dict
        ``{"10": residual, "11": residual}``.
    """
    t_pi = cfg.pulse_duration
    h_plus = qmodel.build_hc1_blockaded(cfg.omega_c, cfg.omega_t, cfg.omega_t2)
    h_minus = qmodel.build_hc1_blockaded(cfg.omega_c, -cfg.omega_t, cfg.omega_t2)
    residuals = {}
    for label in ("10", "11"):
        psi0 = AtomState.basis_state(qmodel.BASIS_C1, label)
        plus = propagator.evolve_constant(h_plus, t_pi, psi0)
        minus = propagator.evolve_constant(h_minus, t_pi, psi0)
        residuals[label] = float(np.linalg.norm(plus.amplitudes - minus.amplitudes))
    return residuals


def spin_echo_key_relation_check(cfg):
    """Largest key-relation residual; vanishes at omega_t/omega_c = sqrt(6)/2."""
    return max(key_relation_residuals(cfg).values())


@dataclass
class TwoStateReport:
    """Result of the two-state slow-down demonstration.

    Attributes
    ----------
    alpha : float
        omega_c / omega_t.
    revival_overlap : float
        |<psi(t0)|psi(t0 + t1)>| across the control pulse.
    final_population : float
        |1r> population at 2 t1.
    completion_time : float
        First sample time at which the |1r> population reaches 1, or nan.
    slow_down_fold : float
        completion_time / t1.
    t1 : float
        pi/omega_t in s.
    record : PropagationRecord
    """

    alpha: float
    revival_overlap: float
    final_population: float
    completion_time: float
    slow_down_fold: float
    t1: float
    record: propagator.PropagationRecord = field(repr=False, default=None)


def two_state_tsd_demo(
    alpha=None, n_cycles=2, omega_t=2 * math.pi * 1e6, t0_fraction=0.5, n_samples=2001
):
    """Slow down the |11> -> |1r> transition by pumping the control atom.

    The target pulse acts over [0, 2 t1), the control pulse over
    [t0, t0 + t1), with t1 = pi/omega_t and t0 = t0_fraction * t1. For
    alpha = sqrt(4 n^2 - 1) the collective Rabi frequency gives
    omega_bar t1 = 2 pi n and the state revives after the control pulse, so
    the transfer completes at 2 t1 instead of t1.

    Parameters
    ----------
    alpha : float, optional
        omega_c/omega_t; defaults to sqrt(4 n_cycles^2 - 1).
    n_cycles : int, default 2
    omega_t : float
        Target Rabi frequency in rad/s.
    t0_fraction : float, default 0.5
        Control pulse start as a fraction of t1, in [0, 1].
    n_samples : int
        Population samples per segment (odd, so segment midpoints are hit).

    Returns
    -------
    TwoStateReport
    """
    if alpha is None:
        if n_cycles < 1:
            raise ValueError(f"n_cycles must be >= 1, got {n_cycles}")
        alpha = math.sqrt(4 * n_cycles**2 - 1)
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not 0 <= t0_fraction <= 1:
        raise ValueError(f"t0_fraction must lie in [0, 1], got {t0_fraction}")
    t1 = math.pi / omega_t
    t0 = t0_fraction * t1
    basis = qmodel.BASIS_TWO_STATE
    windows = [
        (0.0, t0, 0.0),
        (t0, t0 + t1, alpha * omega_t),
        (t0 + t1, 2 * t1, 0.0),
    ]
    amplitudes = AtomState.basis_state(basis, "11").amplitudes
    record = None
    psi_before = psi_after = amplitudes
    for index, (start, end, omega_c) in enumerate(windows):
        if index == 1:
            psi_before = amplitudes
        if end > start:
            h = qmodel.build_two_state(omega_c, omega_t)
            piece = propagator.sample_constant(h, start, end, amplitudes, basis, n_samples)
            amplitudes = piece.final_unitary @ amplitudes
            record = piece if record is None else record.concatenate(piece)
        if index == 1:
            psi_after = amplitudes
    overlap = abs(np.vdot(psi_before, psi_after))
    population = record.population("1r")
    reached = np.flatnonzero(population >= 1 - COMPLETION_ATOL)
    completion = float(record.times[reached[0]]) if reached.size else math.nan
    return TwoStateReport(
        alpha=alpha,
        revival_overlap=float(overlap),
        final_population=float(abs(amplitudes[basis.index("1r")]) ** 2),
        completion_time=completion,
        slow_down_fold=completion / t1,
        t1=t1,
        record=record,
    )


@dataclass
class BellPreparation:
    """Final state of the Bell-preparation run.

    Attributes
    ----------
    state : AtomState
        Final state over the union of the c0 and c1 bases.
    computational : AtomState
        Projection onto (|00>, |01>, |10>, |11>), not renormalized.
    error : float
        1 - |<Phi|psi>|^2 with Phi = (|00> + |11>)/sqrt(2).
    """

    state: AtomState
    computational: AtomState
    error: float

    @property
    def fidelity(self):
        return 1 - self.error


def prepare_bell(
    cfg,
    v_c=0.0,
    v_t=0.0,
    case_id=1,
    epsilon=0.0,
    *,
    override_ratio=False,
    case2_scope="target",
):
    """Map (|00> + |10>)/sqrt(2) through the TSD sequence.

    Both blocks evolve as one state vector over their union basis so the
    relative phase of |00> and |11> is physical.
    """
    check_design_ratio(cfg, override_ratio)
    schedule = tsd_schedule(cfg, case_id, epsilon, case2_scope)
    amplitudes = None
    basis = None
    for segment, gap_start, t_start, t_end in timeline(schedule):
        joint = propagator.block_hamiltonian(cfg, segment, v_c, v_t, "c0").direct_sum(
            propagator.block_hamiltonian(cfg, segment, v_c, v_t, "c1")
        )
        if amplitudes is None:
            basis = joint.basis
            amplitudes = AtomState.superposition(basis, {"00": 1, "10": 1}).amplitudes
        if segment.gap_before > 0:
            amplitudes = propagator.free_unitary(joint, segment.gap_before) @ amplitudes
        amplitudes = propagator.rotating_frame(joint).propagator(t_start, t_end) @ amplitudes
    state = AtomState(basis, amplitudes, check_norm=False)
    computational = AtomState(
        qmodel.BASIS_COMPUTATIONAL,
        [state.amplitude(label) for label in qmodel.BASIS_COMPUTATIONAL],
        check_norm=False,
    )
    return BellPreparation(state, computational, metrics.bell_error(computational))


def barred_basis_transform():
    """W = I (x) R whose columns are |0 0b>, |0 1b>, |1 0b>, |1 1b>.

    |1b> = (|0> + |1>)/sqrt(2) and |0b> = (|0> - |1>)/sqrt(2).
    """
    r = np.array([[1, 1], [-1, 1]]) / math.sqrt(2)
    return np.kron(np.eye(2), r)


def rotated_basis_identity_check(flip=-1):
    """max |W diag(1, 1, flip, 1) W^dagger - CNOT| entrywise."""
    w = barred_basis_transform()
    rotated = w @ np.diag([1, 1, flip, 1]) @ w.conj().T
    return float(np.max(np.abs(rotated - metrics.cnot_matrix())))


def barred_basis_diagonal(u_realized):
    """Diagonal of ``u_realized`` expressed in the barred target basis."""
    w = barred_basis_transform()
    return np.diag(w.conj().T @ np.asarray(u_realized) @ w)


def chain_populations(theta):
    """Populations of (|0>, |r>, |1>) in the resonant chain |0>-|r>-|1>.

    Starting in |0> with both target channels at omega_t, theta is
    t omega_t / sqrt(2). The transfer to |1> is complete only at theta = pi,
    so the chain cannot stop at an equal superposition.
    """
    theta = np.asarray(theta, dtype=float)
    return np.stack(
        [
            np.cos(theta / 2) ** 4,
            np.sin(theta) ** 2 / 2,
            np.sin(theta / 2) ** 4,
        ],
        axis=-1,
    )


def chain_populations_numeric(omega_t, t):
    """Chain populations from c0-block propagation, for cross-checks."""
    psi0 = AtomState.basis_state(qmodel.BASIS_C0, "00")
    state = propagator.evolve_constant(qmodel.build_hc0(omega_t), t, psi0)
    return np.array(
        [state.population("00"), state.population("0r"), state.population("01")]
    )
