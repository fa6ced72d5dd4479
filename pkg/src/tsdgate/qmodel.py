"""
Basis orderings, domain types and Hamiltonians of the TSD CNOT.

Every other module imports the basis orderings defined here. The orderings are
frozen exactly as written in the model equations:

    c0 block (control in |0>) : |00>, |01>, |0r>
    c1 block, blockaded       : |1r>, |r1>, |r0>, |11>, |10>
    c1 block, finite V        : |rr>, |1r>, |r1>, |r0>, |11>, |10>
    computational             : |00>, |01>, |10>, |11>
    two-state model           : |11>, |1r>, |r1>

Labels are "<control><target>". Drive conventions:

    * the Doppler phase of a channel enters the Rydberg-side matrix element as
      <r|H|g> = (Omega/2) exp(+i sigma k v t), with t measured from the start of
      the pulse sequence and sigma the channel's wavevector sign;
    * the constant initial-position phase of the control channel is dropped, it
      is a gauge choice with no effect on populations or on the gate errors;
    * the spin-echo flip of the target drive is a real sign on both target
      channels (|0>-|r> and |1>-|r>), not a pi phase in the Doppler argument.

"""

import math
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

logger = logging.getLogger(__name__)

INFINITE_BLOCKADE = math.inf

BASIS_C0 = ("00", "01", "0r")
BASIS_C1 = ("1r", "r1", "r0", "11", "10")
BASIS_C1_FULL = ("rr", "1r", "r1", "r0", "11", "10")
BASIS_COMPUTATIONAL = ("00", "01", "10", "11")
BASIS_TWO_STATE = ("11", "1r", "r1")

RYDBERG_LABELS = ("0r", "1r", "r0", "r1", "rr")

HERMITIAN_ATOL = 1e-12
UNITARY_ATOL = 1e-9
NORM_ATOL = 1e-12

# CODATA 2018 (scipy.constants) and AME2016 for the 87Rb atomic mass.
RB87_MASS_U = 86.909180531


@dataclass(frozen=True)
class PhysicalConstants:
    """Named constants with their provenance.

    Attributes
    ----------
    wavevector_k : float
        Effective two-photon wavevector for counterpropagating 420.3 nm and
        1012.7 nm beams, in rad/m.
    boltzmann : float
        Boltzmann constant in J/K.
    rb87_mass : float
        Mass of a 87Rb atom in kg.
    provenance : dict
        Source string for each constant.
    """

    wavevector_k: float
    boltzmann: float
    rb87_mass: float
    provenance: dict = field(default_factory=dict)

    def velocity_width(self, temperature):
        """One-dimensional Maxwell-Boltzmann velocity width sqrt(k_B T / m).

        Parameters
        ----------
        temperature : float
            Effective atomic temperature in K.

        Returns
        -------
        float
            Standard deviation of the velocity projection in m/s.
        """
        if temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {temperature}")
        return math.sqrt(self.boltzmann * temperature / self.rb87_mass)


def physical_constants():
    """Return the record of physical constants used throughout the package."""
    wavevector_k = 2 * math.pi * (1 / 420.3 - 1 / 1012.7) * 1e9
    return PhysicalConstants(
        wavevector_k=wavevector_k,
        boltzmann=constants.k,
        rb87_mass=RB87_MASS_U * constants.atomic_mass,
        provenance={
            "wavevector_k": "k = 2 pi (1/420.3 - 1/1012.7) nm^-1, 420 nm + 1013 nm "
            "counterpropagating two-photon excitation",
            "boltzmann": "CODATA 2018 exact value (scipy.constants.k)",
            "rb87_mass": "87Rb atomic mass 86.909180531 u (AME2016) times the CODATA "
            "2018 atomic mass constant (scipy.constants.atomic_mass)",
        },
    )


WAVEVECTOR_K = physical_constants().wavevector_k


def _check_sign(value, name):
    if value not in (1, -1):
        raise ValueError(f"{name} must be +1 or -1, got {value}")


@dataclass(frozen=True)
class GateChannelConfig:
    """The three drive channels of the TSD CNOT.

    Attributes
    ----------
    omega_c : float
        Control |1>-|r> Rabi magnitude in rad/s.
    omega_t : float
        Target |0>-|r> Rabi magnitude in rad/s.
    v_interaction : float, default INFINITE_BLOCKADE
        Energy of |rr> in rad/s. ``INFINITE_BLOCKADE`` removes |rr> from the
        basis (5-dim c1 block).
    wavevector_k : float, default WAVEVECTOR_K
        Effective two-photon wavevector in rad/m.
    target2_k_sign : int, default 1
        Relative Doppler sign of the target |1>-|r> channel. +1 is the
        copropagating (dephasing resilient) chain, -1 the counterpropagating
        worst case.
    omega_t2 : float, optional
        Target |1>-|r> Rabi magnitude in rad/s. Defaults to ``omega_t``; set it
        to study amplitude imbalance between the two target channels.
    """

    omega_c: float
    omega_t: float
    v_interaction: float = INFINITE_BLOCKADE
    wavevector_k: float = WAVEVECTOR_K
    target2_k_sign: int = 1
    omega_t2: float = None

    def __post_init__(self):
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if not self.omega_t > 0:
            raise ValueError(f"omega_t must be > 0, got {self.omega_t}")
        if self.omega_t2 is None:
            object.__setattr__(self, "omega_t2", self.omega_t)
        elif not self.omega_t2 > 0:
            raise ValueError(f"omega_t2 must be > 0, got {self.omega_t2}")
        if np.isnan(self.v_interaction):
            raise ValueError("v_interaction must be a number or INFINITE_BLOCKADE")
        _check_sign(self.target2_k_sign, "target2_k_sign")

    @property
    def blockaded(self):
        """True when |rr> is excluded from the c1 basis."""
        return math.isinf(self.v_interaction)

    @property
    def c1_basis(self):
        return BASIS_C1 if self.blockaded else BASIS_C1_FULL

    @property
    def omega_bar(self):
        """sqrt(omega_c^2 + 2 omega_t^2), the collective c1 Rabi frequency."""
        return math.sqrt(self.omega_c**2 + 2 * self.omega_t**2)

    @property
    def pulse_duration(self):
        """Duration pi/omega_c of each of the two TSD pulses."""
        return math.pi / self.omega_c

    def with_values(self, **changes):
        """Copy of this config with selected fields replaced."""
        values = {
            "omega_c": self.omega_c,
            "omega_t": self.omega_t,
            "v_interaction": self.v_interaction,
            "wavevector_k": self.wavevector_k,
            "target2_k_sign": self.target2_k_sign,
            "omega_t2": self.omega_t2,
        }
        if "omega_t" in changes and "omega_t2" not in changes:
            if self.omega_t2 == self.omega_t:
                values["omega_t2"] = None
        values.update(changes)
        return GateChannelConfig(**values)

    @classmethod
    def design(cls, omega_c, **kwargs):
        """Config at the design ratio omega_t/omega_c = sqrt(6)/2."""
        return cls(omega_c=omega_c, omega_t=math.sqrt(1.5) * omega_c, **kwargs)


@dataclass(frozen=True)
class PulseSegment:
    """One constant-envelope drive interval of the TSD sequence.

    Attributes
    ----------
    duration : float
        Pulse length in s.
    omega_t_sign : int, default 1
        Sign of both target Rabi frequencies; -1 is the spin-echo pulse.
    channel_k_signs : tuple of int, default (1, 1, 1)
        Wavevector signs of the (control, target |0>, target |1>) channels.
    gap_before : float, default 0
        Free evolution with all drives off before the pulse, in s.
    """

    duration: float
    omega_t_sign: int = 1
    channel_k_signs: tuple = (1, 1, 1)
    gap_before: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        if self.gap_before < 0:
            raise ValueError(f"gap_before must be >= 0, got {self.gap_before}")
        _check_sign(self.omega_t_sign, "omega_t_sign")
        object.__setattr__(self, "channel_k_signs", tuple(self.channel_k_signs))
        if len(self.channel_k_signs) != 3:
            raise ValueError("channel_k_signs must hold three signs")
        for sign in self.channel_k_signs:
            _check_sign(sign, "channel k-sign")


@dataclass
class AtomState:
    """Two-atom state vector over one of the documented basis orderings.

    Parameters
    ----------
    basis : tuple of str
        Basis labels, one of the orderings defined in this module or a
        concatenation of them.
    amplitudes : array_like of complex
        Amplitudes in basis order.
    check_norm : bool, default True
        Require unit norm within 1e-12.
    """

    basis: tuple
    amplitudes: np.ndarray
    check_norm: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.basis = tuple(self.basis)
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (len(self.basis),):
            raise ValueError(
                f"State has {self.amplitudes.shape} amplitudes for a basis of "
                f"{len(self.basis)} states"
            )
        if self.check_norm:
            norm = np.linalg.norm(self.amplitudes)
            if abs(norm - 1) > NORM_ATOL:
                raise ValueError(f"State norm is {norm!r}, expected 1")

    @classmethod
    def basis_state(cls, basis, label):
        """Basis vector ``label`` of ``basis``."""
        amplitudes = np.zeros(len(basis), dtype=complex)
        amplitudes[tuple(basis).index(label)] = 1
        return cls(basis, amplitudes)

    @classmethod
    def superposition(cls, basis, coefficients):
        """Normalized superposition from a ``{label: coefficient}`` mapping."""
        amplitudes = np.zeros(len(basis), dtype=complex)
        for label, coefficient in coefficients.items():
            amplitudes[tuple(basis).index(label)] = coefficient
        return cls(basis, amplitudes / np.linalg.norm(amplitudes))

    def amplitude(self, label):
        if label not in self.basis:
            return 0j
        return self.amplitudes[self.basis.index(label)]

    def population(self, label):
        return abs(self.amplitude(label)) ** 2

    def populations(self):
        return np.abs(self.amplitudes) ** 2

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other):
        """<self|other> over the labels both states share."""
        return sum(
            np.conj(self.amplitude(label)) * other.amplitude(label)
            for label in self.basis
            if label in other.basis
        )


def hermiticity_error(h):
    """max |H - H^dagger| entrywise."""
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T)))


def check_hermitian(h, atol=HERMITIAN_ATOL):
    """Raise ValueError unless ``h`` is square and Hermitian within ``atol``."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"Hamiltonian must be a square matrix, got shape {h.shape}")
    error = hermiticity_error(h)
    if error > atol:
        raise ValueError(f"Hamiltonian is not Hermitian (max deviation {error:.3e})")
    return h


def unitarity_error(u):
    """max |U^dagger U - I| entrywise."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


@dataclass(frozen=True)
class Coupling:
    """One drive term H[row, col] = amplitude * exp(i k (a_c v_c + a_t v_t) t).

    ``row`` is the Rydberg-side state, ``tone`` holds the integer multipliers
    (a_c, a_t) of the control and target velocity in the Doppler phase.
    """

    row: int
    col: int
    amplitude: complex
    tone: tuple = (0, 0)


class DrivenHamiltonian:
    """Time-dependent Hamiltonian built from a static diagonal and pure tones.

    Calling the object with a time returns the Hermitian matrix at that time,
    which makes it a time-indexed Hamiltonian source for the propagator.

    Parameters
    ----------
    basis : tuple of str
        Basis labels.
    diagonal : array_like of float
        Static diagonal in rad/s.
    couplings : list of Coupling
        Upper-triangle drive terms; the Hermitian conjugates are implied.
    wavevector_k : float
        Wavevector in rad/m multiplying the tones.
    v_c, v_t : float
        Control and target velocities in m/s.
    anchors : tuple of str
        Labels pinned to zero in the rotating-frame gauge.
    """

    def __init__(
        self, basis, diagonal, couplings, wavevector_k, v_c=0.0, v_t=0.0, anchors=()
    ):
        self.basis = tuple(basis)
        self.diagonal = np.asarray(diagonal, dtype=float)
        self.couplings = tuple(couplings)
        self.wavevector_k = wavevector_k
        self.v_c = float(v_c)
        self.v_t = float(v_t)
        self.anchors = tuple(anchors)
        if self.diagonal.shape != (len(self.basis),):
            raise ValueError("diagonal does not match the basis size")

    @property
    def dim(self):
        return len(self.basis)

    def tone_frequency(self, coupling):
        """Doppler angular frequency of ``coupling`` in rad/s."""
        a_c, a_t = coupling.tone
        return self.wavevector_k * (a_c * self.v_c + a_t * self.v_t)

    def with_velocity(self, v_c, v_t):
        return DrivenHamiltonian(
            self.basis,
            self.diagonal,
            self.couplings,
            self.wavevector_k,
            v_c,
            v_t,
            self.anchors,
        )

    def direct_sum(self, other):
        """Block-diagonal union of two blocks sharing velocities and k.

        Raises
        ------
        ValueError
            The blocks were built for different velocities or wavevectors.
        """
        if (self.v_c, self.v_t, self.wavevector_k) != (
            other.v_c,
            other.v_t,
            other.wavevector_k,
        ):
            raise ValueError(
                f"Cannot join blocks at (v_c, v_t) = ({self.v_c:g}, {self.v_t:g}) and "
                f"({other.v_c:g}, {other.v_t:g}) m/s or with different wavevectors"
            )
        offset = self.dim
        shifted = [
            Coupling(c.row + offset, c.col + offset, c.amplitude, c.tone)
            for c in other.couplings
        ]
        return DrivenHamiltonian(
            self.basis + other.basis,
            np.concatenate([self.diagonal, other.diagonal]),
            self.couplings + tuple(shifted),
            self.wavevector_k,
            self.v_c,
            self.v_t,
            self.anchors + other.anchors,
        )

    @property
    def is_static(self):
        return all(self.tone_frequency(c) == 0 for c in self.couplings)

    def __call__(self, t):
        h = np.diag(self.diagonal).astype(complex)
        for c in self.couplings:
            value = c.amplitude * np.exp(1j * self.tone_frequency(c) * t)
            h[c.row, c.col] += value
            h[c.col, c.row] += np.conj(value)
        return h

    def batch(self, times):
        """Stack of matrices at ``times``, shape (n, dim, dim)."""
        times = np.asarray(times, dtype=float)
        h = np.zeros((times.size, self.dim, self.dim), dtype=complex)
        h[:, np.arange(self.dim), np.arange(self.dim)] = self.diagonal
        for c in self.couplings:
            values = c.amplitude * np.exp(1j * self.tone_frequency(c) * times)
            h[:, c.row, c.col] += values
            h[:, c.col, c.row] += np.conj(values)
        return h

    def static_part(self):
        """The matrix with every Doppler phase removed (the t = 0 matrix)."""
        return self(0.0)

    def free_part(self):
        """Diagonal part only, the Hamiltonian with all drives off."""
        return np.diag(self.diagonal).astype(complex)


def _channel_tones(channel_k_signs, target2_k_sign):
    sigma_c, sigma_t0, sigma_t1 = channel_k_signs
    for sign in channel_k_signs:
        _check_sign(sign, "channel k-sign")
    return (sigma_c, 0), (0, sigma_t0), (0, sigma_t1 * target2_k_sign)


def c0_hamiltonian(cfg, omega_t_sign=1, channel_k_signs=(1, 1, 1), v_c=0.0, v_t=0.0):
    """c0 block (control in |0>) as a DrivenHamiltonian over BASIS_C0.

    No coupling carries the control tone, so ``v_c`` only labels the block; it
    lets the block join a c1 block of the same velocities in ``direct_sum``.
    """
    _check_sign(omega_t_sign, "omega_t_sign")
    _, tone_t0, tone_t1 = _channel_tones(channel_k_signs, cfg.target2_k_sign)
    couplings = [
        Coupling(2, 0, omega_t_sign * cfg.omega_t / 2, tone_t0),
        Coupling(2, 1, omega_t_sign * cfg.omega_t2 / 2, tone_t1),
    ]
    return DrivenHamiltonian(
        BASIS_C0, np.zeros(3), couplings, cfg.wavevector_k, v_c, v_t, anchors=("00",)
    )


def c1_hamiltonian(cfg, omega_t_sign=1, channel_k_signs=(1, 1, 1), v_c=0.0, v_t=0.0):
    """c1 block (control in |1>) as a DrivenHamiltonian.

    The basis is BASIS_C1 for an infinite blockade and BASIS_C1_FULL otherwise.
    """
    _check_sign(omega_t_sign, "omega_t_sign")
    tone_c, tone_t0, tone_t1 = _channel_tones(channel_k_signs, cfg.target2_k_sign)
    basis = cfg.c1_basis
    idx = {label: i for i, label in enumerate(basis)}
    omega_c = cfg.omega_c / 2
    omega_t0 = omega_t_sign * cfg.omega_t / 2
    omega_t1 = omega_t_sign * cfg.omega_t2 / 2
    couplings = [
        Coupling(idx["1r"], idx["11"], omega_t1, tone_t1),
        Coupling(idx["1r"], idx["10"], omega_t0, tone_t0),
        Coupling(idx["r1"], idx["11"], omega_c, tone_c),
        Coupling(idx["r0"], idx["10"], omega_c, tone_c),
    ]
    diagonal = np.zeros(len(basis))
    if not cfg.blockaded:
        couplings += [
            Coupling(idx["rr"], idx["1r"], omega_c, tone_c),
            Coupling(idx["rr"], idx["r1"], omega_t1, tone_t1),
            Coupling(idx["rr"], idx["r0"], omega_t0, tone_t0),
        ]
        diagonal[idx["rr"]] = cfg.v_interaction
    return DrivenHamiltonian(
        basis, diagonal, couplings, cfg.wavevector_k, v_c, v_t, anchors=("11",)
    )


def build_hc0(omega_t, phase=1.0, phase2=None, omega_t2=None):
    """c0-block Hamiltonian over {|00>, |01>, |0r>}.

    Parameters
    ----------
    omega_t : float
        Target Rabi magnitude in rad/s.
    phase : complex, default 1
        Unit-modulus coefficient of the |00><0r| term, so that
        <0r|H|00> = (omega_t/2) conj(phase). A Doppler phase enters as
        exp(-i k v t), the spin-echo flip as an overall -1.
    phase2 : complex, optional
        Coefficient of the |01><0r| term; defaults to ``phase``.
    omega_t2 : float, optional
        Rabi magnitude of the |1>-|r> channel; defaults to ``omega_t``.

    Returns
    -------
    ndarray
        3x3 Hermitian matrix.

    Raises
    ------
    ValueError
        Non-positive Rabi magnitude or non-unit phase.
    """
    if not omega_t > 0:
        raise ValueError(f"omega_t must be > 0, got {omega_t}")
    phase2 = phase if phase2 is None else phase2
    omega_t2 = omega_t if omega_t2 is None else omega_t2
    for value in (phase, phase2):
        if abs(abs(value) - 1) > HERMITIAN_ATOL:
            raise ValueError(f"phase must have unit modulus, got |phase|={abs(value)}")
    h = np.zeros((3, 3), dtype=complex)
    h[2, 0] = omega_t / 2 * np.conj(phase)
    h[2, 1] = omega_t2 / 2 * np.conj(phase2)
    h[0, 2] = np.conj(h[2, 0])
    h[1, 2] = np.conj(h[2, 1])
    return h


def build_hc1_blockaded(omega_c, omega_t, omega_t2=None):
    """The 5x5 blockaded c1 matrix over {|1r>, |r1>, |r0>, |11>, |10>}.

    ``omega_t`` is signed; a negative value is the spin-echo pulse.
    ``omega_t2`` sets a different |1>-|r> magnitude (same sign as omega_t).
    """
    if not omega_c > 0:
        raise ValueError(f"omega_c must be > 0, got {omega_c}")
    if omega_t == 0:
        raise ValueError("omega_t must be nonzero")
    sign = 1 if omega_t > 0 else -1
    cfg = GateChannelConfig(
        omega_c=omega_c,
        omega_t=abs(omega_t),
        omega_t2=None if omega_t2 is None else abs(omega_t2),
    )
    return c1_hamiltonian(cfg, omega_t_sign=sign).static_part()


def build_hc1_full(cfg, omega_t_sign, v_c, v_t, t, channel_k_signs=(1, 1, 1)):
    """The 6x6 c1 matrix with |rr> at energy V and Doppler phases at time ``t``.

    Basis {|rr>, |1r>, |r1>, |r0>, |11>, |10>}.

    Raises
    ------
    ValueError
        ``cfg.v_interaction`` is INFINITE_BLOCKADE, or ``t`` < 0.
    """
    if cfg.blockaded:
        raise ValueError("INFINITE_BLOCKADE has no |rr> state; use build_hc1_blockaded")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return c1_hamiltonian(cfg, omega_t_sign, channel_k_signs, v_c, v_t)(t)


def build_two_state(omega_c, omega_t):
    """H = (omega_c|r1> + omega_t|1r>)<11|/2 + H.c. over {|11>, |1r>, |r1>}.

    |rr> is discarded (strong blockade). ``omega_c`` may be 0 while the control
    pulse is off.
    """
    if omega_c < 0 or omega_t < 0:
        raise ValueError("Rabi magnitudes must be >= 0")
    h = np.zeros((3, 3), dtype=complex)
    h[1, 0] = h[0, 1] = omega_t / 2
    h[2, 0] = h[0, 2] = omega_c / 2
    return h


def tsd_eigenvectors(omega_c, omega_t):
    """Closed-form eigenpairs R1..R4 of the blockaded c1 matrix.

    Parameters
    ----------
    omega_c : float
        Control Rabi frequency (> 0).
    omega_t : float
        Signed target Rabi frequency.

    Returns
    -------
    dict
        ``{k: (eigenvalue, vector)}`` for k = 1..4 over BASIS_C1, with
        eigenvalues (omega_c, -omega_c, omega_bar, -omega_bar)/2.
    """
    omega_bar = math.sqrt(omega_c**2 + 2 * omega_t**2)
    idx = {label: i for i, label in enumerate(BASIS_C1)}

    def vec(**coefficients):
        v = np.zeros(len(BASIS_C1), dtype=complex)
        for label, value in coefficients.items():
            v[idx[label.lstrip("_")]] = value
        return v

    r12 = []
    for sign in (1, -1):
        r12.append(vec(r1=0.5, r0=-0.5, _11=sign * 0.5, _10=-sign * 0.5))
    r34 = []
    for sign in (1, -1):
        r34.append(
            vec(
                r1=omega_c,
                r0=omega_c,
                _11=sign * omega_bar,
                _10=sign * omega_bar,
                _1r=2 * omega_t,
            )
            / (2 * omega_bar)
        )
    return {
        1: (omega_c / 2, r12[0]),
        2: (-omega_c / 2, r12[1]),
        3: (omega_bar / 2, r34[0]),
        4: (-omega_bar / 2, r34[1]),
    }


def eigen_decomposition(omega_c, omega_t, label):
    """Coefficients <R_k|label> of a c1 input over the closed-form eigenvectors.

    With the eigenvectors of ``tsd_eigenvectors`` the inputs decompose as
    |10> = (-R1 + R2 + R3 - R4)/2 and |11> = (R1 - R2 + R3 - R4)/2.

    Returns
    -------
    dict
        ``{k: coefficient}`` for k = 1..4.
    """
    state = AtomState.basis_state(BASIS_C1, label).amplitudes
    return {
        k: complex(np.vdot(vector, state))
        for k, (_, vector) in tsd_eigenvectors(omega_c, omega_t).items()
    }
