"""
AC Stark shifts of a two-photon Rydberg excitation and their compensation.

The qubit states are |1> and |0>, split by omega_q, both coupled to an
intermediate p manifold (hyperfine structure ignored) by the lower field and
on to |r> by the upper field. Compensation requires equal shifts of |0> and
|1>, which fixes the intermediate detuning at omega_q / (C^2 - 1) where C^2 is
the squared ratio of the |0> and |1> couplings to the p manifold.

Reduced units
-------------
Detunings are written as Delta_bar = Delta * 1e-9 s (Delta in rad/s, no 2 pi
removed). Field strengths are written as eps = |alpha_1| E^2 / (4 hbar) in
the same units, so that the cancellation of the |1> shift for one excitation
chain reads Delta_bar (16.3 (E2/E1)^2 - 1) = 2.98 for the cesium data
(polarizability ratio alpha_2/alpha_1 = -16.3, resonant coefficient 2.98).

"""

import math
import logging
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.special import factorial

logger = logging.getLogger(__name__)

ALPHA_RATIO = 16.3
RESONANT_COEFF = 2.98
REDUCED_TIME = 1e-9
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100

CESIUM_OMEGA_Q = 2 * math.pi * 9.1926e9
RUBIDIUM_OMEGA_Q = 2 * math.pi * 6.8347e9


class NoSolutionError(ValueError):
    """The requested Stark compensation has no physical solution."""


def _half_integer(value, name):
    twice = Fraction(value).limit_denominator(4) * 2
    if twice.denominator != 1 or abs(float(twice) - 2 * value) > 1e-12:
        raise ValueError(f"{name}={value} is not a multiple of 1/2")
    return int(twice)


def _fact(twice):
    return factorial(twice // 2, exact=True)


def clebsch_gordan(j1, j2, j, m1, m2, m):
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | j m>, Condon-Shortley phases.

    Parameters
    ----------
    j1, j2, j : float
        Angular momenta, non-negative multiples of 1/2.
    m1, m2, m : float
        Projections, multiples of 1/2.

    Returns
    -------
    float
        0 whenever a selection rule fails (m != m1 + m2, |m_i| > j_i, the
        triangle rule, or mismatched integer/half-integer parity).

    Raises
    ------
    ValueError
        A j is negative or a quantum number is not a multiple of 1/2.
    """
    tj1, tj2, tj = (_half_integer(x, n) for x, n in ((j1, "j1"), (j2, "j2"), (j, "j")))
    tm1, tm2, tm = (_half_integer(x, n) for x, n in ((m1, "m1"), (m2, "m2"), (m, "m")))
    if min(tj1, tj2, tj) < 0:
        raise ValueError("angular momenta must be >= 0")
    if tm != tm1 + tm2:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm) > tj:
        return 0.0
    if (tj1 + tm1) % 2 or (tj2 + tm2) % 2 or (tj + tm) % 2:
        return 0.0
    if tj < abs(tj1 - tj2) or tj > tj1 + tj2 or (tj1 + tj2 + tj) % 2:
        return 0.0
    prefactor = Fraction(
        (tj + 1)
        * _fact(tj + tj1 - tj2)
        * _fact(tj - tj1 + tj2)
        * _fact(tj1 + tj2 - tj),
        _fact(tj1 + tj2 + tj + 2),
    ) * (
        _fact(tj + tm)
        * _fact(tj - tm)
        * _fact(tj1 - tm1)
        * _fact(tj1 + tm1)
        * _fact(tj2 - tm2)
        * _fact(tj2 + tm2)
    )
    total = Fraction(0)
    k = 0
    while True:
        args = (
            tj1 + tj2 - tj - 2 * k,
            tj1 - tm1 - 2 * k,
            tj2 + tm2 - 2 * k,
            tj - tj2 + tm1 + 2 * k,
            tj - tj1 - tm2 + 2 * k,
        )
        if min(args[:3]) < 0:
            break
        if min(args[3:]) >= 0:
            denominator = _fact(2 * k)
            for a in args:
                denominator *= _fact(a)
            total += Fraction((-1) ** k, denominator)
        k += 1
    return float(math.copysign(math.sqrt(prefactor * total * total), total))


def _projections(j):
    twice = _half_integer(j, "j")
    return [x / 2 for x in range(-twice, twice + 1, 2)]


@dataclass(frozen=True)
class TransitionSpec:
    """Coupling of the two qubit states to the intermediate p manifold.

    The electron spin couples to the lower-field photon (rank ``photon_rank``,
    helicity ``photon_q``) from J=``j_ground`` to J=``j_excited``; the nuclear
    spin ``nuclear_spin`` then recouples to the qubit hyperfine levels.
    ``numerator`` and ``denominator`` are the (F, m_F) of |0> and |1>.
    """

    j_ground: float = 0.5
    j_excited: float = 0.5
    photon_rank: int = 1
    photon_q: int = 1
    nuclear_spin: float = 3.5
    numerator: tuple = (4, 4)
    denominator: tuple = (3, 3)

    def coupling_sum(self, f, m_f):
        """Sum over (m_J, m_I) of the squared summed CG products for level (F, m_F)."""
        total = 0.0
        for m_j in _projections(self.j_ground):
            for m_i in _projections(self.nuclear_spin):
                amplitude = 0.0
                for m_e in _projections(self.j_excited):
                    amplitude += clebsch_gordan(
                        self.j_ground, self.photon_rank, self.j_excited,
                        m_j, self.photon_q, m_e,
                    ) * clebsch_gordan(
                        self.j_excited, self.nuclear_spin, f, m_e, m_i, m_f
                    )
                total += amplitude**2
        return total


CESIUM = TransitionSpec()


def c_factor_squared(spec=CESIUM):
    """Squared ratio C^2 of the |0> and |1> couplings to the p manifold (8 for cesium)."""
    denominator = spec.coupling_sum(*spec.denominator)
    if denominator == 0:
        raise ValueError("the |1> level does not couple to the p manifold")
    return spec.coupling_sum(*spec.numerator) / denominator


def solve_compensation(omega_q, c_factor_sq):
    """Intermediate detuning omega_q / (C^2 - 1) that equalizes the qubit shifts.

    Raises
    ------
    NoSolutionError
        ``c_factor_sq`` <= 1: the off-resonant shift cannot be balanced.
    """
    if not omega_q > 0:
        raise ValueError(f"omega_q must be > 0, got {omega_q}")
    if c_factor_sq <= 1:
        raise NoSolutionError(
            f"C^2 = {c_factor_sq} <= 1: both resonant shifts cannot be positive"
        )
    return omega_q / (c_factor_sq - 1)


def solve_field_ratio(delta, alpha_ratio=ALPHA_RATIO, resonant_coeff=RESONANT_COEFF):
    """|E2/E1| cancelling the |1> shift: sqrt((c / Delta_bar + 1) / alpha_ratio).

    Parameters
    ----------
    delta : float
        Intermediate detuning in rad/s, > 0.
    alpha_ratio : float, default 16.3
        |alpha_2 / alpha_1|.
    resonant_coeff : float, default 2.98
        Resonant coefficient c of the reduced relation
        Delta_bar (alpha_ratio r^2 - 1) = c.

    Raises
    ------
    NoSolutionError
        The required squared ratio is not positive.
    """
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    if not alpha_ratio > 0:
        raise ValueError(f"alpha_ratio must be > 0, got {alpha_ratio}")
    radicand = (resonant_coeff / (delta * REDUCED_TIME) + 1) / alpha_ratio
    if radicand <= 0:
        raise NoSolutionError(f"no real field ratio (squared ratio {radicand:.3g})")
    return math.sqrt(radicand)


def field_ratio_residual(
    delta, ratio, alpha_ratio=ALPHA_RATIO, resonant_coeff=RESONANT_COEFF
):
    """Delta_bar (alpha_ratio ratio^2 - 1) - c."""
    return delta * REDUCED_TIME * (alpha_ratio * ratio**2 - 1) - resonant_coeff


@dataclass(frozen=True)
class TwoPhotonDrive:
    """Two-photon drive |1> -> |p> -> |r> in SI units.

    Attributes
    ----------
    omega1, omega2 : float
        Laser angular frequencies in rad/s.
    e1, e2 : float
        Field amplitudes in V/m.
    delta : float
        Intermediate detuning in rad/s.
    rabi1, rabi2 : float
        Single-photon Rabi frequencies in rad/s.
    alpha1, alpha2 : float
        Non-resonant polarizabilities in C m^2 / V.
    omega_q : float
        Qubit splitting in rad/s.
    c_factor_sq : float
    """

    omega1: float
    omega2: float
    e1: float
    e2: float
    delta: float
    rabi1: float
    rabi2: float
    alpha1: float
    alpha2: float
    omega_q: float
    c_factor_sq: float = 8.0

    def __post_init__(self):
        if self.delta == 0:
            raise ValueError("delta must be nonzero")
        if self.delta + self.omega_q == 0:
            raise ValueError("delta + omega_q must be nonzero")
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ValueError("laser frequencies must be > 0")

    @property
    def omega_eff(self):
        """Effective two-photon Rabi frequency rabi1 rabi2 / (2 delta)."""
        return self.rabi1 * self.rabi2 / (2 * self.delta)

    @property
    def alpha_ratio(self):
        return self.alpha2 / self.alpha1


@dataclass(frozen=True)
class StarkShifts:
    """Light shifts in rad/s of |r>, |1> and |0>."""

    delta_r: float
    delta_q1: float
    delta_q0: float

    @property
    def differential(self):
        """Shift difference of the two qubit states."""
        return self.delta_q1 - self.delta_q0


def stark_shifts(drive):
    """Shifts of |r>, |1> and |0> under ``drive``.

    delta_r = rabi2^2/(4 delta) - e^2/(4 m_e hbar) (e1^2/omega1^2 + e2^2/omega2^2)
    delta_q1 = rabi1^2/(4 delta) - (alpha1 e1^2 + alpha2 e2^2)/(4 hbar)
    delta_q0 = C^2 rabi1^2/(4 (delta + omega_q)) - (alpha1 e1^2 + alpha2 e2^2)/(4 hbar)
    """
    ponderomotive = constants.e**2 / (4 * constants.m_e * constants.hbar) * (
        drive.e1**2 / drive.omega1**2 + drive.e2**2 / drive.omega2**2
    )
    off_resonant = (drive.alpha1 * drive.e1**2 + drive.alpha2 * drive.e2**2) / (
        4 * constants.hbar
    )
    return StarkShifts(
        delta_r=drive.rabi2**2 / (4 * drive.delta) - ponderomotive,
        delta_q1=drive.rabi1**2 / (4 * drive.delta) - off_resonant,
        delta_q0=drive.c_factor_sq * drive.rabi1**2 / (4 * (drive.delta + drive.omega_q))
        - off_resonant,
    )


@dataclass
class TargetBalance:
    """Stark balance of the target atom driven by two excitation chains.

    Chain a is resonant with |1> -> |p> at detuning ``detuning_a``, chain b
    with |0> -> |p> at ``detuning_b``. Field strengths are reduced
    (eps = |alpha_1| E^2 / 4 hbar, in 1e9 rad/s).

    Attributes
    ----------
    eps_1a, eps_1b, eps_2a, eps_2b : float
        Lower (1) and upper (2) field strengths of each chain.
    detuning_a, detuning_b : float
        Intermediate detunings in rad/s.
    residuals : ndarray
        Shift of |1>, shift of |0> and squared-Rabi mismatch at the solution.
    iterations : int
    """

    eps_1a: float
    eps_1b: float
    eps_2a: float
    eps_2b: float
    detuning_a: float
    detuning_b: float
    residuals: np.ndarray = field(repr=False, default=None)
    iterations: int = 0

    @property
    def field_ratio_a(self):
        return math.sqrt(self.eps_2a / self.eps_1a)

    @property
    def field_ratio_b(self):
        return math.sqrt(self.eps_2b / self.eps_1b)


def _balance_equations(x, eps_1a, d_a, d_b, w_q, c_sq, alpha_ratio, coeff):
    eps_1b, eps_2a, eps_2b = x
    shared = eps_1a + eps_1b - alpha_ratio * (eps_2a + eps_2b)
    f = np.array(
        [
            coeff * eps_1a / d_a + coeff * eps_1b / (d_b - w_q) + shared,
            c_sq * coeff * eps_1a / (d_a + w_q) + c_sq * coeff * eps_1b / d_b + shared,
            eps_1a * eps_2a / d_a**2 - c_sq * eps_1b * eps_2b / d_b**2,
        ]
    )
    jacobian = np.array(
        [
            [coeff / (d_b - w_q) + 1, -alpha_ratio, -alpha_ratio],
            [c_sq * coeff / d_b + 1, -alpha_ratio, -alpha_ratio],
            [-c_sq * eps_2b / d_b**2, eps_1a / d_a**2, -c_sq * eps_1b / d_b**2],
        ]
    )
    return f, jacobian


def balance_residuals(balance, omega_q=CESIUM_OMEGA_Q, c_factor_sq=8.0,
                      alpha_ratio=ALPHA_RATIO, resonant_coeff=RESONANT_COEFF):
    """Residuals of the three balance equations at ``balance``."""
    f, _ = _balance_equations(
        (balance.eps_1b, balance.eps_2a, balance.eps_2b),
        balance.eps_1a,
        balance.detuning_a * REDUCED_TIME,
        balance.detuning_b * REDUCED_TIME,
        omega_q * REDUCED_TIME,
        c_factor_sq,
        alpha_ratio,
        resonant_coeff,
    )
    return f


def solve_target_balance(
    omega_q=CESIUM_OMEGA_Q,
    c_factor_sq=8.0,
    detuning_a=None,
    detuning_b=None,
    eps_1a=1.0,
    alpha_ratio=ALPHA_RATIO,
    resonant_coeff=RESONANT_COEFF,
    tol=NEWTON_TOL,
    max_iter=NEWTON_MAX_ITER,
):
    """Cancel the shifts of both target qubit states with equal Rabi frequencies.

    Six variables (two detunings, four field strengths) meet three equations:
    zero shift of |1>, zero shift of |0>, and equal effective Rabi frequencies
    of the two chains. The detunings and ``eps_1a`` are fixed and the
    remaining three strengths are found by damped Newton iteration started
    from the single-chain solution.

    Parameters
    ----------
    omega_q : float
        Qubit splitting in rad/s.
    c_factor_sq : float
        C^2 of the p-manifold couplings.
    detuning_a, detuning_b : float, optional
        Intermediate detunings in rad/s. ``detuning_a`` defaults to half the
        single-chain compensation detuning; ``detuning_b`` to ``detuning_a``.
    eps_1a : float, default 1
        Reduced strength of the lower field of chain a (sets the scale).

    Returns
    -------
    TargetBalance

    Raises
    ------
    NoSolutionError
        No branch with positive field strengths, or Newton failure.
    """
    if detuning_a is None:
        detuning_a = solve_compensation(omega_q, c_factor_sq) / 2
    if detuning_b is None:
        detuning_b = detuning_a
    if not (detuning_a > 0 and detuning_b > 0 and eps_1a > 0):
        raise ValueError("detunings and eps_1a must be > 0")
    args = (
        eps_1a,
        detuning_a * REDUCED_TIME,
        detuning_b * REDUCED_TIME,
        omega_q * REDUCED_TIME,
        c_factor_sq,
        alpha_ratio,
        resonant_coeff,
    )
    single = eps_1a * (resonant_coeff / args[1] + 1) / alpha_ratio
    x = np.array([eps_1a, single, single])
    f, jacobian = _balance_equations(x, *args)
    norm = np.max(np.abs(f))
    for iteration in range(1, max_iter + 1):
        try:
            step = np.linalg.solve(jacobian, -f)
        except np.linalg.LinAlgError as error:
            raise NoSolutionError("singular balance Jacobian") from error
        damping = 1.0
        while True:
            trial = x + damping * step
            f_trial, jacobian_trial = _balance_equations(trial, *args)
            norm_trial = np.max(np.abs(f_trial))
            if norm_trial < norm or damping < 1e-6:
                break
            damping /= 2
        x, f, jacobian, norm = trial, f_trial, jacobian_trial, norm_trial
        logger.debug("balance iteration %d: residual %.3e", iteration, norm)
        if norm <= tol * max(1.0, eps_1a):
            break
    else:
        raise NoSolutionError(f"Newton iteration stalled at residual {norm:.3e}")
    if np.any(x <= 0):
        raise NoSolutionError(
            f"balance requires a non-positive field strength {x.tolist()}"
        )
    return TargetBalance(
        eps_1a, x[0], x[1], x[2], detuning_a, detuning_b, f, iteration
    )


def target_balance_closed_form(
    omega_q=CESIUM_OMEGA_Q, c_factor_sq=8.0, detuning_a=None, detuning_b=None,
    eps_1a=1.0, alpha_ratio=ALPHA_RATIO, resonant_coeff=RESONANT_COEFF,
):
    """Direct elimination of the balance equations, (eps_1b, eps_2a, eps_2b)."""
    if detuning_a is None:
        detuning_a = solve_compensation(omega_q, c_factor_sq) / 2
    if detuning_b is None:
        detuning_b = detuning_a
    d_a, d_b, w_q = (x * REDUCED_TIME for x in (detuning_a, detuning_b, omega_q))
    a = 1 / d_a - c_factor_sq / (d_a + w_q)
    b = 1 / (d_b - w_q) - c_factor_sq / d_b
    eps_1b = -eps_1a * a / b
    total_2 = (
        eps_1a + eps_1b + resonant_coeff * eps_1a / d_a
        + resonant_coeff * eps_1b / (d_b - w_q)
    ) / alpha_ratio
    rho = c_factor_sq * eps_1b * d_a**2 / (eps_1a * d_b**2)
    return eps_1b, rho * total_2 / (1 + rho), total_2 / (1 + rho)
