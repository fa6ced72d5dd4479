"""
Invariant suite run by ``tsd_gate check``.

"""

import math
import time
import logging
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from tsdgate import ensembles
from tsdgate import metrics
from tsdgate import propagator
from tsdgate import qmodel
from tsdgate import sequence
from tsdgate import stark
from tsdgate.qmodel import AtomState, GateChannelConfig

logger = logging.getLogger(__name__)

MHZ = 2 * math.pi * 1e6


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one invariant.

    ``passed`` is ``value <= tolerance`` for upper bounds and
    ``value >= tolerance`` when ``lower_bound`` is set.
    """

    name: str
    value: float
    tolerance: float
    lower_bound: bool = False

    @property
    def passed(self):
        if self.lower_bound:
            return self.value >= self.tolerance
        return self.value <= self.tolerance


def _design(v_interaction=qmodel.INFINITE_BLOCKADE):
    return GateChannelConfig.design(2 * math.pi * 3.5e6, v_interaction=v_interaction)


def check_cnot_exact():
    deviation = np.max(np.abs(sequence.gate_map(_design()) - metrics.cnot_matrix()))
    return CheckResult("cnot at design point", float(deviation), 1e-9)


def check_eigenvalues():
    cfg = _design()
    h = qmodel.build_hc1_blockaded(cfg.omega_c, cfg.omega_t)
    expected = np.sort([0, cfg.omega_c / 2, -cfg.omega_c / 2, cfg.omega_bar / 2, -cfg.omega_bar / 2])
    found = np.linalg.eigvalsh(h)
    return CheckResult(
        "blockaded c1 eigenvalues", float(np.max(np.abs(found - expected)) / cfg.omega_c), 1e-10
    )


def check_eigenvectors():
    cfg = _design()
    worst = 0.0
    for sign in (1, -1):
        h = qmodel.build_hc1_blockaded(cfg.omega_c, sign * cfg.omega_t)
        for value, vector in qmodel.tsd_eigenvectors(cfg.omega_c, sign * cfg.omega_t).values():
            worst = max(worst, np.max(np.abs(h @ vector - value * vector)) / cfg.omega_c)
    return CheckResult("closed-form eigenvectors", float(worst), 1e-12)


def check_key_relation():
    return CheckResult(
        "spin-echo key relation", sequence.spin_echo_key_relation_check(_design()), 1e-10
    )


def check_key_relation_broken():
    cfg = GateChannelConfig(2 * math.pi * 3.5e6, 2 * math.pi * 3.5e6)
    return CheckResult(
        "key relation off design", sequence.spin_echo_key_relation_check(cfg), 1e-2, True
    )


def check_two_state_revival():
    report = sequence.two_state_tsd_demo(math.sqrt(15))
    return CheckResult("two-state revival", abs(1 - report.revival_overlap), 1e-9)


def check_decay_coefficient():
    return CheckResult(
        "decay coefficient", abs(ensembles.decay_coefficient(_design()) - 0.39), 0.01
    )


def check_hermiticity():
    cfg = _design(2 * math.pi * 500e6)
    h = qmodel.build_hc1_full(cfg, 1, 0.3, -0.2, 37e-9)
    return CheckResult("hermiticity", qmodel.hermiticity_error(h), 1e-12)


def check_unitarity():
    cfg = _design(2 * math.pi * 500e6)
    schedule = sequence.tsd_schedule(cfg, 2, 9.7e-9)
    u = sequence.block_propagator(cfg, schedule, 0.3, -0.2, "c1")
    return CheckResult("unitarity", qmodel.unitarity_error(u), 1e-9)


def check_time_reversal():
    cfg = _design()
    h = qmodel.build_hc1_blockaded(cfg.omega_c, cfg.omega_t)
    psi0 = AtomState.basis_state(qmodel.BASIS_C1, "10")
    t = 0.37 * cfg.pulse_duration
    back = propagator.evolve_constant(-h, t, propagator.evolve_constant(h, t, psi0))
    return CheckResult(
        "time reversal", float(np.max(np.abs(back.amplitudes - psi0.amplitudes))), 1e-9
    )


def check_composition():
    cfg = _design()
    driven = qmodel.c1_hamiltonian(cfg, v_c=0.3, v_t=-0.2)
    psi0 = AtomState.basis_state(qmodel.BASIS_C1, "11")
    t = cfg.pulse_duration
    whole, _ = propagator.evolve_timedep(driven, 0, t, psi0, scheme="magnus4")
    half, _ = propagator.evolve_timedep(driven, 0, t / 2, psi0, scheme="magnus4")
    rest, _ = propagator.evolve_timedep(driven, t / 2, t, half, scheme="magnus4")
    return CheckResult(
        "composition", float(np.max(np.abs(whole.amplitudes - rest.amplitudes))), 1e-9
    )


def check_route_agreement():
    cfg = _design(2 * math.pi * 500e6)
    worst = 0.0
    for case_id in (1, 2):
        lab = sequence.gate_map(cfg, 0.3, -0.2, case_id, method="timedep")
        frame = sequence.gate_map(cfg, 0.3, -0.2, case_id)
        worst = max(worst, float(np.max(np.abs(lab - frame))))
    return CheckResult("lab frame vs rotating frame", worst, 1e-8)


def check_rotated_basis():
    return CheckResult("barred-basis identity", sequence.rotated_basis_identity_check(), 1e-12)


def check_c_factor():
    return CheckResult("C^2 = 8", abs(stark.c_factor_squared() - 8), 1e-12)


def check_cesium_detuning():
    delta = stark.solve_compensation(stark.CESIUM_OMEGA_Q, 8)
    return CheckResult(
        "cesium compensation detuning", abs(delta / (2 * math.pi * 1.31e9) - 1), 0.01
    )


def check_reproducibility():
    cfg = _design(2 * math.pi * 500e6)
    values = ensembles.velocity_values(11, 0.5)
    first = ensembles.doppler_error_grid(cfg, values=values, use_cache=False, workers=2)
    second = ensembles.doppler_error_grid(cfg, values=values, use_cache=False, workers=1)
    return CheckResult(
        "bitwise reproducibility", float(not np.array_equal(first, second)), 0.0
    )


def check_grid_refinement():
    cfg = _design(2 * math.pi * 500e6)
    coarse = ensembles.doppler_averaged_rotation_error(cfg, 5e-6)
    fine = ensembles.doppler_averaged_rotation_error(cfg, 5e-6, n_points=201)
    return CheckResult("velocity grid refinement", abs(fine / coarse - 1), 0.1)


def check_metric_ordering():
    cfg = _design(2 * math.pi * 500e6)
    rng = np.random.default_rng(11)
    worst = -math.inf
    for case_id in (1, 2):
        for v_c, v_t in rng.uniform(-0.5, 0.5, size=(5, 2)):
            gate = sequence.gate_map(cfg, v_c, v_t, case_id, 9.7e-9)
            excess = metrics.rotation_error(gate) - metrics.bell_error_from_gate(gate)
            worst = max(worst, float(excess))
    return CheckResult("rotation error <= Bell error", worst, 1e-12)


def check_doppler_curvature():
    cfg = _design()
    temperature = 1e-6
    baseline, curvature = ensembles.doppler_curvature(cfg)
    average = ensembles.doppler_averaged_rotation_error(
        cfg, temperature, n_points=41, v_max=0.06, use_cache=False
    )
    predicted = baseline + curvature * ensembles.doppler_scale(cfg, temperature) ** 2
    return CheckResult("small-temperature Doppler expansion", abs(average / predicted - 1), 1e-2)


CHECKS = (
    check_cnot_exact,
    check_eigenvalues,
    check_eigenvectors,
    check_key_relation,
    check_key_relation_broken,
    check_two_state_revival,
    check_decay_coefficient,
    check_hermiticity,
    check_unitarity,
    check_time_reversal,
    check_composition,
    check_route_agreement,
    check_rotated_basis,
    check_c_factor,
    check_cesium_detuning,
    check_reproducibility,
    check_grid_refinement,
    check_metric_ordering,
    check_doppler_curvature,
)


def run_checks(progress=False):
    """Run every invariant check.

    Returns
    -------
    list of CheckResult
    """
    start = time.time()
    results = [check() for check in tqdm(CHECKS, disable=not progress)]
    failed = [r.name for r in results if not r.passed]
    logger.info(
        "%d checks, %d failed. Elapsed time: %.2f seconds",
        len(results),
        len(failed),
        time.time() - start,
    )
    return results
