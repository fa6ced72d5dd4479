"""Tests for constant, time-dependent and rotating-frame propagation."""

import math

import numpy as np
import pytest

from tsdgate import propagator
from tsdgate import qmodel
from tsdgate.propagator import ConvergenceError, PropagationRecord
from tsdgate.qmodel import AtomState, Coupling, DrivenHamiltonian, GateChannelConfig

OMEGA_C = 2 * math.pi * 3.5e6
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


@pytest.fixture
def design():
    return GateChannelConfig.design(OMEGA_C)


@pytest.fixture
def finite():
    return GateChannelConfig.design(OMEGA_C, v_interaction=2 * math.pi * 500e6)


class TestConstant:
    def test_unitary(self, design):
        h = qmodel.build_hc1_blockaded(design.omega_c, design.omega_t)
        u = propagator.unitary_constant(h, 0.37 * design.pulse_duration)
        assert qmodel.unitarity_error(u) <= 1e-12

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            propagator.unitary_constant(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            propagator.unitary_constant(SIGMA_X, -1.0)

    def test_pi_pulse(self):
        psi0 = AtomState.basis_state(("g", "r"), "g")
        state = propagator.evolve_constant(SIGMA_X / 2, math.pi, psi0)
        assert state.population("r") == pytest.approx(1, abs=1e-14)

    def test_time_reversal(self, design):
        h = qmodel.build_hc1_blockaded(design.omega_c, design.omega_t)
        psi0 = AtomState.basis_state(qmodel.BASIS_C1, "10")
        t = 0.37 * design.pulse_duration
        back = propagator.evolve_constant(-h, t, propagator.evolve_constant(h, t, psi0))
        np.testing.assert_allclose(back.amplitudes, psi0.amplitudes, atol=1e-9)

    def test_stacked_exponential(self):
        stack = np.stack([SIGMA_X, 2 * SIGMA_X])
        u = propagator.expm_hermitian(stack, 0.5)
        np.testing.assert_allclose(u[1], propagator.expm_hermitian(2 * SIGMA_X, 0.5))

    def test_samples(self):
        psi0 = AtomState.basis_state(("g", "r"), "g")
        record = propagator.sample_constant(SIGMA_X / 2, 0, math.pi, psi0, ("g", "r"), 5)
        np.testing.assert_allclose(
            record.population("r"), np.sin(np.linspace(0, math.pi, 5) / 2) ** 2, atol=1e-14
        )
        assert record.norm_drift() <= 1e-12

    def test_state_after_first_pulse(self, design):
        h = qmodel.build_hc1_blockaded(design.omega_c, design.omega_t)
        psi0 = AtomState.basis_state(qmodel.BASIS_C1, "10")
        state = propagator.evolve_constant(h, design.pulse_duration, psi0)
        expected = AtomState(
            qmodel.BASIS_C1,
            [0, 0.5j, -0.5j, -0.5, -0.5],
        )
        np.testing.assert_allclose(state.amplitudes, expected.amplitudes, atol=1e-10)

    def test_two_state_revival(self):
        omega_t = 2 * math.pi * 1e6
        psi11 = AtomState.basis_state(qmodel.BASIS_TWO_STATE, "11")
        before = propagator.evolve_constant(
            qmodel.build_two_state(0.0, omega_t), 0.3 * math.pi / omega_t, psi11
        )
        after = propagator.evolve_constant(
            qmodel.build_two_state(math.sqrt(15) * omega_t, omega_t), math.pi / omega_t, before
        )
        assert abs(before.overlap(after)) == pytest.approx(1, abs=1e-10)
        assert before.population("1r") > 0.1


class TestTimeDependent:
    def test_static_source_matches_constant(self, design):
        h = qmodel.build_hc1_blockaded(design.omega_c, design.omega_t)
        psi0 = AtomState.basis_state(qmodel.BASIS_C1, "11")
        t = design.pulse_duration
        state, record = propagator.evolve_timedep(lambda _: h, 0, t, psi0)
        exact = propagator.evolve_constant(h, t, psi0)
        np.testing.assert_allclose(state.amplitudes, exact.amplitudes, atol=1e-9)
        assert record.times[0] == 0 and record.times[-1] == pytest.approx(t)

    @pytest.mark.parametrize("scheme", ["midpoint", "magnus4"])
    def test_matches_rotating_frame(self, design, scheme):
        driven = qmodel.c1_hamiltonian(design, v_c=0.3, v_t=-0.2)
        psi0 = AtomState.basis_state(qmodel.BASIS_C1, "10")
        t = design.pulse_duration
        state, _ = propagator.evolve_timedep(driven, 0, t, psi0, scheme=scheme)
        frame = propagator.rotating_frame(driven).propagator(0, t) @ psi0.amplitudes
        np.testing.assert_allclose(state.amplitudes, frame, atol=1e-8)

    def test_composition(self, design):
        driven = qmodel.c1_hamiltonian(design, v_c=0.3, v_t=-0.2)
        psi0 = AtomState.basis_state(qmodel.BASIS_C1, "11")
        t = design.pulse_duration
        whole, _ = propagator.evolve_timedep(driven, 0, t, psi0, scheme="magnus4")
        half, _ = propagator.evolve_timedep(driven, 0, t / 2, psi0, scheme="magnus4")
        rest, _ = propagator.evolve_timedep(driven, t / 2, t, half, scheme="magnus4")
        np.testing.assert_allclose(whole.amplitudes, rest.amplitudes, atol=1e-9)

    def test_norm_preserved(self, finite):
        driven = qmodel.c1_hamiltonian(finite, v_c=0.3, v_t=-0.2)
        psi0 = AtomState.basis_state(finite.c1_basis, "10")
        state, record = propagator.evolve_timedep(
            driven, 0, finite.pulse_duration, psi0, scheme="magnus4"
        )
        assert state.norm() == pytest.approx(1, abs=1e-9)
        assert record.norm_drift() <= 1e-9

    def test_empty_interval(self, design):
        psi0 = AtomState.basis_state(qmodel.BASIS_C1, "11")
        state, record = propagator.evolve_timedep(qmodel.c1_hamiltonian(design), 1e-7, 1e-7, psi0)
        assert state is psi0
        assert record.times.size == 1

    def test_convergence_failure(self):
        psi0 = AtomState.basis_state(("g", "r"), "g")
        with pytest.raises(ConvergenceError) as info:
            propagator.evolve_timedep(
                lambda t: math.cos(50 * t) * SIGMA_X, 0, 10, psi0, max_steps=32
            )
        assert info.value.steps == 32
        assert info.value.distance > 1e-10

    def test_reversed_interval(self):
        psi0 = AtomState.basis_state(("g", "r"), "g")
        with pytest.raises(ValueError):
            propagator.evolve_timedep(lambda t: SIGMA_X, 1, 0, psi0)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            propagator.substep_unitaries(lambda t: SIGMA_X, 0, 1, 4, "rk4")

    def test_timedep_unitary(self, design):
        driven = qmodel.c1_hamiltonian(design, v_c=0.3, v_t=-0.2)
        t = design.pulse_duration
        u = propagator.timedep_unitary(driven, 0, t, driven.dim, scheme="magnus4")
        np.testing.assert_allclose(
            u, propagator.rotating_frame(driven).propagator(0, t), atol=1e-8
        )


class TestRotatingFrame:
    def test_gauge_rates(self, design):
        driven = qmodel.c1_hamiltonian(design, v_c=0.3, v_t=-0.2)
        h = propagator.rotating_frame(driven).hamiltonian
        k = design.wavevector_k
        idx = {label: i for i, label in enumerate(qmodel.BASIS_C1)}
        assert h[idx["11"], idx["11"]] == 0
        assert h[idx["10"], idx["10"]] == 0
        assert h[idx["r0"], idx["r0"]].real == pytest.approx(k * 0.3)
        assert h[idx["1r"], idx["1r"]].real == pytest.approx(-k * 0.2)

    def test_segment_equivalent(self, design):
        segment = qmodel.PulseSegment(design.pulse_duration, channel_k_signs=(-1, -1, -1))
        h = propagator.rotating_frame_equivalent(design, segment, 0.3, 0.0)
        idx = qmodel.BASIS_C1.index("r0")
        assert h[idx, idx].real == pytest.approx(-design.wavevector_k * 0.3)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_c0_shift_follows_channel_sign(self, design, sign):
        segment = qmodel.PulseSegment(design.pulse_duration, channel_k_signs=(1, sign, sign))
        h = propagator.rotating_frame_equivalent(design, segment, 0.0, 0.25, "c0")
        idx = qmodel.BASIS_C0.index("0r")
        assert h[idx, idx].real == pytest.approx(sign * design.wavevector_k * 0.25)

    def test_inconsistent_loop(self):
        couplings = [
            Coupling(1, 0, 1.0, (1, 0)),
            Coupling(2, 1, 1.0, (0, 1)),
            Coupling(2, 0, 1.0, (0, 0)),
        ]
        driven = DrivenHamiltonian(("a", "b", "c"), np.zeros(3), couplings, 1.0, 0.1, 0.1)
        with pytest.raises(ValueError):
            propagator.gauge_coefficients(driven)

    def test_batched_matches_single(self, finite):
        driven = qmodel.c1_hamiltonian(finite, omega_t_sign=-1)
        values = np.array([-0.4, 0.0, 0.25])
        t0, t1 = finite.pulse_duration, 2 * finite.pulse_duration
        stack = propagator.batched_frame_unitaries(driven, 0.1, values, t0, t1)
        for v_t, u in zip(values, stack):
            single = propagator.rotating_frame(driven.with_velocity(0.1, v_t)).propagator(t0, t1)
            np.testing.assert_allclose(u, single, atol=1e-12)

    def test_block_name(self, design):
        with pytest.raises(ValueError):
            propagator.block_hamiltonian(design, qmodel.PulseSegment(1e-7), block="c2")


class TestPropagationRecord:
    def test_time_integral(self):
        record = PropagationRecord(
            ("a", "b"), np.linspace(0, 2, 11), np.tile([0.25, 0.75], (11, 1))
        )
        assert record.time_integral(("b",)) == pytest.approx(1.5)
        assert record.time_integral(("a", "b")) == pytest.approx(2.0)
        assert record.time_integral(("c",)) == 0

    def test_concatenate_drops_shared_sample(self):
        first = PropagationRecord(("a",), np.array([0.0, 1.0]), np.ones((2, 1)), np.eye(1))
        second = PropagationRecord(("a",), np.array([1.0, 2.0]), np.ones((2, 1)), 2 * np.eye(1))
        joined = first.concatenate(second)
        np.testing.assert_array_equal(joined.times, [0.0, 1.0, 2.0])
        assert joined.final_unitary[0, 0] == 2

    def test_concatenate_other_basis(self):
        first = PropagationRecord(("a",), np.zeros(1), np.ones((1, 1)))
        with pytest.raises(ValueError):
            first.concatenate(PropagationRecord(("b",), np.zeros(1), np.ones((1, 1))))
