"""Tests for the gate-quality functionals."""

import math

import numpy as np
import pytest

from tsdgate import metrics
from tsdgate import qmodel
from tsdgate.metrics import IdealGate


class TestRotationError:
    def test_perfect(self):
        assert metrics.rotation_error(metrics.cnot_matrix()) == pytest.approx(0, abs=1e-12)

    def test_global_phase(self):
        u = np.exp(0.4j) * metrics.cnot_matrix()
        assert metrics.rotation_error(u) == pytest.approx(0, abs=1e-12)

    def test_cz_against_cnot(self):
        assert metrics.rotation_error(metrics.cz_matrix()) == pytest.approx(0.6)

    def test_leakage_counts(self):
        u = 0.9 * metrics.cnot_matrix()
        assert metrics.rotation_error(u) == pytest.approx(1 - (3.6**2 + 4 * 0.81) / 20)

    def test_custom_ideal(self):
        u = metrics.cphase_matrix(0.0, math.pi)
        assert metrics.rotation_error(u, metrics.cz_matrix()) == pytest.approx(0, abs=1e-12)

    def test_stack(self):
        stack = np.stack([metrics.cnot_matrix(), metrics.cz_matrix()])[None]
        errors = metrics.rotation_errors(stack)
        assert errors.shape == (1, 2)
        np.testing.assert_allclose(errors[0], [0, 0.6], atol=1e-12)

    def test_shape(self):
        with pytest.raises(ValueError):
            metrics.rotation_error(np.eye(3))

    def test_stack_needs_batch_entry_point(self):
        with pytest.raises(ValueError):
            metrics.rotation_error(np.stack([np.eye(4)] * 2))


class TestIdealGate:
    def test_default_is_cnot(self):
        np.testing.assert_array_equal(IdealGate().u_ideal, metrics.cnot_matrix())

    def test_non_unitary(self):
        with pytest.raises(ValueError):
            IdealGate("bad", 2 * np.eye(4))

    def test_rotation_error(self):
        gate = IdealGate("cz", metrics.cz_matrix())
        assert gate.rotation_error(metrics.cz_matrix()) == pytest.approx(0, abs=1e-12)


class TestBellError:
    def test_target(self):
        assert metrics.bell_error(metrics.bell_target()) == pytest.approx(0, abs=1e-15)

    def test_product_state(self):
        state = qmodel.AtomState.basis_state(qmodel.BASIS_COMPUTATIONAL, "00")
        assert metrics.bell_error(state) == pytest.approx(0.5)

    def test_missing_labels(self):
        with pytest.raises(ValueError):
            metrics.bell_error(qmodel.AtomState.basis_state(qmodel.BASIS_C0, "00"))

    def test_from_gate(self):
        assert metrics.bell_error_from_gate(metrics.cnot_matrix()) == pytest.approx(0, abs=1e-15)
        assert metrics.bell_error_from_gate(np.eye(4)) == pytest.approx(0.75)


class TestTruthTable:
    def test_cnot(self):
        assert metrics.truth_table_error(metrics.cnot_matrix()) == pytest.approx(0, abs=1e-15)

    def test_identity(self):
        assert metrics.truth_table_error(np.eye(4)) == pytest.approx(1)

    def test_phases_ignored(self):
        u = metrics.cnot_matrix() @ np.diag(np.exp(1j * np.arange(4)))
        assert metrics.truth_table_error(u) == pytest.approx(0, abs=1e-15)


def test_gate_duration():
    omega_c = 2 * math.pi * 3.5e6
    duration = metrics.gate_duration(math.sqrt(1.5) * omega_c)
    assert duration == pytest.approx(1 / 3.5e6)
    with pytest.raises(ValueError):
        metrics.gate_duration(0)


def test_figure_of_merit():
    assert metrics.figure_of_merit(1.0, 0.25e-6) == pytest.approx(4e6)
    with pytest.raises(ValueError):
        metrics.figure_of_merit(-1.0, 1.0)
