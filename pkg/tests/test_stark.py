"""Tests for the angular-momentum algebra and the AC Stark compensation solvers."""

import math

import numpy as np
import pytest

from tsdgate import stark
from tsdgate.stark import NoSolutionError, TargetBalance, TransitionSpec, TwoPhotonDrive

GHZ = 2 * math.pi * 1e9


class TestClebschGordan:
    @pytest.mark.parametrize(
        "args, expected",
        [
            ((0.5, 0.5, 1, 0.5, -0.5, 0), 1 / math.sqrt(2)),
            ((0.5, 0.5, 0, 0.5, -0.5, 0), 1 / math.sqrt(2)),
            ((0.5, 0.5, 0, -0.5, 0.5, 0), -1 / math.sqrt(2)),
            ((0.5, 0.5, 1, 0.5, 0.5, 1), 1.0),
            ((1, 1, 2, 1, 1, 2), 1.0),
            ((1, 1, 0, 1, -1, 0), 1 / math.sqrt(3)),
            ((1.5, 1, 2.5, 1.5, 1, 2.5), 1.0),
        ],
    )
    def test_known_values(self, args, expected):
        assert stark.clebsch_gordan(*args) == pytest.approx(expected, abs=1e-14)

    def test_selection_rule(self):
        assert stark.clebsch_gordan(1, 1, 1, 1, 0, 0) == 0
        assert stark.clebsch_gordan(1, 1, 3, 1, 1, 2) == 0

    @pytest.mark.parametrize("j1, j2", [(1.5, 1), (2, 0.5), (4.5, 1)])
    def test_orthogonality(self, j1, j2):
        m = 0.5 if (j1 + j2) % 1 else 0
        js = np.arange(abs(j1 - j2), j1 + j2 + 1)
        projections = [
            (m1, m - m1) for m1 in np.arange(-j1, j1 + 1) if abs(m - m1) <= j2
        ]
        for ja in js:
            for jb in js:
                if abs(m) > min(ja, jb):
                    continue
                overlap = sum(
                    stark.clebsch_gordan(j1, j2, ja, m1, m2, m)
                    * stark.clebsch_gordan(j1, j2, jb, m1, m2, m)
                    for m1, m2 in projections
                )
                assert overlap == pytest.approx(float(ja == jb), abs=1e-12)

    def test_not_half_integer(self):
        with pytest.raises(ValueError):
            stark.clebsch_gordan(0.3, 1, 1, 0, 0, 0)


class TestCompensation:
    def test_c_factor(self):
        assert stark.c_factor_squared() == pytest.approx(8, abs=1e-12)

    def test_custom_spec(self):
        assert stark.c_factor_squared(TransitionSpec(numerator=(3, 3), denominator=(3, 3))) == 1

    @pytest.mark.parametrize(
        "omega_q, expected", [(stark.CESIUM_OMEGA_Q, 1.31), (stark.RUBIDIUM_OMEGA_Q, 0.976)]
    )
    def test_detuning(self, omega_q, expected):
        assert stark.solve_compensation(omega_q, 8) / GHZ == pytest.approx(expected, rel=1e-2)

    @pytest.mark.parametrize("c_sq", [1.0, 0.5])
    def test_no_solution(self, c_sq):
        with pytest.raises(NoSolutionError):
            stark.solve_compensation(stark.CESIUM_OMEGA_Q, c_sq)

    def test_no_solution_is_value_error(self):
        assert issubclass(NoSolutionError, ValueError)

    def test_field_ratio(self):
        assert stark.solve_field_ratio(1.31 * GHZ) == pytest.approx(0.2891, abs=2e-4)

    def test_field_ratio_limit(self):
        assert stark.solve_field_ratio(1e6 * GHZ) == pytest.approx(1 / math.sqrt(16.3), rel=1e-6)

    def test_field_ratio_back_substitution(self):
        delta = stark.solve_compensation(stark.CESIUM_OMEGA_Q, 8)
        ratio = stark.solve_field_ratio(delta)
        assert abs(stark.field_ratio_residual(delta, ratio)) <= 1e-12

    def test_field_ratio_no_solution(self):
        with pytest.raises(NoSolutionError):
            stark.solve_field_ratio(1.0 * GHZ, resonant_coeff=-20.0)

    def test_field_ratio_invalid(self):
        with pytest.raises(ValueError):
            stark.solve_field_ratio(-1.0)


class TestShifts:
    @pytest.fixture
    def drive(self):
        delta = stark.solve_compensation(stark.CESIUM_OMEGA_Q, 8)
        return TwoPhotonDrive(
            omega1=2 * math.pi * 3.5e14,
            omega2=2 * math.pi * 4.2e14,
            e1=1e4,
            e2=3e3,
            delta=delta,
            rabi1=2 * math.pi * 96e6,
            rabi2=2 * math.pi * 96e6,
            alpha1=-1e-39,
            alpha2=1.63e-38,
            omega_q=stark.CESIUM_OMEGA_Q,
        )

    def test_compensated_qubit_shifts(self, drive):
        shifts = stark.stark_shifts(drive)
        assert shifts.delta_q1 == pytest.approx(shifts.delta_q0, rel=1e-9)
        assert abs(shifts.differential) <= 1e-9 * abs(shifts.delta_q1)

    def test_fields_off(self, drive):
        off = TwoPhotonDrive(
            drive.omega1, drive.omega2, 0.0, 0.0, drive.delta, drive.rabi1, drive.rabi2,
            drive.alpha1, drive.alpha2, drive.omega_q,
        )
        shifts = stark.stark_shifts(off)
        assert shifts.delta_r == pytest.approx(drive.rabi2**2 / (4 * drive.delta))
        assert shifts.delta_q1 == pytest.approx(drive.rabi1**2 / (4 * drive.delta))

    def test_signs(self, drive):
        resonant_only = drive.rabi1**2 / (4 * drive.delta)
        assert resonant_only > 0
        assert stark.stark_shifts(drive).delta_q1 < resonant_only

    def test_omega_eff(self, drive):
        assert drive.omega_eff == pytest.approx(drive.rabi1 * drive.rabi2 / (2 * drive.delta))

    def test_zero_detuning(self, drive):
        with pytest.raises(ValueError):
            TwoPhotonDrive(1.0, 1.0, 0, 0, 0.0, 1.0, 1.0, -1.0, 1.0, 1.0)


class TestTargetBalance:
    def test_residuals(self):
        balance = stark.solve_target_balance()
        assert isinstance(balance, TargetBalance)
        assert np.max(np.abs(stark.balance_residuals(balance))) <= 1e-9

    def test_matches_closed_form(self):
        balance = stark.solve_target_balance()
        closed = stark.target_balance_closed_form()
        np.testing.assert_allclose(
            [balance.eps_1b, balance.eps_2a, balance.eps_2b], closed, rtol=1e-9
        )

    def test_cesium_branch(self):
        balance = stark.solve_target_balance()
        assert balance.eps_1b == pytest.approx(0.0578, rel=1e-2)
        assert balance.field_ratio_a > 0 and balance.field_ratio_b > 0

    def test_invalid_detuning(self):
        with pytest.raises(ValueError):
            stark.solve_target_balance(detuning_a=-1.0)
