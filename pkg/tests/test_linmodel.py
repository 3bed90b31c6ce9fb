import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marsquad import dynamics, linmodel, params
from marsquad.linmodel import LinearModel, discretize, linearize_hover, numeric_jacobian

ENV = params.MARS
VEH = params.VehicleParams.default()


def series_expm(a: np.ndarray, t: float) -> np.ndarray:
    """Independent terminating-series exponential for a nilpotent matrix."""
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, 4):
        term = term @ (a * t) / k
        out = out + term
    return out


class TestContinuousModel:
    def test_gravity_couplings(self, cont_model):
        assert cont_model.A[3, 7] == pytest.approx(3.711)
        assert cont_model.A[4, 6] == pytest.approx(-3.711)

    def test_integrator_chain(self, cont_model):
        a = cont_model.A
        for pos, vel in ((0, 3), (1, 4), (2, 5), (6, 9), (7, 10), (8, 11)):
            assert a[pos, vel] == 1.0

    def test_vertical_input_row(self, cont_model):
        assert np.allclose(cont_model.B[5], VEH.thrust_coeff / VEH.mass)

    def test_moment_input_rows(self, cont_model):
        dkt = VEH.arm_length * VEH.thrust_coeff
        assert np.allclose(cont_model.B[9],
                           dkt / VEH.inertia_xx * np.array([0, 0, -1, -1, 0, 0, 1, 1]))
        assert np.allclose(cont_model.B[10],
                           dkt / VEH.inertia_yy * np.array([-1, -1, 0, 0, 1, 1, 0, 0]))
        assert np.allclose(cont_model.B[11],
                           VEH.torque_coeff / VEH.inertia_zz * np.array([-1, 1, -1, 1, -1, 1, -1, 1]))

    def test_output_selects_position_and_heading(self, cont_model):
        y = cont_model.C @ cont_model.x_ref
        assert np.allclose(y, 0.0)
        picked = np.nonzero(cont_model.C)[1]
        assert list(picked) == [0, 1, 2, 8]

    def test_a_is_nilpotent(self, cont_model):
        a4 = np.linalg.matrix_power(cont_model.A, 4)
        assert not a4.any()

    def test_d_must_be_zero(self, cont_model):
        d = np.zeros((4, 8))
        d[0, 0] = 1.0
        with pytest.raises(ValueError, match="D"):
            LinearModel(cont_model.A, cont_model.B, cont_model.C, d,
                        cont_model.x_ref, cont_model.u_ref, 0.0)

    def test_controllable(self, cont_model):
        blocks = [cont_model.B]
        for _ in range(11):
            blocks.append(cont_model.A @ blocks[-1])
        ctrb = np.hstack(blocks)
        assert np.linalg.matrix_rank(ctrb) == 12


class TestDiscretize:
    def test_small_ts_recovers_continuous(self, cont_model):
        ts = 1e-6
        md = discretize(cont_model, ts)
        assert np.allclose((md.A - np.eye(12)) / ts, cont_model.A, atol=1e-4)

    def test_position_row_series_terms(self, cont_model):
        ts = 0.1
        md = discretize(cont_model, ts)
        g = ENV.gravity
        assert md.A[0, 3] == pytest.approx(ts)
        assert md.A[0, 7] == pytest.approx(g * ts**2 / 2)
        assert md.A[0, 10] == pytest.approx(g * ts**3 / 6)

    def test_matches_independent_series(self, cont_model):
        ts = 0.02
        md = discretize(cont_model, ts)
        assert np.allclose(md.A, series_expm(cont_model.A, ts), atol=1e-15)

    @given(ts=st.floats(1e-3, 0.5))
    @settings(max_examples=25)
    def test_semigroup_property(self, cont_model, ts):
        half = discretize(cont_model, ts / 2)
        full = discretize(cont_model, ts)
        assert np.allclose(half.A @ half.A, full.A, atol=1e-12)
        assert np.allclose(half.A @ half.B + half.B, full.B, atol=1e-12)

    def test_exponential_inverse(self, cont_model):
        ts = 0.02
        md = discretize(cont_model, ts)
        back = series_expm(cont_model.A, -ts)
        assert np.allclose(md.A @ back, np.eye(12), atol=1e-13)

    def test_rejects_bad_inputs(self, cont_model, disc_model):
        with pytest.raises(ValueError):
            discretize(cont_model, 0.0)
        with pytest.raises(ValueError):
            discretize(disc_model, 0.02)


class TestNumericJacobian:
    def test_matches_analytic_at_hover(self, cont_model):
        u0 = dynamics.hover_command(VEH, ENV)
        a, b = numeric_jacobian(np.zeros(12), u0, VEH, ENV, eps=1e-6)
        assert np.abs(a - cont_model.A).max() < 1e-5
        assert np.abs(b - cont_model.B).max() < 1e-5

    def test_input_column_sparsity(self, cont_model):
        u0 = dynamics.hover_command(VEH, ENV)
        _, b = numeric_jacobian(np.zeros(12), u0, VEH, ENV)
        col = b[:, 0]
        nonzero_rows = {i for i in range(12) if abs(col[i]) > 1e-8}
        assert nonzero_rows == {5, 10, 11}  # vertical, pitch, yaw channels

    def test_vertical_sensitivity_is_thrust_over_mass(self):
        _, b = numeric_jacobian(np.zeros(12), np.ones(8), VEH, ENV, eps=0.5)
        assert np.allclose(b[5], VEH.thrust_coeff / VEH.mass, rtol=1e-9)

    def test_rejects_bad_eps(self):
        with pytest.raises(ValueError):
            numeric_jacobian(np.zeros(12), np.ones(8), VEH, ENV, eps=0.0)
