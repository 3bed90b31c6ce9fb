import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from marsquad.trajectories import RefSample, constant_ref, helix_ref, ref_window, square_ref


class TestConstant:
    def test_returns_setpoint_at_zero(self):
        g = constant_ref(1.0, 2.0, 3.0, 0.5)
        s = g(0.0)
        assert (s.x, s.y, s.z, s.psi) == (1.0, 2.0, 3.0, 0.5)

    def test_time_invariant(self):
        g = constant_ref(1.0, 2.0, 3.0, 0.5)
        assert g(100.0).as_array().tolist() == g(0.0).as_array().tolist()

    @given(t=st.floats(0.0, 1e4))
    def test_heading_never_changes(self, t):
        g = constant_ref(0.0, 0.0, 1.0, 0.3)
        assert g(t).psi == 0.3

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            constant_ref(math.nan, 0.0, 0.0)


class TestHelix:
    def test_start_point(self):
        g = helix_ref()
        s = g(0.0)
        assert (s.x, s.y, s.z, s.psi) == (1.0, 0.0, 0.0, 0.0)

    def test_half_turn(self):
        # default rate 0.02*pi: half a revolution takes 50 s, climbing 5 m
        s = helix_ref()(50.0)
        assert s.x == pytest.approx(-1.0)
        assert s.y == pytest.approx(0.0, abs=1e-12)
        assert s.z == pytest.approx(5.0)
        assert s.psi == 0.0

    @given(t=st.floats(0.0, 500.0))
    def test_stays_on_circle(self, t):
        s = helix_ref(radius=1.0)(t)
        assert s.x**2 + s.y**2 == pytest.approx(1.0, rel=1e-12)

    def test_horizontal_speed_matches_rate(self):
        r, w = 2.0, 0.1
        g = helix_ref(radius=r, angular_rate=w, climb_rate=0.0)
        dt = 1e-4
        for t in (0.0, 7.3, 40.0):
            a, b = g(t), g(t + dt)
            speed = math.hypot(b.x - a.x, b.y - a.y) / dt
            assert speed == pytest.approx(r * w, rel=1e-4)

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            helix_ref(radius=0.0)


class TestSquare:
    def test_starts_at_origin_corner(self):
        s = square_ref(side=2.0, edge_duration=10.0, altitude=1.0)(0.0)
        assert (s.x, s.y, s.z, s.psi) == (0.0, 0.0, 1.0, 0.0)

    def test_position_continuous_velocity_rotates_at_corner(self):
        g = square_ref(side=2.0, edge_duration=10.0, altitude=1.0)
        eps = 1e-6
        before, after = g(10.0 - eps), g(10.0 + eps)
        assert before.x == pytest.approx(after.x, abs=1e-4)
        assert before.y == pytest.approx(after.y, abs=1e-4)
        v_before = ((g(10.0 - eps).x - g(10.0 - 2 * eps).x) / eps,
                    (g(10.0 - eps).y - g(10.0 - 2 * eps).y) / eps)
        v_after = ((g(10.0 + 2 * eps).x - g(10.0 + eps).x) / eps,
                   (g(10.0 + 2 * eps).y - g(10.0 + eps).y) / eps)
        # along +x before the corner, along +y after
        assert v_before[0] > 0.1 and abs(v_before[1]) < 1e-6
        assert abs(v_after[0]) < 1e-6 and v_after[1] > 0.1

    @given(t=st.floats(0.0, 200.0))
    def test_periodic(self, t):
        g = square_ref(side=2.0, edge_duration=10.0, altitude=1.0)
        a, b = g(t), g(t + 40.0)
        assert a.x == pytest.approx(b.x, abs=1e-9)
        assert a.y == pytest.approx(b.y, abs=1e-9)

    @given(t=st.floats(0.0, 100.0))
    def test_stays_on_boundary(self, t):
        g = square_ref(side=2.0, edge_duration=10.0, altitude=1.0)
        s = g(t)
        on_edge = (abs(s.x) < 1e-9 or abs(s.x - 2.0) < 1e-9
                   or abs(s.y) < 1e-9 or abs(s.y - 2.0) < 1e-9)
        assert on_edge
        assert -1e-9 <= s.x <= 2.0 + 1e-9
        assert -1e-9 <= s.y <= 2.0 + 1e-9

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            square_ref(side=-1.0)
        with pytest.raises(ValueError):
            square_ref(edge_duration=0.0)


class TestWindow:
    def test_shape_and_sampling(self):
        g = helix_ref()
        win = ref_window(g, 2.0, 5, 0.1)
        assert win.shape == (5, 4)
        for i in range(5):
            assert np.allclose(win[i], g(2.0 + 0.1 * i).as_array())

    def test_sample_invariants(self):
        with pytest.raises(ValueError):
            RefSample(-1.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            RefSample(0.0, math.inf, 0.0, 0.0, 0.0)
