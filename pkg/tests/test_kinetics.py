import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellmotion.kinetics import (
    DimensionalParams,
    Params,
    StimulusConfig,
    nondimensionalize,
    reaction_f,
    stimulus,
)


class TestReaction:
    def test_root_at_zero(self):
        for v in (0.1, 0.7, 1.5):
            assert reaction_f(0.0, v, 100.0, 0.8) == 0.0

    def test_root_at_half(self):
        for v in (0.1, 0.7, 1.5):
            assert reaction_f(0.5, v, 250.0, 0.6) == 0.0

    def test_direct_evaluation(self):
        # -100 * 0.25 * (0.25-0.5) * (0.25-0.4) = -0.9375
        assert reaction_f(0.25, 0.5, 100.0, 0.8) == pytest.approx(-0.9375)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.001, 1.2), st.floats(0.3, 1.5))
    def test_sign_structure(self, u, v):
        # three roots at u = 0, 0.5, Cv: f > 0 between the middle pair
        # whenever the cubic opens downward through them
        K, C = 100.0, 0.8
        f = reaction_f(u, v, K, C)
        expected = -K * u * (u - 0.5) * (u - C * v)
        assert f == expected
        if abs(u - 0.5) > 1e-9 and abs(u - C * v) > 1e-9:
            assert np.sign(f) == np.sign(-(u - 0.5) * (u - C * v))


class TestStimulus:
    def setup_method(self):
        self.cfg = StimulusConfig()

    def test_plateau_value_at_origin(self):
        assert stimulus(0.0, 0.0, 0.25, self.cfg) == pytest.approx(0.07 * 1.3 * 0.7)

    def test_ramp_down_half_way(self):
        # at t = 0.75 the pulse is at half amplitude
        x, y = 0.2, -0.4
        expected = 0.07 * 0.5 * (1.3 - y) * (0.7 - x)
        assert stimulus(x, y, 0.75, self.cfg) == pytest.approx(expected)

    def test_off_between_windows(self):
        assert stimulus(0.3, 0.3, 5.0, self.cfg) == 0.0

    def test_second_window_mirrors_first(self):
        x, y = -0.1, 0.2
        s2 = stimulus(x, y, 10.25, self.cfg)
        assert s2 == pytest.approx(0.07 * (y + 1.3) * (x + 0.7))

    @pytest.mark.parametrize("edge", [0.5, 1.0, 10.5, 11.0])
    def test_continuity_at_ramp_points(self, edge):
        # the ramps reach zero at the window ends, so S is continuous
        # there; the window *starts* (t = 0, 10) switch on abruptly by the
        # piecewise definition
        x, y = 0.1, -0.2
        eps = 1e-7
        lo = stimulus(x, y, max(edge - eps, 0.0), self.cfg)
        hi = stimulus(x, y, edge + eps, self.cfg)
        at = stimulus(x, y, edge, self.cfg)
        assert abs(lo - at) < 1e-5 and abs(hi - at) < 1e-5

    @pytest.mark.parametrize("start", [10.0])
    def test_right_continuity_at_window_start(self, start):
        x, y = 0.1, -0.2
        eps = 1e-7
        hi = stimulus(x, y, start + eps, self.cfg)
        at = stimulus(x, y, start, self.cfg)
        assert abs(hi - at) < 1e-5

    def test_disabled(self):
        cfg = StimulusConfig(enabled=False)
        assert stimulus(0.0, 0.0, 0.25, cfg) == 0.0


class TestNondimensionalize:
    def make(self, **over):
        base = dict(
            D_u=0.3, D_v=30.0, alpha=0.1, beta=0.2, tau=2.62, gamma=1.0,
            k=0.01, c=10.0, C=0.8, V0=0.1, R=10.0, N_tot=6000.0,
        )
        base.update(over)
        return DimensionalParams(**base)

    def test_reaction_rate(self):
        p = nondimensionalize(self.make(), warn=False)
        assert p.K == pytest.approx(0.01 * 10.0 * 100.0 / 0.1)  # = 100

    def test_surface_tension(self):
        p = nondimensionalize(self.make(), warn=False)
        assert p.chi == pytest.approx(1.0 / 2.62)

    def test_contractility(self):
        p = nondimensionalize(self.make(), warn=False)
        assert p.u_star == pytest.approx(0.2 / (10.0 * 0.1))  # = 0.2

    def test_diffusion_and_mass(self):
        p = nondimensionalize(self.make(), warn=False)
        assert p.D_u == pytest.approx(0.3 / (0.1 * 10.0))
        assert p.M == pytest.approx(6000.0 / (10.0 * 100.0))

    def test_homogeneity(self):
        # doubling V0, k, gamma (tau fixed) leaves K and chi unchanged
        p1 = nondimensionalize(self.make(), warn=False)
        p2 = nondimensionalize(
            self.make(V0=0.2, k=0.02, gamma=2.0, D_u=0.6, D_v=60.0), warn=False
        )
        assert p2.K == pytest.approx(p1.K)
        assert p2.chi == pytest.approx(p1.chi)
        assert p2.D_u == pytest.approx(p1.D_u)

    def test_out_of_range_warns(self):
        with pytest.warns(UserWarning):
            nondimensionalize(self.make(k=1.0))  # K = 10000


class TestParams:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            Params(D_u=0.0, D_v=10, K=100, C=0.8, chi=0.1, u_star=0.2, M=6)

    def test_rejects_bad_C(self):
        with pytest.raises(ValueError):
            Params(D_u=0.1, D_v=10, K=100, C=1.5, chi=0.1, u_star=0.2, M=6)
