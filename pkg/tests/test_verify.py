import numpy as np
import pytest

from nsdressing.background import ZeroBackground
from nsdressing.core import DressingConfig, Point
from nsdressing.dressing import dressed_jost, potential
from nsdressing.verify import (
    delta_derivative_residual,
    integral_equation_residual,
    pde_residual,
    pointwise,
    wronskian_residual,
)

G1 = DressingConfig.from_arrays([1j], [[1]])
PTS = np.random.default_rng(7).uniform(-2, 2, (10, 2))


def free(k):
    return lambda a, b: np.exp(-1j * k * np.asarray(a) - 1j * k * k * np.asarray(b))


class TestPde:
    def test_free_solution(self):
        r = pde_residual(free(0.4 + 0.9j), lambda a, b: 0 * a, PTS)
        assert r.max_rel <= 1e-8

    def test_richardson_gains(self):
        k = 0.4 + 0.9j
        r = pde_residual(lambda a, b: dressed_jost(G1, (a, b), k), lambda a, b: potential(G1, (a, b)), PTS)
        assert r.reduction >= 3.5
        assert r.max_rel < r.raw_rel[1]

    def test_detects_wrong_potential(self):
        r = pde_residual(free(1j), lambda a, b: 0 * a + 0.1, PTS)
        assert r.max_rel == pytest.approx(0.1, rel=1e-2)  # scaled by the stencil maximum

    def test_pointwise_wrapper(self):
        f = pointwise(lambda p: np.exp(p.x1 + 1j * p.x2))
        v = f(np.array([0.0, 1.0]), np.array([0.0, 0.0]))
        assert np.allclose(v, [1, np.e])

    def test_report_dict(self):
        d = pde_residual(free(1j), lambda a, b: 0 * a, PTS[:2]).as_dict()
        assert d["n_points"] == 2 and d["richardson_order"] == 4


class TestIdentities:
    @pytest.mark.parametrize("name", ["one_soliton", "two_soliton", "three_soliton"])
    def test_wronskian(self, golden, name):
        cfg = golden[name]
        f = lambda a, b: dressed_jost(cfg, (a, b), 0.3 + 0.4j)  # noqa: E731
        g = lambda a, b: dressed_jost(cfg, (a, b), -0.5 + 0.2j)  # noqa: E731
        assert wronskian_residual(f, g, None, PTS).max_rel <= 1e-5

    @pytest.mark.parametrize("name", ["one_soliton", "two_soliton", "three_soliton"])
    def test_delta_derivative(self, golden, name):
        cfg = golden[name]
        for n in range(1, cfg.n + 1):
            assert delta_derivative_residual(cfg, PTS, n).max_rel <= 1e-5

    def test_wronskian_detects_mismatch(self):
        f = free(0.3 + 0.4j)
        g = lambda a, b: dressed_jost(G1, (a, b), 0.5 + 0.2j)  # noqa: E731
        assert wronskian_residual(f, g, None, PTS).max_rel > 1e-2


class TestIntegralEquation:
    def test_no_solitons(self):
        cfg = DressingConfig.from_arrays([], np.zeros((0, 0)), ZeroBackground())
        assert integral_equation_residual(cfg, Point(0.2, 0.3), 0.5j) == 0

    def test_one_soliton(self):
        r = integral_equation_residual(G1, Point(0.3, 0.4), 0.4 + 0.6j, half_width=10.0)
        assert abs(r) <= 1e-3

    def test_window_doubling_helps(self):
        r = [abs(integral_equation_residual(G1, Point(0.3, 0.4), 0.4 + 0.6j, half_width=w)) for w in (5.0, 10.0)]
        assert r[1] < r[0]
