import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from fluxrecon.errors import ConfigurationError, InputError
from fluxrecon.fields import BoundaryTrace
from fluxrecon.geometry import boundary_nodes, build_grid, interval, rectangle
from fluxrecon.heatkernel import KernelConfig, KernelEvaluator


@pytest.fixture(scope="module")
def ev():
    return KernelEvaluator(interval())


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            KernelConfig(k_max=1)
        with pytest.raises(ConfigurationError):
            KernelConfig(tail_tol=0.0)
        with pytest.raises(ConfigurationError):
            KernelConfig(image_count=0)
        with pytest.raises(ConfigurationError):
            KernelConfig(crossover_time=-1.0)

    def test_default_crossover_value(self, ev):
        # 2 ln(1/tail_tol) / lambda_200 on the unit interval
        lam_top = (199 * np.pi) ** 2
        assert np.isclose(ev.crossover, 2.0 * np.log(1e12) / lam_top, rtol=1e-12)

    def test_construction_rejects_unresolvable_tail(self):
        # a crossover far below the spectral resolution limit must fail loudly
        with pytest.raises(ConfigurationError):
            KernelEvaluator(interval(), KernelConfig(k_max=4, crossover_time=1e-6))


class TestPointValues:
    def test_rejects_nonpositive_tau(self, ev):
        with pytest.raises(InputError):
            ev.values(0.5, 0.5, np.array([0.0]))
        with pytest.raises(InputError):
            ev.profile(0.5, np.array([0.5]), -1.0)

    def test_free_space_limit(self, ev):
        # far from the boundary at tiny tau the images sum is one Gaussian
        tau = 1e-5
        val = ev.value(0.5, 0.5, tau)
        assert np.isclose(val, 1.0 / np.sqrt(4.0 * np.pi * tau), rtol=1e-12)

    def test_branch_agreement_in_overlap(self, ev):
        taus = np.linspace(ev.crossover / 2, 2 * ev.crossover, 9)
        for x, y in [(0.5, 0.5), (0.0, 0.0), (0.3, 0.7), (1.0, 0.98)]:
            dev = np.max(np.abs(ev.spectral_values(x, y, taus)
                                - ev.images_values(x, y, taus)))
            assert dev < 1e-8

    def test_symmetry(self, ev):
        taus = np.logspace(-5, 1, 13)
        assert np.max(np.abs(ev.values(0.2, 0.9, taus) - ev.values(0.9, 0.2, taus))) < 1e-10

    def test_longtime_limit(self, ev):
        # only the constant mode survives: U -> omega_1(x) omega_1(y) = 1/L
        assert abs(ev.value(0.3, 0.9, 50.0) - 1.0) < 1e-10

    def test_strict_positivity_at_moderate_tau(self, ev):
        for tau in np.logspace(-2, 1, 7):
            assert ev.value(0.0, 1.0, tau) > 1e-12

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(1e-4, 2.0))
    def test_nonnegative_everywhere(self, x, y, tau):
        ev = KernelEvaluator(interval())
        assert ev.value(x, y, tau) >= 0.0

    def test_batch_matches_per_pair(self, ev):
        pts = np.array([[0.0], [0.37], [1.0]])
        taus = np.array([ev.crossover / 3, ev.crossover * 2, 0.05, 1.0])
        batch = ev._values_batch(0.37, pts, taus)
        ref = np.stack([ev.values(0.37, y, taus) for y in pts], axis=1)
        assert np.max(np.abs(batch - ref)) < 1e-13

    def test_profile_matches_values(self, ev):
        ys = np.linspace(0.0, 1.0, 7)
        for tau in (ev.crossover / 2, 0.3):
            prof = ev.profile(0.4, ys, tau)
            ref = np.array([ev.value(0.4, y, tau) for y in ys])
            assert np.max(np.abs(prof - ref)) < 1e-13


class TestMass:
    def test_spectral_branch(self, ev):
        assert abs(ev.mass(0.31, 0.5) - 1.0) < 1e-8

    def test_images_branch(self, ev):
        for x in (0.0, 0.5, 1.0):
            assert abs(ev.mass(x, 1e-3) - 1.0) < 1e-6

    def test_rectangle(self):
        ev2 = KernelEvaluator(rectangle())
        for tau in (1e-3, 0.5):
            assert abs(ev2.mass(np.array([0.25, 0.8]), tau) - 1.0) < 1e-6

    def test_semigroup_identity(self, ev):
        grid = build_grid(interval(), 512)
        zs = grid.axes[0]
        comp = float(np.sum(grid.weights * ev.profile(0.2, zs, 0.004)
                            * ev.profile(0.8, zs, 0.006)))
        assert abs(comp - ev.value(0.2, 0.8, 0.01)) < 1e-5


class TestBoundaryPropagate:
    def _trace(self, fn, nt=64):
        nodes = boundary_nodes(interval())
        times = np.linspace(0.0, 1.0, nt + 1)
        values = np.stack([fn(times), fn(times)], axis=1)
        return BoundaryTrace(nodes=nodes, times=times, values=values)

    def _oracle(self, ev, g, x, t):
        # independent adaptive quadrature in sigma = sqrt(t - s)
        def integrand(sigma):
            tau = sigma * sigma
            u = sum(ev.value(x, float(g.nodes.nodes[b, 0]), tau)
                    * np.interp(t - tau, g.times, g.values[:, b])
                    * g.nodes.weights[b] for b in range(g.nodes.count))
            return 2.0 * sigma * u
        val, _ = quad(integrand, 1e-12, np.sqrt(t), limit=200)
        return val

    def test_constant_data_vs_quadrature(self, ev):
        g = self._trace(lambda ts: np.ones_like(ts))
        for t in (0.25, 1.0):
            got = ev.boundary_propagate(g, 0.0, t)
            assert abs(got - self._oracle(ev, g, 0.0, t)) < 1e-8

    def test_linear_data_vs_quadrature(self, ev):
        g = self._trace(lambda ts: ts)
        got = ev.boundary_propagate(g, 1.0, 0.7)
        assert abs(got - self._oracle(ev, g, 1.0, 0.7)) < 1e-8

    def test_zero_time(self, ev):
        g = self._trace(lambda ts: ts)
        assert ev.boundary_propagate(g, 0.5, 0.0) == 0.0

    def test_rejects_time_outside_data(self, ev):
        g = self._trace(lambda ts: ts)
        with pytest.raises(InputError):
            ev.boundary_propagate(g, 0.5, 1.5)

    def test_trace_grid(self, ev):
        g = self._trace(lambda ts: ts, nt=8)
        out = ev.boundary_propagate_trace(g, g.nodes.nodes)
        assert out.shape == (9, 2)
        assert np.allclose(out[0], 0.0)
        # symmetric data gives symmetric functional
        assert np.max(np.abs(out[:, 0] - out[:, 1])) < 1e-12


class TestDomainPropagate:
    def test_constant_source_gives_time(self, ev):
        # h = 1: mass conservation integrated in time yields exactly t.
        # 2n must exceed k_max so no kernel mode aliases in the projection.
        grid = build_grid(interval(), 128)
        times = np.linspace(0.0, 1.0, 33)
        h = np.ones((33,) + grid.shape)
        for t in (0.5, 1.0):
            assert abs(ev.domain_propagate(h, grid, times, 0.3, t) - t) < 1e-12

    def test_single_mode_closed_form(self, ev):
        # h = omega_2 filters to omega_2(x) (1 - exp(-lambda_2 t)) / lambda_2
        grid = build_grid(interval(), 512)
        times = np.linspace(0.0, 1.0, 65)
        lam = float(ev.basis.lambdas[1])
        omega = ev.basis.sample_on_grid(grid)[1]
        h = np.tile(omega, (65, 1))
        x, t = 0.2, 1.0
        wx = float(ev.basis.values_at(np.array([[x]]))[1, 0])
        exact = wx * (1.0 - np.exp(-lam * t)) / lam
        assert abs(ev.domain_propagate(h, grid, times, x, t) - exact) < 1e-6

    def test_series_shape_and_zero_start(self, ev):
        grid = build_grid(interval(), 32)
        times = np.linspace(0.0, 1.0, 9)
        h = np.ones((9,) + grid.shape)
        out = ev.domain_propagate_series(h, grid, times, np.array([[0.0], [1.0]]))
        assert out.shape == (9, 2)
        assert np.allclose(out[0], 0.0)

    def test_rejects_bad_field_shape(self, ev):
        grid = build_grid(interval(), 32)
        times = np.linspace(0.0, 1.0, 9)
        with pytest.raises(InputError):
            ev.domain_propagate_series(np.ones((9, 5)), grid, times, np.array([[0.0]]))

    def test_rejects_time_outside_range(self, ev):
        grid = build_grid(interval(), 32)
        times = np.linspace(0.0, 1.0, 9)
        h = np.ones((9,) + grid.shape)
        with pytest.raises(InputError):
            ev.domain_propagate(h, grid, times, 0.5, 2.0)
