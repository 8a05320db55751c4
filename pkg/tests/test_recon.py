import numpy as np
import pytest

from fluxrecon.eigenbasis import make_basis
from fluxrecon.errors import ConfigurationError, InputError, NumericalError
from fluxrecon.families import make_boundary_data, make_reaction
from fluxrecon.fields import BoundaryTrace
from fluxrecon.forward import solve_semilinear, synthesize_observation
from fluxrecon.geometry import boundary_nodes, build_grid, interval, rectangle
from fluxrecon.heatkernel import KernelEvaluator
from fluxrecon.recon import (CoefficientSeries, ReconstructionConfig, assemble_series,
                             build_curve, compute_data_functional,
                             differentiate_coefficients, evaluate_curve,
                             extend_boundary_data, flux_difference,
                             project_coefficients, reconstruct, volterra_oracle)


def _interval_trace(left, right, nt=4):
    nodes = boundary_nodes(interval())
    times = np.linspace(0.0, 1.0, nt + 1)
    values = np.column_stack([np.full(nt + 1, left), np.full(nt + 1, right)])
    return BoundaryTrace(nodes=nodes, times=times, values=values)


class TestIntervalExtensions:
    def test_harmonic_is_linear_interpolation(self):
        grid = build_grid(interval(), 10)
        ext = extend_boundary_data(_interval_trace(1.0, 3.0), grid, "harmonic")
        assert np.allclose(ext, 1.0 + 2.0 * grid.axes[0][None, :])

    def test_normal_constant_plateaus(self):
        grid = build_grid(interval(), 20)
        ext = extend_boundary_data(_interval_trace(1.0, 3.0), grid, "normal_constant")
        x = grid.axes[0]
        assert np.allclose(ext[:, x <= 0.4], 1.0)
        assert np.allclose(ext[:, x >= 0.6], 3.0)
        mid = ext[0, (x > 0.4) & (x < 0.6)]
        assert np.min(np.diff(mid)) > 0.0

    def test_constant_data_both_methods(self):
        grid = build_grid(interval(), 8)
        for method in ("harmonic", "normal_constant"):
            ext = extend_boundary_data(_interval_trace(2.0, 2.0), grid, method)
            assert np.allclose(ext, 2.0)

    def test_linearity(self, rng):
        grid = build_grid(interval(), 8)
        a = _interval_trace(*rng.normal(size=2))
        b = _interval_trace(*rng.normal(size=2))
        combo = BoundaryTrace(nodes=a.nodes, times=a.times,
                              values=a.values + 2.0 * b.values)
        for method in ("harmonic", "normal_constant"):
            lhs = extend_boundary_data(combo, grid, method)
            rhs = (extend_boundary_data(a, grid, method)
                   + 2.0 * extend_boundary_data(b, grid, method))
            assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_unknown_method_rejected(self):
        grid = build_grid(interval(), 8)
        with pytest.raises(ConfigurationError):
            extend_boundary_data(_interval_trace(0.0, 1.0), grid, "polynomial")


class TestRectangleExtensions:
    def _trace_from(self, fn, m=8):
        nodes = boundary_nodes(rectangle(), m=m)
        times = np.linspace(0.0, 1.0, 3)
        values = np.tile(fn(nodes.nodes), (3, 1))
        return BoundaryTrace(nodes=nodes, times=times, values=values)

    def test_harmonic_recovers_linear_field(self):
        # x is discretely harmonic, so the 5-point solve must return it
        grid = build_grid(rectangle(), 16)
        trace = self._trace_from(lambda pts: pts[:, 0])
        ext = extend_boundary_data(trace, grid, "harmonic")
        X = np.meshgrid(*grid.axes, indexing="ij")[0]
        assert np.max(np.abs(ext - X[None])) < 1e-10

    def test_normal_constant_keeps_constants(self):
        grid = build_grid(rectangle(), 16)
        trace = self._trace_from(lambda pts: np.full(len(pts), 1.5))
        ext = extend_boundary_data(trace, grid, "normal_constant")
        assert np.max(np.abs(ext - 1.5)) < 1e-12

    def test_boundary_nodes_reproduced_exactly(self):
        grid = build_grid(rectangle(), 16)
        trace = self._trace_from(lambda pts: pts[:, 0] + 2.0 * pts[:, 1])
        for method in ("harmonic", "normal_constant"):
            ext = extend_boundary_data(trace, grid, method)
            # node (0, y_mid) lies on the x=0 grid line at odd y indices
            sel = trace.nodes.side == 0
            ys = trace.nodes.nodes[sel][:, 1]
            cols = np.rint(ys / grid.h[1]).astype(int)
            got = ext[0, 0, cols]
            assert np.max(np.abs(got - trace.values[0, sel])) < 1e-10


class TestFluxDifference:
    def test_zero_reaction_gap_vanishes_past_layer(self):
        # u_f = v_phi when f = 0, so the gap is pure discretization error;
        # the C^(1/2) start-up layer is excluded (flux ~ sqrt(s) at s=0)
        dom = interval()
        cfg_phi = make_boundary_data({"family": "ramp", "profile": "const"}, dom, 1.0)
        obs = synthesize_observation(dom, make_reaction({"family": "zero"}), cfg_phi,
                                     fine_n=512, fine_nt=4096, sub_nt=1024)
        gap = flux_difference(obs, build_grid(dom, 128))
        scale = float(np.max(np.abs(obs.flux.values)))
        late = gap.times >= 0.05
        assert np.max(np.abs(gap.values[late])) / scale < 1e-3
        assert np.max(np.abs(gap.values[0])) < 1e-12

    def test_rejects_mismatched_time_grid(self):
        dom = interval()
        phi = make_boundary_data({"family": "ramp", "profile": "const"}, dom, 1.0)
        obs = synthesize_observation(dom, make_reaction({"family": "zero"}), phi,
                                     fine_n=32, fine_nt=128, sub_nt=32)
        warped = BoundaryTrace(nodes=obs.flux.nodes,
                               times=obs.flux.times**2,
                               values=obs.flux.values)
        from dataclasses import replace
        with pytest.raises(InputError):
            flux_difference(replace(obs, flux=warped), build_grid(dom, 16))


class TestDataFunctional:
    def test_starts_at_zero_and_keeps_symmetry(self):
        ev = KernelEvaluator(interval())
        g = _interval_trace(1.0, 1.0, nt=8)
        a = compute_data_functional(g, ev)
        assert np.allclose(a.values[0], 0.0)
        assert np.max(np.abs(a.values[:, 0] - a.values[:, 1])) < 1e-12

    def test_nonnegative_for_nonnegative_gap(self):
        ev = KernelEvaluator(interval())
        g = _interval_trace(0.5, 2.0, nt=8)
        a = compute_data_functional(g, ev)
        assert np.min(a.values) > -1e-12


class TestModalStages:
    def test_project_then_assemble_round_trip(self):
        # a field that is itself a finite mode sum returns its own series
        grid = build_grid(interval(), 64)
        basis = make_basis(interval(), 4)
        times = np.linspace(0.0, 1.0, 9)
        coeffs = np.outer(times, np.array([1.0, 0.5, 0.0, -0.25]))
        field = np.einsum("tk,kx->tx", coeffs, basis.sample_on_grid(grid))
        series = project_coefficients(field, grid, basis, times)
        assert np.max(np.abs(series.values - coeffs)) < 1e-10

    def test_assemble_requires_derivatives(self):
        basis = make_basis(interval(), 2)
        series = CoefficientSeries(times=np.linspace(0, 1, 5),
                                   lambdas=basis.lambdas.copy(),
                                   values=np.zeros((5, 2)))
        with pytest.raises(InputError):
            assemble_series(series, basis, np.array([[0.0]]))

    def test_assemble_rejects_basis_mismatch(self):
        basis2 = make_basis(interval(), 2)
        basis3 = make_basis(interval(), 3)
        series = CoefficientSeries(times=np.linspace(0, 1, 5),
                                   lambdas=basis2.lambdas.copy(),
                                   values=np.zeros((5, 2)))
        series = differentiate_coefficients(series, halfwidth=1)
        with pytest.raises(InputError):
            assemble_series(series, basis3, np.array([[0.0]]))

    def test_volterra_oracle_closed_form(self):
        # u(x, t) = t with f = id: c_1(s) = s, p_1(t) = t^2/2, others vanish
        grid = build_grid(interval(), 32)
        times = np.linspace(0.0, 1.0, 17)
        from fluxrecon.fields import SolutionField
        u = SolutionField(grid=grid, times=times,
                          values=np.tile(times[:, None], (1, grid.shape[0])))
        c, p = volterra_oracle(u, make_reaction({"family": "linear"}),
                               make_basis(interval(), 4))
        assert np.max(np.abs(c.values[:, 0] - times)) < 1e-12
        assert np.max(np.abs(c.values[:, 1:])) < 1e-12
        assert np.max(np.abs(p.values[:, 0] - times**2 / 2.0)) < 1e-12


class TestBuildCurve:
    def _config(self, **kw):
        return ReconstructionConfig(**kw)

    def test_recovers_linear_law(self, rng):
        phi = rng.uniform(0.0, 1.0, size=4000)
        series = 2.0 * phi + rng.normal(0.0, 0.01, size=4000)
        curve = build_curve(phi, series, self._config())
        mid = (curve.knots > 0.2) & (curve.knots < 0.8)
        assert np.max(np.abs(curve.values[mid] - 2.0 * curve.knots[mid])) < 0.02

    def test_anchor_and_monotonicity(self, rng):
        phi = rng.uniform(0.0, 1.0, size=1000)
        series = np.sin(phi) - 0.3  # negative near zero
        curve = build_curve(phi, series, self._config())
        assert curve.knots[0] == 0.0 and curve.values[0] == 0.0
        assert np.min(np.diff(curve.values)) >= 0.0

    def test_monotone_off_keeps_medians(self, rng):
        phi = rng.uniform(0.0, 1.0, size=1000)
        series = -phi
        curve = build_curve(phi, series, self._config(monotone=False))
        assert np.min(np.diff(curve.values)) < 0.0

    def test_trusted_band_is_quantile_range(self, rng):
        phi = rng.uniform(0.0, 1.0, size=5000)
        curve = build_curve(phi, phi, self._config(q_lo=0.2, q_hi=0.8))
        assert abs(curve.trusted_lo - np.quantile(phi, 0.2)) < 1e-12
        assert abs(curve.trusted_hi - np.quantile(phi, 0.8)) < 1e-12

    def test_rejects_few_samples(self):
        with pytest.raises(NumericalError):
            build_curve(np.linspace(0, 1, 10), np.zeros(10), self._config())

    def test_rejects_degenerate_range(self):
        with pytest.raises(NumericalError):
            build_curve(np.zeros(100), np.zeros(100), self._config())

    def test_nonfinite_samples_dropped(self, rng):
        phi = rng.uniform(0.0, 1.0, size=1000)
        series = phi.copy()
        series[::7] = np.nan
        curve = build_curve(phi, series, self._config())
        assert np.all(np.isfinite(curve.values))


class TestEvaluateCurve:
    def _curve(self):
        phi = np.linspace(0.0, 1.0, 1000)
        return build_curve(phi, phi, ReconstructionConfig())

    def test_clamps_and_flags(self):
        curve = self._curve()
        vals, flags = evaluate_curve(curve, np.array([-1.0, 0.5, 2.0]))
        assert vals[0] == curve.values[0]
        assert vals[2] == curve.values[-1]
        assert flags.tolist() == [True, False, True]

    def test_identity_between_knots(self):
        curve = self._curve()
        us = np.linspace(curve.trusted_lo, curve.trusted_hi, 17)
        vals, flags = evaluate_curve(curve, us)
        assert not np.any(flags)
        assert np.max(np.abs(vals - us)) < 0.01


class TestReconstructionConfig:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            ReconstructionConfig(extension="fourier")
        with pytest.raises(ConfigurationError):
            ReconstructionConfig(k_modes=1)
        with pytest.raises(ConfigurationError):
            ReconstructionConfig(bins=4)
        with pytest.raises(ConfigurationError):
            ReconstructionConfig(q_lo=0.9, q_hi=0.1)
        with pytest.raises(ConfigurationError):
            ReconstructionConfig(diff_halfwidth=0)


@pytest.fixture(scope="module")
def small_obs():
    dom = interval()
    phi = make_boundary_data({"family": "ramp", "profile": "const"}, dom, 1.0)
    return synthesize_observation(dom, make_reaction({"family": "linear"}), phi,
                                  fine_n=64, fine_nt=512, sub_nt=64)


class TestReconstructPipeline:
    def test_smoke_and_diagnostics(self, small_obs):
        config = ReconstructionConfig(grid_n=16)
        result = reconstruct(small_obs, config)
        assert result.curve.values[0] == 0.0
        assert np.min(np.diff(result.curve.values)) >= 0.0
        for key in ("functional_min", "functional_initial_max", "mode_energy",
                    "tail_energy_ratio", "extension_method"):
            assert key in result.diagnostics
        assert result.diagnostics["functional_initial_max"] == 0.0
        assert result.alt_curve is None

    def test_compare_extensions(self, small_obs):
        config = ReconstructionConfig(grid_n=16, compare_extensions=True)
        result = reconstruct(small_obs, config)
        assert result.alt_curve is not None
        assert result.diagnostics["alt_extension_method"] == "normal_constant"
        assert np.isfinite(result.diagnostics["extension_discrepancy"])
