import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condux.acceptance import bessel_j0
from condux.design import (
    OutputReference,
    averaged_gain,
    feedforward_from_reference,
    hh_certificate,
    hh_square_reference,
    kapitza_design,
    lorenz_region_check,
    orbit_scale,
)
from condux.errors import (
    NoStabilizingAmplitude,
    PeriodUnstable,
    RangeViolation,
)
from condux.integrate import FixedStep, Trajectory, find_limit_cycle, integrate
from condux.models import ConductanceParams, fitzhugh_nagumo, lorenz


class TestAveragedGain:
    def test_matches_bessel_series(self):
        for M in (0.5, 0.8 * math.pi, 2.0, 4.5):
            assert abs(averaged_gain(M) - bessel_j0(M)) <= 1e-9

    def test_frozen_design_value(self):
        assert averaged_gain(0.8 * math.pi) == pytest.approx(
            -0.054960360243452, abs=1e-12)

    def test_negative_amplitude_rejected(self):
        with pytest.raises(ValueError):
            averaged_gain(-1.0)


class TestKapitzaDesign:
    def test_selects_first_stabilizing_amplitude(self, kapitza_run):
        design = kapitza_run[0]["design"]
        assert design.M == pytest.approx(0.8 * math.pi, abs=1e-15)
        assert design.gain < 0
        assert len(design.rejected) == 7
        assert all(cbar >= 0 for _, cbar in design.rejected)
        assert design.verdict.stable

    def test_averaged_eigenvalues(self, kapitza_run):
        # roots of s^2 + gamma s - beta cbar: sum -gamma, product -beta cbar
        eigs = np.sort(kapitza_run[0]["averaged_eigenvalues"])
        cbar = kapitza_run[0]["design"].gain
        assert eigs.sum() == pytest.approx(-1.0, abs=1e-12)
        assert eigs[0] * eigs[1] == pytest.approx(-cbar, abs=1e-12)
        assert np.all(eigs < 0)
        assert eigs[1] == pytest.approx(-0.0583671, abs=1e-6)

    def test_no_stabilizing_amplitude(self):
        with pytest.raises(NoStabilizingAmplitude):
            kapitza_design([0.1 * math.pi], omega=1000.0)

    def test_low_frequency_warns(self):
        with pytest.warns(UserWarning):
            kapitza_design([0.8 * math.pi], omega=10.0)

    def test_feedforward_tracks_closed_form(self, kapitza_run):
        # u = (ydd + beta sin y + gamma yd) / alpha along y = pi + M sin(w t)
        design = kapitza_run[0]["design"]
        M, w = design.M, 1000.0
        for t in np.linspace(0.0, 0.01, 7):
            y = math.pi + M * math.sin(w * t)
            yd = M * w * math.cos(w * t)
            ydd = -M * w * w * math.sin(w * t)
            u_exact = ydd + math.sin(y) + yd
            assert design.feedforward.value(t) == pytest.approx(
                u_exact, rel=1e-9, abs=1e-6)

    def test_simulation_settles_into_band_late(self, kapitza_run):
        r = kapitza_run[0]
        assert r["band_entry_time"] == pytest.approx(31.9394, abs=1e-2)
        assert r["deviation_at_deadline"] == pytest.approx(0.10029, abs=1e-4)
        assert r["measured_slow_decay"] == pytest.approx(-0.0582, abs=1e-3)


class TestImpulseDesign:
    def test_frozen_cycle_and_design(self, fhn_run):
        r = fhn_run[0]
        assert r["period"] == pytest.approx(3.2902371457520587, rel=1e-9)
        assert r["anchor"][0] == pytest.approx(0.0, abs=1e-9)
        assert r["anchor"][1] == pytest.approx(-0.42454214, abs=1e-6)
        d = r["design"]
        assert d.eps_n == pytest.approx(0.12909944487358055, rel=1e-12)
        assert d.t0 == pytest.approx(198.67142091381967, abs=1e-6)
        assert d.cross_exponent == pytest.approx(0.004218, abs=1e-5)
        assert d.tangent[0] == pytest.approx(-4.764, abs=2e-3)
        assert d.tangent[1] == pytest.approx(-0.4766, abs=2e-4)

    def test_predicted_monodromy(self, fhn_run):
        d = fhn_run[0]["design"]
        pred = np.sort(np.abs(d.predicted_monodromy.eigenvalues))[::-1]
        free = np.sort(np.abs(d.free_window_monodromy.eigenvalues))[::-1]
        # the impulse pulls the unity multiplier strictly inside the disk
        assert free[0] == pytest.approx(1.0, abs=1e-3)
        assert pred[0] == pytest.approx(0.700421, abs=1e-4)
        assert pred[0] < free[0]
        assert free[1] < 1e-6 and pred[1] < 1e-6

    def test_realized_monodromy_agreement(self, fhn_run):
        r = fhn_run[0]
        assert r["monodromy_mismatch"] < 0.02
        assert r["monodromy_mismatch"] == pytest.approx(0.00203, abs=2e-4)
        rho = max(np.abs(r["realized_monodromy"].eigenvalues))
        assert rho == pytest.approx(0.7055, abs=1e-3)

    def test_feedforward_quality(self, fhn_run):
        ff = fhn_run[0]["feedforward"]
        assert ff.residual_max < 1e-10
        assert ff.inverse_rate == pytest.approx(-1.0, abs=1e-6)


class TestConductanceCertificate:
    def test_exact_bounds(self, hh_run):
        rep = hh_run[0]["certificate"]
        assert rep.M_s == 0.5
        assert rep.G_tot == 49.0
        assert rep.a_bar == 49.5

    def test_frozen_measured_values(self, hh_run):
        rep = hh_run[0]["certificate"]
        assert rep.verdict is True
        assert rep.tau_unstable == pytest.approx(0.000575, abs=1e-6)
        assert rep.T_hat == pytest.approx(5.000425, abs=1e-6)
        assert rep.m_y_violation_measure == pytest.approx(0.001, abs=1e-9)
        assert rep.s_max_growth == pytest.approx(24.401, abs=1e-2)

    def test_range_violation_is_strict(self):
        params = ConductanceParams()
        ts = np.linspace(0.0, 1.0, 11)
        ys = np.full(11, 1.36)  # just above E_f - theta_prime = 1.35
        ref = Trajectory(ts=ts, states=np.column_stack([ys, np.zeros(11)]),
                         us=np.zeros(11), state_names=("y", "z"))
        with pytest.raises(RangeViolation, match="1.36"):
            hh_certificate(params, ref)

    def test_margin_grows_with_plateau_length(self):
        # longer plateaus add stability time without touching the ramp cost
        from condux.integrate import build_grid

        params = ConductanceParams()
        margins = []
        for T_hat in (4.0, 5.0, 6.0):
            sq = hh_square_reference(T_hat=T_hat)
            ref = OutputReference.from_signal(sq, r=1)
            ff = feedforward_from_reference(
                params_model(params), ref, 0.0, 2.0 * sq.period,
                zbar_ic=np.array([sq.value(0.0)]))
            cap = 0.001 / 80.0

            class Grid:
                breakpoints = staticmethod(sq.breakpoints)

                @staticmethod
                def refine_windows(a, b):
                    return [(lo, hi, min(c, cap))
                            for lo, hi, c in sq.refine_windows(a, b)]

                @staticmethod
                def max_angular_frequency():
                    return 0.0

            grid = build_grid(0.0, sq.period, 5e-4, Grid())
            ys = sq.values(grid)
            yd = np.array([sq.derivative(float(t)) for t in grid])
            zs = np.array([float(ff.zbar.interp_state(float(t))[0]) for t in grid])
            traj = Trajectory(ts=grid, states=np.column_stack([ys, zs]),
                              us=np.zeros_like(grid), state_names=("y", "z"))
            rep = hh_certificate(params, traj, ydot=yd)
            margins.append(params.eps * rep.T_hat - rep.a_bar * rep.tau_unstable)
        assert margins[0] < margins[1] < margins[2]

    def test_delta_sweep_leaves_certified_range(self, hh_run):
        sweep = hh_run[0]["delta_sweep"]
        assert len(sweep) == 4
        assert all("range_violation" in entry for entry in sweep)

    def test_free_orbit_spans_certified_interval(self, hh_run):
        free = hh_run[0]["free_orbit"]
        assert free["period"] == pytest.approx(0.95220087, abs=1e-6)
        lo, hi = free["y_range"]
        assert lo == pytest.approx(-1.45113, abs=1e-4)
        assert hi == pytest.approx(1.34931, abs=1e-4)


def params_model(params):
    from condux.models import hh_conductance

    return hh_conductance(params)


def test_orbit_scale():
    ts = np.linspace(0.0, 1.0, 5)
    states = np.column_stack([np.sin(ts), np.cos(ts)])
    traj = Trajectory(ts=ts, states=states, us=np.zeros(5),
                      state_names=("y", "z"))
    scaled = orbit_scale(traj, 0.1)
    assert np.allclose(scaled.states, 1.1 * states)
    assert np.array_equal(scaled.ts, ts)


class TestLorenzRegion:
    def test_strict_boundary(self):
        sigma, beta = 10.0, 8.0 / 3.0
        z_c = sigma + beta
        x2_b = 2.0 * math.sqrt(sigma * beta / 2.0)
        z_b = 2.0 * math.sqrt(sigma / 2.0)
        assert lorenz_region_check(np.array([0.0, 0.0, z_c]), sigma, beta)
        assert lorenz_region_check(
            np.array([0.0, x2_b - 1e-9, z_c]), sigma, beta)
        assert not lorenz_region_check(
            np.array([0.0, x2_b + 1e-9, z_c]), sigma, beta)
        assert not lorenz_region_check(
            np.array([0.0, 0.0, z_c + z_b + 1e-9]), sigma, beta)
        assert not lorenz_region_check(
            np.array([0.0, 0.0, z_c - z_b - 1e-9]), sigma, beta)

    @given(
        x1=st.floats(-30.0, 30.0),
        x2=st.floats(-12.0, 12.0),
        z=st.floats(4.0, 22.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_region_implies_negative_definite(self, x1, x2, z):
        sigma, beta = 10.0, 8.0 / 3.0
        state = np.array([x1, x2, z])
        if not lorenz_region_check(state, sigma, beta):
            return
        model = lorenz(sigma, beta, beta)  # forcing level matching the region
        J = model.jac(0.0, state, 0.0)
        lam = np.max(np.linalg.eigvalsh(0.5 * (J + J.T)))
        assert lam < 0.0


def test_fhn_slow_multiplier_shrinks_with_timescale():
    # the non-unity multiplier collapses super-exponentially as the fast
    # subsystem gets faster; measured through the volume identity because
    # the raw multiplier underflows the monodromy eigensolve
    from scipy.integrate import simpson

    previous = None
    for eps, expected_period in ((0.1, 3.29023715), (0.05, 2.77665807),
                                 (0.02, 2.38653791)):
        model = fitzhugh_nagumo(eps=eps)
        cyc = find_limit_cycle(model, None, np.array([1.0, 0.0]),
                               section=(0, 0.0, 1), max_time=200.0,
                               policy=FixedStep(0.002), agreement=1e-5)
        assert cyc.period == pytest.approx(expected_period, abs=1e-4)
        loop = integrate(model, None, cyc.t_anchor, cyc.t_anchor + cyc.period,
                         cyc.anchor, FixedStep(5e-4))
        tr = np.array([np.trace(model.jac(t, s, 0.0))
                       for t, s in zip(loop.ts, loop.states)])
        exponent = float(simpson(tr, x=loop.ts))
        if previous is not None:
            assert exponent < previous - 10.0
        previous = exponent


def test_fhn_cycle_unstable_period_at_tight_agreement():
    with pytest.raises(PeriodUnstable):
        find_limit_cycle(fitzhugh_nagumo(eps=0.05), None, np.array([1.0, 0.0]),
                         section=(0, 0.0, 1), max_time=200.0,
                         policy=FixedStep(0.002), agreement=1e-6)
