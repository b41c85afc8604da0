import math

import numpy as np
import pytest

from condux.signals import (
    SQRT_DELTA_MASS,
    CallableSignal,
    Constant,
    ImpulseTrain,
    PiecewiseLinear,
    Sinusoid,
    SquarePulseTrain,
    Sum,
    Zero,
)


def _quad(sig, lo, hi, n=200001):
    ts = np.linspace(lo, hi, n)
    return np.trapezoid(sig.values(ts), ts)


class TestImpulseTrain:
    def test_sqrt_delta_time_mass(self):
        # integral of the bump scales as sqrt(width), coefficient sqrt(2) pi^(1/4)
        for a in (1e-4, 4e-4):
            train = ImpulseTrain(t0=1.0, period=10.0, magnitudes=(0.3,), width=a)
            mass = _quad(train, 1.0 - 8 * a, 1.0 + 8 * a)
            assert mass == pytest.approx(0.3 * SQRT_DELTA_MASS * math.sqrt(a), rel=1e-6)

    def test_sqrt_delta_unit_l2(self):
        # L2 mass of the bump is width-independent
        for a in (1e-4, 9e-4):
            train = ImpulseTrain(t0=0.0, period=10.0, magnitudes=(1.0,), width=a)
            ts = np.linspace(-8 * a, 8 * a, 200001)
            l2 = np.trapezoid(train.values(ts) ** 2, ts)
            assert l2 == pytest.approx(1.0, rel=1e-6)

    def test_delta_kind_unit_time_mass(self):
        train = ImpulseTrain(t0=0.0, period=5.0, magnitudes=(2.0,), width=1e-3,
                             kind="delta")
        assert _quad(train, -8e-3, 8e-3) == pytest.approx(2.0, rel=1e-6)

    def test_magnitude_cycling(self):
        train = ImpulseTrain(t0=0.0, period=1.0, magnitudes=(1.0, -2.0), width=1e-4)
        peak0 = train.value(0.0)
        peak1 = train.value(1.0)
        peak2 = train.value(2.0)
        assert peak1 == pytest.approx(-2.0 * peak0)
        assert peak2 == pytest.approx(peak0)

    def test_derivative_matches_finite_difference(self):
        train = ImpulseTrain(t0=0.0, period=1.0, magnitudes=(0.5,), width=1e-3)
        h = 1e-8
        for t in (2e-4, -3e-4, 1e-3):
            fd = (train.value(t + h) - train.value(t - h)) / (2 * h)
            assert train.derivative(t) == pytest.approx(fd, rel=1e-5)

    def test_refine_windows_cover_bumps(self):
        a = 1e-4
        train = ImpulseTrain(t0=2.0, period=3.0, magnitudes=(1.0,), width=a)
        wins = train.refine_windows(0.0, 7.0)
        assert len(wins) == 2
        for (lo, hi, cap), c in zip(wins, (2.0, 5.0)):
            assert lo <= c - 7 * a and hi >= c + 7 * a
            assert cap <= a / 10 + 1e-18

    def test_validation(self):
        with pytest.raises(ValueError):
            ImpulseTrain(t0=0.0, period=-1.0, magnitudes=(1.0,))
        with pytest.raises(ValueError):
            ImpulseTrain(t0=0.0, period=1.0, magnitudes=())
        with pytest.raises(ValueError):
            ImpulseTrain(t0=0.0, period=1.0, magnitudes=(1.0,), kind="box")


class TestSquarePulseTrain:
    def test_values_and_period(self):
        sig = SquarePulseTrain(magnitude=-3.0, duration=0.002, period=2.8)
        assert sig.period == 2.8
        assert sig.value(0.001) == -3.0
        assert sig.value(0.01) == 0.0
        assert sig.value(2.8005) == -3.0

    def test_breakpoints_on_edges(self):
        sig = SquarePulseTrain(magnitude=1.0, duration=0.5, period=2.0)
        bps = sig.breakpoints(0.0, 4.0)
        for b in (0.0, 0.5, 2.0, 2.5):
            assert any(abs(b - x) < 1e-12 for x in bps)


class TestPiecewiseLinear:
    def setup_method(self):
        self.sig = PiecewiseLinear(((0.0, 0.0), (1.0, 2.0), (3.0, -1.0), (4.0, 0.0)),
                                   periodic=True)

    def test_interpolation(self):
        assert self.sig.value(0.5) == pytest.approx(1.0)
        assert self.sig.value(2.0) == pytest.approx(0.5)

    def test_periodic_wrap(self):
        assert self.sig.value(4.5) == pytest.approx(self.sig.value(0.5))
        assert self.sig.period == pytest.approx(4.0)

    def test_derivative_is_segment_slope(self):
        assert self.sig.derivative(0.5) == pytest.approx(2.0)
        assert self.sig.derivative(2.0) == pytest.approx(-1.5)


def test_sinusoid_and_sum():
    s = Sum((Sinusoid(amplitude=2.0, omega=3.0), Constant(1.0)))
    t = 0.37
    assert s.value(t) == pytest.approx(2.0 * math.sin(3.0 * t) + 1.0)
    assert s.max_angular_frequency() == 3.0
    assert Zero().value(t) == 0.0


def test_callable_signal_passthrough():
    sig = CallableSignal(fn=lambda t: t * t, dfn=lambda t, order: 2.0 * t)
    assert sig.value(1.5) == 2.25
    assert sig.derivative(1.5) == 3.0
