import pytest
from sklearn.base import clone

from bsasym import L1Cone, RadialCone, SpeedEstimator


def test_fit_sets_attributes():
    est = SpeedEstimator(N=16, T=1.0).fit(RadialCone(1.6))
    assert 0 < est.speed_ < 1.6
    assert len(est.series_) == 4 and est.series_.t[-1] == 1.0
    assert est.u_.spec.N == 16 and est.config_.scheme == "fmcf"
    assert est.score(RadialCone(1.6), 0.6) < 0


def test_params_round_trip():
    est = SpeedEstimator(scheme="eikonal", N=8, delta=2.0)
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    assert twin.set_params(N=12).N == 12


def test_fit_validation():
    with pytest.raises(TypeError):
        SpeedEstimator(N=8, T=1.0).fit([[0.0]])
    with pytest.raises(ValueError):
        SpeedEstimator(N=8, T=0.0).fit(L1Cone(1.0))
