import numpy as np
import pytest
from sklearn.base import clone

from gsforge.core import FourierSeries
from gsforge.errors import PreconditionError
from gsforge.estimators import (
    AnalyticityRadiusEstimator, CoilDesigner, GradShafranovDiskSolver, StructureFunctionRegressor,
    boundary_series,
)

THETA = 2 * np.pi * np.arange(64) / 64


def test_boundary_series_from_samples():
    f = boundary_series(np.cos(THETA))
    assert f.k_max == 1 and f.positive()[1] == pytest.approx(0.5)
    assert boundary_series(f) is f
    with pytest.raises(PreconditionError):
        boundary_series([1.0, 2.0])


def test_regressor_recovers_sine():
    rng = np.random.default_rng(0)
    a = rng.uniform(0, 1, 4000)
    reg = StructureFunctionRegressor(n_bins=64).fit(a[:, None], np.sin(a))
    t = np.linspace(0.05, 0.95, 50)
    assert np.abs(reg.predict(t) - np.sin(t)).max() < 1e-6
    assert reg.score(a[:, None], np.sin(a)) > 1 - 1e-10


def test_regressor_rejects_mismatch():
    with pytest.raises(PreconditionError):
        StructureFunctionRegressor().fit(np.arange(10.0), np.arange(9.0))
    with pytest.raises(PreconditionError):
        StructureFunctionRegressor().fit(np.ones((10, 2)), np.arange(10.0))


@pytest.mark.parametrize("method, kwargs", [
    ("spectral", {"radius": 2.0}),
    ("perturbed", {"curve": FourierSeries(np.array([0.025, 2.0, 0.025]))}),
])
def test_coil_designer_cosine(method, kwargs):
    est = CoilDesigner(method=method, **kwargs).fit(np.cos(THETA))
    assert est.report_["neumann"] < 1e-8 and est.score(np.cos(THETA)) > -1e-8
    pts = np.array([[3.0, 0.0], [0.0, -5.0]])
    assert est.predict(pts).shape == (2,)


def test_coil_designer_levelset_and_params():
    est = CoilDesigner(method="levelset")
    est.fit(1 + 0.2 * np.cos(THETA))
    assert est.report_["dirichlet"] < 1e-8
    twin = clone(est).set_params(method="spectral", radius=1.5)
    assert twin.get_params()["radius"] == 1.5 and not hasattr(twin, "sheet_")


def test_coil_designer_errors():
    with pytest.raises(PreconditionError):
        CoilDesigner(method="perturbed").fit(np.cos(THETA))
    with pytest.raises(PreconditionError):
        CoilDesigner(method="magic").fit(np.cos(THETA))


def test_analyticity_estimator():
    k = np.arange(-40, 41)
    est = AnalyticityRadiusEstimator().fit(FourierSeries(3.0 ** -np.abs(k)))
    assert est.rho_ == pytest.approx(3.0, rel=0.05) and est.flag_ == "analytic"
    assert list(est.predict([2.0, 4.0])) == [True, False]


def test_gs_solver_parabola():
    est = GradShafranovDiskSolver(G="0", F="-2", n_r=64, n_theta=64).fit()
    x = np.array([[0.0, 0.0], [0.3, 0.4], [-0.5, 0.1]])
    np.testing.assert_allclose(est.predict(x), 0.5 * (1 - (x ** 2).sum(axis=1)), atol=1e-6)
    assert est.info_["residual"] < 1e-10
