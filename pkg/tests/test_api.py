import logging

import numpy as np
import pytest
from fastapi.testclient import TestClient

from eotk.core.io import read_spectrum
from eotk.core.spectra import FanoLorentzian, eval_lineshape
from eotk.main import app


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client
    root=logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)


def test_root(client):
    response=client.get("/")
    assert response.status_code==200
    assert response.json()["docs"]=="/docs"


def test_health(client):
    response=client.get("/health")
    assert response.status_code==200
    assert response.json()["status"]=="healthy"


def test_readiness_solves_the_gap(client):
    body=client.get("/health/ready").json()
    assert body["status"]=="ready"
    assert body["solver_ok"] is True
    assert 150.0<body["gap_uev"]<250.0


def test_report(client, config_data):
    response=client.post("/report", json=config_data)
    assert response.status_code==200
    body=response.json()
    assert body["all_passed"] is True
    assert body["derived"]["g0_inferred_hz"]==pytest.approx(319.16, rel=5e-3)


def test_report_rejects_unknown_schema(client, config_data):
    response=client.post("/report", json={**config_data, "schema_version": 3})
    assert response.status_code==422
    assert "schema_version" in response.json()["detail"]


def test_fano_fit(client):
    m=FanoLorentzian(f0=1e9, kappa_i=0.4e6, kappa_e=0.6e6)
    spectrum=eval_lineshape(m, np.linspace(1e9-5e6, 1e9+5e6, 401))
    response=client.post(
        "/fit/fano",
        json={"frequency_hz": spectrum.frequency.tolist(), "psd": spectrum.psd.tolist(), "coupling": "over"},
    )
    assert response.status_code==200
    body=response.json()
    assert body["ok"] is True
    assert body["parameters"]["kappa_tot"]==pytest.approx(1e6, rel=1e-3)


def test_fano_fit_with_too_few_points(client):
    response=client.post("/fit/fano", json={"frequency_hz": [1.0, 2.0, 3.0], "psd": [1.0, 0.5, 1.0]})
    assert response.status_code==422


def test_exponential_fit(client):
    t=np.linspace(0.0, 1.0, 101)
    response=client.post("/fit/exponential", json={"time_s": t.tolist(), "values": (3.0*np.exp(-t/0.2)).tolist()})
    assert response.status_code==200
    assert response.json()["parameters"]["tau"]==pytest.approx(0.2, rel=1e-5)


def test_flat_series_is_reported_not_rejected(client):
    response=client.post("/fit/exponential", json={"time_s": list(range(12)), "values": [1.0]*12})
    assert response.status_code==200
    body=response.json()
    assert body["ok"] is False
    assert body["parameters"]["tau"] is None


def test_calibrate_bundled_traces(client, data_dir):
    signal=read_spectrum(data_dir/"calibration_signal.csv")
    dark=read_spectrum(data_dir/"calibration_dark.csv")
    response=client.post(
        "/calibrate",
        json={
            "frequency_hz": signal.frequency.tolist(),
            "signal_psd": signal.psd.tolist(),
            "dark_psd": dark.psd.tolist(),
            "rbw_hz": signal.rbw,
            "window_hz": [19.9e6, 20.1e6],
        },
    )
    assert response.status_code==200
    body=response.json()
    assert body["efficiency"]==pytest.approx(2.2e-9, rel=0.01)
    assert body["reference_bands"]==[[19.7e6, 19.9e6], [20.1e6, 20.3e6]]


def test_calibrate_rejects_mismatched_lengths(client):
    response=client.post(
        "/calibrate",
        json={"frequency_hz": [1.0, 2.0], "signal_psd": [1.0, 1.0], "dark_psd": [1.0], "window_hz": [1.0, 2.0]},
    )
    assert response.status_code==422
