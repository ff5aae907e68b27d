import pytest
from fastapi.testclient import TestClient

from ncc_api import app


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_root_lists_endpoints(client):
    response = client.get("/")
    assert response.status_code == 200
    assert any(endpoint.startswith("POST /params") for endpoint in response.json()["endpoints"])


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert body["components"]["experiment_handler"] == "✅ OK"


def test_params(client):
    response = client.post("/params", json={"scheme": "zerosarah", "L": 1.0, "n": 10000})
    assert response.status_code == 200
    data = response.json()["data"]
    assert data["b"] == 200 and data["tau"] == pytest.approx(0.024)


def test_params_errors(client):
    assert client.post("/params", json={"scheme": "zerosarah", "L": 1.0}).status_code == 400
    assert client.post("/params", json={"scheme": "pvr", "L": -1.0}).status_code == 422


def test_run_and_compare(client, toy_experiment, tmp_path):
    out_dir = str(tmp_path / "api-runs")
    response = client.post("/run", json={"experiment": toy_experiment, "output_dir": out_dir})
    assert response.status_code == 200, response.text
    assert len(response.json()["data"]["runs"]) == 4

    response = client.get("/compare", params={"dir": out_dir, "threshold": [1.0, 1e-12]})
    assert response.status_code == 200
    rows = response.json()["data"]["rows"]
    assert {row["solver"] for row in rows} == {"pvr", "stocgda"}
    assert all(row["oracle@1e-12"] == "∞" for row in rows)


def test_failed_experiment_is_a_server_error(client, toy_experiment, tmp_path):
    toy_experiment["solvers"] = [{"scheme": "zerosarah", "T": 5, "batch_size": 500}]
    response = client.post("/run", json={"experiment": toy_experiment, "output_dir": str(tmp_path / "bad")})
    assert response.status_code == 500


def test_compare_missing_directory(client, tmp_path):
    assert client.get("/compare", params={"dir": str(tmp_path / "nothing")}).status_code == 404
