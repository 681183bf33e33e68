import math

import pytest

from config import DEFAULTS_VERSION
from errors import NumericalError
from services.run_service import RunService


def test_schema_and_defaults(client):
    schema = client.get("/api/schema")
    assert schema.status_code == 200
    assert "operator" in schema.get_json()
    defaults = client.get("/api/defaults").get_json()
    assert defaults["defaults_version"] == DEFAULTS_VERSION
    assert defaults["defaults"]["t_count"] == 601
    assert defaults["defaults"]["workers"] == 1


def test_besov_endpoint(client):
    response = client.post("/api/besov", json={"expansion": {"basis": [1]}, "besov": {"alpha": 0.5}})
    assert response.status_code == 200
    body = response.get_json()
    assert body["seminorm"] == pytest.approx(math.sqrt(0.5), rel=1e-4)
    assert body["table"]["header"] == ["t", "g"]
    assert body["exit_code"] == 0


def test_eval_endpoint_with_points(client):
    response = client.post("/api/eval", json={"expansion": {"constant": 2.0}, "points": {"values": [0.0, 1.0]}})
    assert response.status_code == 200
    rows = response.get_json()["table"]["rows"]
    assert [row[1] for row in rows] == [2.0, 2.0]


def test_op_and_norm_endpoints(client):
    op = client.post("/api/op", json={"expansion": {"all_up_to": 4},
                                      "operator": {"kind": "bessel_potential", "beta": 1.0}})
    assert op.status_code == 200
    assert op.get_json()["max_abs_difference"] == 0.0
    norm = client.post("/api/norm", json={"expansion": {"basis": [1]}})
    assert norm.get_json()["norm"] == pytest.approx(1.0)


def test_verify_endpoint(client):
    response = client.post("/api/verify", json={"checks": ["holder.cauchy_schwarz"]})
    body = response.get_json()
    assert response.status_code == 200
    assert body["passed"]
    assert body["reports"][0]["name"] == "holder.cauchy_schwarz"


def test_configuration_errors_are_bad_requests(client):
    response = client.post("/api/norm", json={"dimension": 9})
    assert response.status_code == 400
    assert response.get_json()["path"] == "dimension"
    assert client.post("/api/norm", data="not json", content_type="text/plain").status_code == 400
    dbeta = client.post("/api/verify", json={"checks": ["theorem_dbeta"],
                                             "check_parameters": {"theorem_dbeta": {"alpha": 1.0, "beta": 1.0}}})
    assert dbeta.status_code == 400


def test_numerical_errors_are_unprocessable(client, monkeypatch):
    def fail(self, config):
        raise NumericalError("bracket expansion exceeded 2^64")

    monkeypatch.setattr(RunService, "run_besov", fail)
    response = client.post("/api/besov", json={"besov": {"alpha": 0.5}})
    assert response.status_code == 422
    assert "bracket" in response.get_json()["error"]
