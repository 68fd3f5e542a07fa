import json
import time

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient

from prefbo import service as SVC
from prefbo.acquisition import AcquisitionConfig
from prefbo.surrogate import model_from_document

torch.set_num_threads(1)

EXTRUDER_BOUNDS = [
    {"low": 110, "high": 160, "resolution": 1},
    {"low": 250, "high": 450, "resolution": 10},
    {"low": 200, "high": 900, "resolution": 50},
]

TINY_ACQ = AcquisitionConfig(
    n_candidate_grid=64,
    n_gumbel_samples=500,
    n_bins=8,
    n_trunc_samples=48,
    n_uncond_samples=48,
    n_optim_init=4,
    n_optim_steps=2,
)


@pytest.fixture()
def client(tmp_path, monkeypatch):
    monkeypatch.setattr(SVC, "AcquisitionConfig", lambda: TINY_ACQ)
    app = SVC.create_app(str(tmp_path / "sessions"), fast=True)
    with TestClient(app) as c:
        # fast tests: short training runs
        yield c


def small_spec(**overrides):
    spec = {
        "name": "bench",
        "dim": 3,
        "bounds": EXTRUDER_BOUNDS,
        "n_init": 4,
        "total_iterations": 8,
        "recommendation_steps": [5],
        "seed": 3,
        "fast": True,
    }
    spec.update(overrides)
    return spec


def wait_for_job(client, sid, jid, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        r = client.get(f"/sessions/{sid}/jobs/{jid}")
        assert r.status_code == 200
        body = r.json()
        if body["status"] == "done":
            return body["result"]
        if body["status"] == "failed":
            raise AssertionError(f"job failed: {body['error']}")
        time.sleep(0.1)
    raise AssertionError("job timed out")


def request_next(client, sid):
    r = client.post(f"/sessions/{sid}/next")
    assert r.status_code == 202
    return wait_for_job(client, sid, r.json()["job_id"])


class TestSessionCreation:
    def test_extruder_design_on_grid(self, client):
        r = client.post("/sessions", json=small_spec(n_init=15, total_iterations=30, recommendation_steps=[24, 29]))
        assert r.status_code == 201
        design = r.json()["initial_design"]
        assert len(design) == 15
        for entry in design:
            t, w, s = entry["config_native"]
            assert 110 <= t <= 160 and abs(t - round(t)) < 1e-9
            assert 250 <= w <= 450 and abs(w / 10 - round(w / 10)) < 1e-9
            assert 200 <= s <= 900 and abs(s / 50 - round(s / 50)) < 1e-9

    def test_deterministic_given_seed(self, client):
        a = client.post("/sessions", json=small_spec()).json()["initial_design"]
        b = client.post("/sessions", json=small_spec()).json()["initial_design"]
        assert a == b

    def test_invalid_bounds_rejected(self, client):
        bad = small_spec()
        bad["bounds"] = [{"low": 1, "high": 0, "resolution": 1}] * 3
        assert client.post("/sessions", json=bad).status_code == 422

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404


class TestSnapping:
    def test_nearest_with_ties_toward_lower(self):
        spec = SVC.SessionSpec(**small_spec())
        native = SVC.snap_native(spec, np.array([110.4, 255.0, 926.0]))
        assert native[0] == 110.0
        assert native[1] == 250.0  # exact tie snaps down
        assert native[2] == 900.0  # clamped to the top grid point

    def test_round_trip_identity_on_grid(self):
        spec = SVC.SessionSpec(**small_spec())
        x = np.array([123.0, 330.0, 550.0])
        u = SVC.to_unit(spec, x)
        back = SVC.snap_native(spec, SVC.to_native(spec, u))
        assert np.allclose(back, x)


class TestProtocol:
    def test_init_label_sequence_and_transition(self, client):
        sid = client.post("/sessions", json=small_spec()).json()["id"]
        for i in range(3):
            r = client.post(f"/sessions/{sid}/label", json={"label": [1, 0, -1][i]})
            assert r.status_code == 200
        summary = client.get(f"/sessions/{sid}").json()
        assert summary["phase"] == "interactive"
        # indifference label is in the history table
        assert summary["history"][2]["label"] == 0

    def test_label_without_pending_rejected(self, client):
        sid = client.post("/sessions", json=small_spec()).json()["id"]
        for _ in range(3):
            client.post(f"/sessions/{sid}/label", json={"label": 1})
        r = client.post(f"/sessions/{sid}/label", json={"label": 1})
        assert r.status_code == 409

    def test_invalid_label_rejected(self, client):
        sid = client.post("/sessions", json=small_spec()).json()["id"]
        assert client.post(f"/sessions/{sid}/label", json={"label": 2}).status_code == 422

    def test_next_requires_interactive_phase(self, client):
        sid = client.post("/sessions", json=small_spec()).json()["id"]
        assert client.post(f"/sessions/{sid}/next").status_code == 409

    def test_full_interactive_loop_with_recommendation_step(self, client):
        sid = client.post("/sessions", json=small_spec()).json()["id"]
        for _ in range(3):
            client.post(f"/sessions/{sid}/label", json={"label": 1})
        # t = 4: acquisition point, consecutive reference is the latest config
        result = request_next(client, sid)
        assert result["kind"] == "acquisition"
        summary = client.get(f"/sessions/{sid}").json()
        assert result["diagnostics"]["reference_native"] == summary["history"][3]["config_native"]
        client.post(f"/sessions/{sid}/label", json={"label": 0})
        # t = 5 is a recommendation step: the model maximizer is produced
        result = request_next(client, sid)
        assert result["kind"] == "model_maximizer"
        report = client.get(f"/sessions/{sid}/report", params={"checkpoint": 1}).json()
        model = model_from_document(report["checkpoint"])
        from prefbo.metrics import recommend

        spec = SVC.SessionSpec(**small_spec())
        expected = SVC.snap_native(spec, SVC.to_native(spec, recommend(model)))
        assert result["config"] == expected.tolist()
        # config is on the native grid
        t, w, s = result["config"]
        assert abs(t - round(t)) < 1e-9 and w % 10 == 0 and s % 50 == 0

    def test_next_while_pending_rejected(self, client):
        sid = client.post("/sessions", json=small_spec()).json()["id"]
        for _ in range(3):
            client.post(f"/sessions/{sid}/label", json={"label": 1})
        request_next(client, sid)
        assert client.post(f"/sessions/{sid}/next").status_code == 409

    def test_finished_session_rejects_everything(self, client):
        sid = client.post("/sessions", json=small_spec(total_iterations=5, recommendation_steps=[4])).json()["id"]
        for _ in range(3):
            client.post(f"/sessions/{sid}/label", json={"label": 1})
        request_next(client, sid)
        client.post(f"/sessions/{sid}/label", json={"label": -1})
        assert client.get(f"/sessions/{sid}").json()["phase"] == "finished"
        assert client.post(f"/sessions/{sid}/next").status_code == 409
        assert client.post(f"/sessions/{sid}/label", json={"label": 1}).status_code == 409


class TestSliceAndReport:
    @pytest.fixture()
    def active_session(self, client):
        sid = client.post("/sessions", json=small_spec()).json()["id"]
        for _ in range(3):
            client.post(f"/sessions/{sid}/label", json={"label": 1})
        request_next(client, sid)
        return sid

    def test_slice_before_training_rejected(self, client):
        sid = client.post("/sessions", json=small_spec()).json()["id"]
        r = client.get(f"/sessions/{sid}/slice", params={"axis": 0, "value": 120})
        assert r.status_code == 409

    def test_slice_payload(self, client, active_session):
        sid = active_session
        r = client.get(f"/sessions/{sid}/slice", params={"axis": 2, "value": 500, "resolution": 12})
        assert r.status_code == 200
        body = r.json()
        assert body["free_axes"] == [0, 1]
        mean = np.array(body["mean"])
        p0 = np.array(body["p_zero"])
        assert mean.shape == (12, 12) and p0.shape == (12, 12)
        assert np.all(np.isfinite(mean))
        assert np.all((p0 >= 0) & (p0 <= 1))

    def test_slice_p_zero_at_maximizer(self, client, active_session):
        from prefbo.preference import LikelihoodParams, outcome_probabilities

        sid = active_session
        body = client.get(f"/sessions/{sid}/slice", params={"axis": 0, "value": 120}).json()
        report = client.get(f"/sessions/{sid}/report", params={"checkpoint": 1}).json()
        model = model_from_document(report["checkpoint"])
        expected = outcome_probabilities(0.0, LikelihoodParams(model.sigma, model.gamma))[1]
        assert body["p_zero_at_max"] == pytest.approx(float(expected), abs=1e-12)

    def test_three_choosable_axes(self, client, active_session):
        sid = active_session
        for axis, value in ((0, 130), (1, 300), (2, 400)):
            r = client.get(f"/sessions/{sid}/slice", params={"axis": axis, "value": value, "resolution": 8})
            assert r.status_code == 200
            assert axis not in r.json()["free_axes"]
        assert client.get(f"/sessions/{sid}/slice", params={"axis": 7, "value": 0}).status_code == 422

    def test_report_counts_and_checkpoint(self, client, active_session):
        sid = active_session
        report = client.get(f"/sessions/{sid}/report", params={"checkpoint": 1}).json()
        assert len(report["history"]) == 5
        assert len(report["labels"]) == 3
        assert report["gamma_trajectory"][-1] >= 0
        assert report["best_recommendation_native"] is not None
        model = model_from_document(report["checkpoint"])
        assert model.dim == 3


class TestCrashRecovery:
    def test_restart_reproduces_state(self, tmp_path, monkeypatch):
        monkeypatch.setattr(SVC, "AcquisitionConfig", lambda: TINY_ACQ)
        data_dir = str(tmp_path / "sessions")
        app = SVC.create_app(data_dir, fast=True)
        with TestClient(app) as client:
            sid = client.post("/sessions", json=small_spec()).json()["id"]
            for lab in (1, 0, -1):
                client.post(f"/sessions/{sid}/label", json={"label": lab, "note": "x" if lab == 0 else None})
            request_next(client, sid)
            before = client.get(f"/sessions/{sid}").json()
            report_before = client.get(f"/sessions/{sid}/report", params={"checkpoint": 1}).json()

        app2 = SVC.create_app(data_dir, fast=True)
        with TestClient(app2) as client2:
            after = client2.get(f"/sessions/{sid}").json()
            report_after = client2.get(f"/sessions/{sid}/report", params={"checkpoint": 1}).json()
        assert before == after
        assert report_before == report_after

    def test_recovered_session_continues(self, tmp_path, monkeypatch):
        monkeypatch.setattr(SVC, "AcquisitionConfig", lambda: TINY_ACQ)
        data_dir = str(tmp_path / "sessions")
        with TestClient(SVC.create_app(data_dir, fast=True)) as client:
            sid = client.post("/sessions", json=small_spec()).json()["id"]
            for _ in range(3):
                client.post(f"/sessions/{sid}/label", json={"label": 1})
        with TestClient(SVC.create_app(data_dir, fast=True)) as client2:
            result = request_next(client2, sid)
            assert result["kind"] == "acquisition"
            assert client2.get(f"/sessions/{sid}").json()["pending"] is not None
