"""HTTP API surface over the workbench."""

import pytest
from fastapi.testclient import TestClient

from gaittune.service import create_app
from gaittune.tuning import TuningProfile


@pytest.fixture()
def client(workbench):
    return TestClient(create_app(workbench))


class TestProfiles:
    def test_save_then_list_and_load(self, client):
        payload = {"name": "clinic", "version": 1, "params": {"pushoff_pct": 12.0}}
        created = client.post("/profiles", json=payload)
        assert created.status_code == 200
        profile_id = created.json()["id"]
        listing = client.get("/profiles").json()
        assert any(entry["id"] == profile_id for entry in listing)
        loaded = client.get(f"/profiles/{profile_id}").json()
        assert loaded["params"]["pushoff_pct"] == 12.0

    def test_out_of_bounds_profile_is_400(self, client):
        response = client.post(
            "/profiles", json={"name": "bad", "params": {"pushoff_pct": 61.0}}
        )
        assert response.status_code == 400

    def test_unknown_profile_is_404(self, client):
        assert client.get("/profiles/nope-v1").status_code == 404


class TestPresets:
    def test_pushoff_high_values(self, client):
        response = client.get("/presets/pushoff_pct/HIGH")
        assert response.status_code == 200
        assert response.json()["params"]["pushoff_pct"] == pytest.approx(48.0)

    def test_unknown_param_is_404(self, client):
        assert client.get("/presets/warp_factor/HIGH").status_code == 404

    def test_unknown_level_is_404(self, client):
        assert client.get("/presets/pushoff_pct/MEDIUM").status_code == 404


class TestRegenerate:
    def test_noop_returns_zero_models(self, client, workbench):
        baseline_digest = workbench.current.digest()
        response = client.post(
            "/bundle/regenerate", json=TuningProfile.zero().to_dict()
        )
        assert response.status_code == 200
        body = response.json()
        assert body["regenerated"] == []
        assert body["digest"] == baseline_digest

    def test_change_reports_models_and_vaf(self, client):
        profile = {"name": "p", "params": {"pushoff_pct": 40.0}}
        body = client.post("/bundle/regenerate", json=profile).json()
        assert body["regenerated"] == ["impedance:ankle"]
        assert body["wall_time_s"] > 0
        assert set(body["vaf_per_joint"]) >= {"ankle", "knee"}

    def test_validation_error_is_400(self, client):
        response = client.post(
            "/bundle/regenerate", json={"name": "bad", "params": {"pushoff_pct": 99.0}}
        )
        assert response.status_code == 400

    def test_concurrent_regeneration_is_409(self, client, workbench):
        assert workbench._lock.acquire(blocking=False)
        try:
            response = client.post(
                "/bundle/regenerate",
                json={"name": "busy", "params": {"pushoff_pct": 10.0}},
            )
            assert response.status_code == 409
        finally:
            workbench._lock.release()


class TestPreview:
    def test_pushoff_preview_scales_reference_peak(self, client):
        client.post("/bundle/regenerate", json={"name": "p", "params": {"pushoff_pct": 50.0}})
        response = client.get("/preview/torques", params={"task": "1.0,0.0", "joint": "ankle"})
        assert response.status_code == 200
        body = response.json()
        tuned_peak = max(abs(v) for v in body["reference"]["tuned"])
        base_peak = max(abs(v) for v in body["reference"]["baseline"])
        assert tuned_peak / base_peak == pytest.approx(1.5, rel=1e-9)
        assert len(body["commanded"]["tuned"]) == 150

    def test_unknown_task_is_404(self, client):
        response = client.get("/preview/torques", params={"task": "9.0,0.0", "joint": "ankle"})
        assert response.status_code == 404

    def test_malformed_task_is_400(self, client):
        response = client.get("/preview/torques", params={"task": "fast", "joint": "ankle"})
        assert response.status_code == 400


class TestBundleEndpoints:
    def test_current_bundle_summary(self, client):
        body = client.get("/bundle/current").json()
        assert {"digest", "revision", "profile", "vaf_per_joint"} <= set(body)

    def test_export_writes_archive(self, client, tmp_path):
        path = str(tmp_path / "exported.json")
        response = client.post("/bundle/export", json={"path": path})
        assert response.status_code == 200
        from gaittune.session import import_bundle

        imported = import_bundle(path)
        assert imported.digest() == client.get("/bundle/current").json()["digest"]

    def test_export_without_path_is_400(self, client):
        assert client.post("/bundle/export", json={}).status_code == 400

    def test_session_log_endpoint(self, client):
        client.post("/bundle/regenerate", json={"name": "p", "params": {"pushoff_pct": 5.0}})
        log = client.get("/session/log").json()
        assert len(log) == 1
        assert log[0]["regenerated"] == ["impedance:ankle"]
