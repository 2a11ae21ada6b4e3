"""Profile persistence, bundle archives, the session log, and the workbench."""

import json

import numpy as np
import pytest

from gaittune.errors import (
    DigestMismatchError,
    DirtyBundleError,
    NotFoundError,
    RegenerationInFlightError,
    ValidationFailedError,
    VersionUnsupportedError,
)
from gaittune.session import (
    SessionStore,
    Workbench,
    export_bundle,
    import_bundle,
)
from gaittune.tuning import TuningProfile


class TestProfileStore:
    def test_save_load_round_trip(self, tmp_path):
        store = SessionStore(str(tmp_path))
        profile = TuningProfile(pushoff_pct=30.0, name="Morning Session", version=2)
        profile_id = store.save_profile(profile)
        loaded = store.load_profile(profile_id)
        assert loaded == profile

    def test_unknown_id(self, tmp_path):
        store = SessionStore(str(tmp_path))
        with pytest.raises(NotFoundError):
            store.load_profile("missing-v1")

    def test_listing_includes_metadata(self, tmp_path):
        store = SessionStore(str(tmp_path))
        store.save_profile(TuningProfile(name="a"))
        store.save_profile(TuningProfile(name="b", pushoff_pct=10.0))
        listing = store.list_profiles()
        assert len(listing) == 2
        assert {entry["name"] for entry in listing} == {"a", "b"}
        assert all("params" in entry and "id" in entry for entry in listing)

    def test_out_of_bounds_profile_rejected_on_parse(self):
        with pytest.raises(ValidationFailedError):
            TuningProfile.from_dict({"name": "bad", "params": {"pushoff_pct": 61.0}})


class TestBundleArchive:
    def test_export_import_export_byte_identical(self, workbench, tmp_path):
        p1 = tmp_path / "a.bundle.json"
        p2 = tmp_path / "b.bundle.json"
        d1 = export_bundle(workbench.current, str(p1))
        imported = import_bundle(str(p1))
        d2 = export_bundle(imported, str(p2))
        assert d1 == d2
        assert p1.read_bytes() == p2.read_bytes()

    def test_import_reproduces_coefficients_bitwise(self, workbench, tmp_path):
        path = tmp_path / "bundle.json"
        export_bundle(workbench.current, str(path))
        imported = import_bundle(str(path))
        for key, poly in workbench.current.walking_impedance.items():
            other = imported.walking_impedance[key]
            assert np.array_equal(poly.k, other.k)
            assert np.array_equal(poly.e, other.e)
            assert np.array_equal(poly.b, other.b)
        assert imported.digest() == workbench.current.digest()

    def test_truncated_archive_detected(self, workbench, tmp_path):
        path = tmp_path / "bundle.json"
        export_bundle(workbench.current, str(path))
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(DigestMismatchError):
            import_bundle(str(path))

    def test_tampered_payload_detected(self, workbench, tmp_path):
        path = tmp_path / "bundle.json"
        export_bundle(workbench.current, str(path))
        archive = json.loads(path.read_text())
        archive["payload"]["stance_end"] = 0.5
        path.write_text(json.dumps(archive))
        with pytest.raises(DigestMismatchError):
            import_bundle(str(path))

    def test_unsupported_version(self, workbench, tmp_path):
        path = tmp_path / "bundle.json"
        export_bundle(workbench.current, str(path))
        archive = json.loads(path.read_text())
        archive["format_version"] = 99
        path.write_text(json.dumps(archive))
        with pytest.raises(VersionUnsupportedError):
            import_bundle(str(path))

    def test_dirty_bundle_refused(self, workbench, tmp_path):
        from dataclasses import replace

        dirty = replace(workbench.current, dirty_flags=frozenset({"impedance:ankle"}))
        with pytest.raises(DirtyBundleError):
            export_bundle(dirty, str(tmp_path / "dirty.json"))

    def test_missing_archive(self, tmp_path):
        with pytest.raises(NotFoundError):
            import_bundle(str(tmp_path / "absent.json"))


class TestSessionLog:
    def test_append_only_with_monotone_timestamps(self, tmp_path):
        store = SessionStore(str(tmp_path))
        store.append_log({"timestamp": 100.0, "note": "first"})
        store.append_log({"timestamp": 50.0, "note": "clock went backwards"})
        entries = store.read_log()
        assert len(entries) == 2
        assert entries[1]["timestamp"] >= entries[0]["timestamp"]

    def test_regeneration_logged(self, workbench):
        workbench.regenerate(TuningProfile(pushoff_pct=20.0, name="logged"))
        log = workbench.session_log()
        assert len(log) == 1
        entry = log[0]
        assert entry["regenerated"] == ["impedance:ankle"]
        assert entry["wall_time_s"] > 0
        assert entry["profile"]["params"]["pushoff_pct"] == 20.0
        assert "vaf_per_joint" in entry

    def test_log_replay_reproduces_final_digest(self, workbench, demo_dataset, demo_sitstand, tmp_path):
        profiles = [
            TuningProfile(pushoff_pct=30.0, name="step1"),
            TuningProfile(pushoff_pct=30.0, stance_flexion_resistance_pct=25.0, name="step2"),
            TuningProfile(pushoff_pct=50.0, stance_flexion_resistance_pct=25.0, name="step3"),
        ]
        for profile in profiles:
            workbench.regenerate(profile)
        final_digest = workbench.current.digest()

        fresh = Workbench(
            demo_dataset,
            sitstand_strides=demo_sitstand,
            store=SessionStore(str(tmp_path / "replay")),
        )
        for entry in workbench.session_log():
            fresh.regenerate(TuningProfile.from_dict(entry["profile"]))
        assert fresh.current.digest() == final_digest


class TestWorkbenchConcurrency:
    def test_second_regeneration_refused_while_locked(self, workbench):
        assert workbench._lock.acquire(blocking=False)
        try:
            with pytest.raises(RegenerationInFlightError):
                workbench.regenerate(TuningProfile(pushoff_pct=10.0, name="busy"))
        finally:
            workbench._lock.release()
        # lock released: the same request now succeeds
        summary = workbench.regenerate(TuningProfile(pushoff_pct=10.0, name="busy"))
        assert summary.regenerated == ("impedance:ankle",)
