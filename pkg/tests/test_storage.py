import json

import numpy as np
import pytest

from raceline import fixtures, pipeline, speed, storage, track
from raceline.errors import InputError


@pytest.fixture(scope="module")
def small_run(params):
    cloud = fixtures.hairpin(straight=120, radius=25, width=14)
    cfg = pipeline.PipelineConfig(max_iterations=1)
    return pipeline.generate_trajectory(cloud, params, cfg)


class TestTrackCsv:
    def test_roundtrip_exact(self, tmp_path, annulus_path):
        f = tmp_path / "track.csv"
        storage.save_track(annulus_path, f)
        again = storage.load_track(f)
        assert np.array_equal(again.stations, annulus_path.stations)
        assert np.array_equal(again.curvature, annulus_path.curvature)
        assert np.array_equal(again.east, annulus_path.east)
        assert again.closed == annulus_path.closed

    def test_header(self, tmp_path, annulus_path):
        f = tmp_path / "track.csv"
        storage.save_track(annulus_path, f)
        head = f.read_text().splitlines()[0]
        assert head == "s_m,k_1pm,w_in_m,w_out_m,east_m,north_m,psi_r_rad"

    def test_missing_column_rejected(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("s_m,k_1pm\n0.0,0.0\n1.0,0.0\n")
        with pytest.raises(InputError):
            storage.load_track(f)

    def test_non_numeric_rejected(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("east_m,north_m\n0.0,zero\n1.0,1.0\n")
        with pytest.raises(InputError):
            storage.load_boundary(f)


class TestBoundaryCsv:
    def test_roundtrip(self, tmp_path):
        cloud = fixtures.annulus(n_points=100)
        fi = tmp_path / "inner.csv"
        storage.save_boundary(cloud.inner, fi)
        again = storage.load_boundary(fi)
        assert np.array_equal(again, cloud.inner)


class TestProfileCsv:
    def test_roundtrip(self, tmp_path, annulus_profile):
        f = tmp_path / "speed.csv"
        storage.save_profile(annulus_profile, f)
        again = storage.load_profile(f)
        assert np.array_equal(again.U_x, annulus_profile.U_x)
        assert again.lap_time == pytest.approx(annulus_profile.lap_time)

    def test_diagnostics_columns(self, tmp_path, annulus_profile):
        f = tmp_path / "speed.csv"
        storage.save_profile(annulus_profile, f, diagnostics=True)
        head = f.read_text().splitlines()[0]
        assert head == "s_m,ux_mps,ux_steady_mps,ux_forward_mps"


class TestRunDirectory:
    def test_save_run_layout(self, tmp_path, small_run):
        written = storage.save_run(small_run, tmp_path / "run")
        names = sorted(p.name for p in written)
        assert "records.json" in names
        assert "path_0.csv" in names
        assert "speed_0.csv" in names

    def test_records_json_structure(self, tmp_path, small_run):
        storage.save_run(small_run, tmp_path / "run")
        records, status = storage.load_records(tmp_path / "run" / "records.json")
        assert status == small_run.status
        assert records[0]["index"] == 0
        assert "lap_time_integrated" in records[0]
        assert "qp_wall_time" in records[0]

    def test_csv_outputs_byte_identical_across_runs(self, tmp_path, params):
        cloud = fixtures.hairpin(straight=120, radius=25, width=14)
        cfg = pipeline.PipelineConfig(max_iterations=1)
        blobs = []
        for d in ("a", "b"):
            res = pipeline.generate_trajectory(cloud, params, cfg)
            out = tmp_path / d
            storage.save_run(res, out)
            blobs.append({p.name: p.read_bytes()
                          for p in sorted(out.glob("*.csv"))})
        assert blobs[0] == blobs[1]
