import hashlib
import logging
import subprocess
import sys
import time

import pytest

from lidarpos import logs
from lidarpos.cli import main
from lidarpos.estimator import Quality

# recorded from the first verified run of the bundled drive-by (seed 1)
DRIVEBY_SHA256 = {
    "markers.csv": "3767e10bf9f67d160c5b77d7879b5c0cc1363e6b631638f5d6cdc63febe03620",
    "imu.csv": "d591bbde92ca924d08893bff963d7bafa67e13d3d3f275c18590ab0d3119f878",
    "lidar.csv": "0610246a8073b2423770763476f715d6f004dbb78152f2c9250edac9decdeacd",
    "truth.csv": "f2beaadcf27786ee887112f22195e7c437f05cf55e143f0fd9a1fefa4b0fb00e",
}


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def driveby(tmp_path_factory):
    out = tmp_path_factory.mktemp("driveby")
    assert main(["simulate", "--config", "driveby_10kmh", "--out", str(out)]) == 0
    return out


def test_simulate_writes_files_with_recorded_checksums(driveby):
    for name, digest in DRIVEBY_SHA256.items():
        assert sha(driveby / name) == digest, name
    assert (driveby / "run.cfg").exists()


def test_estimate_and_evaluate(driveby, capsys):
    assert main(["estimate", "--config", str(driveby / "run.cfg")]) == 0
    rows = logs.read_trajectory(driveby / "trajectory.csv")
    assert any(r.quality is Quality.FULL_POSE for r in rows)
    capsys.readouterr()
    assert main(["evaluate", "--estimates", str(driveby / "trajectory.csv"), "--truth", str(driveby / "truth.csv")]) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[0].split() == ["quantity", "unit", "n", "mean", "std", "max"]
    report = (driveby / "report.csv").read_text().splitlines()
    means = {line.split(",")[0]: float(line.split(",")[3]) for line in report[1:]}
    assert means["position"] < 1e-4 and means["yaw"] < 1e-4 and means["velocity"] < 1e-4


def test_estimate_is_idempotent(driveby, tmp_path):
    assert main(["estimate", "--config", str(driveby / "run.cfg"), "--out", str(tmp_path / "a")]) == 0
    assert main(["estimate", "--config", str(driveby / "run.cfg"), "--out", str(tmp_path / "b")]) == 0
    assert sha(tmp_path / "a" / "trajectory.csv") == sha(tmp_path / "b" / "trajectory.csv")


def test_empty_lidar_log(driveby, tmp_path, caplog):
    run = tmp_path / "run.cfg"
    (tmp_path / "lidar.csv").write_text("t,x,y,z,reflectivity\n")
    run.write_text(
        f"markers = {driveby / 'markers.csv'}\nimu = {driveby / 'imu.csv'}\nlidar = lidar.csv\n"
    )
    with caplog.at_level(logging.WARNING):
        assert main(["estimate", "--config", str(run)]) == 0
    assert "dead reckoning only" in caplog.text
    rows = logs.read_trajectory(tmp_path / "trajectory.csv")
    assert rows and all(r.quality is Quality.DEAD_RECKONED for r in rows)


def test_reflectivity_override_silences_markers(driveby, tmp_path, capsys):
    assert main(["estimate", "--config", str(driveby / "run.cfg"), "--out", str(tmp_path),
                 "--reflectivity-threshold", "255", "--cluster-ms", "0.4"]) == 0  # fmt: skip
    rows = logs.read_trajectory(tmp_path / "trajectory.csv")
    assert any(r.quality is Quality.FULL_POSE for r in rows)  # markers return 255
    assert main(["estimate", "--config", str(driveby / "run.cfg"), "--out", str(tmp_path),
                 "--reflectivity-threshold", "0"]) == 2  # fmt: skip


def test_missing_config_is_usage_error(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]) == 2
    assert "usage" in capsys.readouterr().err
    assert main(["estimate", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_missing_arguments_exit_code():
    proc = subprocess.run([sys.executable, "-m", "lidarpos", "simulate"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage" in proc.stderr


def test_invalid_rate_names_field(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("imu_rate = 0\nmarker = 1 5 4 0.5\nsegment = standstill duration=2\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "imu_rate" in capsys.readouterr().err


def test_parse_error_is_runtime_error(driveby, tmp_path, capsys):
    (tmp_path / "imu.csv").write_text("t,ax,ay,az,wx,wy,wz\n0.01,0,0,oops,0,0,0\n")
    run = tmp_path / "run.cfg"
    run.write_text(f"markers = {driveby / 'markers.csv'}\nimu = imu.csv\nlidar = {driveby / 'lidar.csv'}\n")
    assert main(["estimate", "--config", str(run)]) == 1
    assert "imu.csv:2" in capsys.readouterr().err


def test_bench_smoke(capsys):
    t0 = time.perf_counter()
    assert main(["bench", "--iterations", "1000"]) == 0
    assert time.perf_counter() - t0 < 5.0
    lines = capsys.readouterr().out.splitlines()
    rows = {line.split()[0]: [float(x) for x in line.split()[2:5]] for line in lines[1:4]}
    assert set(rows) == {"Velocity", "Pose", "Combined"}
    for median, std, peak in rows.values():
        assert median >= 0 and std >= 0 and peak >= median


def test_bench_rejects_few_iterations():
    assert main(["bench", "--iterations", "999"]) == 2
