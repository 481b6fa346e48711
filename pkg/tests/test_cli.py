import io
import json

import numpy as np
import pandas as pd
import pytest

from cli import EXIT_DEGENERATE, EXIT_INVALID, EXIT_OK, main, parse_beta_grid


def _run(capsys, *argv):
    status = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return status, out, err


def _write(tmp_path, name, document):
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return path


def test_pid_json_report(capsys, fixtures_dir):
    status, out, _ = _run(capsys, "pid", fixtures_dir / "erasure_chain.json", "--json")
    assert status == EXIT_OK
    report = json.loads(out)
    assert report["classical"]["ui_x"] == pytest.approx(1 / 6, abs=1e-6)
    assert report["deficiency_induced"]["si"] == pytest.approx(2 / 3, abs=1e-6)
    assert report["i_yx_bits"] == pytest.approx(5 / 6, abs=1e-9)
    assert all(report["holds"].values())


def test_reruns_are_byte_identical(capsys, fixtures_dir):
    argv = ("pid", fixtures_dir / "xor.json", "--json")
    first = _run(capsys, *argv)[1]
    second = _run(capsys, *argv)[1]
    assert first == second


def test_pid_table_and_csv(capsys, fixtures_dir):
    status, out, _ = _run(capsys, "pid", fixtures_dir / "copy.json")
    assert status == EXIT_OK
    assert "classical" in out and "deficiency_induced" in out
    status, out, _ = _run(capsys, "pid", fixtures_dir / "copy.json", "--kind", "classical", "--csv")
    assert out.splitlines()[0] == "kind,ui_x,ui_z,si,ci"


def test_deficiency_from_joint(capsys, fixtures_dir):
    with open(fixtures_dir / "expected" / "erasure_chain_deficiency.json") as f:
        expected = json.load(f)
    status, out, _ = _run(capsys, "deficiency", "--joint", fixtures_dir / expected["fixture"], "--json")
    assert status == EXIT_OK
    report = json.loads(out)
    assert report["deficiency_bits"] == pytest.approx(expected["deficiency_bits"], abs=expected["tolerance"])
    assert report["encoder"]["kind"] == "channel"


def test_deficiency_from_channels(capsys, fixtures_dir):
    status, out, _ = _run(
        capsys, "deficiency",
        "--pi", fixtures_dir / "toy_prior.json",
        "--kappa", fixtures_dir / "toy_kappa.json",
        "--d", fixtures_dir / "toy_constant_decoder.json",
        "--json",
    )
    assert status == EXIT_OK
    kl = 0.5 * (0.9 * np.log2(1.8) + 0.1 * np.log2(0.2)) + 0.5 * (0.2 * np.log2(0.4) + 0.8 * np.log2(1.6))
    assert json.loads(out)["deficiency_bits"] == pytest.approx(kl, abs=1e-9)


def test_missing_inputs_exit_invalid(capsys, fixtures_dir):
    status, _, err = _run(capsys, "deficiency", "--pi", fixtures_dir / "toy_prior.json")
    assert status == EXIT_INVALID
    assert "--kappa" in err


def test_missing_file_exit_invalid(capsys, tmp_path):
    status, out, err = _run(capsys, "pid", tmp_path / "nope.json")
    assert status == EXIT_INVALID
    assert out == ""
    assert "file not found" in err


def test_malformed_instance_names_file_and_field(capsys, tmp_path):
    path = _write(tmp_path, "bad.json", {"kind": "joint3", "dims": [1, 1, 2], "values": [1.5, -0.5]})
    status, _, err = _run(capsys, "pid", path)
    assert status == EXIT_INVALID
    assert "bad.json" in err and "values[1]" in err


def test_unknown_command_and_bad_grid(capsys, fixtures_dir):
    assert _run(capsys, "frobnicate")[0] == EXIT_INVALID
    status = _run(capsys, "ib-curve", "--joint", fixtures_dir / "bsc_0_1.json", "--beta-grid", "log:1:0:3")[0]
    assert status == EXIT_INVALID


def test_infinite_deficiency_exits_degenerate(capsys, tmp_path):
    pi = _write(tmp_path, "pi.json", {"kind": "prob_vector", "dims": [2], "values": [0.5, 0.5]})
    kappa = _write(tmp_path, "kappa.json", {"kind": "channel", "dims": [2, 3], "values": [0.8, 0, 0.2, 0, 0.8, 0.2]})
    d = _write(tmp_path, "d.json", {"kind": "channel", "dims": [2, 3], "values": [1, 0, 0, 0, 1, 0]})
    status, out, _ = _run(capsys, "deficiency", "--pi", pi, "--kappa", kappa, "--d", d, "--json")
    assert status == EXIT_DEGENERATE
    assert json.loads(out)["deficiency_bits"] == float("inf")


def test_blackwell_witness(capsys, fixtures_dir):
    kappa = fixtures_dir / "toy_kappa.json"
    status, out, _ = _run(capsys, "blackwell", "--kappa", kappa, "--d", kappa, "--witness", "--json")
    assert status == EXIT_OK
    report = json.loads(out)
    assert report["sufficient"] is True
    assert report["witness_encoder"]["values"] == [1.0, 0.0, 0.0, 1.0]


def test_riskgap_on_example(capsys, fixtures_dir):
    status, out, _ = _run(capsys, "riskgap", "--joint", fixtures_dir / "erasure_chain.json", "--json")
    assert status == EXIT_OK
    report = json.loads(out)
    assert report["consistent"] is True
    assert report["gap_bits"] == pytest.approx(0.0, abs=1e-6)


def test_ib_curve_csv_and_out_file(capsys, fixtures_dir, tmp_path):
    out_file = tmp_path / "curve.csv"
    status, out, _ = _run(
        capsys, "ib-curve", "--joint", fixtures_dir / "bsc_0_1.json",
        "--beta-grid", "0.1,0.5,2", "--restarts", "1", "--csv", "--out", out_file,
    )
    assert status == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "beta,rate_bits,sufficiency_bits,objective_bits"
    assert len(lines) == 4
    assert out_file.read_text() == out


def test_db_curve_with_schedule_comparison(capsys, fixtures_dir):
    status, out, _ = _run(
        capsys, "db-curve", "--joint", fixtures_dir / "bsc_0_1.json", "--beta-grid", "0.1,0.5",
        "--schedule", "seq:2", "--compare", "oneshot,seq:2", "--restarts", "1", "--max-iter", "300", "--json",
    )
    assert status == EXIT_OK
    report = json.loads(out)
    assert len(report["points"]) == 2
    assert {p["schedule"] for p in report["points"]} == {"seq:2"}
    assert list(report["comparison"]) == ["oneshot"]


def test_db_curve_rejects_bad_schedule(capsys, fixtures_dir):
    status, _, err = _run(capsys, "db-curve", "--joint", fixtures_dir / "bsc_0_1.json", "--schedule", "seq:0")
    assert status == EXIT_INVALID
    assert "--schedule" in err


def test_estimate_report(capsys, fixtures_dir):
    status, out, _ = _run(
        capsys, "estimate",
        "--data", fixtures_dir / "toy_samples.json",
        "--encoder", fixtures_dir / "toy_encoder.json",
        "--decoder", fixtures_dir / "toy_decoder.json",
        "--m-grid", "1,3", "--batches", "20", "--batch", "10", "--reference", "marginal", "--json",
    )
    assert status == EXIT_OK
    rows = json.loads(out)["rows"]
    assert [r["m_samples"] for r in rows] == [1, 3]
    assert rows[0]["jensen_gap"] == 0.0


def test_record_and_list_runs(capsys, fixtures_dir, tmp_path):
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    status, _, _ = _run(
        capsys, "ib-curve", "--joint", fixtures_dir / "bsc_0_1.json", "--beta-grid", "0.5,2",
        "--restarts", "1", "--record", "--archive", url,
    )
    assert status == EXIT_OK
    status, out, _ = _run(capsys, "runs", "--archive", url)
    assert status == EXIT_OK
    assert "ib-curve" in out

    from data_manager import RunArchive

    archive = RunArchive(url)
    run = archive.list_runs()[0]
    assert run["n_curve_points"] == 2
    assert {p["kind"] for p in archive.curve_points(run["id"])} == {"ib"}


def test_parse_beta_grid():
    assert parse_beta_grid("0.1, 0.2") == [0.1, 0.2]
    assert parse_beta_grid("log:0.01:1:3") == pytest.approx([0.01, 0.1, 1.0])


def test_channel_is_never_deficient_against_itself(capsys, fixtures_dir):
    status, out, _ = _run(
        capsys, "deficiency",
        "--pi", fixtures_dir / "toy_prior.json",
        "--kappa", fixtures_dir / "toy_kappa.json",
        "--d", fixtures_dir / "toy_kappa.json",
        "--json",
    )
    assert status == EXIT_OK
    assert json.loads(out)["deficiency_bits"] == pytest.approx(0.0, abs=1e-6)


def test_ib_curve_rates_are_sorted(capsys, fixtures_dir):
    status, out, _ = _run(
        capsys, "ib-curve", "--joint", fixtures_dir / "bsc_0_1.json",
        "--beta-grid", "log:0.05:1.5:6", "--restarts", "1", "--csv",
    )
    assert status == EXIT_OK
    frame = pd.read_csv(io.StringIO(out))
    assert frame["rate_bits"].is_monotonic_increasing


def test_pid_deficiency_kind_forwards_projection_settings(capsys, fixtures_dir, monkeypatch):
    import cli

    seen = {}
    original = cli.deficiency_decomposition

    def recording(P, tol=None, max_iter=None):
        seen.update(tol=tol, max_iter=max_iter)
        return original(P, tol=tol, max_iter=max_iter)

    monkeypatch.setattr(cli, "deficiency_decomposition", recording)
    status, out, _ = _run(
        capsys, "pid", fixtures_dir / "erasure_chain.json", "--kind", "deficiency",
        "--projection-tol", "1e-10", "--projection-max-iter", "777", "--json",
    )
    assert status == EXIT_OK
    assert seen == {"tol": 1e-10, "max_iter": 777}
    assert json.loads(out)["deficiency_induced"]["si"] == pytest.approx(2 / 3, abs=1e-6)


def test_ib_curve_matches_expected_bsc_curve(capsys, fixtures_dir):
    with open(fixtures_dir / "expected" / "bsc_0_1_ib_curve.json") as f:
        expected = json.load(f)
    status, out, _ = _run(
        capsys, "ib-curve", "--joint", fixtures_dir / expected["fixture"],
        "--beta-grid", expected["beta_grid"], "--json",
    )
    assert status == EXIT_OK
    points = json.loads(out)["points"]
    assert len(points) == len(expected["points"])
    for got, want in zip(points, expected["points"]):
        assert got["beta"] == want["beta"]
        for key in ("rate", "sufficiency", "objective"):
            assert got[key] == pytest.approx(want[key], abs=expected["tolerance"])
