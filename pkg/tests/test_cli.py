"""Command-line interface: config handling, outputs, determinism, exit codes."""
import json

import numpy as np
import pytest

from rotoredge import band_structure
from rotoredge.cli import main


def read_table(path):
    lines = path.read_text().splitlines()
    header = lines[0].split("\t")
    rows = [line.split("\t") for line in lines[1:]]
    return header, rows


class TestStatesScenario:
    def test_two_edge_rows_and_format(self, tmp_path):
        out = tmp_path / "states"
        rc = main(
            [
                "states", "--P", "3", "--tau", "1/3", "--J-max", "384",
                "--out", str(out),
            ]
        )
        assert rc == 0
        header, rows = read_table(out / "quasienergies.tsv")
        assert header == ["P", "omega", "class"]
        assert sum(1 for r in rows if r[2] == "edge") == 2
        omegas = [float(r[1]) for r in rows]
        assert omegas == sorted(omegas)
        header, rows = read_table(out / "edge_profiles.tsv")
        assert header == ["state", "omega", "J", "population"]
        for state in ("0", "1"):
            total = sum(float(r[3]) for r in rows if r[0] == state)
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_manifest_written(self, tmp_path):
        out = tmp_path / "m"
        main(["states", "--P", "1", "--tau", "1/3", "--J-max", "128",
              "--out", str(out)])
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["tool"] == "rotoredge"
        assert doc["config"]["train.P"] == 1.0
        assert doc["config"]["scenario"] == "states"
        assert "wall_time_s" in doc


class TestSpectrumScanScenario:
    def test_three_bands_at_P1(self, tmp_path):
        out = tmp_path / "scan"
        rc = main(
            [
                "spectrum-scan", "--P-start", "0.9", "--P-stop", "1.0",
                "--P-step", "0.1", "--tau", "1/3", "--J-max", "256",
                "--out", str(out),
            ]
        )
        assert rc == 0
        _h, rows = read_table(out / "quasienergies.tsv")
        ext = np.sort(
            [float(r[1]) for r in rows if abs(float(r[0]) - 1.0) < 1e-9
             and r[2] == "extended"]
        )
        bands = sorted(band_structure(ext, gap=0.1), key=lambda b: -b[2])
        assert len(bands) == 3
        assert sum(n for _lo, _hi, n in bands[:3]) > 0.9 * len(ext)
        header, hist = read_table(out / "histogram.tsv")
        assert header == ["P", "omega", "count"]

    def test_empty_grid_is_config_error(self, tmp_path, capsys):
        out = tmp_path / "never"
        rc = main(
            [
                "spectrum-scan", "--P-start", "1", "--P-stop", "1",
                "--P-step", "0.5", "--out", str(out),
            ]
        )
        assert rc == 2
        assert not out.exists()  # no files written on config errors
        assert "P_st" in capsys.readouterr().err


class TestDynamicsScenario:
    def test_population_heatmap_and_energy(self, tmp_path):
        out = tmp_path / "dyn"
        rc = main(
            [
                "dynamics", "--P", "3", "--tau", "1/3", "--N", "4",
                "--J-max", "128", "--initial-J", "0", "--out", str(out),
            ]
        )
        assert rc == 0
        header, rows = read_table(out / "populations.tsv")
        assert header == ["pulse_index", "J", "population"]
        assert len(rows) == 5 * 129
        first = {(r[0], r[1]): float(r[2]) for r in rows}
        assert first[("0", "0")] == 1.0
        header, erows = read_table(out / "energy.tsv")
        assert header == ["pulse_index", "energy"]
        assert len(erows) == 5
        assert float(erows[0][1]) == 0.0

    def test_truncation_aborts_with_exit_3(self, tmp_path, capsys):
        out = tmp_path / "abort"
        rc = main(
            [
                "dynamics", "--P", "10", "--tau", "1/3", "--N", "20",
                "--J-max", "64", "--initial-J", "0", "--out", str(out),
            ]
        )
        assert rc == 3
        assert "truncation" in capsys.readouterr().err


class TestOverlapScanScenario:
    def test_overlap_curve(self, tmp_path):
        out = tmp_path / "ov"
        rc = main(
            [
                "overlap-scan", "--P-start", "1", "--P-stop", "3",
                "--P-step", "1", "--tau", "1/3", "--J-max", "256",
                "--initial-J", "0", "--out", str(out),
            ]
        )
        assert rc == 0
        header, rows = read_table(out / "overlap.tsv")
        assert header == ["P", "overlap"]
        assert [float(r[0]) for r in rows] == [1.0, 2.0, 3.0]
        assert all(0.0 <= float(r[1]) <= 1.0 for r in rows)


class TestAlignmentFTScenario:
    def test_reduced_unit_output(self, tmp_path):
        out = tmp_path / "aft"
        rc = main(
            [
                "alignment-ft", "--P", "3", "--tau", "1/3", "--N", "2",
                "--J-max", "64", "--window", "12.0", "--samples", "1024",
                "--broadening", "0.5", "--out", str(out),
            ]
        )
        assert rc == 0
        header, rows = read_table(out / "trace.tsv")
        assert header == ["time", "alignment"]
        assert len(rows) == 1024
        header, rows = read_table(out / "spectrum.tsv")
        assert header == ["frequency", "magnitude"]

    def test_wavenumber_axis_with_bridge(self, tmp_path):
        out = tmp_path / "aftw"
        rc = main(
            [
                "alignment-ft", "--P", "3", "--tau", "1/3", "--N", "1",
                "--J-max", "64", "--window", "12.0", "--samples", "1024",
                "--broadening", "0.5", "--B", "0.1142", "--out", str(out),
            ]
        )
        assert rc == 0
        header, _rows = read_table(out / "spectrum.tsv")
        assert header == ["wavenumber", "magnitude"]

    def test_broadening_required(self, tmp_path, capsys):
        rc = main(["alignment-ft", "--P", "3", "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "sampling.broadening" in capsys.readouterr().err


class TestPlanarRefScenario:
    def test_sorted_spectrum(self, tmp_path):
        out = tmp_path / "pl"
        rc = main(
            ["planar-ref", "--P", "3", "--tau", "1/2", "--grid-size", "64",
             "--out", str(out)]
        )
        assert rc == 0
        _h, rows = read_table(out / "quasienergies.tsv")
        assert len(rows) == 129
        omegas = [float(r[1]) for r in rows]
        assert omegas == sorted(omegas)


class TestConfigHandling:
    def test_toml_config_with_cli_override(self, tmp_path):
        cfgfile = tmp_path / "run.toml"
        cfgfile.write_text(
            "[train]\nP = 2.0\ntau = '1/3'\n[basis]\nJ_max = 128\n"
        )
        out = tmp_path / "o"
        rc = main(
            ["states", "--config", str(cfgfile), "--P", "1.5", "--out", str(out)]
        )
        assert rc == 0
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["config"]["train.P"] == 1.5  # CLI wins over file
        assert doc["config"]["basis.J_max"] == 128  # file wins over default

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["states", "--P", "1", "--config", str(tmp_path / "no.toml")])
        assert rc == 2

    def test_missing_required_key_names_it(self, capsys):
        rc = main(["states"])
        assert rc == 2
        assert "train.P" in capsys.readouterr().err

    def test_bad_parity_names_key(self, capsys):
        rc = main(["states", "--P", "1", "--parity", "mixed"])
        assert rc == 2
        assert "basis.parity" in capsys.readouterr().err

    def test_bad_tau_names_key(self, capsys):
        rc = main(["states", "--P", "1", "--tau", "one-third"])
        assert rc == 2
        assert "train.tau" in capsys.readouterr().err

    def test_epsilon_and_bridge_exclusive(self, capsys):
        rc = main(
            ["states", "--P", "1", "--epsilon", "1e-7", "--B", "0.1142"]
        )
        assert rc == 2
        assert "mutually exclusive" in capsys.readouterr().err


class TestDeterminism:
    def test_identical_configs_rerun_byte_identical(self, tmp_path):
        args = ["states", "--P", "2", "--tau", "1/3", "--J-max", "128"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        for name in ("quasienergies.tsv", "edge_profiles.tsv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_changing_a_key_changes_the_manifest(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["states", "--P", "2", "--J-max", "128", "--out", str(out1)])
        main(["states", "--P", "2", "--J-max", "130", "--out", str(out2)])
        c1 = json.loads((out1 / "manifest.json").read_text())["config"]
        c2 = json.loads((out2 / "manifest.json").read_text())["config"]
        assert c1 != c2
