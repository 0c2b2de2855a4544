import csv
import json
import os

import pytest

from qddlab.cli import (AGGREGATES_HEADER, FITS_HEADER, INTERMEDIATE_HEADER,
                        SAMPLES_HEADER, main)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def write_aggregates(path, slopes_by_mu, cells=((1, 1),), digits=40,
                     grid=range(-9, 3)):
    rows = [AGGREGATES_HEADER]
    for (n1, n2) in cells:
        for ljt in grid:
            for mu, slope in slopes_by_mu.items():
                mean = 10.0 ** (slope * ljt)
                rows.append([n1, n2, ljt, "nuclear", mu, f"{mean:.17e}",
                             "0", f"{slope * ljt:.17e}", "0", 3, digits])
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


SWEEP_FLAGS = ["--jtau-log-min", "-3", "--jtau-log-max", "-3",
               "--realizations", "1", "--seed", "1", "--threads", "1"]


class TestSweep:
    def test_single_sample_run(self, tmp_path):
        out = tmp_path / "run"
        rc = main(["sweep", "--seq", "QDD(1,1)", *SWEEP_FLAGS, "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "samples.csv")
        assert rows[0] == SAMPLES_HEADER
        assert len(rows) == 2
        assert rows[1][:4] == ["1", "1", "-3", "0"]
        agg = read_csv(out / "aggregates.csv")
        assert agg[0] == AGGREGATES_HEADER
        assert len(agg) == 1 + 4
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["tool"] == "qddlab"
        assert manifest["realization_seeds"]["0"] > 0
        assert manifest["digits_used"] == manifest["digits_per_cell"]["1,1"]

    def test_deterministic_across_runs_and_threads(self, tmp_path):
        flags = ["--seq", "QDD(1,1)", "--jtau-log-min", "-3", "--jtau-log-max",
                 "-2", "--realizations", "2", "--seed", "3", "--digits", "25"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["sweep", *flags, "--threads", "1", "--out", str(a)]) == 0
        assert main(["sweep", *flags, "--threads", "2", "--out", str(b)]) == 0
        for name in ("samples.csv", "aggregates.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_free_and_udd_sequences(self, tmp_path):
        rc = main(["sweep", "--seq", "FREE", *SWEEP_FLAGS,
                   "--out", str(tmp_path / "free")])
        assert rc == 0
        rows = read_csv(tmp_path / "free" / "samples.csv")
        assert rows[1][:2] == ["0", "0"]
        rc = main(["sweep", "--seq", "UDD(Z,2)", *SWEEP_FLAGS,
                   "--out", str(tmp_path / "udd")])
        assert rc == 0
        rows = read_csv(tmp_path / "udd" / "samples.csv")
        assert rows[1][:2] == ["2", "0"]

    def test_norm_both_doubles_rows(self, tmp_path):
        out = tmp_path / "both"
        rc = main(["sweep", "--seq", "QDD(1,1)", *SWEEP_FLAGS, "--norm", "both",
                   "--out", str(out)])
        assert rc == 0
        assert len(read_csv(out / "samples.csv")) == 3

    def test_n1_n2_grid_expansion(self, tmp_path):
        out = tmp_path / "grid"
        rc = main(["sweep", "--n1", "1,2", "--n2", "1", *SWEEP_FLAGS,
                   "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "samples.csv")
        assert [r[:2] for r in rows[1:]] == [["1", "1"], ["2", "1"]]

    def test_usage_error_exit_2(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["sweep", "--seq", "QDD(0,1)", "--out", str(tmp_path / "x")])
        assert err.value.code == 2


class TestPredict:
    def test_reference_row(self, capsys):
        assert main(["predict", "--n1", "1", "--n2", "6"]) == 0
        assert capsys.readouterr().out.strip() == "n_x=2 n_y=2 n_z=4 n_D=2"

    def test_another_row(self, capsys):
        assert main(["predict", "--n1", "3", "--n2", "9"]) == 0
        assert "n_z=8" in capsys.readouterr().out


class TestFit:
    def test_synthetic_cubic(self, tmp_path, capsys):
        agg = tmp_path / "aggregates.csv"
        write_aggregates(agg, {"x": 3, "y": 3, "z": 3, "D": 3})
        out = tmp_path / "fits.csv"
        assert main(["fit", "--aggregates", str(agg), "--out", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == FITS_HEADER
        for row in rows[1:]:
            assert row[FITS_HEADER.index("n_hat")] == "3"

    def test_window_override(self, tmp_path):
        agg = tmp_path / "aggregates.csv"
        write_aggregates(agg, {"x": 2, "y": 2, "z": 2, "D": 2})
        out = tmp_path / "fits.csv"
        assert main(["fit", "--aggregates", str(agg), "--out", str(out),
                     "--window-lo", "-9", "--window-hi", "-5"]) == 0
        rows = read_csv(out)
        assert all(r[FITS_HEADER.index("n_points")] == "5" for r in rows[1:])

    def test_missing_columns_usage_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(SystemExit) as err:
            main(["fit", "--aggregates", str(bad)])
        assert err.value.code == 2


class TestCompare:
    def test_all_match_exit_0(self, tmp_path):
        agg = tmp_path / "aggregates.csv"
        write_aggregates(agg, {"x": 2, "y": 3, "z": 2, "D": 2})
        out = tmp_path / "report.txt"
        rc = main(["compare", "--aggregates", str(agg), "--out", str(out)])
        assert rc == 0
        assert "mismatches: 0" in out.read_text()

    def test_mismatch_exit_3(self, tmp_path):
        agg = tmp_path / "aggregates.csv"
        write_aggregates(agg, {"x": 1, "y": 3, "z": 2, "D": 2})
        out = tmp_path / "report.txt"
        rc = main(["compare", "--aggregates", str(agg), "--out", str(out)])
        assert rc == 3
        assert "MISMATCH" in out.read_text()


class TestIntermediate:
    def test_row_count_even_outer(self, tmp_path):
        out = tmp_path / "inter"
        rc = main(["intermediate", "--seq", "QDD(2,4)", "--jtau-log", "-2",
                   "--realizations", "1", "--seed", "2", "--threads", "1",
                   "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "intermediate.csv")
        assert rows[0] == INTERMEDIATE_HEADER
        assert len(rows) == 1 + 5 * 3       # checkpoints 1..5, three axes
        js = {int(r[INTERMEDIATE_HEADER.index("j")]) for r in rows[1:]}
        assert js == {1, 2, 3, 4, 5}

    def test_includes_final_pulse_point_odd_outer(self, tmp_path):
        out = tmp_path / "inter3"
        rc = main(["intermediate", "--seq", "QDD(1,3)", "--jtau-log", "-2",
                   "--realizations", "1", "--seed", "2", "--threads", "1",
                   "--digits", "30", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "intermediate.csv")
        js = {int(r[INTERMEDIATE_HEADER.index("j")]) for r in rows[1:]}
        assert js == {1, 2, 3, 4, 5}        # j = 5 is the final-pulse point

    def test_depth_one_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["intermediate", "--seq", "UDD(Z,2)", "--jtau-log", "-2",
                  "--out", str(tmp_path / "x")])
        assert err.value.code == 2


class TestPlot:
    def test_aggregates_panels(self, tmp_path):
        agg = tmp_path / "aggregates.csv"
        write_aggregates(agg, {"x": 2, "y": 3, "z": 2, "D": 2},
                         cells=((1, 1), (2, 1)))
        out = tmp_path / "plots"
        assert main(["plot", "--aggregates", str(agg), "--out", str(out)]) == 0
        names = sorted(os.listdir(out))
        assert names == ["errors_n1=1_n2=1.svg", "errors_n1=2_n2=1.svg"]
        body = (out / names[0]).read_text()
        assert body.startswith("<?xml")

    def test_empty_aggregates_error(self, tmp_path):
        agg = tmp_path / "aggregates.csv"
        agg.write_text(",".join(AGGREGATES_HEADER) + "\n")
        with pytest.raises(SystemExit) as err:
            main(["plot", "--aggregates", str(agg), "--out", str(tmp_path / "p")])
        assert err.value.code == 2

    def test_intermediate_plot(self, tmp_path):
        inter = tmp_path / "intermediate.csv"
        rows = [INTERMEDIATE_HEADER]
        for j in range(1, 6):
            for mu in "xyz":
                rows.append([2, 4, -2, j, mu, "nuclear",
                             f"{10.0 ** -j:.6e}", "0", 1, 40])
        with open(inter, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        out = tmp_path / "plots"
        assert main(["plot", "--intermediate", str(inter), "--out", str(out)]) == 0
        assert len(os.listdir(out)) == 1


def test_precision_failure_exit_4(tmp_path, monkeypatch):
    from qddlab import cli
    from qddlab.errors import PrecisionExhausted

    def boom(config, threads=1, on_progress=None):
        raise PrecisionExhausted("forced for the exit-code contract")

    monkeypatch.setattr(cli, "run_sweep", boom)
    rc = main(["sweep", "--seq", "QDD(1,1)", *SWEEP_FLAGS,
               "--out", str(tmp_path / "x")])
    assert rc == 4


def test_outputs_identical_across_kernel_backends(tmp_path):
    """Pure and compiled kernels perform the same scalar operations in the
    same order, so sweep CSVs must agree byte for byte."""
    import subprocess
    import sys

    flags = ["-m", "qddlab.cli", "sweep", "--seq", "QDD(1,2)", "--jtau-log-min",
             "-2", "--jtau-log-max", "-2", "--realizations", "1", "--seed", "9",
             "--digits", "30", "--threads", "1"]
    outs = {}
    for label, value in (("compiled", "0"), ("pure", "1")):
        out = tmp_path / label
        env = dict(os.environ, QDDLAB_PURE_PYTHON=value)
        proc = subprocess.run([sys.executable, *flags, "--out", str(out)],
                              env=env, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs[label] = (out / "samples.csv").read_bytes()
    assert outs["compiled"] == outs["pure"]


def test_monotone_series_on_fitted_window(tmp_path):
    """Synthetic power-law panels are monotone within the fitted window."""
    agg = tmp_path / "aggregates.csv"
    write_aggregates(agg, {"x": 2, "y": 3, "z": 4, "D": 2})
    from qddlab.cli import _read_aggregates
    from qddlab.scaling import fit_exponent
    series, digits = _read_aggregates(str(agg))
    for key, pts in series.items():
        pts = sorted(pts)
        fit = fit_exponent(pts, log_floor=2.0 - digits)
        inside = [y for x, y in pts if fit.window[0] <= x <= fit.window[1]]
        assert all(a <= b + 1e-12 for a, b in zip(inside, inside[1:]))
