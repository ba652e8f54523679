"""End-to-end command line tests: outputs, determinism, exit codes."""

import csv
import json

import numpy as np
import pytest

from spinbath.cli import main
from spinbath.diagnostics import RateReport


def write_cfg(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def run_cli(tmp_path, doc, command, *argv, name="scenario.json", outname=None):
    cfg = write_cfg(tmp_path, doc, name=name)
    out = tmp_path / (outname or (name + ".out"))
    code = main([command, "--config", str(cfg), "--out", str(out), *argv])
    text = out.read_text(encoding="utf-8") if out.exists() else ""
    return code, text


def parse_csv(text):
    comments = {}
    header = None
    rows = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            comments[key] = val
        else:
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
            else:
                rows.append(dict(zip(header, cells)))
    return comments, header, rows


def z_pair_doc(**extra):
    doc = {
        "model": {
            "kind": "independent",
            "axes": ["z"],
            "gamma1": {"zz": 1.0},
            "gamma2": {"zz": 1.0},
        },
        "ensembles": {"j1": 1, "j2": 1},
        "state": {"kind": "uniform"},
    }
    doc.update(extra)
    return doc


def dephasing_doc(**extra):
    doc = {
        "model": {"kind": "independent", "axes": ["z"], "gamma1": {"zz": 1.0}},
        "ensembles": {"j1": 0.5},
        "state": {"kind": "plus_x"},
    }
    doc.update(extra)
    return doc


class TestRateCommand:
    def test_uniform_pair_values(self, tmp_path):
        code, text = run_cli(tmp_path, z_pair_doc(), "rate")
        assert code == 0
        comments, header, rows = parse_csv(text)
        assert header[:6] == [
            "state",
            "normalization",
            "rate_numeric",
            "rate_analytic",
            "rate_estimate",
            "rate_closed_form",
        ]
        row = rows[0]
        assert row["state"] == "uniform(Ntilde=1)"
        assert row["normalization"] == "composite"
        assert float(row["rate_analytic"]) == pytest.approx(8 / 3, rel=1e-12)
        assert float(row["rate_numeric"]) == pytest.approx(8 / 3, rel=1e-10)
        assert float(row["rate_estimate"]) == pytest.approx(4 / 3, rel=1e-12)
        assert row["rate_closed_form"] == ""
        assert float(row["contrib_zz"]) == pytest.approx(8 / 3, rel=1e-12)

    def test_provenance_header(self, tmp_path):
        code, text = run_cli(tmp_path, z_pair_doc(), "rate", "--seed", "7")
        assert code == 0
        comments, _, _ = parse_csv(text)
        assert comments["tool"].startswith("spinbath ")
        assert comments["command"] == "rate"
        assert len(comments["config_sha256"]) == 64
        assert comments["seed"] == "7"
        assert set(comments) == {"tool", "command", "config_sha256", "seed"}

    def test_seed_defaults_to_none(self, tmp_path):
        _, text = run_cli(tmp_path, z_pair_doc(), "rate")
        comments, _, _ = parse_csv(text)
        assert comments["seed"] == "none"

    def test_reruns_byte_identical(self, tmp_path):
        _, first = run_cli(tmp_path, z_pair_doc(), "rate", outname="a.csv")
        _, second = run_cli(tmp_path, z_pair_doc(), "rate", outname="b.csv")
        assert first == second
        assert first.encode() == second.encode()

    def test_json_format(self, tmp_path):
        code, text = run_cli(tmp_path, z_pair_doc(), "rate", "--format", "json")
        assert code == 0
        doc = json.loads(text)
        assert doc["command"] == "rate"
        assert len(doc["config_sha256"]) == 64
        idx = doc["columns"].index("rate_analytic")
        assert doc["rows"][0][idx] == pytest.approx(8 / 3, rel=1e-12)

    def test_config_output_block_used(self, tmp_path):
        target = tmp_path / "fromconfig.csv"
        doc = z_pair_doc(output={"path": str(target), "format": "csv"})
        cfg = write_cfg(tmp_path, doc)
        assert main(["rate", "--config", str(cfg)]) == 0
        assert target.exists()

    def test_stdout_default(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, z_pair_doc())
        assert main(["rate", "--config", str(cfg)]) == 0
        text = capsys.readouterr().out
        assert "rate_analytic" in text

    def test_coupled_state_reports_closed_form(self, tmp_path):
        doc = {
            "model": {
                "kind": "common",
                "axes": ["x", "z"],
                "gamma": {"xx": 0.1, "zz": 1.0},
                "lambda": 1.0,
            },
            "ensembles": {"j1": 1, "j2": 1},
            "state": {"kind": "coupled", "L": 1},
        }
        code, text = run_cli(tmp_path, doc, "rate")
        assert code == 0
        _, _, rows = parse_csv(text)
        row = rows[0]
        assert row["normalization"] == "total_spin"
        assert float(row["rate_closed_form"]) == pytest.approx(0.2, rel=1e-12)
        assert float(row["rate_analytic"]) == pytest.approx(0.2, rel=1e-9)


class TestExitCodes:
    def test_missing_config_file(self, tmp_path):
        assert main(["rate", "--config", str(tmp_path / "nope.json")]) == 2

    def test_lambda_out_of_range(self, tmp_path):
        doc = {
            "model": {"kind": "common", "axes": ["z"], "gamma": {"zz": 1.0}, "lambda": 2.5},
            "ensembles": {"j1": 1, "j2": 1},
            "state": {"kind": "uniform"},
        }
        code, _ = run_cli(tmp_path, doc, "rate")
        assert code == 2

    def test_indefinite_damping_matrix(self, tmp_path):
        doc = z_pair_doc()
        doc["model"] = {
            "kind": "independent",
            "axes": ["x", "z"],
            "gamma1": {"xx": 0.1, "zz": 1.0, "xz": 0.5},
        }
        doc["ensembles"] = {"j1": 1}
        doc["state"] = {"kind": "plus_x"}
        code, _ = run_cli(tmp_path, doc, "rate")
        assert code == 2

    def test_unknown_sweep_parameter(self, tmp_path):
        code, _ = run_cli(
            tmp_path, z_pair_doc(sweep={"parameter": "coupling", "values": [1]}), "sweep"
        )
        assert code == 2

    def test_sweep_without_block(self, tmp_path):
        code, _ = run_cli(tmp_path, z_pair_doc(), "sweep")
        assert code == 2

    def test_simulate_without_evolution(self, tmp_path):
        code, _ = run_cli(tmp_path, z_pair_doc(), "simulate")
        assert code == 2

    def test_dfs_without_block(self, tmp_path):
        code, _ = run_cli(tmp_path, z_pair_doc(), "dfs")
        assert code == 2

    def test_rate_without_state(self, tmp_path):
        doc = z_pair_doc()
        del doc["state"]
        code, _ = run_cli(tmp_path, doc, "rate")
        assert code == 2

    def test_snapshots_need_json(self, tmp_path):
        doc = dephasing_doc(evolution={"t_final": 0.1, "snapshots": True})
        code, _ = run_cli(tmp_path, doc, "simulate")
        assert code == 2

    def test_rate_self_check_tripwire(self, tmp_path, monkeypatch):
        monkeypatch.setattr(
            "spinbath.cli.entropy_rate_analytic",
            lambda *a, **k: RateReport(1.0, 2.0, {}),
        )
        code, _ = run_cli(tmp_path, z_pair_doc(), "rate")
        assert code == 3

    def test_integration_abort(self, tmp_path):
        doc = dephasing_doc(evolution={"t_final": 100.0, "step": 10.0})
        code, text = run_cli(tmp_path, doc, "simulate")
        assert code == 4
        assert text == ""

    def test_all_sweep_points_failed(self, tmp_path):
        doc = z_pair_doc(sweep={"parameter": "gamma1.zz", "values": [-1.0, -2.0]})
        code, text = run_cli(tmp_path, doc, "sweep")
        assert code == 5
        _, _, rows = parse_csv(text)
        assert all(r["error"] for r in rows)
        assert all(r["rate_analytic"] == "" for r in rows)


class TestSweepCommand:
    def test_ntilde_grid_rates(self, tmp_path):
        doc = z_pair_doc(sweep={"parameter": "Ntilde", "values": [1, 2, 3]})
        code, text = run_cli(tmp_path, doc, "sweep")
        assert code == 0
        _, header, rows = parse_csv(text)
        assert header[0] == "Ntilde"
        assert header[-1] == "error"
        for row, nt in zip(rows, (1.0, 2.0, 3.0)):
            assert float(row["Ntilde"]) == nt
            assert float(row["rate_analytic"]) == pytest.approx(4 * nt * (nt + 1) / 3, rel=1e-12)
            assert float(row["rate_estimate"]) == pytest.approx(4 * nt * nt / 3, rel=1e-12)
            assert row["error"] == ""

    def test_lambda_grid_symmetric_about_balance(self, tmp_path):
        doc = {
            "model": {"kind": "common", "axes": ["z"], "gamma": {"zz": 1.0}, "lambda": 1.0},
            "ensembles": {"j1": 2, "j2": 2},
            "state": {"kind": "uniform"},
            "sweep": {"parameter": "lambda", "values": [0.5, 1.0, 1.5]},
        }
        code, text = run_cli(tmp_path, doc, "sweep")
        assert code == 0
        _, _, rows = parse_csv(text)
        rates = [float(r["rate_analytic"]) for r in rows]
        assert rates[1] == pytest.approx(0.0, abs=1e-13)
        assert rates[0] == pytest.approx(rates[2], rel=1e-12)
        assert rates[0] == pytest.approx(2 * 0.25 * 2 * 3 / 3, rel=1e-12)
        assert rows[1]["rate_numeric"] != "-0"

    def test_coupled_level_grid_closed_forms(self, tmp_path):
        doc = {
            "model": {
                "kind": "common",
                "axes": ["x", "z"],
                "gamma": {"xx": 0.1, "zz": 1.0},
                "lambda": 1.0,
            },
            "ensembles": {"j1": 1, "j2": 1},
            "state": {"kind": "coupled", "L": 0},
            "sweep": {"parameter": "L", "values": [0, 1, 2]},
        }
        code, text = run_cli(tmp_path, doc, "sweep")
        assert code == 0
        _, _, rows = parse_csv(text)
        closed = [float(r["rate_closed_form"]) for r in rows]
        np.testing.assert_allclose(closed, [0.0, 0.2, 0.6], atol=1e-12)
        for row in rows:
            assert float(row["rate_analytic"]) == pytest.approx(
                float(row["rate_closed_form"]), abs=1e-9
            )

    def test_threads_do_not_change_bytes(self, tmp_path):
        doc = z_pair_doc(sweep={"parameter": "Ntilde", "values": [1, 1.5, 2, 2.5, 3]})
        _, serial = run_cli(tmp_path, doc, "sweep", "--threads", "1", outname="serial.csv")
        _, pooled = run_cli(tmp_path, doc, "sweep", "--threads", "4", outname="pooled.csv")
        assert serial == pooled

    def test_partial_failures_keep_grid_order(self, tmp_path):
        doc = z_pair_doc(sweep={"parameter": "gamma1.zz", "values": [1.0, -1.0, 2.0]})
        code, text = run_cli(tmp_path, doc, "sweep")
        assert code == 0
        _, _, rows = parse_csv(text)
        assert [r["gamma1.zz"] for r in rows] == ["1", "-1", "2"]
        assert rows[0]["error"] == "" and rows[2]["error"] == ""
        assert "NotPositiveSemidefinite" in rows[1]["error"]
        assert rows[1]["rate_numeric"] == ""
        assert float(rows[2]["rate_analytic"]) == pytest.approx(2 * 3 * 2 / 3, rel=1e-12)


class TestSimulateCommand:
    def test_dephasing_table(self, tmp_path):
        doc = dephasing_doc(evolution={"t_final": 1.0, "step": 0.001, "stride": 100})
        code, text = run_cli(tmp_path, doc, "simulate")
        assert code == 0
        comments, header, rows = parse_csv(text)
        assert header == ["t", "s_lin", "trace_dev", "min_eig", "fidelity"]
        assert comments["state"] == "plus_x"
        assert comments["accepted_steps"] == "1000"
        assert comments["rejected_steps"] == "0"
        assert float(rows[0]["t"]) == 0.0
        assert float(rows[-1]["t"]) == 1.0
        expect = 0.5 * (1.0 - np.exp(-1.0))
        assert float(rows[-1]["s_lin"]) == pytest.approx(expect, abs=1e-8)
        fidelities = [float(r["fidelity"]) for r in rows]
        assert all(a >= b - 1e-12 for a, b in zip(fidelities, fidelities[1:]))
        assert max(float(r["trace_dev"]) for r in rows) <= 1e-12
        assert min(float(r["min_eig"]) for r in rows) >= -1e-10

    def test_adaptive_mode_reports_step_counts(self, tmp_path):
        doc = dephasing_doc(evolution={"t_final": 2.0, "tol": 1e-10})
        code, text = run_cli(tmp_path, doc, "simulate")
        assert code == 0
        comments, _, rows = parse_csv(text)
        assert int(comments["accepted_steps"]) >= 1
        assert float(rows[-1]["t"]) == 2.0

    def test_snapshots_embedded_in_json(self, tmp_path):
        doc = dephasing_doc(evolution={"t_final": 0.1, "step": 0.05, "snapshots": True})
        code, text = run_cli(tmp_path, doc, "simulate", "--format", "json")
        assert code == 0
        out = json.loads(text)
        snaps = out["snapshots"]
        assert len(snaps) == len(out["rows"])
        first = snaps[0]
        assert first["t"] == 0.0
        re = np.array(first["re"])
        im = np.array(first["im"])
        assert re.shape == (2, 2)
        np.testing.assert_allclose(re + 1j * im, np.full((2, 2), 0.5), atol=1e-12)

    def test_zero_horizon_single_row(self, tmp_path):
        doc = dephasing_doc(evolution={"t_final": 0.0})
        code, text = run_cli(tmp_path, doc, "simulate")
        assert code == 0
        _, _, rows = parse_csv(text)
        assert len(rows) == 1
        assert float(rows[0]["s_lin"]) == pytest.approx(0.0, abs=1e-14)


class TestDfsCommand:
    def test_fock_basis_certified_for_pure_z(self, tmp_path):
        doc = z_pair_doc(dfs={"candidates": "fock_basis"})
        doc["ensembles"] = {"j1": 0.5, "j2": 0.5}
        code, text = run_cli(tmp_path, doc, "dfs")
        assert code == 0
        comments, _, rows = parse_csv(text)
        assert comments["certified"] == "true"
        assert len(rows) == 4
        for row in rows:
            assert row["certified"] == "true"
            assert float(row["residual"]) <= 1e-13

    def test_fock_basis_fails_as_subspace(self, tmp_path):
        doc = z_pair_doc(dfs={"candidates": "fock_basis", "subspace": True})
        doc["ensembles"] = {"j1": 0.5, "j2": 0.5}
        code, text = run_cli(tmp_path, doc, "dfs")
        assert code == 0
        comments, _, rows = parse_csv(text)
        assert comments["certified"] == "false"
        pair_rows = [r for r in rows if r["candidate"].startswith("pair(")]
        assert len(pair_rows) == 6
        assert any(r["certified"] == "false" for r in pair_rows)

    def test_transverse_damping_breaks_certification(self, tmp_path):
        doc = z_pair_doc(dfs={"candidates": "fock_basis"})
        doc["model"] = {
            "kind": "independent",
            "axes": ["x", "z"],
            "gamma1": {"xx": 0.5, "zz": 1.0},
            "gamma2": {"xx": 0.5, "zz": 1.0},
        }
        doc["ensembles"] = {"j1": 0.5, "j2": 0.5}
        code, text = run_cli(tmp_path, doc, "dfs")
        assert code == 0
        comments, _, _ = parse_csv(text)
        assert comments["certified"] == "false"

    def test_singlet_certified_under_balanced_common_bath(self, tmp_path):
        doc = {
            "model": {
                "kind": "common",
                "axes": ["x", "y", "z"],
                "gamma": {"xx": 1.0, "yy": 1.0, "zz": 1.0},
                "lambda": 1.0,
            },
            "ensembles": {"j1": 1, "j2": 1},
            "dfs": {"candidates": "singlet"},
        }
        code, text = run_cli(tmp_path, doc, "dfs")
        assert code == 0
        comments, _, rows = parse_csv(text)
        assert comments["certified"] == "true"
        assert rows[0]["candidate"] == "singlet(j=1)"

    def test_configured_state_candidate(self, tmp_path):
        doc = {
            "model": {"kind": "common", "axes": ["z"], "gamma": {"zz": 1.0}, "lambda": 1.0},
            "ensembles": {"j1": 1, "j2": 1},
            "state": {"kind": "uniform"},
            "dfs": {"candidates": "state"},
        }
        code, text = run_cli(tmp_path, doc, "dfs")
        assert code == 0
        comments, _, rows = parse_csv(text)
        assert comments["certified"] == "true"
        assert rows[0]["candidate"] == "uniform(Ntilde=1)"

    def test_singlet_candidate_needs_equal_ensembles(self, tmp_path):
        doc = z_pair_doc(dfs={"candidates": "singlet"})
        doc["ensembles"] = {"j1": 1, "j2": 2}
        code, _ = run_cli(tmp_path, doc, "dfs")
        assert code == 2


class TestStateCommand:
    def test_singlet_coefficients_and_extras(self, tmp_path):
        doc = z_pair_doc()
        doc["ensembles"] = {"j1": 0.5, "j2": 0.5}
        doc["state"] = {"kind": "singlet"}
        code, text = run_cli(tmp_path, doc, "state")
        assert code == 0
        comments, header, rows = parse_csv(text)
        assert header == ["m", "re", "im", "weight"]
        assert comments["state"] == "singlet(j=0.5)"
        assert comments["schmidt_number"] == "2"
        assert float(comments["entanglement_entropy"]) == pytest.approx(np.log(2), rel=1e-12)
        assert float(comments["pairing_residual"]) == 0.0
        assert float(comments["variance_x_approx"]) == 0.0
        assert float(comments["variance_x_exact"]) == pytest.approx(0.0, abs=1e-12)
        r = 1 / np.sqrt(2)
        assert float(rows[0]["m"]) == 0.5
        assert float(rows[0]["re"]) == pytest.approx(r, rel=1e-15)
        assert float(rows[1]["re"]) == pytest.approx(-r, rel=1e-15)

    def test_product_fock_schmidt_rows(self, tmp_path):
        doc = z_pair_doc()
        doc["state"] = {"kind": "fock", "m1": 1, "m2": -1}
        code, text = run_cli(tmp_path, doc, "state")
        assert code == 0
        comments, header, rows = parse_csv(text)
        assert header == ["k", "schmidt_value"]
        assert comments["schmidt_number"] == "1"
        values = sorted(float(r["schmidt_value"]) for r in rows)
        assert values[-1] == pytest.approx(1.0, abs=1e-12)
        assert max(values[:-1]) <= 1e-12

    def test_single_ensemble_amplitudes(self, tmp_path):
        doc = {
            "model": {"kind": "independent", "axes": ["z"], "gamma1": {"zz": 1.0}},
            "ensembles": {"j1": 0.5},
            "state": {"kind": "plus_x"},
        }
        code, text = run_cli(tmp_path, doc, "state")
        assert code == 0
        comments, header, rows = parse_csv(text)
        assert header == ["m", "re", "im", "weight"]
        assert "schmidt_number" not in comments
        for row in rows:
            assert float(row["weight"]) == pytest.approx(0.5, rel=1e-12)

    def test_gaussian_label_and_weights(self, tmp_path):
        doc = z_pair_doc()
        doc["ensembles"] = {"j1": 2, "j2": 2}
        doc["state"] = {"kind": "gaussian", "width": 2.0}
        code, text = run_cli(tmp_path, doc, "state")
        assert code == 0
        comments, _, rows = parse_csv(text)
        assert comments["state"] == "gaussian(width=2;Ntilde=2)"
        total = sum(float(r["weight"]) for r in rows)
        assert total == pytest.approx(1.0, rel=1e-12)


class TestArgumentParsing:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert capsys.readouterr().out.startswith("spinbath ")

    def test_command_required(self):
        with pytest.raises(SystemExit):
            main([])

    def test_format_choices_enforced(self, tmp_path):
        cfg = write_cfg(tmp_path, z_pair_doc())
        with pytest.raises(SystemExit):
            main(["rate", "--config", str(cfg), "--format", "yaml"])
