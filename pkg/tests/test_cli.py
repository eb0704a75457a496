import csv
import io
import json

import numpy as np
import pytest

from cvlimits import cli
from cvlimits.channels import ChannelSpec, TaskSpec, average_fidelity_closed
from cvlimits.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestBounds:
    def test_amplification_json(self, capsys):
        code, out, _ = run(capsys, "--format", "json", "bounds", "--amp", "--eta", "4", "--lambda", "0.2")
        d = json.loads(out)
        assert code == 0
        assert d["value"] == pytest.approx(0.3)
        assert d["attained_by"] == "amplifier" and d["param"] == pytest.approx(2.777778, abs=1e-6)
        assert d["attainability"] == "proven_tight"

    def test_conjugation_flat_prior(self, capsys):
        code, out, _ = run(capsys, "bounds", "--conj", "--n", "1", "--lambda", "0", "--format", "json")
        d = json.loads(out)
        assert code == 0 and d["value"] == 0.5
        assert d["attained_by"] == "mp_conjugator" and d["param"] == 1.0

    def test_saturated_branch_table(self, capsys):
        code, out, _ = run(capsys, "bounds", "--amp", "--eta", "1.1", "--lambda", "0.3")
        assert code == 0
        lines = dict(line.split(None, 1) for line in out.strip().splitlines())
        assert lines["value"] == "1" and lines["branch"] == "saturated_at_one"

    def test_attenuation(self, capsys):
        code, out, _ = run(capsys, "bounds", "--atten", "--n", "4", "--eta", "1", "--lambda", "0.3",
                           "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and rows[0]["attained_by"] == "attenuator" and float(rows[0]["param"]) == 0.25

    @pytest.mark.parametrize(
        "argv",
        [
            ["bounds", "--amp", "--eta", "-1", "--lambda", "0.2"],
            ["bounds", "--atten", "--n", "1", "--eta", "2", "--lambda", "0.2"],
        ],
    )
    def test_invalid_parameters_exit_2(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 2 and "cvlimits bounds:" in err

    def test_argparse_usage_exit_2(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["bounds", "--eta", "4"])
        assert info.value.code == 2


class TestSweep:
    def test_amplifier_at_optimum_meets_bound_where_tight(self, capsys):
        code, out, _ = run(capsys, "sweep", "--channels", "amp-opt", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 21 * 21
        assert list(rows[0]) == cli.SWEEP_COLUMNS
        tight = 0
        for r in rows:
            eta, lam = float(r["eta"]), float(r["lambda"])
            assert float(r["f_closed"]) <= float(r["bound"]) + 1e-9
            assert float(r["f_quadrature"]) == pytest.approx(float(r["f_closed"]), abs=1e-8)
            if eta >= (1 + lam) ** 2:
                tight += 1
                assert abs(float(r["gap"])) <= 1e-9
        assert tight > 100

    def test_conjugation_mp_equals_bound(self, capsys):
        code, out, _ = run(capsys, "sweep", "--task", "conj", "--n-grid", "1,2,4", "--channels", "mp-opt")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 3 * 21
        for r in rows:
            assert float(r["f_closed"]) == pytest.approx(float(r["bound"]), abs=1e-12)

    def test_empty_channel_list_gives_header_only(self, capsys):
        code, out, _ = run(capsys, "sweep", "--channels", "")
        assert code == 0 and out == ",".join(cli.SWEEP_COLUMNS) + "\n"

    def test_json_schema(self, capsys):
        code, out, _ = run(capsys, "--format", "json", "sweep", "--eta-grid", "2,4",
                           "--lambda-grid", "0.2", "--channels", "amp-opt,identity")
        d = json.loads(out)
        assert d["schema"] == cli.SWEEP_SCHEMA and d["columns"] == cli.SWEEP_COLUMNS
        assert len(d["rows"]) == 4 and all(len(r) == len(cli.SWEEP_COLUMNS) for r in d["rows"])

    def test_floats_round_trip(self, capsys):
        _, out, _ = run(capsys, "sweep", "--eta-grid", "3", "--lambda-grid", "0.1", "--channels", "amplifier:1.7")
        row = next(csv.DictReader(io.StringIO(out)))
        assert float(row["f_closed"]) == average_fidelity_closed(ChannelSpec.amplifier(1.7), TaskSpec(1, 3, 0.1))

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_byte_identical_and_worker_independent(self, tmp_path, fmt):
        paths = []
        for i, workers in enumerate((1, 1, 4)):
            p = tmp_path / f"out{i}.{fmt}"
            argv = ["--format", fmt, "--out", str(p), "--workers", str(workers), "sweep",
                    "--eta-grid", "1:6:6", "--lambda-grid", "0.05:1:5"]
            assert main(argv) == 0
            paths.append(p.read_bytes())
        assert paths[0] == paths[1] == paths[2]

    def test_bad_grid_and_channel(self, capsys):
        assert run(capsys, "sweep", "--eta-grid", "a:b")[0] == 2
        assert run(capsys, "sweep", "--channels", "teleporter")[0] == 2

    def test_unwritable_output(self, capsys, tmp_path):
        code, _, err = run(capsys, "--out", str(tmp_path / "missing" / "x.csv"), "sweep", "--channels", "")
        assert code == 2


class TestVerify:
    def test_fast_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--level", "fast")
        assert code == 0 and out.strip().endswith("all checks passed")
        assert all(line.startswith("PASS") for line in out.strip().splitlines()[:-1])

    def test_injected_fault_names_norm_check(self, capsys):
        code, out, _ = run(capsys, "--format", "json", "verify", "--inject-fault")
        d = json.loads(out)
        assert code == 1 and not d["passed"]
        failed = [c["name"] for c in d["checks"] if not c["passed"]]
        assert failed and all(name.startswith("norm_M") for name in failed)

    def test_exit_code_tracks_checks(self, capsys):
        # too small a truncation turns the oracle checks into failures, never a crash
        code, out, _ = run(capsys, "--dim", "8", "--format", "json", "verify")
        d = json.loads(out)
        assert code == (0 if all(c["passed"] for c in d["checks"]) else 1) == 1


def synth(tmp_path, *argv, name="data.csv"):
    p = tmp_path / name
    assert main(["--out", str(p), "synth", *argv]) == 0
    return p


class TestCertify:
    def test_amplifier_dataset_between(self, capsys, tmp_path):
        p = synth(tmp_path, "--amp", "--eta", "4", "--lambda", "0.2", "--seed", "5")
        code, out, _ = run(capsys, "--format", "json", "certify", str(p), "--amp", "--eta", "4", "--lambda", "0.2")
        d = json.loads(out)
        assert code == 0 and d["verdict"] == "between"
        assert abs(d["empirical_mean"] - 0.3) <= 3 * d["std_err"]

    def test_all_ones_flagged(self, capsys, tmp_path):
        p = tmp_path / "ones.csv"
        rng = np.random.default_rng(0)
        a = (rng.standard_normal(500) + 1j * rng.standard_normal(500)) / np.sqrt(0.4)
        p.write_text("alpha_re,alpha_im,fidelity_estimate,n_trials\n"
                     + "".join(f"{x.real},{x.imag},1,100\n" for x in a))
        code, out, _ = run(capsys, "--format", "json", "certify", str(p), "--amp", "--eta", "4", "--lambda", "0.2")
        assert code == 1 and json.loads(out)["verdict"] == "exceeds_quantum_limit_flagged"

    def test_conjugation_limits_coincide(self, capsys, tmp_path):
        p = synth(tmp_path, "--conj", "--n", "1", "--lambda", "0.5", "--channel", "mp-opt", "--seed", "2")
        code, out, _ = run(capsys, "--format", "json", "certify", str(p), "--conj", "--n", "1", "--lambda", "0.5")
        d = json.loads(out)
        assert code == 0 and d["verdict"] == "between"
        assert d["bound"] == pytest.approx(0.6) and d["classical_baseline"] == pytest.approx(0.6)

    def test_below_classical(self):
        recs = cli.synthesize_records(ChannelSpec.attenuator(0.0), TaskSpec(1, 4, 0.2), 5000, 100, seed=1)
        assert cli.certify(recs, TaskSpec(1, 4, 0.2)).verdict == "below_classical"

    def test_parse_error_names_line(self, capsys, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("alpha_re,alpha_im,fidelity_estimate,n_trials\n0.1,0.2,0.5,10\n0.3,x,0.5,10\n")
        code, _, err = run(capsys, "certify", str(p), "--amp", "--eta", "4", "--lambda", "0.2")
        assert code == 2 and "line 3" in err

    @pytest.mark.parametrize(
        "body, msg",
        [
            ("", "line 1"),
            ("a,b,c,d\n", "line 1"),
            ("alpha_re,alpha_im,fidelity_estimate,n_trials\n0,0,1.5,3\n", "line 2"),
            ("alpha_re,alpha_im,fidelity_estimate,n_trials\n0,0,0.5,0\n", "line 2"),
            ("alpha_re,alpha_im,fidelity_estimate,n_trials\n0,0,0.5\n", "line 2"),
            ("alpha_re,alpha_im,fidelity_estimate,n_trials\n0,nan,0.5,2\n", "line 2"),
        ],
    )
    def test_malformed_records(self, body, msg):
        with pytest.raises(cli.RecordParseError, match=msg):
            cli.read_records(io.StringIO(body))

    def test_moment_mismatch_warns(self, capsys, tmp_path):
        p = synth(tmp_path, "--amp", "--eta", "4", "--lambda", "0.2", "--records", "4000")
        # declare a much narrower prior than the data was drawn from
        code, _, err = run(capsys, "certify", str(p), "--amp", "--eta", "4", "--lambda", "2")
        assert "warning:" in err and "1/lambda" in err

    def test_missing_file_exit_2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "certify", str(tmp_path / "none.csv"), "--amp", "--eta", "4", "--lambda", "0.2")
        assert code == 2

    def test_round_trip_over_seeds(self):
        chan, task = ChannelSpec.amplifier(4 / 1.44), TaskSpec(1, 4, 0.2)
        truth = average_fidelity_closed(chan, task)
        hits = 0
        for seed in range(100):
            recs = cli.synthesize_records(chan, task, 2000, 100, seed)
            v = cli.certify(recs, task, z=4.0)
            hits += abs(v.empirical_mean - truth) <= 4 * v.std_err
        assert hits >= 99

    def test_synthetic_records_deterministic(self):
        task = TaskSpec(1, 4, 0.2)
        a = cli.synthesize_records(ChannelSpec.amplifier(2), task, 100, 50, seed=9)
        b = cli.synthesize_records(ChannelSpec.amplifier(2), task, 100, 50, seed=9)
        assert a == b


@pytest.mark.parametrize(
    "text, grid",
    [("1:2:3", [1.0, 1.5, 2.0]), ("0.5,1", [0.5, 1.0]), ("3", [3.0]), ("", [])],
)
def test_parse_grid(text, grid):
    assert cli.parse_grid(text) == grid
