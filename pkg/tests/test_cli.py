"""Command-line interface: file ingestion, mode resolution, subcommands,
exit codes, JSON determinism."""

from __future__ import annotations

import json
from fractions import Fraction as F

import pytest

import hankelshift.cli as cli
from hankelshift import Interval, IntervalReport
from hankelshift.perturbation import InteriorReport


def write(tmp_path, name, content):
    p = tmp_path / name
    if isinstance(content, (dict, list)):
        p.write_text(json.dumps(content))
    else:
        p.write_text(content)
    return str(p)


@pytest.fixture
def bergman_file(tmp_path):
    sq = [f"{n + 1}/{n + 2}" for n in range(14)]
    return write(tmp_path, "bergman.json", {"kind": "weights", "values": sq})


@pytest.fixture
def twoatom_file(tmp_path):
    doc = {"kind": "measure", "atoms": ["1/1", "4/1"], "densities": ["1/2", "1/2"]}
    return write(tmp_path, "twoatom.json", doc)


@pytest.fixture
def csv_file(tmp_path):
    vals = [1.0 / (n + 1) for n in range(10)]
    return write(tmp_path, "moments.csv", "\n".join(repr(v) for v in vals) + "\n")


class TestParsing:
    def test_weights_json(self, bergman_file, capsys):
        assert cli.main(["analyze", bergman_file, "--k", "3"]) == 0
        out = capsys.readouterr().out
        assert "mode: exact" in out
        assert "k=3: holds" in out

    def test_csv_defaults_to_float(self, csv_file, capsys):
        assert cli.main(["analyze", csv_file]) == 0
        assert "mode: float" in capsys.readouterr().out

    def test_measure_default_horizon(self, twoatom_file, capsys):
        assert cli.main(["analyze", twoatom_file]) == 0
        out = capsys.readouterr().out
        assert "horizon=12" in out
        assert "default horizon 12" in out

    def test_measure_horizon_field(self, tmp_path, capsys):
        doc = {
            "kind": "measure",
            "atoms": ["1/1", "4/1"],
            "densities": ["1/2", "1/2"],
            "horizon": 8,
        }
        path = write(tmp_path, "m.json", doc)
        assert cli.main(["analyze", path]) == 0
        assert "horizon=8" in capsys.readouterr().out

    def test_mixed_representations_rejected(self, tmp_path, capsys):
        path = write(tmp_path, "mixed.json", {"kind": "weights", "values": ["1/2", 0.5]})
        assert cli.main(["analyze", path]) == 2
        assert "mixed representations" in capsys.readouterr().err

    def test_rational_requires_exact(self, tmp_path):
        path = write(
            tmp_path, "bad.json",
            {"kind": "moments", "values": ["1/1", "1/2"], "exact": False},
        )
        assert cli.main(["analyze", path]) == 2

    def test_zero_denominator(self, tmp_path):
        path = write(tmp_path, "bad.json", {"kind": "moments", "values": ["1/0"]})
        assert cli.main(["analyze", path]) == 2

    def test_malformed_rational(self, tmp_path):
        path = write(tmp_path, "bad.json", {"kind": "moments", "values": ["1//2"]})
        assert cli.main(["analyze", path]) == 2

    def test_boolean_rejected(self, tmp_path):
        path = write(tmp_path, "bad.json", {"kind": "moments", "values": [True, 1]})
        assert cli.main(["analyze", path]) == 2

    def test_bad_kind(self, tmp_path):
        path = write(tmp_path, "bad.json", {"kind": "mystery", "values": [1]})
        assert cli.main(["analyze", path]) == 2

    def test_json_syntax_error_reports_position(self, tmp_path, capsys):
        path = write(tmp_path, "bad.json", "{\"kind\": \"moments\",\n  values: [1]}")
        assert cli.main(["analyze", path]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_csv_bad_line_reported(self, tmp_path, capsys):
        path = write(tmp_path, "bad.csv", "1.0\nnot-a-number\n")
        assert cli.main(["analyze", path]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_file(self):
        assert cli.main(["analyze", "/nonexistent/nope.json"]) == 2

    def test_unknown_command_is_usage_error(self, bergman_file):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate", bergman_file])
        assert exc.value.code == 2

    def test_exact_and_float_flags_conflict(self, csv_file):
        assert cli.main(["analyze", csv_file, "--exact", "--float"]) == 2


class TestModeAndTolerances:
    def test_float_flag_overrides_rational_default(self, bergman_file, capsys):
        assert cli.main(["analyze", bergman_file, "--float"]) == 0
        assert "mode: float" in capsys.readouterr().out

    def test_exact_flag_on_csv(self, csv_file, capsys):
        assert cli.main(["analyze", csv_file, "--exact"]) == 0
        assert "mode: exact" in capsys.readouterr().out

    def test_env_var_sets_rel_tolerance(self, csv_file, capsys, monkeypatch):
        monkeypatch.setenv("HANKELSHIFT_TOL_REL", "1e-6")
        assert cli.main(["analyze", csv_file, "--json", "--no-timestamp"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["tolerances"]["rel_eps"] == 1e-6

    def test_flag_beats_env(self, csv_file, capsys, monkeypatch):
        monkeypatch.setenv("HANKELSHIFT_TOL_REL", "1e-6")
        assert cli.main(
            ["analyze", csv_file, "--json", "--no-timestamp", "--tol-rel", "1e-4"]
        ) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["tolerances"]["rel_eps"] == 1e-4

    def test_bad_env_value(self, csv_file, monkeypatch):
        monkeypatch.setenv("HANKELSHIFT_TOL_REL", "banana")
        assert cli.main(["analyze", csv_file]) == 2


class TestSubcommands:
    def test_dets_table(self, twoatom_file, capsys):
        assert cli.main(["dets", twoatom_file, "--k", "2", "--json", "--no-timestamp"]) == 0
        report = json.loads(capsys.readouterr().out)
        table = report["results"]["table"]
        assert table["k"] == 2
        assert all(d == "0" for d in table["dets"])
        assert report["results"]["propagation"]["vanishing_found"]

    def test_recursion_recovers_measure(self, twoatom_file, capsys):
        assert cli.main(["recursion", twoatom_file, "--json", "--no-timestamp"]) == 0
        report = json.loads(capsys.readouterr().out)
        res = report["results"]
        assert res["recursion"]["order"] == 2
        assert res["recursion"]["coeffs"] == ["-4", "5"]
        assert res["measure"]["atoms"] == ["1", "4"]
        assert res["finite_mass"]["finite"] is True
        assert res["finite_mass"]["witness"]["k"] == 2

    def test_recursion_none_on_bergman(self, bergman_file, capsys):
        assert cli.main(["recursion", bergman_file, "--max-order", "5", "--json",
                         "--no-timestamp"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["results"]["recursion"] is None
        assert report["results"]["finite_mass"]["finite"] is False

    def test_recursion_repeated_root_fails_stieltjes_gate(self, tmp_path):
        # gamma_n = n + 1 has an order-2 recursion with a repeated root, but it
        # is not a moment sequence of a positive measure, so the finite-mass
        # stage aborts with its precondition before any verdict is emitted.
        path = write(
            tmp_path, "lin.json",
            {"kind": "moments", "values": [str(n + 1) + "/1" for n in range(8)]},
        )
        assert cli.main(["recursion", path]) == 3

    def test_recursion_non_atomic_is_a_verdict(self, twoatom_file, capsys, monkeypatch):
        from hankelshift import NotAtomicError

        def boom(*a, **kw):
            raise NotAtomicError("characteristic root is not admissible")

        monkeypatch.setattr(cli, "recover_atoms", boom)
        assert cli.main(["recursion", twoatom_file, "--json", "--no-timestamp"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["results"]["measure"]["atomic"] is False
        assert "admissible" in report["results"]["measure"]["reason"]

    def test_perturb_closed_and_bisection(self, bergman_file, capsys):
        assert cli.main(
            ["perturb", bergman_file, "--l", "3", "--k", "2", "--json", "--no-timestamp"]
        ) == 0
        report = json.loads(capsys.readouterr().out)
        res = report["results"]
        assert res["closed_form"]["intersection"]["hi"] == "225/224"
        assert "bisection" in res
        assert float(res["cross_check_max_deviation"]) < 1e-9
        assert res["interiority"]["interior"] is True
        assert res["interiority"]["agreement"] is True

    def test_perturb_closed_form_only(self, bergman_file, capsys):
        assert cli.main(
            ["perturb", bergman_file, "--l", "1", "--k", "1", "--closed-form",
             "--json", "--no-timestamp"]
        ) == 0
        report = json.loads(capsys.readouterr().out)
        res = report["results"]
        assert res["closed_form"]["intersection"]["lo"] == "3/4"
        assert res["closed_form"]["intersection"]["hi"] == "9/8"
        assert "bisection" not in res
        assert "interiority" not in res

    def test_perturb_no_closed_form_at_high_order(self, bergman_file):
        assert cli.main(
            ["perturb", bergman_file, "--l", "1", "--k", "3", "--closed-form"]
        ) == 3

    def test_analyze_failure_is_exit_zero(self, tmp_path, capsys):
        path = write(tmp_path, "decr.csv", "1.0\n0.9\n0.7\n0.4\n0.2\n0.1\n")
        assert cli.main(["analyze", path, "--k", "2"]) == 0
        assert "FAILS" in capsys.readouterr().out

    def test_perturb_precondition_exit(self, tmp_path):
        path = write(tmp_path, "decr.csv", "1.0\n0.9\n0.7\n0.4\n0.2\n0.1\n")
        assert cli.main(["perturb", path, "--l", "1", "--k", "1"]) == 3

    def test_horizon_exit(self, twoatom_file):
        assert cli.main(["dets", twoatom_file, "--k", "9"]) == 3

    def test_non_stieltjes_exit(self, tmp_path):
        path = write(tmp_path, "alt.json", {"kind": "moments", "values": [1, 2, 1, 2, 1]})
        assert cli.main(["recursion", path]) == 3


class TestConsistencyIncident:
    def test_interiority_disagreement_exits_4(self, bergman_file, capsys, monkeypatch):
        dummy_interval = IntervalReport(
            k=1,
            cut=1,
            per_block={},
            methods={},
            intersection=Interval(F(1, 2), F(3, 2)),
            intersection_methods=("bisection", "bisection"),
            contains_one=True,
            one_interior=True,
            flags=(),
        )
        fake = InteriorReport(
            k=1,
            cut=1,
            interior=True,
            pd_all=False,
            failing_block=0,
            agreement=False,
            interval=dummy_interval,
            flags=("tolerance incident",),
        )
        monkeypatch.setattr(cli, "interiority_report", lambda *a, **kw: fake)
        rc = cli.main(["perturb", bergman_file, "--l", "1", "--k", "1"])
        assert rc == 4
        assert "incident" in capsys.readouterr().out


class TestDeterminism:
    def test_json_byte_identical(self, bergman_file, capsys):
        args = ["perturb", bergman_file, "--l", "2", "--k", "2", "--json", "--no-timestamp"]
        assert cli.main(args) == 0
        first = capsys.readouterr().out
        assert cli.main(args) == 0
        second = capsys.readouterr().out
        assert first == second

    def test_timestamp_present_by_default(self, csv_file, capsys):
        assert cli.main(["analyze", csv_file, "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert "timestamp" in report

    def test_timestamp_suppressed(self, csv_file, capsys):
        assert cli.main(["analyze", csv_file, "--json", "--no-timestamp"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert "timestamp" not in report
