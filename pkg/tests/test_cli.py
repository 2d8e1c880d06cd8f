import csv
import json
import math

import pytest

from dynclique import cli

# small but complete configurations for every subcommand
SMALL = {
    "simulate": ["--n", "10", "--p", "0.4", "--replications", "5", "--times", "0,0.5"],
    "betti-trajectory": ["--n", "10", "--p", "0.4", "--replications", "5", "--times", "0,0.5"],
    "ou-check": ["--n", "10", "--p", "0.4", "--replications", "500", "--times", "0,0.5"],
    "verify-moments": ["--n", "4", "--p", "1/2"],
    "verify-covariance": ["--n", "10", "--p", "0.3", "--k", "2", "--replications", "200"],
    "verify-phi": ["--max-order", "1", "--hs", "0.5", "--ps", "0.3"],
    "verify-ver-pair": [],
    "non-markov": ["--replications", "2000"],
}


def run(tmp_path, command, *extra, fmt="csv", name=None):
    out = tmp_path / (name or f"{command}.{fmt}")
    code = cli.main([command, *SMALL[command], "--format", fmt, "--output", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestExitCodes:
    def test_verify_moments_passes(self, tmp_path):
        code, out = run(tmp_path, "verify-moments")
        assert code == 0
        rows = read_csv(out)
        assert [r["j"] for r in rows] == ["0", "1", "2", "3"]
        assert all(r["match"] == "true" for r in rows)
        assert rows[1]["mean_formula"] == "3" and rows[3]["var_exhaustive"] == "63/4096"

    def test_invalid_n(self, tmp_path):
        assert cli.main(["simulate", "--n", "0", "--seed", "1", "--output", str(tmp_path / "x.csv")]) == 1

    def test_unknown_flag_and_command(self, tmp_path):
        assert cli.main(["simulate", "--bogus"]) == 1
        assert cli.main(["frobnicate"]) == 1
        assert cli.main([]) == 1

    def test_moments_n_cap(self, tmp_path):
        assert cli.main(["verify-moments", "--n", "7", "--output", str(tmp_path / "m.csv")]) == 1

    def test_unreadable_config(self, tmp_path):
        assert cli.main(["verify-moments", "--config", str(tmp_path / "missing.json")]) == 1
        bad = tmp_path / "bad.json"
        bad.write_text('{"nonsense": 1}')
        assert cli.main(["verify-moments", "--config", str(bad), "--output", str(tmp_path / "m.csv")]) == 1

    def test_unwritable_output(self, tmp_path):
        assert cli.main(["verify-ver-pair", "--output", str(tmp_path / "no" / "such" / "dir.csv")]) == 1

    def test_failed_gate_exits_2(self, tmp_path):
        # an absurd dominance threshold cannot be met
        code, out = run(tmp_path, "ou-check", "--seed", "1", "--dominance", "1.1")
        assert code == 2
        rows = read_csv(out)
        assert rows[-1]["check"] == "dominance" and rows[-1]["passed"] == "false"
        manifest = json.loads(out.with_name(out.name + ".manifest.json").read_text())
        assert manifest["status"] == "failed"

    def test_help_for_every_subcommand(self, capsys):
        for name in cli.COMMANDS:
            assert cli.main([name, "--help"]) == 0
            assert cli.HELP[name].split()[0] in capsys.readouterr().out


class TestOutputs:
    def test_non_markov_report(self, tmp_path):
        code, out = run(tmp_path, "non-markov", "--seed", "4")
        assert code == 0
        rows = read_csv(out)
        assert [r["start"] for r in rows] == ["all_off", "all_on"]
        L = math.exp(-1)
        assert float(rows[0]["closed_form"]) == pytest.approx(3 * 0.5**4 * (1 - L) ** 4 * (0.5 + 0.5 * L) ** 2, rel=1e-15)
        assert float(rows[0]["gap"]) > 1e-3

    def test_betti_trajectory_columns(self, tmp_path):
        code, out = run(tmp_path, "betti-trajectory", "--seed", "3")
        assert code == 0
        with open(out) as fh:
            header = fh.readline().strip().split(",")
        assert header[:4] == ["replication", "time", "f_k", "chi"]
        assert header[4:] == [f"betti_{j}" for j in range(len(header) - 4)]
        rows = read_csv(out)
        assert [(r["replication"], r["time"]) for r in rows[:4]] == [("0", "0"), ("0", "0.5"), ("1", "0"), ("1", "0.5")]
        for r in rows:
            b = [int(r[c]) for c in header[4:]]
            b[0] += 1
            assert int(r["chi"]) == sum((-1) ** j * x for j, x in enumerate(b))

    def test_manifest(self, tmp_path):
        code, out = run(tmp_path, "simulate")
        assert code == 0
        m = json.loads(out.with_name(out.name + ".manifest.json").read_text())
        assert isinstance(m["seed"], int)
        assert m["params"]["n"] == 10 and m["params"]["p"] == 0.4
        assert {"python", "numpy", "scipy", "dynclique"} <= set(m["versions"])
        assert "timestamp" in m and m["status"] == "passed"

    def test_emit_empty_csv_is_header_only(self, tmp_path):
        path = tmp_path / "e.csv"
        cli.emit_results([], "csv", path, columns=["a", "b"])
        assert path.read_text() == "a,b\n"

    def test_json_round_trip_is_bit_exact(self, tmp_path):
        records = [{"x": 0.1 + 0.2, "y": 1 / 3, "z": 5e-324, "w": -1.7976931348623157e308, "n": 3, "ok": True}]
        path = tmp_path / "r.json"
        cli.emit_results(records, "json", path)
        doc = json.loads(path.read_text())
        assert doc["schema_version"] == cli.SCHEMA_VERSION
        assert doc["records"] == records
        assert all(doc["records"][0][k].hex() == records[0][k].hex() for k in "xyzw")

    def test_csv_uses_17_significant_digits(self, tmp_path):
        path = tmp_path / "r.csv"
        cli.emit_results([{"x": 0.1}], "csv", path)
        assert path.read_text().splitlines()[1] == "0.10000000000000001"
        assert float("0.10000000000000001") == 0.1


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"n": 5, "p": "1/4"}))
        out = tmp_path / "m.csv"
        assert cli.main(["verify-moments", "--config", str(cfg), "--output", str(out)]) == 0
        assert len(read_csv(out)) == 5
        assert cli.main(["verify-moments", "--config", str(cfg), "--n", "3", "--output", str(out)]) == 0
        rows = read_csv(out)
        assert len(rows) == 3 and rows[1]["mean_formula"] == "3/4"

    def test_alpha_in_config_clears_default_p(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"alpha": -0.5, "lambda": 2.0, "dts": [0.5]}))
        out = tmp_path / "cov.csv"
        assert cli.main(["verify-covariance", "--config", str(cfg), "--k", "1", "--seed", "1", "--output", str(out)]) == 0
        row = read_csv(out)[0]
        assert float(row["cov_formula"]) == pytest.approx(math.exp(-1.0), abs=1e-12)
        m = json.loads((tmp_path / "cov.csv.manifest.json").read_text())
        assert m["params"]["p"] is None and m["params"]["alpha"] == -0.5 and m["params"]["lam"] == 2.0


@pytest.mark.parametrize("command", sorted(SMALL))
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_same_seed_gives_identical_files(tmp_path, command, fmt):
    first = run(tmp_path, command, "--seed", "77", fmt=fmt, name=f"a.{fmt}")
    second = run(tmp_path, command, "--seed", "77", fmt=fmt, name=f"b.{fmt}")
    assert first[0] == second[0]
    assert first[1].read_bytes() == second[1].read_bytes()
