
import pytest

from contagion_is import cli
from contagion_is.config import ConfigError, parse_config

TABLE1 = """\
# independent obligors
model.n = 125
model.a = 0.01
model.b = 0
horizon = 5
threshold = 0.10
sampler.method = is1d
run.batches = 10
run.samples = 500
run.workers = 1
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults():
    cfg = parse_config("")
    assert (cfg.batches, cfg.samples, cfg.seed) == (100, 5000, 1)
    assert cfg.workers >= 1
    assert cfg.n == 125 and cfg.weights == (1.0,)


def test_dimension_broadcast_and_weights():
    cfg = parse_config("model.d = 3\nmodel.a = 0.02\n")
    assert cfg.a == (0.02,) * 3
    assert cfg.weights == pytest.approx((1 / 3,) * 3)
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("model.d = 3\nmodel.a = 0.01, 0.02\n")


@pytest.mark.parametrize(
    "text,line",
    [
        ("model.n = 125\nmodel.q = 1\n", 2),
        ("model.n = 125\nmodel.n = 100\n", 2),
        ("\n\nmodel.n = many\n", 3),
        ("model.a = 0.01, x\n", 1),
        ("horizon\n", 1),
        ("sampler.method = gibbs\n", 1),
        ("model.coupling = pairwise\n", 1),
        ("model.b =\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_invalid_model_rejected():
    with pytest.raises(ConfigError):
        parse_config("model.a = 0.01, 0.02\nmodel.w = 0.5, 0.6\n")
    with pytest.raises(ConfigError):
        parse_config("threshold = 1.5\n")


def test_config_text_round_trip():
    cfg = parse_config(TABLE1 + "sampler.c = 0.02\nmodel.coupling = group\n")
    again = parse_config(cfg.to_text())
    assert again == cfg


def test_estimate_rows(tmp_path, capsys):
    assert cli.main(["estimate", "--config", str(write(tmp_path, TABLE1))]) == 0
    out = capsys.readouterr()
    lines = out.out.splitlines()
    assert lines[0] == "z,n,method,estimate,rel_error,log10_estimate,c_star,W0,U0,batches,samples,seed,wall_time_s"
    row = cli.read_csv(out.out)[0]
    assert row["method"] == "is1d" and row["n"] == "125"
    assert float(row["estimate"]) == pytest.approx(8.238e-3, rel=0.1)
    assert float(row["c_star"]) == pytest.approx(0.010504166, rel=1e-5)
    assert float(row["W0"]) == pytest.approx(2 * float(row["U0"]), rel=1e-5)
    assert row["estimate"] == f"{float(row['estimate']):.5e}"
    assert "is1d" in out.err


def test_monte_carlo_no_hit_row_has_empty_fields(tmp_path, capsys):
    text = TABLE1.replace("is1d", "mc").replace("0.10", "0.25")
    assert cli.main(["estimate", "--config", str(write(tmp_path, text))]) == 0
    row = cli.read_csv(capsys.readouterr().out)[0]
    for key in ("estimate", "rel_error", "log10_estimate", "c_star", "W0"):
        assert row[key] == ""
    assert row["U0"] != ""


def _strip_time(text):
    return [line.rsplit(",", 1)[0] for line in text.splitlines()]


def test_same_seed_same_csv(tmp_path, capsys):
    path = str(write(tmp_path, TABLE1.replace("0.10", "0.10, 0.20")))
    cli.main(["estimate", "--config", path])
    first = capsys.readouterr().out
    cli.main(["estimate", "--config", path, "--workers", "3"])
    second = capsys.readouterr().out
    assert _strip_time(first) == _strip_time(second)
    cli.main(["estimate", "--config", path, "--seed", "2"])
    assert _strip_time(capsys.readouterr().out) != _strip_time(first)


def test_rows_round_trip_through_sidecar(tmp_path, capsys):
    cfg_path = write(tmp_path, TABLE1.replace("0.10", "0.10, 0.15"))
    out = tmp_path / "out"
    assert cli.main(["estimate", "--config", str(cfg_path), "--out", str(out), "--seed", "5"]) == 0
    capsys.readouterr()
    meta = parse_config((out / "estimate.csv.meta").read_text())
    rows = cli.read_csv((out / "estimate.csv").read_text())
    assert len(rows) == 2
    for row in rows:
        rebuilt = cli.config_from_row(row, meta)
        assert rebuilt.seed == 5 and rebuilt.thresholds == (float(row["z"]),)
        again = cli.read_csv(cli.render_csv(cli.estimate_rows(rebuilt)))[0]
        capsys.readouterr()
        assert {k: v for k, v in again.items() if k != "wall_time_s"} == \
               {k: v for k, v in row.items() if k != "wall_time_s"}


def test_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["estimate", "--config", str(write(tmp_path, "bogus = 1\n"))]) == cli.EXIT_CONFIG
    assert "line 1" in capsys.readouterr().err
    assert cli.main(["estimate", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG
    bad = "model.a = 0.01, 0.05\nmodel.w = 0.8, 0.2\nsampler.method = is-hom\n"
    assert cli.main(["estimate", "--config", str(write(tmp_path, bad))]) == cli.EXIT_CONFIG
    assert "homogeneous" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise cli.NumericalError("non-finite log-likelihood ratio")

    monkeypatch.setattr(cli, "run_batches", boom)
    assert cli.main(["estimate", "--config", str(write(tmp_path, TABLE1))]) == cli.EXIT_NUMERICAL


def test_verify_passes_for_optimal_policy(tmp_path, capsys):
    assert cli.main(["verify", "--config", str(write(tmp_path, TABLE1))]) == 0
    report = capsys.readouterr().out
    assert "[FAIL]" not in report
    assert "oracle vs is1d at n=8" in report and "subsolution" in report


def test_verify_reports_naive_curl(tmp_path, capsys):
    text = "model.a = 0.01, 0.05\nmodel.w = 0.8, 0.2\nmodel.b = 5\nthreshold = 0.2\nsampler.method = is-astar\n"
    assert cli.main(["verify", "--config", str(write(tmp_path, text)), "--workers", "1"]) == 0
    report = capsys.readouterr().out
    naive = [line for line in report.splitlines() if "naive" in line][0]
    assert "not conservative" in naive
    assert float(naive.split("=")[1].split()[0]) > 0.0


def test_verify_failure_exit_code(tmp_path, capsys):
    # a negative energy level makes the terminal condition fail past the threshold
    text = TABLE1.replace("0.10", "0.20") + "sampler.c = -0.005\n"
    assert cli.main(["verify", "--config", str(write(tmp_path, text))]) == cli.EXIT_VERIFY
    assert "[FAIL] subsolution" in capsys.readouterr().out


def test_oracle_command(tmp_path, capsys):
    text = "model.n = 8\nmodel.a = 0.01, 0.05\nmodel.w = 0.75, 0.25\nmodel.b = 5\nthreshold = 0.25\n"
    assert cli.main(["oracle", "--config", str(write(tmp_path, text))]) == 0
    row = cli.read_csv(capsys.readouterr().out)[0]
    assert float(row["exact_probability"]) == pytest.approx(0.24842101880456216, rel=1e-5)
    assert row["binomial_reference"] == "" and row["states"] == "4"


def test_tables_smoke(tmp_path, capsys):
    out = tmp_path / "tables"
    assert cli.main(["tables", "--out", str(out), "--workers", "1", "--batches", "2", "--samples", "50"]) == 0
    capsys.readouterr()
    for name in ("table1", "table2", "table3", "table3_total_coupling"):
        rows = cli.read_csv((out / f"{name}.csv").read_text())
        assert len(rows) == 14
        assert {r["method"] for r in rows} == {"mc", {"table1": "is1d", "table2": "is-hom"}.get(name, "is-astar")}
        assert (out / f"{name}.csv.meta").exists()
    meta = parse_config((out / "table3.csv.meta").read_text())
    assert meta.coupling == "group" and meta.a == (0.01, 0.05)


def test_table_setups_use_benchmark_parameters():
    setups = {s.name: s.config for s in cli.table_setups()}
    assert setups["table1"].b == 0.0 and setups["table2"].b == 5.0
    t3 = setups["table3"]
    assert t3.a == (0.01, 0.05) and t3.weights == (0.8, 0.2) and t3.b == 5.0 and t3.method == "is-astar"
    assert all(c.n == 125 and c.horizon == 5.0 and c.batches == 100 and c.samples == 5000
               for c in setups.values())
    assert setups["table1"].thresholds == (0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40)
