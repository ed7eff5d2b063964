import csv

import numpy as np
import pytest

from flexaft.cli import main
from flexaft.data import read_csv
from flexaft.estimation import predict_survival
from flexaft.modelfile import load_model
from flexaft.simulation import default_scenario_files


SCENARIO4 = str(default_scenario_files()[3])


@pytest.fixture()
def sim_csv(tmp_path):
    path = tmp_path / "sim.csv"
    code = main(["simulate", "--scenario-config", SCENARIO4,
                 "--seed", "11", "--n", "300", "--out", str(path)])
    assert code == 0
    return path


@pytest.fixture()
def weibull_model_file(sim_csv, tmp_path):
    path = tmp_path / "weibull.model"
    code = main(["fit", "--data", str(sim_csv), "--time", "time",
                 "--event", "event", "--covars", "x",
                 "--family", "weibull", "--out", str(path)])
    assert code == 0
    return path


# -- simulate --------------------------------------------------------------------

def test_simulate_writes_loadable_csv(sim_csv, capsys):
    data = read_csv(sim_csv, time="time", event="event", covars=("x",))
    assert data.n == 300
    assert set(np.unique(data.covariates[:, 0])) <= {0.0, 1.0}


def test_simulate_reports_row_count(tmp_path, capsys):
    path = tmp_path / "sim.csv"
    main(["simulate", "--scenario-config", SCENARIO4, "--seed", "3",
          "--n", "50", "--out", str(path)])
    out = capsys.readouterr().out
    assert "50 rows" in out
    assert str(path) in out


def test_simulate_same_seed_same_bytes(tmp_path):
    a, b, c = (tmp_path / name for name in ("a.csv", "b.csv", "c.csv"))
    for path, seed in ((a, 7), (b, 7), (c, 8)):
        main(["simulate", "--scenario-config", SCENARIO4, "--seed",
              str(seed), "--n", "120", "--out", str(path)])
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_simulate_requires_seed(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--scenario-config", SCENARIO4,
              "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_simulate_missing_config_is_data_error(tmp_path, capsys):
    code = main(["simulate", "--scenario-config",
                 str(tmp_path / "absent.ini"), "--seed", "1",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 3
    assert "error:" in capsys.readouterr().err


# -- fit -------------------------------------------------------------------------

def test_fit_prints_estimates(sim_csv, capsys):
    code = main(["fit", "--data", str(sim_csv), "--time", "time",
                 "--event", "event", "--covars", "x",
                 "--family", "weibull"])
    assert code == 0
    out = capsys.readouterr().out
    assert "model: weibull(x)" in out
    assert "beta.x" in out
    assert "log-likelihood" in out


def test_fit_saved_model_round_trips(weibull_model_file):
    fitted = load_model(weibull_model_file)
    assert fitted.converged
    assert fitted.spec.label() == "weibull(x)"


def test_fit_fpaft_df1_matches_weibull(sim_csv, weibull_model_file,
                                       tmp_path, capsys):
    out = tmp_path / "fpaft1.model"
    code = main(["fit", "--data", str(sim_csv), "--time", "time",
                 "--event", "event", "--covars", "x", "--family", "fpaft",
                 "--df", "1", "--out", str(out)])
    assert code == 0
    a = load_model(weibull_model_file)
    b = load_model(out)
    assert b.loglik == pytest.approx(a.loglik, abs=1e-6)
    assert b.theta[0] == pytest.approx(a.theta[0], abs=1e-5)


def test_fit_tde_needs_fpaft(sim_csv, capsys):
    code = main(["fit", "--data", str(sim_csv), "--time", "time",
                 "--event", "event", "--covars", "x",
                 "--family", "weibull", "--tde", "x:2"])
    assert code == 2
    assert "requires --family fpaft" in capsys.readouterr().err


def test_fit_bad_tde_syntax(sim_csv, capsys):
    code = main(["fit", "--data", str(sim_csv), "--time", "time",
                 "--event", "event", "--covars", "x", "--family", "fpaft",
                 "--tde", "x"])
    assert code == 2
    assert "name:df" in capsys.readouterr().err


def test_fit_missing_file_is_data_error(tmp_path, capsys):
    code = main(["fit", "--data", str(tmp_path / "nope.csv"),
                 "--time", "time", "--event", "event",
                 "--family", "weibull"])
    assert code == 3


def test_fit_too_few_events_is_numerical_error(tmp_path, capsys):
    path = tmp_path / "tiny.csv"
    path.write_text("time,event,x\n" + "\n".join(
        f"{t},{e},{x}" for t, e, x in
        [(1.0, 1, 0), (2.0, 0, 1), (3.0, 0, 0), (4.0, 1, 1),
         (5.0, 0, 1)]) + "\n")
    code = main(["fit", "--data", str(path), "--time", "time",
                 "--event", "event", "--covars", "x",
                 "--family", "fpaft", "--df", "5"])
    assert code == 4
    assert "error:" in capsys.readouterr().err


# -- predict ---------------------------------------------------------------------

def test_predict_matches_library(weibull_model_file, capsys):
    code = main(["predict", "--model", str(weibull_model_file),
                 "--times", "0.5,1,2", "--at", "x=1"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "time,S,se_loglogS,lower,upper"
    fitted = load_model(weibull_model_file)
    pred = predict_survival(fitted, np.array([1.0]),
                            np.array([0.5, 1.0, 2.0]))
    for j, line in enumerate(lines[1:]):
        cells = line.split(",")
        assert float(cells[1]) == pred.survival[j]
        assert float(cells[3]) == pred.lower[j]
        assert float(cells[4]) == pred.upper[j]


def test_predict_out_file(weibull_model_file, tmp_path, capsys):
    out = tmp_path / "pred.csv"
    code = main(["predict", "--model", str(weibull_model_file),
                 "--times", "1.0", "--out", str(out)])
    assert code == 0
    assert out.read_text().startswith("time,S,")


def test_predict_rejects_unknown_covariate(weibull_model_file, capsys):
    code = main(["predict", "--model", str(weibull_model_file),
                 "--times", "1.0", "--at", "w=1"])
    assert code == 2
    assert "does not match a model covariate" in capsys.readouterr().err


def test_predict_rejects_bad_times(weibull_model_file, capsys):
    assert main(["predict", "--model", str(weibull_model_file),
                 "--times", "0,1"]) == 2
    assert main(["predict", "--model", str(weibull_model_file),
                 "--times", "abc"]) == 2


def test_predict_missing_model_is_data_error(tmp_path, capsys):
    code = main(["predict", "--model", str(tmp_path / "nope.model"),
                 "--times", "1.0"])
    assert code == 3


# -- km --------------------------------------------------------------------------

def test_km_hand_values(tmp_path, capsys):
    path = tmp_path / "km.csv"
    path.write_text("time,event\n1.0,1\n1.5,0\n2.0,1\n2.5,0\n")
    code = main(["km", "--data", str(path), "--time", "time",
                 "--event", "event"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "time,survival,n_risk,n_event"
    assert lines[1] == "1.0,0.75,4,1"
    assert lines[2] == "2.0,0.375,2,1"


def test_km_out_file(tmp_path):
    path = tmp_path / "km.csv"
    path.write_text("time,event\n1.0,1\n2.0,0\n")
    out = tmp_path / "est.csv"
    code = main(["km", "--data", str(path), "--time", "time",
                 "--event", "event", "--out", str(out)])
    assert code == 0
    assert out.read_text().splitlines()[1] == "1.0,0.5,2,1"


# -- study -----------------------------------------------------------------------

STUDY_INI = """\
[flexaft_scenario]
format_version = 1
kind = mixture_weibull
name = cli-demo

[generation]
n = 150
replicates = 2
base_seed = 19
admin_censor_time = 5.0

[mixture]
p = 1.0
lambda1 = 0.3
gamma1 = 1.2
lambda2 = 0.3
gamma2 = 1.2
beta = 0.5

[study]
roster = weibull(x)
monitored_times = 1.0 3.0
"""


def test_study_runs_and_writes_tables(tmp_path, capsys):
    ini = tmp_path / "study.ini"
    ini.write_text(STUDY_INI)
    out_dir = tmp_path / "tables"
    code = main(["study", "--study-config", str(ini),
                 "--out-dir", str(out_dir)])
    assert code == 0
    out = capsys.readouterr().out
    assert "weibull(x): bias" in out
    assert "converged 2/2" in out
    assert "tables written to" in out
    with open(out_dir / "beta_summary.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 1
    assert float(rows[0]["median_aic_rank"]) == 1.0


def test_study_missing_config_is_data_error(tmp_path, capsys):
    code = main(["study", "--study-config", str(tmp_path / "absent.ini"),
                 "--out-dir", str(tmp_path / "tables")])
    assert code == 3


def test_study_workers_flag_overrides(tmp_path, capsys):
    ini = tmp_path / "study.ini"
    ini.write_text(STUDY_INI)
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    assert main(["study", "--study-config", str(ini),
                 "--out-dir", str(a_dir)]) == 0
    assert main(["study", "--study-config", str(ini),
                 "--out-dir", str(b_dir), "--workers", "2"]) == 0
    a = (a_dir / "beta_summary.csv").read_text()
    b = (b_dir / "beta_summary.csv").read_text()
    assert a == b


# -- causal ----------------------------------------------------------------------

def test_causal_table(tmp_path, capsys):
    out = tmp_path / "table.csv"
    code = main(["causal", "--corr", "0.0", "--n", "400", "--reps", "1",
                 "--seed", "5", "--df", "2", "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "mean coef" in stdout
    assert "exponential PH (x+z)" in stdout
    with open(out, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 4
    assert all(int(row["n_converged"]) == 1 for row in rows)


def test_causal_unreachable_corr_is_numerical_error(capsys):
    code = main(["causal", "--corr", "0.9", "--n", "100", "--reps", "1",
                 "--seed", "5"])
    assert code == 2
    assert "unreachable" in capsys.readouterr().err


# -- parser-level behaviour --------------------------------------------------------

def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("flexaft ")


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
