import io
import json
from pathlib import Path

import pytest

from bimetro._errors import ParseError
from bimetro.cli import main, parse_eps, parse_grid, parse_state
from bimetro.fock import number_moments
from bimetro.tables import read_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_parse_state_positional_and_keywords():
    assert set(parse_state("noon:3").amplitudes) == {(3, 0), (0, 3)}
    assert set(parse_state("fock:2,1").amplitudes) == {(2, 1)}
    assert set(parse_state("fock:m=2").amplitudes) == {(2, 0)}
    state = parse_state("quasi-noon:4,var=2")
    assert number_moments(state).var_total == pytest.approx(2.0)
    coherent = parse_state("coherent:alpha_plus=1+0.5j")
    assert number_moments(coherent).mean_total == pytest.approx(1.25, rel=1e-7)


@pytest.mark.parametrize(
    "text",
    [
        "teleporter:1",
        "noon",
        "noon:n=2,n=3",
        "noon:2,bogus=1",
        "noon:phase=0.1,2",
        "noon:two",
        "fock:1,2,3",
    ],
)
def test_parse_state_errors(text):
    with pytest.raises(ParseError):
        parse_state(text)


def test_parse_eps_and_grid():
    assert parse_eps("1,-1") == (1.0, -1.0)
    with pytest.raises(ParseError):
        parse_eps("1")
    budgets = parse_grid("4:2,2:4")
    assert [(b.n_mean, b.var) for b in budgets] == [(4.0, 2.0), (2.0, 4.0)]
    with pytest.raises(ParseError):
        parse_grid("4-2")


def test_qfi_of_quasi_noon(capsys):
    report = run_json(capsys, "qfi", "--circuit", "antisymmetric", "--state", "quasi-noon:N=4,var=2")
    assert report["qfi"] == pytest.approx(72.0)
    assert report["delta_phi_min"] == pytest.approx(72.0**-0.5)
    assert report["moments"]["var_total"] == pytest.approx(2.0)
    assert report["eps"] == [1.0, -1.0]


def test_qfi_trials_and_physical_basis(capsys):
    normal = run_json(capsys, "qfi", "--state", "noon:2", "--nu", "4")
    assert normal["qfi"] == pytest.approx(4.0)
    assert normal["delta_phi_min"] == pytest.approx(0.25)
    # one photon in a physical port gives 4 |B|^2
    physical = run_json(capsys, "qfi", "--state", "fock:1,0", "--basis", "physical", "--phi", "0.4")
    assert physical["qfi"] == pytest.approx(1.0)


def test_qfi_without_information(capsys):
    report = run_json(capsys, "qfi", "--circuit", "symmetric", "--state", "fock:2,3")
    assert report["qfi"] == 0.0
    assert report["delta_phi_min"] is None


def test_qfi_of_a_gaussian_state(capsys):
    report = run_json(capsys, "qfi", "--eps", "1,-1", "--gaussian", '{"alpha": [[1.2, 0], [0, 0]]}')
    assert report["qfi"] == pytest.approx(4.0 * 1.44)


def test_bound_report(capsys):
    report = run_json(capsys, "bound", "--n", "4", "--var", "2", "--eps", "1,-1")
    assert report["max_qfi"] == pytest.approx(72.0)
    assert report["antisymmetric"] == pytest.approx(72.0)
    assert report["symmetric"] == pytest.approx(8.0)
    assert report["corners"]["plus"] == pytest.approx([8.0, 2.0])
    assert report["degenerate_maximum"] is True


def test_bound_special_case(capsys):
    report = run_json(capsys, "bound", "--n", "3", "--var", "16", "--case", "unbalanced")
    assert report["max_qfi"] == pytest.approx(81.0)
    assert report["degenerate_maximum"] is False


def test_bound_grid_csv(capsys, tmp_path):
    parquet = tmp_path / "grid.parquet"
    code, out, _ = run(capsys, "bound", "--grid", "4:2,2:4,1:0", "--eps", "1,-1", "--parquet", str(parquet))
    assert code == 0
    df = read_csv(io.StringIO(out))
    assert df["N"].tolist() == [1.0, 2.0, 4.0]
    assert df["max_qfi"].tolist() == pytest.approx([4.0, 32.0, 72.0])
    assert parquet.exists()


def test_fig4_csv(capsys):
    code, out, _ = run(capsys, "fig4", "--n-min", "1", "--n-max", "3")
    assert code == 0
    df = read_csv(io.StringIO(out))
    assert list(df.columns) == ["N", "case", "f_gauss", "f_tilde", "gap", "asymptotic_gap"]
    assert len(df) == 9
    anti = df[df["case"] == "antisymmetric"].set_index("N")
    assert anti.loc[1.0, "f_gauss"] == pytest.approx(16.0)
    assert anti.loc[1.0, "f_tilde"] == pytest.approx(20.0)
    assert anti["asymptotic_gap"].tolist() == pytest.approx([1.0 / 3.0] * 3)
    symmetric = df[df["case"] == "symmetric"]
    assert symmetric["gap"].tolist() == [0.0] * 3


def test_fig4_output_is_reproducible(capsys):
    _, first, _ = run(capsys, "fig4", "--n-values", "5,1,2")
    _, second, _ = run(capsys, "fig4", "--n-values", "2,5,1", "--workers", "3")
    assert first == second


def test_gaussian_optimal(capsys):
    report = run_json(capsys, "gaussian", "--optimal", "2", "--eps", "1,-1")
    assert report["qfi"] == pytest.approx(48.0)
    assert report["f_g1"] == pytest.approx(48.0)
    assert report["f_g2"] == pytest.approx(0.0)
    assert report["mean_total"] == pytest.approx(2.0)
    assert report["var_total"] == pytest.approx(12.0)
    assert len(report["gamma"]) == 4


def test_optimal_state(capsys):
    report = run_json(capsys, "optimal-state", "--case", "antisymmetric", "--n", "4", "--var", "2", "--physical")
    assert report["qfi"] == pytest.approx(72.0)
    assert report["max_qfi"] == pytest.approx(72.0)
    assert "physical_state" in report
    cat = run_json(capsys, "optimal-state", "--n", "2", "--var", "4", "--family", "poisson-cat")
    assert cat["qfi"] == pytest.approx(8.0, rel=1e-6)


def test_optimal_state_errors(capsys):
    code, _, err = run(capsys, "optimal-state", "--case", "unbalanced", "--n", "2", "--var", "4", "--family", "poisson-cat")
    assert code == 2
    assert "INVALID_STATE" in err
    code, _, _ = run(capsys, "optimal-state", "--n", "2", "--var", "4")
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["qfi", "--state", "noon:2", "--gaussian", "{}"],
        ["qfi"],
        ["bound", "--eps", "1,-1"],
        ["qfi", "--state", "noon:two"],
        ["nonsense"],
        ["bound", "--n", "4", "--eps", "1"],
        ["qfi", "--state", "noon:2", "--nu", "0"],
        ["bound", "--n", "4", "--var", "2", "--eps", "1,-1", "--nu", "-3"],
        ["gaussian", "--optimal", "2", "--eps", "1,-1", "--nu", "two"],
        ["verify", "--samples", "0"],
    ],
)
def test_usage_errors_exit_with_one(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 1


def test_zero_trials_is_a_usage_error(capsys):
    code, out, err = run(capsys, "qfi", "--state", "noon:2", "--nu", "0")
    assert code == 1
    assert out == ""
    assert "positive integer" in err


def test_domain_errors_exit_with_two(capsys):
    code, _, err = run(capsys, "bound", "--n", "-1", "--eps", "1,-1")
    assert code == 2
    assert "INVALID_BUDGET" in err


def test_verify_passes(capsys, monkeypatch):
    monkeypatch.setenv("BIMETRO_SEED", "99")
    code, out, _ = run(capsys, "verify", "--samples", "200")
    report = json.loads(out)
    assert code == 0
    assert report["seed"] == 99
    assert report["passed"] is True


def test_verify_reports_an_injected_fault(capsys):
    code, out, _ = run(capsys, "verify", "--seed", "5", "--samples", "200", "--fault", "eps-sign-flip")
    report = json.loads(out)
    assert report["passed"] is False
    assert code == 2 + len(report["failed_groups"])
    assert code > 2


def test_package_metadata():
    import bimetro

    assert bimetro.__author__ == "bimetro developers"
    with open(Path(__file__).parents[1] / "pyproject.toml") as f:
        manifest = f.read()
    assert f'version = "{bimetro.__version__}"' in manifest
    assert '"bimetro developers"' in manifest
