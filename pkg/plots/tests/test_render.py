import pytest

from cfisac_plots import (CsvFormatError, FigureSpec, cdf_steps,
                          extract_embedded_data, main, parse_campaign_csv,
                          render_cdf, render_convergence, render_sweep)

HEADER = ("scheme,sweep_value,realization,seed,sensing_success,min_se,"
          "se_ue_1,iterations,wall_ms")


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def canned_csv(tmp_path):
    return _write(tmp_path / "c.csv", [
        HEADER,
        "GAP-OPA,0,0,11,1,1,1,5,10.0",
        "GAP-OPA,0,1,12,1,2,2,5,11.0",
        "GAP-OPA,0,2,13,1,3,3,5,12.0",
    ])


def test_cdf_steps_three_values(canned_csv, tmp_path):
    out = str(tmp_path / "cdf.svg")
    render_cdf([canned_csv], out)
    data = extract_embedded_data(out)
    xs, ps = data["cdf"]["GAP-OPA"]
    assert xs == [1.0, 2.0, 3.0]
    assert ps == pytest.approx([1 / 3, 2 / 3, 1.0])
    assert data["success"]["GAP-OPA"] == 1.0


def test_cdf_all_infeasible_single_step_at_zero(tmp_path):
    path = _write(tmp_path / "z.csv", [
        HEADER,
        "RAP-OPA,0,0,11,0,0,0,5,10.0",
        "RAP-OPA,0,1,12,0,0,0,5,10.0",
    ])
    out = str(tmp_path / "cdf.svg")
    render_cdf([path], out)
    data = extract_embedded_data(out)
    xs, ps = data["cdf"]["RAP-OPA"]
    assert set(xs) == {0.0}
    assert ps[-1] == 1.0
    assert data["success"]["RAP-OPA"] == 0.0


def test_cdf_deterministic_across_runs(canned_csv, tmp_path):
    a, b = str(tmp_path / "a.svg"), str(tmp_path / "b.svg")
    render_cdf([canned_csv], a)
    render_cdf([canned_csv], b)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_sweep_success_bars_in_unit_interval(tmp_path):
    path = _write(tmp_path / "s.csv", [
        HEADER,
        "JAP-OPA,4,0,1,1,2.0,2.0,5,10.0",
        "JAP-OPA,8,0,1,1,1.5,1.5,5,10.0",
        "RAP-OPA,4,0,1,1,1.0,1.0,5,10.0",
        "RAP-OPA,8,0,1,0,0,0,5,10.0",
    ])
    out = str(tmp_path / "sweep.svg")
    render_sweep([path], out)
    data = extract_embedded_data(out)
    for rates in data["success"].values():
        assert all(0.0 <= r <= 1.0 for r in rates)
    assert data["x"] == [4.0, 8.0]
    assert data["mean_min_se"]["JAP-OPA"] == [2.0, 1.5]


def test_sweep_deterministic(tmp_path):
    path = _write(tmp_path / "s.csv", [
        HEADER,
        "JAP-OPA,4,0,1,1,2.0,2.0,5,10.0",
        "JAP-OPA,8,0,1,1,1.5,1.5,5,10.0",
    ])
    a, b = str(tmp_path / "a.svg"), str(tmp_path / "b.svg")
    render_sweep([path], a)
    render_sweep([path], b)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_convergence_traces(tmp_path):
    path = _write(tmp_path / "t.csv", [
        "label,iteration,objective",
        "M=20,1,0.5",
        "M=20,2,0.8",
        "M=30,1,0.4",
    ])
    out = str(tmp_path / "conv.svg")
    render_convergence([path], out)
    data = extract_embedded_data(out)
    assert data["traces"]["M=20"] == [[1, 2], [0.5, 0.8]]


def test_malformed_header_diagnostic(tmp_path):
    path = _write(tmp_path / "bad.csv", ["nope,header", "1,2"])
    with pytest.raises(CsvFormatError, match="bad.csv:1"):
        parse_campaign_csv(path)


def test_malformed_row_diagnostic(tmp_path):
    path = _write(tmp_path / "bad.csv", [
        HEADER,
        "GAP-OPA,0,0,11,1,1,1,5,10.0",
        "GAP-OPA,0,1,13,1,xx,2,5,11.0",
    ])
    with pytest.raises(CsvFormatError, match="bad.csv:3"):
        parse_campaign_csv(path)


def test_cli_reports_malformed_csv(tmp_path, capsys):
    path = _write(tmp_path / "bad.csv", ["nope", "1"])
    rc = main(["--csv", path, "--kind", "cdf",
               "--out", str(tmp_path / "x.svg")])
    assert rc == 1
    assert "bad.csv:1" in capsys.readouterr().err


def test_cli_renders_cdf(canned_csv, tmp_path, capsys):
    out = str(tmp_path / "out.svg")
    rc = main(["--csv", canned_csv, "--kind", "cdf", "--out", out])
    assert rc == 0
    assert extract_embedded_data(out)["cdf"]


def test_figure_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        FigureSpec(csv_paths=["x.csv"], kind="pie", out_path="x.svg").validate()
    with pytest.raises(ValueError):
        FigureSpec(csv_paths=[], kind="cdf", out_path="x.svg").validate()


def test_cdf_steps_helper():
    xs, ps = cdf_steps([3.0, 1.0, 2.0])
    assert xs == [1.0, 2.0, 3.0]
    assert ps == pytest.approx([1 / 3, 2 / 3, 1.0])
