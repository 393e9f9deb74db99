"""CSV input/output: parsing, defaults, validation errors, automatic
curve classification, and result serialization."""

import json
import warnings

import numpy as np
import pytest

from fvcbfit.data_io import (
    CurveKind, Dataset, GasExchangeRecord, ResponseCurve,
    classify_curve, load_csv, write_dataset, write_results,
)
from fvcbfit.errors import EmptyCurve, IoError, MissingColumn, ParseError


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


FULL = """CurveID,FittingGroup,Ci,A,Qin,Tleaf
1,1,200,10.5,2000,25
1,1,400,20.25,2000,25
1,1,800,27.125,2000,25
2,1,200,9.0,2000,35
2,1,400,18.0,2000,35
2,1,800,24.0,2000,35
"""


def test_load_two_curves_one_group(tmp_path):
    ds = load_csv(write_text(tmp_path / "in.csv", FULL))
    assert len(ds.curves) == 2
    assert ds.groups == {1: [1, 2]}
    c1 = ds.curves[0]
    assert c1.curve_id == 1 and c1.fitting_group == 1
    assert [r.ci for r in c1.records] == [200.0, 400.0, 800.0]
    assert [r.a for r in c1.records] == [10.5, 20.25, 27.125]
    assert c1.records[0].tleaf_c == 25.0


def test_missing_optional_columns_fill_defaults(tmp_path):
    text = "CurveID,FittingGroup,Ci,A\n7,0,300,11\n7,0,600,19\n"
    ds = load_csv(write_text(tmp_path / "ci_a.csv", text))
    r = ds.curves[0].records[0]
    assert r.qin == 2000.0 and r.tleaf_c == 25.0


def test_extra_columns_are_ignored(tmp_path):
    text = ("CurveID,FittingGroup,Ci,A,gsw,Comment\n"
            "1,0,300,11,0.2,ok\n1,0,600,19,0.3,ok\n")
    ds = load_csv(write_text(tmp_path / "extra.csv", text))
    assert ds.curves[0].n_points == 2


def test_missing_required_column_raises(tmp_path):
    text = "CurveID,FittingGroup,Ci\n1,0,300\n"
    with pytest.raises(MissingColumn, match="'A'"):
        load_csv(write_text(tmp_path / "noa.csv", text))


def test_non_numeric_cell_reports_row_number(tmp_path):
    text = "CurveID,FittingGroup,Ci,A\n1,0,300,11\n1,0,oops,19\n"
    with pytest.raises(ParseError, match="row 3"):
        load_csv(write_text(tmp_path / "bad.csv", text))


def test_blank_cell_in_present_column_raises(tmp_path):
    text = "CurveID,FittingGroup,Ci,A,Qin,Tleaf\n1,0,300,11,,25\n"
    with pytest.raises(ParseError, match="Qin"):
        load_csv(write_text(tmp_path / "blank.csv", text))


def test_out_of_range_rows_dropped_with_warning(tmp_path):
    text = ("CurveID,FittingGroup,Ci,A,Qin,Tleaf\n"
            "1,0,-5,1,2000,25\n"      # Ci <= 0
            "1,0,300,11,2000,25\n"
            "1,0,400,14,2000,99\n"    # Tleaf out of range
            "1,0,500,16,2000,25\n")
    with pytest.warns(UserWarning, match="dropped"):
        ds = load_csv(write_text(tmp_path / "ranges.csv", text))
    assert [r.ci for r in ds.curves[0].records] == [300.0, 500.0]


def test_curve_with_no_valid_rows_raises(tmp_path):
    text = "CurveID,FittingGroup,Ci,A\n1,0,-5,1\n1,0,-6,2\n"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(EmptyCurve):
            load_csv(write_text(tmp_path / "allbad.csv", text))


def test_empty_and_header_only_files(tmp_path):
    with pytest.raises(ParseError):
        load_csv(write_text(tmp_path / "empty.csv", ""))
    with pytest.raises(EmptyCurve):
        load_csv(write_text(tmp_path / "header.csv", "CurveID,FittingGroup,Ci,A\n"))


def test_missing_file_raises_io_error(tmp_path):
    with pytest.raises(IoError, match="no_such"):
        load_csv(str(tmp_path / "no_such.csv"))


def test_curve_in_two_groups_rejected(tmp_path):
    text = "CurveID,FittingGroup,Ci,A\n1,0,300,11\n1,1,400,14\n"
    with pytest.raises(ParseError, match="groups"):
        load_csv(write_text(tmp_path / "twogroups.csv", text))


def make_curve(ci, qin, cid=0):
    recs = tuple(GasExchangeRecord(curve_id=cid, fitting_group=0, ci=c,
                                   a=1.0, qin=q, tleaf_c=25.0)
                 for c, q in zip(ci, qin))
    return ResponseCurve(curve_id=cid, fitting_group=0, records=recs,
                         kind=CurveKind.CO2Response)


def test_classification_light_protocol():
    # light staircase at near-constant Ci
    ci = 280.0 + np.array([8.0, -6.0, 4.0, -9.0, 2.0, 7.0])
    qin = np.array([0.0, 150.0, 400.0, 800.0, 1200.0, 2000.0])
    assert classify_curve(make_curve(ci, qin)) is CurveKind.LightResponse


def test_classification_co2_ramp():
    ci = np.linspace(200.0, 1800.0, 6)
    qin = np.full(6, 2000.0)
    assert classify_curve(make_curve(ci, qin)) is CurveKind.CO2Response


def test_classification_everything_constant_is_co2():
    ci = np.full(6, 400.0)
    qin = np.full(6, 2000.0)
    assert classify_curve(make_curve(ci, qin)) is CurveKind.CO2Response


def test_classification_override_wins(tmp_path):
    rows = "\n".join(f"3,0,{280 + (i % 3)},{5 + i},{q},25"
                     for i, q in enumerate([0, 150, 400, 800, 1200, 2000]))
    text = "CurveID,FittingGroup,Ci,A,Qin,Tleaf\n" + rows + "\n"
    path = write_text(tmp_path / "ovr.csv", text)
    assert load_csv(path).curves[0].kind is CurveKind.LightResponse
    ds = load_csv(path, kind_overrides={3: "co2"})
    assert ds.curves[0].kind is CurveKind.CO2Response


def test_dataset_roundtrip_is_exact(tmp_path):
    ds = load_csv(write_text(tmp_path / "in.csv", FULL))
    out = tmp_path / "out.csv"
    write_dataset(ds, str(out))
    ds2 = load_csv(str(out))
    for c1, c2 in zip(ds.curves, ds2.curves):
        assert c1.curve_id == c2.curve_id
        for r1, r2 in zip(c1.records, c2.records):
            assert (r1.ci, r1.a, r1.qin, r1.tleaf_c) == \
                   (r2.ci, r2.a, r2.qin, r2.tleaf_c)
    # a second write must be byte-identical
    out2 = tmp_path / "out2.csv"
    write_dataset(ds, str(out2))
    assert out.read_bytes() == out2.read_bytes()


@pytest.fixture(scope="module")
def small_fit():
    from fvcbfit import ParameterState, fit, generate_dataset
    from fvcbfit.params import FitConfig
    ds, _ = generate_dataset(ParameterState.single(), n_curves=2, seed=3)
    return fit(ds, FitConfig(max_iter=5))


def test_write_results_csv_tables(small_fit, tmp_path):
    out = tmp_path / "res.csv"
    write_results(small_fit, str(out), points=True)
    header = out.read_text().splitlines()[0].split(",")
    for name in ("curve_id", "fitting_group", "vcmax25", "jmax25", "tpu25",
                 "rd25", "rmse", "r2", "tpu_stage"):
        assert name in header
    groups = tmp_path / "res_groups.csv"
    assert groups.exists()
    gheader = groups.read_text().splitlines()[0].split(",")
    for name in ("fitting_group", "alpha", "theta", "alpha_g", "gm",
                 "kc25", "ko25", "gamma25"):
        assert name in gheader
    pts = tmp_path / "res_points.csv"
    lines = pts.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["curve_id", "ci", "a_measured"]
    assert "state" in lines[0].split(",")
    assert len(lines) == 1 + 2 * 150


def test_write_results_json_document(small_fit, tmp_path):
    out = tmp_path / "res.json"
    write_results(small_fit, str(out), format="json", points=True)
    doc = json.loads(out.read_text())
    assert set(doc) == {"curves", "groups", "points"}
    assert len(doc["curves"]) == 2
    row = doc["curves"][0]
    assert {"curve_id", "vcmax25", "rmse", "r2"} <= set(row)
    assert all(p["state"] in ("c", "j", "p") for p in doc["points"][:10])


def test_write_results_deterministic_bytes(small_fit, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_results(small_fit, str(a), points=True)
    write_results(small_fit, str(b), points=True)
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a_groups.csv").read_bytes() == \
           (tmp_path / "b_groups.csv").read_bytes()
