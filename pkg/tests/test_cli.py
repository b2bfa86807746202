import csv
import io
import json
import math
from pathlib import Path

import pytest

from dbcfstar.cli import main

CH = Path(__file__).resolve().parents[1] / "channels"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", str(CH / "broadcast_bsc.json"))
    assert code == 0
    assert json.loads(out)["ok"] is True


def test_validate_failures(capsys):
    code, _, err = run(capsys, "validate", str(CH / "bad_column.json"))
    assert code == 1 and "column" in err
    code, out, _ = run(capsys, "validate", str(CH / "reversed_bsc.json"))
    assert code == 1 and "no degrading channel found" in out


def test_fstar_csv(capsys):
    code, out, _ = run(capsys, "fstar", "--channel", str(CH / "broadcast_z.json"), "--q", "0.4",
                       "--s-samples", "5")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["s_nats", "fstar_nats", "witness_json"]
    assert len(rows) == 6
    json.loads(rows[3][2])
    code, closed, _ = run(capsys, "fstar", "--channel", "builtin:z:0.1,0.4", "--q", "0.4",
                          "--s-samples", "5", "--method", "closed")
    for a, b in zip(rows[1:], list(csv.reader(io.StringIO(closed)))[1:]):
        assert float(a[1]) == pytest.approx(float(b[1]), abs=1e-6)


def test_fstar_bits(capsys):
    _, nats, _ = run(capsys, "fstar", "--channel", "builtin:bsc:0.1,0.2", "--q", "0.5", "--s-samples", "3")
    _, bits, _ = run(capsys, "--units", "bits", "fstar", "--channel", "builtin:bsc:0.1,0.2", "--q", "0.5",
                     "--s-samples", "3")
    a = list(csv.reader(io.StringIO(nats)))[-1]
    b = list(csv.reader(io.StringIO(bits)))[-1]
    assert float(b[1]) == pytest.approx(float(a[1]) / math.log(2), abs=1e-9)


def test_fstar_out_of_domain(capsys):
    code, _, err = run(capsys, "fstar", "--channel", "builtin:bsc:0.1,0.2", "--q", "1.5")
    assert code == 1 and "error" in err


def test_region_and_plot(capsys, tmp_path):
    csv_path = tmp_path / "r.csv"
    fig = tmp_path / "r.png"
    code, _, _ = run(capsys, "region", "--channel", "builtin:bsc:0.1,0.2", "--lambdas", "11",
                     "--q-grid", "10", "--out", str(csv_path), "--figure", str(fig))
    assert code == 0 and fig.stat().st_size > 0
    header = csv_path.read_text().splitlines()[0]
    assert header.startswith("lambda,R1_nats,R2_nats,q1,q2")
    svg = tmp_path / "r.svg"
    code, _, _ = run(capsys, "plot", str(csv_path), "--out", str(svg), "--title", "BSC")
    assert code == 0 and "<polyline" in svg.read_text()
    first = svg.read_text()
    run(capsys, "plot", str(csv_path), "--out", str(svg), "--title", "BSC")
    assert svg.read_text() == first


def test_symmetry_json(capsys):
    code, out, _ = run(capsys, "symmetry", "--channel", str(CH / "group_additive_z3.json"))
    rep = json.loads(out)
    assert code == 0 and rep["group_size"] == 3 and rep["l_s"] == 3


def test_zregion(capsys):
    code, out, _ = run(capsys, "zregion", "--q", "0.4", "--betas", "0.9,0.6,0.3", "--steps", "5")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t1", "t2", "R1_nats", "R2_nats", "R3_nats"]
    assert all(float(v) >= 0 for r in rows[1:] for v in r[2:])


def test_simulate(capsys, tmp_path):
    args = ["simulate", "--channel", "builtin:bsc:0.1,0.2", "--p1", "0.7,0.3", "--samples", "100000",
            "--seed", "9"]
    code, out, _ = run(capsys, *args)
    rep = json.loads(out)
    assert code == 0 and max(rep["abs_error"]) < 0.01
    _, again, _ = run(capsys, "--threads", "2", *args)
    assert again == out


def test_simulate_requires_seed(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--channel", "builtin:bsc:0.1,0.2", "--p1", "0.5,0.5"])
    assert exc.value.code == 2


def test_unknown_builtin(capsys):
    code, _, err = run(capsys, "symmetry", "--channel", "builtin:nope")
    assert code == 1 and "unknown builtin" in err
