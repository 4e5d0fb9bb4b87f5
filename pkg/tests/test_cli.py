import csv
import json
import math
import os

import pytest

from relaykit import cli


def run(argv):
    try:
        return cli.main(argv)
    except SystemExit as exc:  # argparse usage errors
        return exc.code


def test_bounds_direct_link(capsys):
    assert run(["bounds", "--gains", "1,1,1", "--rate-bits", "1"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["b1"] == 1.0
    assert rec["hdp1"]["branch"] == "DirectLink"
    assert rec["b_lb"] == pytest.approx(0.75)


def test_bounds_low_rate(capsys):
    assert run(["bounds", "--gains", "0.1,1,1", "--rate-bits", "0.001"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["b1"] == pytest.approx(2.0, abs=1e-2)
    assert rec["rate_nats"] == pytest.approx(0.001 * math.log(2.0), rel=1e-15)
    assert set(rec["hdp2"]["split"]) == {"x1", "x2", "x3", "t1", "t2"}
    assert len(rec["hdp2"]["power"]["coherent"]) == 3


def test_bounds_limit_tag(capsys):
    assert run(["bounds", "--gains", "0.1,1,1", "--rate-limit", "inf"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["b1"] == pytest.approx(6.0)


@pytest.mark.parametrize(
    "argv",
    [
        ["bounds", "--rate-bits", "1"],
        ["bounds", "--gains", "1,x,1", "--rate-bits", "1"],
        ["bounds", "--gains", "1,-1,1", "--rate-bits", "1"],
        ["dmt", "--mux", "1.5", "--out", "x.csv"],
        ["outage", "--protocols", "hdp1", "--out", "x.csv"],
        ["outage", "--protocols", "df", "--samples", "10", "--out", "x.csv"],
        ["outage", "--protocols", "df", "--snr-db", "5:1:1", "--out", "x.csv"],
    ],
)
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(argv) == 2
    assert not os.path.exists(tmp_path / "x.csv")


def _outage(tmp_path, name, extra=()):
    out = tmp_path / name
    argv = ["outage", "--protocols", "lb,df,hdp1,hdp2", "--rate-bits", "1", "--snr-db", "0:20:2",
            "--samples", "20000", "--seed", "5", "--out", str(out), *extra]
    assert run(argv) == 0
    return out


def test_outage_csv_header_and_rows(tmp_path):
    out = _outage(tmp_path, "a.csv")
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["snr_db", "rate_bits", "protocol", "estimator", "outage", "ci_lo", "ci_hi", "n_samples", "seed"]
    assert len(rows) == 1 + 4 * 11
    assert b"\r" not in out.read_bytes()
    protos = {r[2] for r in rows[1:]}
    assert protos == {"FullDuplexLB", "FullDuplexDF", "HDP1", "HDP2"}
    for r in rows[1:]:
        assert float(r[5]) <= float(r[4]) <= float(r[6])


def test_outage_is_deterministic_and_has_sidecar(tmp_path):
    a = _outage(tmp_path, "a.csv")
    b = _outage(tmp_path, "b.csv", ["--workers", "2"])
    assert a.read_bytes() == b.read_bytes()
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["config"]["seed"] == 5
    assert meta["config"]["rate_bits"] == 1.0
    assert "relaykit_version" in meta


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RELAYKIT_SEED", "77")
    out = tmp_path / "d.csv"
    assert run(["outage", "--protocols", "direct", "--snr-db", "0:4:1", "--samples", "10000", "--out", str(out)]) == 0
    rows = list(csv.reader(open(out)))
    assert rows[1][-1] == "77"


def test_fig2_preset_is_analytic(tmp_path):
    out = tmp_path / "fig2.csv"
    assert run(["outage", "--preset", "fig2", "--out", str(out)]) == 0
    rows = list(csv.reader(open(out)))
    labels = {r[2] for r in rows[1:]}
    assert len(labels) == 7
    assert {r[3] for r in rows[1:]} == {"Analytic"}


def test_io_failure_exit_4_and_no_partials(tmp_path):
    out = tmp_path / "missing" / "x.csv"
    assert run(["outage", "--protocols", "direct", "--snr-db", "0:4:1", "--samples", "10000", "--out", str(out)]) == 4
    assert not any(p.name.endswith(".partial") for p in tmp_path.rglob("*"))


def test_numeric_failure_exit_3(tmp_path):
    out = tmp_path / "dmt.csv"
    argv = ["dmt", "--mux", "0.25", "--protocols", "hdp1", "--samples", "10000", "--out", str(out)]
    assert run(argv) == 3
    assert not out.exists()
    assert not (tmp_path / "dmt.csv.partial").exists()


def test_dmt_csv(tmp_path):
    out = tmp_path / "dmt.csv"
    argv = ["dmt", "--mux", "0.75", "--protocols", "hdp1,hdp2", "--snr-db", "10:25:5", "--samples", "200000",
            "--out", str(out)]
    assert run(argv) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == cli.DMT_HEADER
    assert len(rows) == 1 + 2 * 4


def test_delay_limited_table_header(tmp_path, monkeypatch):
    calls = {}

    def fake_table(budget, seed):
        calls["args"] = (budget, seed)
        from relaykit.power import TABLE_ROWS, DelayLimitedTable

        return DelayLimitedTable(2.17, 2.76, 3.33, 5.45, 3.02, 5.36, {n: 0.001 for n, _, _ in TABLE_ROWS})

    monkeypatch.setattr(cli.power, "delay_limited_table", fake_table)
    out = tmp_path / "t.csv"
    assert run(["delay-limited", "--preset", "table1", "--samples", "1000000", "--seed", "3", "--out", str(out)]) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["quantity", "value_db", "stderr_db"]
    assert len(rows) == 7
    assert calls["args"] == (1000000, 3)
    out5 = tmp_path / "f5.csv"
    assert run(["delay-limited", "--preset", "fig5", "--samples", "1000000", "--out", str(out5)]) == 0
    rows = list(csv.reader(open(out5)))
    assert rows[0] == ["rate_nats", "curve", "snr_linear"]
