import csv
import io
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import BACKENDS
from vbq import use_backend
from vbq.baselines import codebook_quantize, read_codebook_csv, uniform_quantize
from vbq.cli import main, parse_prior
from vbq.codec import build_frequency_table, encode_container, read_container, write_table_csv
from vbq.core import RdConfig, fmt, quantize_arrays, read_posteriors_csv, sweep_lambda
from vbq.dyadic import HALF
from vbq.errors import InvalidArgumentError
from vbq.prior import ScaledGaussian, StandardNormal

DATA = Path(__file__).parent / "data"
POST = DATA / "posteriors_256.csv"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def summary(line):
    return dict(kv.split("=") for kv in line.split())


def test_encode_decode_medians(tmp_path, capsys):
    p = tmp_path / "p.csv"
    p.write_text("mu,sigma2\n0,1\n0,1\n0,1\n")
    code, out, err = run(capsys, "encode", p, "-o", tmp_path / "m.vbq", "--lambda", 10)
    assert code == 0 and err == ""
    s = summary(out)
    assert s["K"] == "3"
    assert int(s["total_bits"]) == int(s["header_bits"]) + int(s["payload_bits"])
    assert read_container((tmp_path / "m.vbq").read_bytes()).code_points == [HALF] * 3
    code, out, _ = run(capsys, "decode", tmp_path / "m.vbq")
    assert code == 0
    assert out.splitlines() == ["index,rate,numerator,z_hat", "0,1,1,0", "1,1,1,0", "2,1,1,0"]


def test_encode_median_flag(tmp_path, capsys):
    code, out, _ = run(capsys, "encode", POST, "-o", tmp_path / "x.vbq", "--median")
    assert code == 0
    mu, _ = read_posteriors_csv(POST)
    assert float(summary(out)["mse_z"]) == float(fmt(np.mean(mu ** 2)))


def test_golden_container(tmp_path, capsys):
    for be in BACKENDS:
        with use_backend(be):
            code, _, _ = run(capsys, "encode", POST, "-o", tmp_path / f"{be}.vbq", "--lambda", 0.1)
        assert code == 0
        assert (tmp_path / f"{be}.vbq").read_bytes() == (DATA / "golden_256.vbq").read_bytes()
    code, out, _ = run(capsys, "decode", DATA / "golden_256.vbq")
    rows = list(csv.DictReader(io.StringIO(out)))
    mu, s2 = read_posteriors_csv(POST)
    q = quantize_arrays(mu, s2, StandardNormal(), RdConfig(0.1))
    assert [(int(r["rate"]), int(r["numerator"])) for r in rows] == list(zip(q.rates.tolist(), q.numerators.tolist()))
    assert [float(r["z_hat"]) for r in rows] == q.reconstruction.tolist()


def test_sweep_reproduces_encode(tmp_path, capsys):
    _, enc, _ = run(capsys, "encode", POST, "-o", tmp_path / "x.vbq", "--lambda", 0.1)
    code, out, _ = run(capsys, "sweep", POST, "--lambdas", "0.1")
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0] == "lambda,total_rate_bits,entropy_coded_bits,mse_z,log_q"
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    s = summary(enc)
    assert row["entropy_coded_bits"] == s["total_bits"]
    assert row["mse_z"] == s["mse_z"]


def test_sweep_matches_library_exactly(tmp_path, capsys):
    out_path = tmp_path / "rd.csv"
    code, _, _ = run(capsys, "sweep", POST, "--lambdas", "0.5,0.015625,4", "-o", out_path)
    assert code == 0
    mu, s2 = read_posteriors_csv(POST)
    pts = sweep_lambda((mu, s2), StandardNormal(), [0.5, 0.015625, 4])
    rows = [l for l in out_path.read_text().splitlines() if not l.startswith("#")][1:]
    for line, p in zip(rows, pts):
        vals = line.split(",")
        assert float(vals[0]) == p.lam and int(vals[1]) == p.total_rate_bits
        assert int(vals[2]) == p.entropy_coded_bits
        assert float(vals[3]) == p.mse_z and float(vals[4]) == p.log_q


def test_external_table_mode(tmp_path, capsys):
    mu, s2 = read_posteriors_csv(POST)
    pts = quantize_arrays(mu, s2, StandardNormal(), RdConfig(0.1)).code_points
    write_table_csv(tmp_path / "t.csv", build_frequency_table(pts, "add_one"))
    code, _, _ = run(capsys, "encode", POST, "-o", tmp_path / "e.vbq", "--lambda", 0.1,
                     "--mode", "external-table", "--table", tmp_path / "t.csv")
    assert code == 0
    code, _, err = run(capsys, "decode", tmp_path / "e.vbq")
    assert code == 7 and err.startswith("vbq: error[container]")
    code, out, _ = run(capsys, "decode", tmp_path / "e.vbq", "--table", tmp_path / "t.csv")
    assert code == 0 and len(out.splitlines()) == 257


def test_write_table(tmp_path, capsys):
    code, _, _ = run(capsys, "encode", POST, "-o", tmp_path / "x.vbq", "--lambda", 0.1,
                     "--write-table", tmp_path / "t.csv")
    assert code == 0
    c = read_container((tmp_path / "x.vbq").read_bytes())
    assert (tmp_path / "t.csv").read_text().startswith("rate,numerator,count\n")
    from vbq.codec import read_table_csv
    assert read_table_csv(tmp_path / "t.csv") == c.table


def test_baseline_uniform_matches_library(capsys):
    code, out, _ = run(capsys, "baseline", "uniform", POST, "--delta", 0.5)
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    vals = dict(zip(lines[0].split(","), lines[1].split(",")))
    mu, _ = read_posteriors_csv(POST)
    _, bits, mse = codebook_quantize(mu, uniform_quantize(mu, 0.5)[1])
    assert float(vals["rate_bits"]) == bits and float(vals["mse_z"]) == mse


@pytest.mark.parametrize("args", [["kmeans", "--k", "4"], ["lloyd", "--lambda", "0.05"]])
def test_baseline_codebooks(tmp_path, capsys, args):
    code, out, _ = run(capsys, "baseline", args[0], POST, *args[1:], "--codebook-out", tmp_path / "cb.csv")
    assert code == 0
    cb = read_codebook_csv(tmp_path / "cb.csv")
    mu, _ = read_posteriors_csv(POST)
    _, bits, _ = codebook_quantize(mu, cb)
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert float(lines[1].split(",")[2]) == pytest.approx(bits, rel=1e-12)


@pytest.mark.parametrize("what", ["toy", "collapse", "rate-info", "compare"])
def test_analyze_reports_are_deterministic(capsys, what):
    argv = ["analyze", what, "--seed", "3", "--k", "500", "--lambdas", "0.1,1,10"]
    code, a, _ = run(capsys, *argv)
    assert code == 0
    _, b, _ = run(capsys, *argv)
    assert a == b
    assert "# seed: 3" in a


def test_analyze_collapse_csv(capsys):
    code, out, _ = run(capsys, "analyze", "collapse")
    rows = list(csv.DictReader(l for l in out.splitlines() if not l.startswith("#")))
    assert [r["channel"] for r in rows] == [f"ch{c}" for c in range(1, 7)]


def test_error_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("mu,var\n1,2\n")
    code, out, err = run(capsys, "encode", bad, "-o", tmp_path / "x.vbq", "--lambda", 1)
    assert code == 4 and out == "" and "sigma2" in err and err.startswith("vbq: error[parse]")
    code, _, err = run(capsys, "encode", POST, "-o", tmp_path / "x.vbq")
    assert code == 3 and "error[invalid-argument]" in err
    code, _, _ = run(capsys, "encode", POST, "-o", tmp_path / "x.vbq", "--lambda", -1)
    assert code == 3
    (tmp_path / "junk.vbq").write_bytes(b"JUNKJUNKJUNK")
    code, _, err = run(capsys, "decode", tmp_path / "junk.vbq")
    assert code == 7
    code, _, err = run(capsys, "decode", tmp_path / "missing.vbq")
    assert code == 8 and "error[io]" in err
    same = tmp_path / "same.csv"
    same.write_text("mu,sigma2\n1,1\n1,1\n")
    code, _, err = run(capsys, "encode", same, "-o", tmp_path / "x.vbq", "--lambda", 1, "--prior", "empirical")
    assert code == 5 and "degenerate" in err


def test_parse_prior():
    assert parse_prior("std-normal") == StandardNormal()
    assert parse_prior("gaussian:0.5,2") == ScaledGaussian(0.5, 2.0)
    assert parse_prior("empirical", np.array([-1.0, 1.0])) == ScaledGaussian(0.0, 1.0)
    assert parse_prior(f"empirical:{POST}").mean == 0.0
    assert parse_prior("piecewise:8", np.linspace(-1, 1, 100)).knots_z.size == 8
    for bad in ("cauchy", "gaussian:1", "piecewise:x"):
        with pytest.raises(InvalidArgumentError):
            parse_prior(bad, np.zeros(3))


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "vbq.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for word in ("encode", "decode", "sweep", "baseline", "analyze", "mu,sigma2", "rate,numerator,count"):
        assert word in r.stdout


def test_prior_from_empirical_file_roundtrip(tmp_path, capsys):
    code, _, _ = run(capsys, "encode", POST, "-o", tmp_path / "g.vbq", "--lambda", 0.3,
                     "--prior", f"empirical:{POST}")
    assert code == 0
    c = read_container((tmp_path / "g.vbq").read_bytes())
    mu, _ = read_posteriors_csv(POST)
    assert c.prior == ScaledGaussian(0.0, float(np.var(mu)))
    assert not math.isnan(c.prior.variance)
