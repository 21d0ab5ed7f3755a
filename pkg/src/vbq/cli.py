"""Command-line front end.

Subcommands::

    vbq encode POSTERIORS.csv -o OUT.vbq (--lambda L | --median) [--prior SPEC]
               [--mode header-table|external-table] [--table T.csv]
               [--write-table T.csv] [--add-one] [--rate-cap N]
    vbq decode IN.vbq [--table T.csv] [-o OUT.csv]
    vbq sweep POSTERIORS.csv --lambdas a,b,c [--prior SPEC] [--table T.csv]
    vbq baseline {uniform,kmeans,lloyd} POSTERIORS.csv [--delta D] [--k K] [--lambda L]
    vbq analyze {toy,collapse,rate-info,compare} [--seed S] [--lambda L] ...

Files:
  posteriors CSV   header ``mu,sigma2``, one row per dimension
  table CSV        header ``rate,numerator,count``
  codebook CSV     ``# origin: ...`` comment, header ``grid_point,probability``
  sweep CSV        header ``lambda,total_rate_bits,entropy_coded_bits,mse_z,log_q``
  decode CSV       header ``index,rate,numerator,z_hat``

Prior specs: ``std-normal``, ``gaussian:MEAN,VAR``, ``empirical`` (zero-mean
Gaussian fit to the input means), ``empirical:PATH`` (same, fit to the ``mu``
column or single column of PATH), ``piecewise:KNOTS`` (piecewise-linear CDF
fit to the input means).

Errors go to stderr as ``vbq: error[category]: message``; the exit code
depends only on the category (3 invalid argument, 4 parse, 5 degenerate
prior, 6 coding, 7 container, 8 I/O).
"""
import argparse
import contextlib
import math
import sys

import numpy as np

from . import analysis, baselines, codec
from .core import (
    RdConfig,
    fmt,
    quantize_arrays,
    read_posteriors_csv,
    sweep_lambda,
    write_rd_csv,
)
from .errors import InvalidArgumentError, ParseError, VBQError
from .prior import (
    ScaledGaussian,
    StandardNormal,
    fit_empirical_gaussian,
    fit_empirical_piecewise,
)

IO_EXIT = 8


def parse_prior(spec, means=None):
    if spec == "std-normal":
        return StandardNormal()
    kind, _, arg = spec.partition(":")
    if kind == "gaussian":
        try:
            mean, var = (float(v) for v in arg.split(","))
        except ValueError:
            raise InvalidArgumentError(f"bad gaussian prior spec {spec!r}") from None
        return ScaledGaussian(mean, var)
    if kind == "empirical":
        if arg:
            values = _read_values(arg)
        elif means is not None:
            values = means
        else:
            raise InvalidArgumentError("'empirical' prior needs input means or a path")
        return fit_empirical_gaussian(values)
    if kind == "piecewise":
        if means is None:
            raise InvalidArgumentError("'piecewise' prior needs input means")
        try:
            knots = int(arg)
        except ValueError:
            raise InvalidArgumentError(f"bad knot count in {spec!r}") from None
        return fit_empirical_piecewise(means, knots)
    raise InvalidArgumentError(f"unknown prior spec {spec!r}")


def _read_values(path):
    with open(path) as fh:
        first = fh.readline().strip()
    if "mu" in first.split(","):
        return read_posteriors_csv(path)[0]
    try:
        return np.loadtxt(path, ndmin=1, comments="#")
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _parse_lambdas(text):
    try:
        lams = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgumentError(f"bad lambda list {text!r}") from None
    if not lams:
        raise InvalidArgumentError("empty lambda list")
    return lams


def _config(args):
    if args.median:
        return RdConfig(math.inf, rate_cap=args.rate_cap)
    if args.lam is None:
        raise InvalidArgumentError("either --lambda or --median is required")
    if not args.lam > 0:
        raise InvalidArgumentError(f"--lambda must be > 0, got {args.lam}")
    return RdConfig(args.lam, rate_cap=args.rate_cap)


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w") as fh:
            yield fh


def cmd_encode(args):
    mu, sigma2 = read_posteriors_csv(args.posteriors)
    prior = parse_prior(args.prior, mu)
    q = quantize_arrays(mu, sigma2, prior, _config(args))
    pts = q.code_points
    table = None
    if args.mode == "external-table":
        if args.table is None:
            raise InvalidArgumentError("--mode external-table needs --table")
        table = codec.read_table_csv(args.table)
    container = codec.encode_container(pts, prior, mode=args.mode, table=table)
    with open(args.output, "wb") as fh:
        fh.write(container.to_bytes())
    if args.write_table and pts:
        smoothing = "add_one" if args.add_one else "none"
        codec.write_table_csv(args.write_table, codec.build_frequency_table(pts, smoothing))
    k = len(pts)
    per_dim = container.total_bits / k if k else 0.0
    mse = q.mse_z if k else 0.0
    print(f"K={k} total_bits={container.total_bits} header_bits={container.header_bits} "
          f"payload_bits={container.payload_bits} bits_per_dim={fmt(per_dim)} mse_z={fmt(mse)}")
    return 0


def cmd_decode(args):
    with open(args.container, "rb") as fh:
        data = fh.read()
    table = codec.read_table_csv(args.table) if args.table else None
    c = codec.read_container(data, table=table)
    z = c.prior.quantile_array([p.value for p in c.code_points]) if c.k else []
    with _open_out(args.output) as out:
        out.write("index,rate,numerator,z_hat\n")
        for i, (p, zi) in enumerate(zip(c.code_points, z)):
            out.write(f"{i},{p.rate},{p.numerator},{fmt(zi)}\n")
    return 0


def cmd_sweep(args):
    mu, sigma2 = read_posteriors_csv(args.posteriors)
    prior = parse_prior(args.prior, mu)
    table = codec.read_table_csv(args.table) if args.table else None
    points = sweep_lambda((mu, sigma2), prior, _parse_lambdas(args.lambdas), table=table,
                          rate_cap=args.rate_cap)
    with _open_out(args.output) as out:
        write_rd_csv(out, points, comments=[f"posteriors: {args.posteriors}",
                                            f"prior: {prior.describe()}",
                                            f"rate_cap: {args.rate_cap}"])
    return 0


def cmd_baseline(args):
    mu, _ = read_posteriors_csv(args.posteriors)
    if args.method == "uniform":
        if args.delta is None:
            raise InvalidArgumentError("uniform baseline needs --delta")
        _, cb = baselines.uniform_quantize(mu, args.delta)
        param = args.delta
    elif args.method == "kmeans":
        if args.k is None:
            raise InvalidArgumentError("kmeans baseline needs --k")
        cb = baselines.kmeans_codebook(mu, args.k, seed=args.seed)
        param = args.k
    else:
        if args.lam is None:
            raise InvalidArgumentError("lloyd baseline needs --lambda")
        cb = baselines.lloyd_ec_codebook(mu, args.k or 32, args.lam, seed=args.seed)
        param = args.lam
    _, bits, mse = baselines.codebook_quantize(mu, cb)
    if args.codebook_out:
        baselines.write_codebook_csv(args.codebook_out, cb)
    with _open_out(args.output) as out:
        out.write(f"# posteriors: {args.posteriors}\n# seed: {args.seed}\n")
        out.write("method,param,rate_bits,bits_per_dim,mse_z\n")
        out.write(f"{args.method},{fmt(param)},{fmt(bits)},{fmt(bits / mu.size)},{fmt(mse)}\n")
    return 0


def _source(args):
    if args.posteriors:
        return read_posteriors_csv(args.posteriors)
    return analysis.SyntheticSource(args.seed, args.k).posteriors()


def cmd_analyze(args):
    comments = [f"analysis: {args.what}", f"seed: {args.seed}"]
    with _open_out(args.output) as out:
        if args.what == "toy":
            lam = 1.0 if args.lam is None else args.lam
            r = analysis.toy_regression_demo(seed=args.seed, sigma_ratio=args.sigma_ratio, lam=lam)
            comments += [f"lambda: {fmt(lam)}", f"sigma_ratio: {fmt(args.sigma_ratio)}",
                         f"uniform_delta: {fmt(r.uniform_delta)}"]
            for c in comments:
                out.write(f"# {c}\n")
            out.write("method,z_a,z_b,distance,log_q,log_post\n")
            for method, z, d, lq, lp in r.rows():
                out.write(f"{method},{fmt(z[0])},{fmt(z[1])},{fmt(d)},{fmt(lq)},{fmt(lp)}\n")
        elif args.what == "collapse":
            lam = 1.0 if args.lam is None else args.lam
            channels = analysis.collapse_replica(seed=args.seed)
            reports = analysis.collapse_report(channels, StandardNormal(), lam)
            analysis.write_channel_reports(out, reports, comments + [f"lambda: {fmt(lam)}"])
        elif args.what == "rate-info":
            lam = 1.0 if args.lam is None else args.lam
            mu, sigma2 = _source(args)
            prior = parse_prior(args.prior, mu)
            pts = quantize_arrays(mu, sigma2, prior, RdConfig(lam)).code_points
            s = analysis.rate_info_scatter(pts)
            for c in comments + [f"lambda: {fmt(lam)}", f"slope: {fmt(s.slope)}",
                                 f"rank_correlation: {fmt(s.rank_correlation)}"]:
                out.write(f"# {c}\n")
            out.write("rate,info_bits\n")
            for r, h in s.pairs:
                out.write(f"{r},{fmt(h)}\n")
        else:
            mu, sigma2 = _source(args)
            prior = parse_prior(args.prior, mu)
            lams = _parse_lambdas(args.lambdas) if args.lambdas else list(2.0 ** np.arange(-6, 9))
            deltas = list(np.geomspace(0.01, 4.0, 16))
            rows = analysis.compare_rd(mu, sigma2, prior, lams, deltas=deltas,
                                       ks=(2, 4, 8, 16, 32), lloyd_lams=(0.01, 0.03, 0.1, 0.3),
                                       seed=args.seed)
            analysis.write_rd_rows(out, rows, comments + [f"prior: {prior.describe()}"])
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="vbq", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def rd_flags(sp):
        sp.add_argument("--prior", default="std-normal")
        sp.add_argument("--rate-cap", type=int, default=32)

    e = sub.add_parser("encode", help="quantize posteriors and write a container")
    e.add_argument("posteriors")
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--lambda", dest="lam", type=float)
    e.add_argument("--median", action="store_true", help="infinite lambda: every dim -> 1/2")
    e.add_argument("--mode", choices=sorted(codec.MODES), default="header-table")
    e.add_argument("--table", help="frequency table CSV for external-table mode")
    e.add_argument("--write-table", help="write the empirical frequency table CSV here")
    e.add_argument("--add-one", action="store_true", help="add-one smoothing for --write-table")
    e.add_argument("--seed", type=int, default=0)
    rd_flags(e)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="decode a container to a reconstruction CSV")
    d.add_argument("container")
    d.add_argument("--table")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("sweep", help="rate-distortion sweep over lambda")
    s.add_argument("posteriors")
    s.add_argument("--lambdas", required=True)
    s.add_argument("--table")
    s.add_argument("-o", "--output")
    rd_flags(s)
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("baseline", help="posterior-blind scalar quantization of the means")
    b.add_argument("method", choices=["uniform", "kmeans", "lloyd"])
    b.add_argument("posteriors")
    b.add_argument("--delta", type=float)
    b.add_argument("--k", type=int)
    b.add_argument("--lambda", dest="lam", type=float)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--codebook-out")
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_baseline)

    a = sub.add_parser("analyze", help="analysis reports")
    a.add_argument("what", choices=["toy", "collapse", "rate-info", "compare"])
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--lambda", dest="lam", type=float)
    a.add_argument("--lambdas")
    a.add_argument("--posteriors")
    a.add_argument("--k", type=int, default=4096)
    a.add_argument("--prior", default="empirical")
    a.add_argument("--sigma-ratio", type=float, default=0.1)
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VBQError as exc:
        print(f"vbq: error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"vbq: error[io]: {exc}", file=sys.stderr)
        return IO_EXIT


if __name__ == "__main__":
    sys.exit(main())
