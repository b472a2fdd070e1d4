"""Command-line interface.

Exit codes: 0 when every checked inequality holds, 2 when the certificate
is inapplicable, 1 on failure, 64 on usage errors.
"""

import argparse
import sys

from . import fileio
from .analysis import build_analysis
from .approx import approx_bt_reduce
from .balanced import CLASSICAL, VARIANT, bt_reduce
from .certificate import ErrorCertificate, certify
from .errors import EtaTooLarge, HypothesisViolated, DegenerateGap, MorcertError, RankCollapse
from .harness import HarnessConfig, ValidationReport, gen_system, run_validation
from .lti import difference_system
from .lyapunov import OBSERVABILITY, gramians, lowrank_truncate
from .norms import FrequencyGrid, norm_report

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INAPPLICABLE = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _unit_interval(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


def _int_list(text):
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("ranks must be positive")
    return out


def build_parser():
    p = _Parser(prog="morcert", description="Balanced truncation with a-priori error certificates.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random stable system")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--m", type=_positive_int, default=1)
    g.add_argument("--p", type=_positive_int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--decay", type=_unit_interval, default=0.5)
    g.add_argument("--out")

    g = sub.add_parser("gramians", help="Gramians and truncated factors")
    g.add_argument("system")
    grp = g.add_mutually_exclusive_group()
    grp.add_argument("--rank", type=_positive_int)
    grp.add_argument("--tol", type=float)
    g.add_argument("--out")

    g = sub.add_parser("reduce", help="exact balanced truncation")
    g.add_argument("system")
    g.add_argument("--order", type=_positive_int, required=True)
    g.add_argument("--construction", choices=(CLASSICAL, VARIANT), default=CLASSICAL)
    g.add_argument("--factorization", choices=("eigen", "cholesky"), default="eigen")
    g.add_argument("--out")

    g = sub.add_parser("reduce-approx", help="balanced truncation from low-rank factors")
    g.add_argument("system")
    g.add_argument("--factors", required=True)
    g.add_argument("--order", type=_positive_int, required=True)
    g.add_argument("--out")

    g = sub.add_parser("certify", help="error certificate (needs the exact Gramians)")
    g.add_argument("system")
    g.add_argument("--order", type=_positive_int, required=True)
    grp = g.add_mutually_exclusive_group(required=True)
    grp.add_argument("--rank", type=_positive_int)
    grp.add_argument("--factors")
    g.add_argument("--out")

    g = sub.add_parser("norms", help="H-infinity, H2 and Hankel norms")
    g.add_argument("system")
    g.add_argument("--minus", help="second system; report norms of the difference")
    g.add_argument("--points-per-decade", type=_positive_int, default=64)
    g.add_argument("--out")

    g = sub.add_parser("validate", help="end-to-end validation of every certificate inequality")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=_positive_int, default=20)
    g.add_argument("--m", type=_positive_int, default=2)
    g.add_argument("--p", type=_positive_int, default=2)
    g.add_argument("--r", type=_positive_int, default=4)
    g.add_argument("--ranks", type=_int_list, default=[12, 16])
    g.add_argument("--decay", type=_unit_interval, default=0.5)
    g.add_argument("--out-dir")
    g.add_argument("--format", choices=("text", "csv", "json"), default="text")

    g = sub.add_parser("report", help="render a saved validation report")
    g.add_argument("report")
    g.add_argument("--format", choices=("text", "csv"), default="text")
    return p


def _emit(obj, out):
    fileio.write_json(obj, path=out, stream=sys.stdout)


def _cmd_gen(a):
    if a.n < 2:
        raise UsageError("--n must be at least 2")
    cfg = HarnessConfig(n=a.n, m=a.m, p=a.p, r=1, seed=a.seed, decay=a.decay, trunc_ranks=())
    _emit(gen_system(cfg).to_dict(), a.out)
    return EXIT_OK


def _cmd_gramians(a):
    sys_ = fileio.read_system(a.system)
    grams = gramians(sys_)
    doc = {"P": grams.P.tolist(), "Q": grams.Q.tolist(),
           "lambda_min_P": grams.lambda_min_P, "lambda_min_Q": grams.lambda_min_Q}
    if a.rank is not None or a.tol is not None:
        kw = {"rank": min(a.rank, sys_.n)} if a.rank is not None else {"tol": a.tol}
        Sf = lowrank_truncate(grams.P, **kw)
        Rf = lowrank_truncate(grams.Q, side=OBSERVABILITY, **kw)
        doc["factors"] = fileio.factors_to_dict(Sf, Rf)
    _emit(doc, a.out)
    return EXIT_OK


def _cmd_reduce(a):
    sys_ = fileio.read_system(a.system)
    if a.order > sys_.n:
        raise UsageError(f"--order {a.order} exceeds the state dimension {sys_.n}")
    red = bt_reduce(sys_, a.order, construction=a.construction, factorization=a.factorization)
    _emit(red.to_dict(), a.out)
    return EXIT_OK


def _cmd_reduce_approx(a):
    sys_ = fileio.read_system(a.system)
    Sf, Rf = fileio.factors_from_dict(fileio.read_json(a.factors))
    _emit(approx_bt_reduce(sys_, Sf, Rf, a.order).to_dict(), a.out)
    return EXIT_OK


def _cmd_certify(a):
    sys_ = fileio.read_system(a.system)
    grams = gramians(sys_)
    if a.factors:
        Sf, Rf = fileio.factors_from_dict(fileio.read_json(a.factors))
    else:
        k = min(a.rank, sys_.n)
        Sf = lowrank_truncate(grams.P, rank=k)
        Rf = lowrank_truncate(grams.Q, rank=k, side=OBSERVABILITY)
    try:
        cert = certify(build_analysis(sys_, grams, Sf, Rf, a.order))
    except (HypothesisViolated, DegenerateGap, RankCollapse, EtaTooLarge) as exc:
        cert = ErrorCertificate(Sf.eps, Rf.eps, max(Sf.eps, Rf.eps), reason=f"{type(exc).__name__}: {exc}")
    _emit(cert.to_dict(), a.out)
    return EXIT_OK if cert.applicable else EXIT_INAPPLICABLE


def _cmd_norms(a):
    sys_ = fileio.read_system(a.system)
    if a.minus:
        sys_ = difference_system(sys_, fileio.read_system(a.minus))
    grid = FrequencyGrid.for_matrices(sys_.A, points_per_decade=a.points_per_decade)
    _emit(norm_report(sys_, grid).to_dict(), a.out)
    return EXIT_OK


def _cmd_validate(a):
    for k in a.ranks:
        if k > a.n:
            raise UsageError(f"factor rank {k} exceeds n = {a.n}")
    if a.r >= a.n:
        raise UsageError("--r must be below --n")
    cfg = HarnessConfig(n=a.n, m=a.m, p=a.p, r=a.r, seed=a.seed, decay=a.decay, trunc_ranks=tuple(a.ranks),
                        output_dir=a.out_dir)
    rep = run_validation(cfg)
    if a.format == "json":
        fileio.write_json(rep.to_dict(), stream=sys.stdout)
    elif a.format == "csv":
        sys.stdout.write(rep.to_csv())
    else:
        sys.stdout.write(rep.to_text())
    return rep.exit_code()


def _cmd_report(a):
    rep = ValidationReport.from_dict(fileio.read_json(a.report))
    sys.stdout.write(rep.to_csv() if a.format == "csv" else rep.to_text())
    return rep.exit_code()


COMMANDS = {
    "gen": _cmd_gen,
    "gramians": _cmd_gramians,
    "reduce": _cmd_reduce,
    "reduce-approx": _cmd_reduce_approx,
    "certify": _cmd_certify,
    "norms": _cmd_norms,
    "validate": _cmd_validate,
    "report": _cmd_report,
}


def main(argv=None):
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.command is None:
            raise UsageError(parser.format_help())
        return COMMANDS[a.command](a)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n{fileio.SYSTEM_SCHEMA}\n")
        return EXIT_USAGE
    except (MorcertError, OSError, ValueError) as exc:
        sys.stderr.write(f"morcert: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
