"""Command-line driver: ``haar-ca <command> --config FILE [options]``.

Tabular output is CSV with a header row, floats at 12 significant digits.
Exit codes: 0 success, 1 a verification check failed, 2 invalid input,
3 resource cap refusal, 64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from contextlib import contextmanager
from typing import Iterable, Sequence

from .binomial import binom_mod, floor_half_log, isolated_set, lemma34_check, m0_counts
from .config import load_config
from .errors import HaarCAError, ResourceError
from .group import GroupElement
from .measure import build_regen, sample_path
from .pushforward import (
    Subsequence,
    brute_marginal,
    cesaro_scan,
    check_haar_fixed,
    check_lemma31,
    check_lemma32,
    exact_marginal,
    mc_marginal,
    residue_decomposition,
)
from .shift import CylinderDistribution, haar_marginal

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_RESOURCE, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, tuple) and v and isinstance(v[0], int):
        return format_element(v)
    if isinstance(v, tuple):
        return " ".join(format_element(g) for g in v)
    return str(v)


def format_element(g: GroupElement) -> str:
    return ":".join(str(r) for r in g)


def parse_element(text: str) -> GroupElement:
    return tuple(int(r) for r in text.split(":"))


def write_csv(out, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def distribution_rows(d: CylinderDistribution):
    for word, prob in sorted(d.table.items()):
        yield [format_element(g) for g in word] + [prob]


def read_distribution(text: str) -> dict[tuple[GroupElement, ...], float]:
    """Inverse of the marginal/haar CSV layout (used for round-trip checks)."""
    rows = list(csv.reader(io.StringIO(text)))
    return {tuple(parse_element(c) for c in row[:-1]): float(row[-1]) for row in rows[1:]}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--cap-work", type=int, help="override the exact-engine work cap")
    p.add_argument("--cap-enum", type=int, help="override the enumeration cap")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="haar-ca", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("verify", help="validate the config and summarise the shift")
    _common(p)

    p = sub.add_parser("haar", help="Haar marginal on words of length ELL")
    _common(p)
    p.add_argument("ell", type=int)

    p = sub.add_parser("marginal", help="law of (Phi^n x)_0..m-1")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--engine", choices=("exact", "brute", "mc"), default="exact")
    p.add_argument("--trials", type=int, default=100_000)

    p = sub.add_parser("cesaro", help="TV of Cesàro means to the Haar marginal")
    _common(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--subseq", default="all", help="all | pa:<a> | m0:<a>[,<j>] | res:<j>,<a>")
    p.add_argument("--engine", choices=("exact", "mc"), default="exact")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--decompose", type=int, metavar="A",
                   help="emit per-residue means mod p^A and compare their average to the full mean")

    p = sub.add_parser("isolated", help="(m, l)-isolated positions of row n")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--l", type=int, help="right window (defaults to m)")

    p = sub.add_parser("density", help="density of M0(a) in p^a N below N")
    _common(p)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--N", type=int, required=True)

    p = sub.add_parser("sample", help="one regenerative path with its randomness")
    _common(p)
    p.add_argument("--len", type=int, required=True, dest="length")
    p.add_argument("--force", help="lo:hi, force U = 1 on that inclusive range")
    p.add_argument("--path-index", type=int, default=0)

    p = sub.add_parser("lemmas", help="run a verification check")
    _common(p)
    p.add_argument("--which", choices=("31", "32", "34", "haar"), required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--i", type=int)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--two-sided", action="store_true")
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--m-max", type=int, default=3)
    return parser


@contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"lemmas --which {args.which} needs {', '.join(missing)}")


def _run(args, out) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.cap_work is not None:
        cfg.cap_work = args.cap_work
    if args.cap_enum is not None:
        cfg.cap_enum = args.cap_enum
    shift, measure = cfg.build()
    spec = shift.spec

    if args.command == "verify":
        sampler = build_regen(measure, cfg.alpha)
        rows = [
            ("p", spec.p), ("exponents", " ".join(map(str, spec.exponents))), ("order", spec.order),
            ("s", spec.s), ("fsize", shift.fsize), ("psize", len(shift.P0)), ("r", shift.r),
            ("alpha", sampler.alpha),
        ]
        rows += [(f"pi[{format_element(g)}]", float(v)) for g, v in zip(spec.elements, measure.pi)]
        rows += [(f"gamma_{ell}", shift.gamma(ell)) for ell in range(1, shift.r + 3)]
        write_csv(out, ("quantity", "value"), rows)
        return EXIT_OK

    if args.command == "haar":
        d = haar_marginal(shift, args.ell)
        write_csv(out, [f"x{j}" for j in range(args.ell)] + ["prob"], distribution_rows(d))
        return EXIT_OK

    if args.command == "marginal":
        if args.engine == "exact":
            d = exact_marginal(measure, args.n, args.m, cfg.cap_work)
        elif args.engine == "brute":
            d = brute_marginal(measure, args.n, args.m)
        else:
            d = mc_marginal(build_regen(measure, cfg.alpha), args.n, args.m, args.trials, cfg.seed)
        write_csv(out, [f"x{j}" for j in range(args.m)] + ["prob"], distribution_rows(d))
        return EXIT_OK

    if args.command == "cesaro":
        if args.decompose is not None:
            res = residue_decomposition(measure, args.m, args.N, args.decompose)
            rows = [(r.subsequence, len(r.rows), r.cesaro_at(args.N), None) for r in res["parts"]]
            rows.append(("all", len(res["full"].rows), res["full"].cesaro_at(args.N), None))
            rows.append(("avg", spec.p**args.decompose, res["avg_tv"], res["max_abs_diff"]))
            write_csv(out, ("selector", "count", "cesaro_tv", "max_abs_diff"), rows)
            return EXIT_OK
        sampler = build_regen(measure, cfg.alpha) if args.engine == "mc" else None
        rep = cesaro_scan(measure, args.m, args.N, Subsequence.parse(args.subseq), args.engine,
                          args.trials, cfg.seed, cfg.cap_work, sampler)
        write_csv(out, ("n", "tv_n", "cesaro_tv"), rep.rows)
        return EXIT_OK

    if args.command == "isolated":
        ell = args.m if args.l is None else args.l
        rep = isolated_set(args.n, args.m, ell, spec.p, spec.s)
        write_csv(out, ("k", "coeff"), ((k, binom_mod(args.n, k, spec.p, spec.s)) for k in rep.isolated))
        return EXIT_OK

    if args.command == "density":
        members, base = m0_counts(args.N, args.a, spec.p)
        write_csv(out, ("N", "a", "p", "members", "base", "density"),
                  [(args.N, args.a, spec.p, members, base, members / base)])
        return EXIT_OK

    if args.command == "sample":
        forced = None
        if args.force:
            lo, sep, hi = args.force.partition(":")
            try:
                forced = (int(lo), int(hi))
            except ValueError:
                raise UsageError(f"--force expects lo:hi, got {args.force!r}") from None
        tr = sample_path(build_regen(measure, cfg.alpha), args.length, cfg.seed, forced, args.path_index)
        rows = [(-1, None, None, None, format_element(tr.x_prev))]
        rows += [
            (n, tr.U[n], format_element(tr.W[n]), tr.V[n], format_element(tr.x[n]))
            for n in range(args.length)
        ]
        write_csv(out, ("n", "U", "W", "V", "x"), rows)
        return EXIT_OK

    if args.command == "lemmas":
        if args.which == "31":
            _need(args, "k", "m")
            rep = check_lemma31(build_regen(measure, cfg.alpha), args.k, args.m, args.trials,
                                cfg.seed, args.two_sided)
            rows, ok = rep.as_rows(), rep.passed is not False and rep.prefix_passed is not False
        elif args.which == "32":
            _need(args, "n", "k", "m")
            rep = check_lemma32(measure, args.n, args.k, args.m, args.trials, cfg.seed, cfg.alpha)
            rows, ok = rep.as_rows(), rep.passed is not False
        elif args.which == "haar":
            rep = check_haar_fixed(shift, args.n_max, args.m_max)
            rows, ok = rep.as_rows(), bool(rep.passed)
        else:
            _need(args, "n", "a", "m")
            i = args.i if args.i is not None else floor_half_log(args.n, spec.p)
            count, bound, ok = lemma34_check(args.n, args.a, i, args.m, spec.p, spec.s)
            rows = [("name", "lemma34"), ("n", args.n), ("a", args.a), ("i", i), ("m", args.m),
                    ("count", count), ("bound", bound), ("passed", ok)]
        write_csv(out, ("quantity", "value"), rows)
        return EXIT_OK if ok else EXIT_CHECK_FAILED

    raise UsageError(f"unknown command {args.command!r}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        with _output(args.out) as out:
            return _run(args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"haar-ca: resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except HaarCAError as exc:
        print(f"haar-ca: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
