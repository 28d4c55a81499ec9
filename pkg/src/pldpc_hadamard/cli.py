"""Command-line front end.

One verb per library operation chain: rate arithmetic, protomatrix
validation and constrained search, density-evolution analysis, lifting,
girth measurement, and channel campaigns.  Every randomized verb takes
an explicit seed; given the same inputs and seed each command writes
byte-identical output for any worker count.

Exit codes: 0 success (including informative no-result answers),
1 usage error, 2 unreadable or malformed input file, 3 infeasible
construction.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

from .decoder import DecoderConfig
from .pexit import (
    ThresholdQuery,
    format_report,
    random_protomatrix,
    threshold_search,
)
from .protograph import (
    InfeasibleError,
    ParseError,
    ProtoConstraints,
    PunctureSpec,
    code_rate,
    code_rate_terms,
    geometry,
    girth,
    lift_two_step,
    load_cpm_table,
    load_protomatrix,
    serialize_cpm_table,
    serialize_protomatrix,
    validate,
)
from .sim import (
    StopRule,
    channel_point,
    emit_results,
    info_bit_count,
    load_campaign,
    run_point,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; this tool
    reserves 2 for unparseable input files."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _punct(args) -> PunctureSpec | None:
    cols = getattr(args, "puncture_cols", None)
    n_h = getattr(args, "puncture_d1h", 0)
    if not cols and not n_h:
        return None
    return PunctureSpec(pvn_columns=tuple(cols or ()), d1h_per_hcn=n_h)


def _deliver(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(f"wrote {out}")
    else:
        print(text, end="")


# ── verbs ────────────────────────────────────────────────────────────

def cmd_rate(args) -> int:
    proto = load_protomatrix(args.proto)
    punct = _punct(args)
    num, den = code_rate_terms(proto, punct)
    print(f"{num}/{den} ≈ {num / den:.3g}")
    if args.z1 is not None and args.z2 is not None:
        geo = geometry(proto, args.z1, args.z2, punct)
        print(f"k = {geo.k}")
        print(f"N = {geo.n_total}")
    return EXIT_OK


def cmd_validate(args) -> int:
    proto = load_protomatrix(args.proto)
    cons = ProtoConstraints(row_weight=proto.r + 2, col_weight_min=1)
    problems = validate(proto, cons)
    if problems:
        for p in problems:
            print(p)
        return EXIT_INFEASIBLE
    print(f"ok: {proto.m}x{proto.n}, order {proto.r}, row weight {proto.r + 2}")
    return EXIT_OK


def _load_search_config(path):
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ValueError(f"cannot read constraints file {path}")
    if "search" not in parser:
        raise ValueError(f"{path}: missing [search] section")
    sec = parser["search"]
    try:
        dims = (sec.getint("m"), sec.getint("n"), sec.getint("r"))
        cons = ProtoConstraints(
            row_weight=sec.getint("row_weight", fallback=dims[2] + 2),
            col_weight_min=sec.getint("col_weight_min", fallback=1),
            col_weight_max=sec.getint("col_weight_max", fallback=10**9),
            max_entry=sec.getint("max_entry", fallback=10**9))
        span = (sec.getfloat("start_db", fallback=-1.40),
                sec.getfloat("floor_db", fallback=-1.59),
                sec.getfloat("step_db", fallback=0.01))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from exc
    if None in dims:
        raise ValueError(f"{path}: m, n and r are required")
    return dims, cons, span


def cmd_search(args) -> int:
    (m, n, r), cons, (start_db, floor_db, step_db) = \
        _load_search_config(args.constraints)
    if cons.row_weight != r + 2:
        raise InfeasibleError(
            f"order {r} checks need row weight {r + 2}, "
            f"constraints demand {cons.row_weight}")
    best_db = None
    best_proto = None
    for cand in range(args.budget):
        # one deterministic sub-stream per candidate
        proto = random_protomatrix(m, n, r, cons,
                                   seed=args.seed * 1_000_003 + cand)
        result = threshold_search(ThresholdQuery(
            proto, start_db=start_db, floor_db=floor_db, step_db=step_db,
            max_inner_iters=args.max_iters, mc_samples=args.w,
            seed=args.seed, workers=args.workers))
        if result.threshold_db is None:
            print(f"candidate {cand}: above start ({start_db:.2f} dB)")
            continue
        print(f"candidate {cand}: threshold {result.threshold_db:.2f} dB")
        if best_db is None or result.threshold_db < best_db:
            best_db, best_proto = result.threshold_db, proto
            if args.out:
                Path(args.out).write_text(serialize_protomatrix(best_proto),
                                          encoding="utf-8")
    if best_proto is None:
        print("none found")
        return EXIT_OK
    print(f"best threshold {best_db:.2f} dB")
    if args.out:
        print(f"wrote {args.out}")
    else:
        print(serialize_protomatrix(best_proto), end="")
    return EXIT_OK


def cmd_pexit(args) -> int:
    proto = load_protomatrix(args.proto)
    result = threshold_search(ThresholdQuery(
        proto, punct=_punct(args), start_db=args.start_db,
        max_inner_iters=args.max_iters, mc_samples=args.w,
        seed=args.seed, workers=args.workers))
    text = format_report(result)
    if result.threshold_db is None:
        text += f"threshold above start ({args.start_db:.2f} dB)\n"
    else:
        text += f"threshold {result.threshold_db:.2f} dB\n"
    _deliver(text, args.out)
    if args.plot:
        _plot_threshold(result, args.plot)
        print(f"plotted {args.plot}")
    return EXIT_OK


def cmd_lift(args) -> int:
    proto = load_protomatrix(args.proto)
    code = lift_two_step(proto, args.z1, args.z2, args.seed)
    _deliver(serialize_cpm_table(code), args.out)
    return EXIT_OK


def cmd_girth(args) -> int:
    if args.table:
        code = load_cpm_table(args.table)
    elif args.proto and args.z1 and args.z2 and args.seed is not None:
        code = lift_two_step(load_protomatrix(args.proto),
                             args.z1, args.z2, args.seed)
    else:
        print("girth needs a CPM table or --proto with --z1/--z2/--seed",
              file=sys.stderr)
        return EXIT_USAGE
    g = girth(code, cap=args.cap)
    print(f"girth >{args.cap}" if isinstance(g, str) else f"girth {g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    camp = load_campaign(args.campaign)
    proto = load_protomatrix(camp.proto)
    punct = None
    if camp.puncture_cols or camp.puncture_d1h:
        punct = PunctureSpec(pvn_columns=camp.puncture_cols,
                             d1h_per_hcn=camp.puncture_d1h)
    rate = float(code_rate(proto, punct))
    code = lift_two_step(proto, camp.z1, camp.z2, camp.seed)
    cfg = DecoderConfig(max_iters=camp.max_iters)
    stop = StopRule(camp.frame_errors, camp.max_frames)
    workers = args.workers if args.workers else camp.workers
    rows = []
    for db in camp.ebn0_db:
        stats = run_point(code, channel_point(rate, db), punct, cfg, stop,
                          camp.seed, workers)
        rows.append((db, stats))
    text = emit_results(rows, info_bit_count(code))
    out = args.out if args.out else (str(camp.out) if camp.out else None)
    _deliver(text, out)
    if args.plot:
        _plot_waterfall(rows, info_bit_count(code), args.plot)
        print(f"plotted {args.plot}")
    return EXIT_OK


# ── optional figures ─────────────────────────────────────────────────

def _agg_pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _plot_threshold(result, path) -> None:
    plt = _agg_pyplot()
    dbs = [s.ebn0_db for s in result.steps]
    iters = [s.iterations for s in result.steps]
    conv = [s.converged for s in result.steps]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot([d for d, c in zip(dbs, conv) if c],
            [i for i, c in zip(iters, conv) if c], "o-", label="converged")
    ax.plot([d for d, c in zip(dbs, conv) if not c],
            [i for i, c in zip(iters, conv) if not c], "x", label="stalled")
    ax.set_xlabel("Eb/N0 (dB)")
    ax.set_ylabel("iterations")
    ax.invert_xaxis()
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _plot_waterfall(rows, k, path) -> None:
    plt = _agg_pyplot()
    rows = sorted(rows, key=lambda t: t[0])
    dbs = [db for db, _ in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(dbs, [max(st.ber(k), 1e-12) for _, st in rows], "o-",
                label="BER")
    ax.semilogy(dbs, [max(st.fer, 1e-12) for _, st in rows], "s-",
                label="FER")
    ax.set_xlabel("Eb/N0 (dB)")
    ax.set_ylabel("error rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ── argument wiring ──────────────────────────────────────────────────

def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def build_parser() -> _Parser:
    top = _Parser(prog="pldpch", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(fn=fn)
        return p

    p = add("rate", cmd_rate, "code rate and geometry of a protomatrix")
    p.add_argument("--proto", required=True)
    p.add_argument("--z1", type=int)
    p.add_argument("--z2", type=int)
    p.add_argument("--puncture-cols", type=_int_list, default=())
    p.add_argument("--puncture-d1h", type=int, default=0)

    p = add("validate", cmd_validate, "structural checks on a protomatrix")
    p.add_argument("--proto", required=True)

    p = add("search", cmd_search, "random-restart threshold search")
    p.add_argument("constraints", help="constraints file ([search] section)")
    p.add_argument("--budget", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--w", type=int, default=10_000)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")

    p = add("pexit", cmd_pexit, "density-evolution threshold of a protomatrix")
    p.add_argument("--proto", required=True)
    p.add_argument("--start-db", type=float, default=-1.40)
    p.add_argument("--w", type=int, default=10_000)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--puncture-cols", type=_int_list, default=())
    p.add_argument("--puncture-d1h", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--plot", help="write a convergence figure (PNG)")

    p = add("lift", cmd_lift, "two-step lift to a CPM table")
    p.add_argument("--proto", required=True)
    p.add_argument("--z1", type=int, required=True)
    p.add_argument("--z2", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = add("girth", cmd_girth, "shortest cycle of a lifted code")
    p.add_argument("table", nargs="?", help="CPM table file")
    p.add_argument("--proto")
    p.add_argument("--z1", type=int)
    p.add_argument("--z2", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cap", type=int, choices=range(2, 13), metavar="[2-12]",
                   default=12)

    p = add("simulate", cmd_simulate, "run a channel campaign")
    p.add_argument("campaign", help="campaign file ([campaign] section)")
    p.add_argument("--workers", type=int, default=0,
                   help="override the campaign's worker count")
    p.add_argument("--out", help="override the campaign's results file")
    p.add_argument("--plot", help="write a waterfall figure (PNG)")

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        if isinstance(exc, InfeasibleError):
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
