"""Command-line interface.

    hideseek eval SPEC --seq "1,2,(2,1)" [--box 1 | --hider 1/2,1/2]
    hideseek gittins SPEC [--hider P] [--tie-order 2,1] [--horizon N]
    hideseek equalize SPEC
    hideseek synthesize SPEC [--mix "(1,2):1/2;(2,1):1/2"] [--tie-rule smallest] [--enumerate-depth D]
    hideseek value SPEC
    hideseek solve SPEC [--seqs "(1,2);(2,1)"]
    hideseek certify SPEC [--strict]
    hideseek rstar [--k 1..11] [--csv]
    hideseek bestpure SPEC --depth D [--tails 6 | --tails "(1,2);(2,1)"] [--mode boxes]
    hideseek simulate SPEC [--seq S --box I] [--trials N] [--seed S]

Exit codes: 0 success, 2 invalid input, 3 unknown verdict under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

from . import __version__
from .analysis import (
    existence_certificate,
    lambda_star,
    q_star,
    r_star_table,
    restricted_game_solve,
    two_box_solution,
    value_equal_q,
    value_q1,
)
from .bestpure import DEFAULT_TAIL_LENGTH, best_pure_two_box, default_tails, equalized_payoff_check
from .core import MixedSearchStrategy, SearchSequence, ValidationError, precision_mode
from .gittins import TieBreakRule, best_response, consistent_sequences, equalizing_strategy
from .payoff import expected_time, expected_time_mixed
from .serialize import (
    digest,
    encode,
    load_spec,
    parse_hider,
    parse_mixture,
    spec_to_dict,
)
from .sim import SimConfig, estimate_expected_time, estimate_mixed
from .synthesis import RULES, pure_from_mixed

EXIT_OK, EXIT_INVALID, EXIT_UNKNOWN = 0, 2, 3


class Report:
    def __init__(self, command: str, spec=None):
        self.command = command
        self.spec = spec
        self.outputs: dict = {}
        self.provenance = ""

    def as_dict(self, seconds: float) -> dict:
        echo = spec_to_dict(self.spec) if self.spec is not None else None
        return {
            "command": self.command,
            "input": echo,
            "input_digest": digest(echo) if echo is not None else None,
            "outputs": encode(self.outputs),
            "provenance": self.provenance,
            "timing": {"seconds": round(seconds, 6)},
        }


def _box(value: str, n: int) -> int:
    try:
        box = int(value)
    except ValueError as exc:
        raise ValidationError(f"box must be an integer, got {value!r}") from exc
    if not 1 <= box <= n:
        raise ValidationError(f"box must lie in 1..{n}")
    return box - 1


def _k_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


def _truncated(prefix, full: bool, shown: int = 48) -> str:
    head = prefix if full or len(prefix) <= shown else prefix[:shown]
    text = ",".join(str(b + 1) for b in head) + ",..."
    return text if len(head) == len(prefix) else f"{text} ({len(prefix)} searches computed)"


def _default_mixture(spec):
    if spec.equal_detection():
        return value_equal_q(spec).searcher_optimal
    if spec.n == 2 and spec.has_root:
        sol = two_box_solution(spec)
        if sol.lead:
            raise ValidationError("the optimal mixture starts with a common lead; pass --mix explicitly")
        return sol.mixture
    raise ValidationError("no default mixture for this game; pass --mix")


def cmd_eval(args, report: Report):
    spec = report.spec
    seq = SearchSequence.parse(args.seq)
    seq.check_boxes(spec.n)
    report.outputs["sequence"] = seq.canonical()
    if args.hider:
        hider = parse_hider(args.hider, spec.n, precision_mode())
        report.outputs["payoff"] = expected_time_mixed(spec, hider, MixedSearchStrategy.pure(seq))
    elif args.box:
        report.outputs["payoff"] = expected_time(spec, _box(args.box, spec.n), seq)
    else:
        report.outputs["payoffs"] = [expected_time(spec, i, seq) for i in range(spec.n)]
    if spec.n == 2:
        report.outputs["equalized"] = equalized_payoff_check(spec, seq).equal
    report.provenance = "closed-form payoff"


def cmd_gittins(args, report: Report):
    spec = report.spec
    hider = parse_hider(args.hider, spec.n, precision_mode()) if args.hider else equalizing_strategy(spec)
    rule = TieBreakRule(tuple(_box(x, spec.n) for x in args.tie_order.split(","))) if args.tie_order else None
    run = best_response(spec, hider, rule, args.horizon)
    report.outputs["hider"] = hider
    report.outputs["periodic"] = run.periodic
    report.outputs["sequence"] = run.sequence if run.periodic else ",".join(str(b + 1) for b in run.prefix) + ",..."
    report.outputs["near_ties"] = run.near_ties
    if args.all and spec.has_root:
        report.outputs["consistent_cycles"] = [s for _, s in consistent_sequences(spec)]
    report.provenance = "Gittins index policy"


def cmd_equalize(args, report: Report):
    report.outputs["equalizing_strategy"] = equalizing_strategy(report.spec)
    report.provenance = "p_i proportional to t_i / q_i"


def cmd_synthesize(args, report: Report):
    spec = report.spec
    theta = parse_mixture(args.mix, precision_mode()) if args.mix else _default_mixture(spec)
    result = pure_from_mixed(spec, theta, args.tie_rule, args.enumerate_depth)
    report.outputs["mixture"] = theta
    report.outputs["schedule"] = result.schedule.format()
    report.outputs["payoffs"] = result.payoffs
    if result.exact_witness:
        report.outputs["sequence"] = result.sequence
    else:
        report.outputs["sequence"] = None
        report.outputs["truncated_prefix"] = _truncated(result.prefix, args.json)
        report.outputs["schedule_never_repeats"] = result.schedule.aperiodic
        report.outputs["enclosures"] = result.enclosures
    if args.enumerate_depth:
        report.outputs["alternatives"] = result.alternatives
    report.provenance = f"greedy block schedule ({args.tie_rule})"


def cmd_value(args, report: Report):
    spec = report.spec
    if all(q == 1 for q in spec.detection):
        res = value_q1(spec)
    elif spec.equal_detection():
        res = value_equal_q(spec)
        report.outputs["q_star"] = q_star(spec)
    elif spec.n == 2 and spec.has_root:
        res = two_box_solution(spec).report()
    else:
        res = restricted_game_solve(spec, [s for _, s in consistent_sequences(spec)])
    report.outputs.update(value=res.value, hider_optimal=res.hider_optimal, searcher_optimal=res.searcher_optimal)
    if spec.has_root and spec.n <= 8 and res.provenance.startswith("equal-q"):
        report.outputs["lambda_star"] = lambda_star(spec, value=res.value)[0]
    report.provenance = res.provenance


def cmd_solve(args, report: Report):
    spec = report.spec
    if args.seqs:
        seqs = [SearchSequence.parse(x) for x in args.seqs.split(";") if x.strip()]
    else:
        seqs = [s for _, s in consistent_sequences(spec)]
    res = restricted_game_solve(spec, seqs)
    report.outputs.update(value=res.value, hider_optimal=res.hider_optimal, searcher_optimal=res.searcher_optimal,
                          support=seqs)
    report.provenance = res.provenance


def cmd_certify(args, report: Report):
    spec = report.spec
    cert = existence_certificate(spec)
    report.outputs.update(verdict=cert.verdict, rule=cert.rule, value=cert.value, bound_values=cert.bound_values,
                          witness=cert.witness)
    if cert.synthesis is not None and not cert.synthesis.exact_witness:
        syn = cert.synthesis
        report.outputs["truncated_witness"] = _truncated(syn.prefix, args.json)
        report.outputs["enclosure_width"] = syn.max_gap()
    if cert.notes:
        report.outputs["notes"] = cert.notes
    report.provenance = cert.rule
    if args.strict and cert.verdict == "unknown":
        return EXIT_UNKNOWN
    return EXIT_OK


def cmd_rstar(args, report: Report):
    table = r_star_table(_k_range(args.k))
    report.outputs["table"] = [{"k": k, "r_star": f"{r:.9f}"} for k, r in table]
    report.provenance = "bisection on r < min(lambda_1, 1 - lambda_1)"
    if args.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "r_star"])
        for k, r in table:
            writer.writerow([k, f"{r:.9f}"])
        report.csv = buf.getvalue()


def cmd_bestpure(args, report: Report):
    spec = report.spec
    if args.tails is None:
        tails = None
    elif args.tails.strip().isdigit():
        tails = default_tails(spec, args.mode, int(args.tails))
    else:
        tails = [SearchSequence.parse(x) for x in args.tails.split(";") if x.strip()]
    res = best_pure_two_box(spec, args.depth, tails, args.mode)
    report.outputs.update(best=res.best, value=res.value, ties=res.ties, lower_bound=res.lower_bound,
                          game_value=res.game_value, slack=res.slack, nodes=res.nodes, pruned=res.pruned,
                          wall_seconds=round(res.seconds, 6))
    report.provenance = f"branch and bound over {args.mode}, depth {args.depth}"


def cmd_simulate(args, report: Report):
    spec = report.spec
    config = SimConfig(args.trials, args.seed)
    if args.seq:
        seq = SearchSequence.parse(args.seq)
        box = _box(args.box or "1", spec.n)
        est = estimate_expected_time(spec, box, seq, config)
        report.outputs["exact"] = expected_time(spec, box, seq)
    else:
        res = value_equal_q(spec) if spec.equal_detection() else value_q1(spec)
        est = estimate_mixed(spec, res.hider_optimal, res.searcher_optimal, config)
        report.outputs["exact"] = res.value
    report.outputs.update(mean=est.mean, std_error=est.std_error, trials=est.trials, censored=est.censored)
    report.provenance = "Monte Carlo (Philox streams keyed by seed and chunk)"


COMMANDS = {
    "eval": cmd_eval, "gittins": cmd_gittins, "equalize": cmd_equalize, "synthesize": cmd_synthesize,
    "value": cmd_value, "solve": cmd_solve, "certify": cmd_certify, "rstar": cmd_rstar,
    "bestpure": cmd_bestpure, "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hideseek", description="Search games: payoffs, Gittins sequences, pure strategies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, spec=True):
        p = sub.add_parser(name, help=help_text)
        if spec:
            p.add_argument("spec", help="game spec JSON file")
        p.add_argument("--json", action="store_true", help="emit the full JSON report")
        return p

    p = add("eval", "expected search time of a sequence")
    p.add_argument("--seq", required=True, help='sequence literal, e.g. "1,2,(2,1)"')
    p.add_argument("--box", help="hider box (1-based)")
    p.add_argument("--hider", help="hider distribution, comma separated")

    p = add("gittins", "Gittins best response")
    p.add_argument("--hider", help="hider distribution (default: equalizing)")
    p.add_argument("--tie-order", help="tie-break order of boxes, e.g. 2,1")
    p.add_argument("--horizon", type=int)
    p.add_argument("--all", action="store_true", help="also list every consistent cycle")

    add("equalize", "equalizing hider strategy")

    p = add("synthesize", "pure strategy equivalent to a mixture of block cycles")
    p.add_argument("--mix", help='mixture, e.g. "(1,2):1/2;(2,1):1/2" (default: optimal mixture)')
    p.add_argument("--tie-rule", choices=RULES, default="smallest")
    p.add_argument("--enumerate-depth", type=int)

    add("value", "game value for the solved classes")

    p = add("solve", "restricted matrix game")
    p.add_argument("--seqs", help='searcher sequences separated by ";" (default: consistent cycles)')

    p = add("certify", "existence of an optimal pure strategy")
    p.add_argument("--strict", action="store_true", help="exit 3 when the verdict is unknown")

    p = add("rstar", "r* table for t_1 = t_2, r_1^k = r_2^(k+1)", spec=False)
    p.add_argument("--k", default="1..12", help="k values, e.g. 1..11 or 3,7")
    p.add_argument("--csv", action="store_true")

    p = add("bestpure", "two-box best pure strategy search")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--tails", help=f"max tail length (default {DEFAULT_TAIL_LENGTH}) or explicit cycles")
    p.add_argument("--mode", choices=("boxes", "blocks"), default="boxes")

    p = add("simulate", "Monte Carlo estimate")
    p.add_argument("--seq", help="sequence (default: optimal mixture against the optimal hider)")
    p.add_argument("--box", help="hider box for --seq (default 1)")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _print_text(report: Report, body: dict) -> None:
    print(f"{report.command}: {body['provenance']}")
    for key, value in body["outputs"].items():
        print(f"  {key}: {json.dumps(value) if isinstance(value, (list, dict)) else value}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        spec = load_spec(args.spec) if hasattr(args, "spec") else None
        report = Report(args.command, spec)
        code = COMMANDS[args.command](args, report) or EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    body = report.as_dict(time.perf_counter() - started)
    if args.json:
        print(json.dumps(body, indent=2, sort_keys=True))
    elif getattr(report, "csv", None):
        sys.stdout.write(report.csv)
    else:
        _print_text(report, body)
    return code


if __name__ == "__main__":
    sys.exit(main())
