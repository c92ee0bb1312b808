"""Command-line entry point: ``gqht <subcommand> ...``.

Exit codes: 0 on success, 1 when a game aborts or no polynomial or plan can
be built for the input, 2 on bad flags or arguments.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from .dual_qsp import agree_on_frame
from .groups import GroupId, InvalidGroupError, InvalidOrderError, build
from .interp import InfeasibleTargetError, InterpolationTarget, gen_real_poly
from .noise import gate_noise_experiment, protocol_peeling
from .oracle_sim import NonDeterministicOutcomeError, ProtocolViolationError
from .protocols import ProtocolConstructionError, baseline, decider, play, report
from .qsp import NormViolationError, SynthesisError, synthesize
from .su2_core import state_name


class UsageError(Exception):
    pass


FAILURES = (
    ProtocolViolationError,
    NonDeterministicOutcomeError,
    ProtocolConstructionError,
    InfeasibleTargetError,
    NormViolationError,
    SynthesisError,
)


def rational(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _group(text: str) -> GroupId:
    try:
        return GroupId.parse(text)
    except (InvalidGroupError, InvalidOrderError) as e:
        raise UsageError(str(e)) from None


def _json_arg(text: str):
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return json.load(fh)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"invalid JSON: {e}") from None


def _state_out(v):
    name = state_name(v)
    return name if name is not None else [[float(z.real), float(z.imag)] for z in v]


# -- subcommands ---------------------------------------------------------------


def cmd_decide(args) -> dict:
    gid = _group(args.group)
    rep = build(gid)
    if args.hidden is not None:
        if args.hidden not in rep.image:
            raise UsageError(f"{args.hidden!r} is not an element of {gid}; labels: {', '.join(rep.elements)}")
        label = args.hidden
    else:
        label = rep.elements[np.random.default_rng(args.seed).integers(rep.order)]
    return play(rep, label, decider(gid)).to_json()


def cmd_bench(args) -> dict:
    rep = report(_group(args.group))
    out = rep.to_json()
    out["counts"] = dict(sorted(out["counts"].items()))
    return out


def cmd_phases(args) -> dict:
    spec = _json_arg(args.targets)
    try:
        parity = spec["parity"]
        parity = {"odd": 1, "even": 0}.get(parity, parity)
        target = InterpolationTarget.make([tuple(p) for p in spec["points"]], int(parity), float(spec.get("min_gap", 0.1)))
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"bad target description: {e}") from None
    poly = gen_real_poly(target)
    seq = synthesize(poly)
    return {
        "degree": poly.degree,
        "parity": "odd" if poly.parity else "even",
        "chebyshev_coeffs": [float(c) for c in poly.coeffs],
        "phases": [float(p) for p in seq.phases],
        "prep": _state_out(seq.prep),
        "meas": _state_out(seq.meas),
    }


def cmd_noise(args) -> dict:
    gid = _group(args.group)
    if args.epsilon < 0 or not math.isfinite(args.epsilon):
        raise UsageError("--epsilon must be finite and >= 0")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    return {
        "group": str(gid),
        "epsilon": args.epsilon,
        "trials": args.trials,
        "seed": args.seed,
        "failure_rate": gate_noise_experiment(gid, args.epsilon, args.trials, args.seed),
        "peeling": protocol_peeling(gid, args.epsilon, args.seed),
    }


def cmd_frame(args) -> dict:
    angles = _json_arg(args.angles)
    if not isinstance(angles, list) or len(angles) < 1 or not all(isinstance(a, (int, float)) for a in angles):
        raise UsageError("--angles must be a JSON list of numbers")
    if args.hidden is not None:
        hidden = args.hidden
    else:
        hidden = angles[np.random.default_rng(args.seed).integers(len(angles))]
    try:
        rep = agree_on_frame(angles, hidden)
    except ValueError as e:
        if isinstance(e, FAILURES):
            raise
        raise UsageError(str(e)) from None
    out = rep.to_json()
    out["hidden"] = hidden
    return out


def cmd_baseline(args) -> dict:
    gid = _group(args.group)
    base = baseline(gid)
    proto = report(gid)
    out = base.to_json()
    out["per_label"] = dict(sorted(out["per_label"].items()))
    out["protocol_expected_queries"] = rational(proto.expected_queries)
    out["ratio"] = float(base.expected_queries / proto.expected_queries) if proto.expected_queries else None
    return out


# -- plumbing --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gqht", description="Group-channel hypothesis testing with QSP.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("json", "table"), default="table")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decide", parents=[common], help="run one game and print its transcript")
    d.add_argument("--group", required=True)
    g = d.add_mutually_exclusive_group()
    g.add_argument("--hidden")
    g.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_decide)

    b = sub.add_parser("bench", parents=[common], help="exhaustive sweep over hidden labels")
    b.add_argument("--group", required=True)
    b.set_defaults(func=cmd_bench)

    ph = sub.add_parser("phases", parents=[common], help="interpolate targets and synthesize QSP phases")
    ph.add_argument("--targets", required=True, help='JSON (or @file): {"points": [[x, v], ...], "parity": "odd", "min_gap": 1.0}')
    ph.set_defaults(func=cmd_phases)

    n = sub.add_parser("noise", parents=[common], help="gate-noise sweep and channel-noise peeling check")
    n.add_argument("--group", required=True)
    n.add_argument("--epsilon", type=float, required=True)
    n.add_argument("--trials", type=int, default=100)
    n.add_argument("--seed", type=int, default=0)
    n.set_defaults(func=cmd_noise)

    f = sub.add_parser("frame", parents=[common], help="two-party frame agreement over a set of angles")
    f.add_argument("--angles", required=True, help="JSON list of radians, or @file")
    g = f.add_mutually_exclusive_group()
    g.add_argument("--hidden", type=float)
    g.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_frame)

    bl = sub.add_parser("baseline", parents=[common], help="pairwise-elimination reference counts")
    bl.add_argument("--group", required=True)
    bl.set_defaults(func=cmd_baseline)
    return p


def _table(obj, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for k, v in obj.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(_table(v, indent + 1))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}: ({len(v)} entries)")
            for i, item in enumerate(v):
                lines.append(f"{pad}  [{i}]")
                lines.append(_table(item, indent + 2))
        else:
            lines.append(f"{pad}{k}: {v}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except UsageError as e:
        parser.error(str(e))  # exits with 2
    except FAILURES as e:
        print(f"gqht: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    if args.output == "json":
        print(json.dumps(out, sort_keys=True))
    else:
        print(_table(out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
