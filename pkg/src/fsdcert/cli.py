"""Command-line entry point.

Exit codes: 0 success / true verdict, 1 false verdict or violation found,
2 usage error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import convergence_pls as cpls
from . import decoder as dec
from . import fsd, gadgets, protocol
from .pls import CertificateAssignment, SoundnessBudget, run_verifier, search_soundness

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _read_instance(args):
    path = getattr(args, "instance", None)
    if path in (None, "-"):
        text = sys.stdin.read()
    else:
        with open(path) as fh:
            text = fh.read()
    if not text.strip():
        raise UsageError("no instance given (use --instance FILE or pipe one on stdin)")
    try:
        return fsd.loads_instance(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad instance: {exc}") from None


def _parse_config(text, dyn):
    try:
        x = [int(s) for s in text.replace(" ", "").split(",") if s]
        fsd.apply_global(dyn, x)
    except (ValueError, fsd.MalformedConfiguration) as exc:
        raise UsageError(f"bad configuration: {exc}") from None
    return x


# --------------------------------------------------------------------------
# commands


def cmd_simulate(args, out):
    dyn = _read_instance(args)
    if args.x is not None:
        x0 = _parse_config(args.x, dyn)
    else:
        rng = np.random.default_rng(args.seed)
        x0 = fsd.random_configurations(dyn.n, dyn.q, 1, rng)[0].tolist()
    orb = fsd.orbit(dyn, x0, args.steps)
    if args.format == "csv":
        out.write("step," + ",".join(str(v) for v in dyn.graph.nodes) + "\n")
        for t, x in enumerate(orb.configurations):
            out.write(f"{t}," + ",".join(str(s) for s in x) + "\n")
    else:
        out.write(_dump({"start": list(x0), "kind": orb.kind, "transient": orb.transient,
                         "period": orb.period,
                         "configurations": [list(x) for x in orb.configurations]}))
    return EXIT_OK


def cmd_converge(args, out):
    dyn = _read_instance(args)
    if args.samples:
        v = fsd.converges_within_sampled(dyn, args.k, args.samples, args.seed)
        mode = "sampled"
    else:
        v = fsd.converges_within(dyn, args.k, cap=args.budget, workers=args.threads)
        mode = "exhaustive"
    out.write(_dump({"k": args.k, "mode": mode, "converges": v.holds, "checked": v.checked,
                     "counterexample": list(v.counterexample) if v.counterexample else None,
                     "max_time": v.max_time}))
    return EXIT_OK if v.holds else EXIT_FALSE


def cmd_certify(args, out):
    dyn = _read_instance(args)
    verifier = cpls.make_verifier(args.k, dyn.id_max, cap=args.budget)
    if args.verify:
        with open(args.verify) as fh:
            assignment = CertificateAssignment.from_json(fh.read())
    else:
        assignment = cpls.honest_prover(dyn, args.k)
    if args.prove:
        report = cpls.bound_report(dyn, args.k, assignment)
        out.write(_dump({"certificates": json.loads(assignment.to_json())["certificates"],
                         "bounds": report.to_dict()}))
        return EXIT_OK
    outcome = run_verifier(dyn, assignment, verifier, workers=args.threads)
    result = {"outcome": outcome.to_dict(),
              "bounds": cpls.bound_report(dyn, args.k, assignment).to_dict()}
    ok = outcome.accepted
    if args.soundness:
        budget = SoundnessBudget(exhaustive_bits=-1, random_trials=args.trials,
                                 mutation_trials=args.trials, seed=args.seed)
        honest = cpls.honest_prover(dyn, args.k)
        rep = search_soundness(dyn, verifier, budget, honest=honest,
                               mutate=lambda a, rng: cpls.mutate_assignment(a, rng, dyn, args.k))
        result["soundness"] = {"verdict": rep.verdict, "method": rep.method,
                               "coverage": rep.coverage}
        ok = ok and not rep.forged
    out.write(_dump(result))
    return EXIT_OK if ok else EXIT_FALSE


def _gadget_instance(args):
    try:
        return _build_gadget(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _build_gadget(args):
    if args.family == "thm2":
        if args.n is None:
            raise UsageError("gadget thm2 needs --n")
        return gadgets.build_thm2_graph(args.n, gadgets.parse_pairs(args.A),
                                        gadgets.parse_pairs(args.B))
    if args.t is None:
        raise UsageError("gadget thm3 needs --t")
    return gadgets.build_thm3_instance(args.t, gadgets.parse_index_set(args.A),
                                       gadgets.parse_index_set(args.B), args.decoder_base)


def cmd_gadget(args, out):
    dyn = _gadget_instance(args)
    if args.format == "dot":
        out.write(fsd.to_dot(dyn.graph, dyn.roles, gadgets.ROLE_COLORS))
    else:
        out.write(fsd.dumps_instance(dyn) + "\n")
    return EXIT_OK


def cmd_decoder(args, out):
    try:
        c = dec.build_decoder(args.t, base=args.base)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.audit:
        report = dec.audit_structure(c, args.base)
        if args.format == "csv":
            keys = sorted(report)
            out.write(",".join(keys) + "\n" + ",".join(str(report[k]) for k in keys) + "\n")
        else:
            out.write(_dump(report))
        ok = report["condition_1"] and report["condition_2"] and report["condition_3"]
        return EXIT_OK if ok and report["depth_ok"] else EXIT_FALSE
    if args.format == "dot":
        out.write(c.to_dot())
    else:
        out.write(c.to_json() + "\n")
    return EXIT_OK


def cmd_reduce(args, out):
    if args.family == "thm2":
        if args.n is None:
            raise UsageError("reduce thm2 needs --n")
        A, B = gadgets.parse_pairs(args.A), gadgets.parse_pairs(args.B)
        red = gadgets.check_thm2_reduction(args.n, A, B, mode=args.mode,
                                           samples=args.samples or 10**6, seed=args.seed,
                                           cap=args.budget, workers=args.threads)
        tr = protocol.simulate_thm2_protocol(args.n, A, B)
        meas = protocol.measure_honest("thm2", args.n, A, B)
    else:
        if args.t is None:
            raise UsageError("reduce thm3 needs --t")
        A, B = gadgets.parse_index_set(args.A), gadgets.parse_index_set(args.B)
        red = gadgets.check_thm3_reduction(args.t, A, B, mode=args.mode,
                                           samples=args.samples or 10**5, seed=args.seed,
                                           cap=args.budget, workers=args.threads)
        tr = protocol.simulate_thm3_protocol(args.t, A, B)
        meas = protocol.measure_honest("thm3", args.t, A, B)
    rows = protocol.lower_bound_report([meas])
    if args.format == "csv":
        out.write(protocol.report_csv(rows))
    else:
        out.write(_dump({
            "reduction": {"disjoint": red.disjoint, "converges": red.converges, "mode": red.mode,
                          "checked": red.checked, "max_time": red.max_time,
                          "counterexample": list(red.counterexample) if red.counterexample else None,
                          "agrees": red.agrees},
            "protocol": tr.to_dict(),
            "report": rows,
        }))
    return EXIT_OK if red.agrees and tr.verdict == red.disjoint else EXIT_FALSE


def cmd_report(args, out):
    ms = []
    if args.family in ("thm2", "all"):
        ms += [protocol.measure_honest("thm2", n) for n in range(2, args.max_n + 1)]
    if args.family in ("thm3", "all"):
        ms += [protocol.measure_honest("thm3", t, [1], [2]) for t in range(1, args.max_t + 1)]
    rows = protocol.lower_bound_report(ms)
    if args.format == "csv":
        out.write(protocol.report_csv(rows))
    else:
        out.write(_dump(rows))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _globals(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    p.add_argument("--budget", type=int, default=d(fsd.DEFAULT_CAP),
                   help="cap on enumerated configurations or simulation steps")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads (output is unaffected)")
    p.add_argument("--format", choices=("json", "dot", "csv"), default=d("json"))


def build_parser():
    top = argparse.ArgumentParser(prog="fsdcert",
                                  description="Finite-state dynamics, convergence certificates "
                                              "and lower-bound gadgets.")
    _globals(top, suppress=False)
    sub = top.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        _globals(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("simulate", cmd_simulate, "Iterate the global map from one configuration.")
    p.add_argument("--instance", help="instance JSON file, '-' or omitted for stdin")
    p.add_argument("--x", help="start configuration as comma separated states (default random)")
    p.add_argument("--steps", type=int, default=64)

    p = add("converge", cmd_converge, "Decide whether every orbit is fixed after k steps.")
    p.add_argument("--instance")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--samples", type=int, default=0, help="sample instead of enumerating")

    p = add("certify", cmd_certify, "Prove and/or verify ball certificates for Convergence(k, q).")
    p.add_argument("--instance")
    p.add_argument("--k", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--prove", action="store_true", help="emit the honest certificates")
    g.add_argument("--verify", metavar="CERTS", help="verify a certificate assignment file")
    p.add_argument("--soundness", action="store_true",
                   help="also run the mutation and random forgery search")
    p.add_argument("--trials", type=int, default=200)

    for name, func, help_ in (("gadget", cmd_gadget, "Build a lower-bound instance."),
                              ("reduce", cmd_reduce, "Check a reduction and run its protocol.")):
        p = add(name, func, help_)
        p.add_argument("family", choices=("thm2", "thm3"))
        p.add_argument("--n", type=int, help="universe size for thm2")
        p.add_argument("--t", type=int, help="decoder width for thm3")
        p.add_argument("--A", default="", help='thm2: pairs "1,2;3,4"; thm3: indices "1,3"')
        p.add_argument("--B", default="")
        p.add_argument("--decoder-base", dest="decoder_base", choices=dec.BASES, default="compact")
        if name == "reduce":
            p.add_argument("--mode", choices=("auto", "exhaustive", "sampled"), default="auto")
            p.add_argument("--samples", type=int, default=0)

    p = add("decoder", cmd_decoder, "Build or audit the binary decoder circuit.")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--base", choices=dec.BASES, default="standard")
    p.add_argument("--audit", action="store_true")

    p = add("report", cmd_report, "Tabulate honest certificate sizes against lower-bound curves.")
    p.add_argument("family", choices=("thm2", "thm3", "all"), nargs="?", default="all")
    p.add_argument("--max-n", dest="max_n", type=int, default=4)
    p.add_argument("--max-t", dest="max_t", type=int, default=2)
    return top


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.threads < 1 or args.budget < 1:
        print("fsdcert: --threads and --budget must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"fsdcert: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except fsd.BudgetExceeded as exc:
        print(f"fsdcert: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"fsdcert: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
