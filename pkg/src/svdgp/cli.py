"""Command-line interface.

Exit codes: 0 ok, 2 usage, 3 I/O or unreadable input, 4 solver result not
proven (PH without consensus), 5 size guard.
"""
from __future__ import annotations

import argparse
import logging
import shlex
import sys
from pathlib import Path

from . import analysis, ph
from . import instance as instance_mod
from . import scenario as scenario_mod
from .atsp import Tour
from .detour import DetourTable, beta
from .instance import GenConfig
from .scenario import FidelityModel

log = logging.getLogger("svdgp")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NONPROVEN, EXIT_SIZE = 0, 2, 3, 4, 5
DEFAULT_SEED = 0


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def g9(x) -> str:
    return f"{float(x):.9g}"


# --------------------------------------------------------------------------
# solution files
# --------------------------------------------------------------------------

def solution_text(inst, tour, total, first, rec, *, status, iterations=0, residuals=(),
                  extra=None, legs=None) -> str:
    lines = ["# svdgp solution", f"instance: {inst.name}", f"status: {status}",
             f"objective: {g9(total)}", f"first_stage_cost: {g9(first)}",
             f"expected_recourse: {g9(rec)}", f"iterations: {iterations}"]
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {v}")
    lines.append(f"tour: {tour}")
    if residuals:
        lines += ["", "[residuals]", "# iteration residual"]
        lines += [f"{k} {g9(r)}" for k, r in enumerate(residuals)]
    if legs:
        lines += ["", "[recourse]", "# scenario weight beta | target->successor delta order"]
        lines += legs
    return "\n".join(lines) + "\n"


def recourse_lines(inst, table, tour, sset) -> list[str]:
    out = []
    for s, w in sset:
        rec = beta(inst, table, tour, s)
        parts = [f"{l.target}->{l.successor} {g9(l.delta)} {','.join(map(str, l.order))}" for l in rec.legs]
        out.append(f"{s.bits()} {g9(w)} {g9(rec.beta)}" + "".join(f" | {p}" for p in parts))
    return out


def read_solution(path) -> dict:
    """Header fields, ``tour`` and ``residuals`` from a solution file."""
    fields, residuals, section = {}, [], None
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]")
            continue
        if section is None:
            key, _, val = line.partition(":")
            fields[key.strip()] = val.strip()
        elif section == "residuals":
            _, r = line.split()
            residuals.append(float(r))
    if "tour" not in fields:
        raise ValueError(f"{path}: no tour line")
    fields["residuals"] = residuals
    return fields


def parse_tour(text: str) -> Tour:
    p = Path(text)
    if p.exists():
        text = read_solution(p)["tour"]
    return Tour(tuple(int(v) for v in text.replace(",", " ").split()))


# --------------------------------------------------------------------------
# shared option handling
# --------------------------------------------------------------------------

def _add_scenario_opts(p, need=True):
    g = p.add_argument_group("scenarios")
    g.add_argument("--scenarios", help="scenario file")
    g.add_argument("--prob", type=float, help="failure probability for every target")
    g.add_argument("--count", type=int, default=None, help="number of sampled scenarios")
    g.add_argument("--enumerate", action="store_true", help="all 2^n scenarios with exact weights")
    g.add_argument("--seed", type=int, default=None, help=f"sampling seed (default {DEFAULT_SEED})")
    p.set_defaults(_need_scen=need)


def _scenarios(args, inst):
    if args.scenarios:
        sset = _read(scenario_mod.load, args.scenarios)
        if sset.n != inst.n:
            raise CliError(f"scenario file covers {sset.n} targets, instance has {inst.n}", EXIT_IO)
        return sset, None
    if args.prob is None:
        raise CliError("give --scenarios FILE or --prob P [--count N --seed S | --enumerate]", EXIT_USAGE)
    if not 0.0 <= args.prob <= 1.0:
        raise CliError("--prob must lie in [0, 1]", EXIT_USAGE)
    model = FidelityModel.uniform(inst.n, args.prob)
    if args.enumerate:
        if inst.n > scenario_mod.ENUMERATE_MAX:
            raise CliError(f"--enumerate needs n <= {scenario_mod.ENUMERATE_MAX}", EXIT_SIZE)
        return scenario_mod.enumerate_scenarios(model), model
    count = 100 if args.count is None else args.count
    if count < 1:
        raise CliError("--count must be positive", EXIT_USAGE)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    if args.seed is None:
        log.info("no --seed given, using %d", seed)
    return scenario_mod.sample(model, count, seed), model


def _read(fn, path):
    try:
        return fn(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    except ValueError as exc:
        raise CliError(f"{path}: {exc}", EXIT_IO) from None


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _seed_info(args, sset):
    if args.scenarios:
        return {"scenarios": f"{len(sset)} from {Path(args.scenarios).name}"}
    return {"scenarios": len(sset), "scenario_prob": g9(args.prob),
            "scenario_seed": "enumerated" if args.enumerate else sset.seed}


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_gen(args):
    try:
        cfg = GenConfig(n=args.n, m=args.m, radius=args.radius, grid=args.grid,
                        turn_radius=args.turn_radius, seed=args.seed, depot_mode=args.depot_mode)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    inst = instance_mod.generate(cfg, name=args.name)
    _write(args.out, instance_mod.dumps(inst, explicit_costs=args.explicit_costs or None))
    c1 = inst.c1
    print(f"n={inst.n} m={inst.m} R={g9(cfg.radius)} seed={cfg.seed} "
          f"max_cost={g9(c1.max())} auto_rho={g9(ph.auto_rho(inst))}",
          file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_solve(args):
    inst = _read(instance_mod.load, args.instance)
    sset, _ = _scenarios(args, inst)
    rho = args.rho
    if rho != "auto":
        try:
            rho = float(rho)
        except ValueError:
            raise CliError("--rho must be 'auto' or a number", EXIT_USAGE) from None
    try:
        cfg = ph.PhConfig(rho=rho, epsilon=args.epsilon, max_iterations=args.max_iter,
                          fallback=args.fallback, threads=args.threads)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    table = DetourTable.build(inst)
    rep = ph.solve(inst, sset, cfg, table)
    extra = {"rho": g9(rep.rho), "epsilon": g9(cfg.epsilon)} | _seed_info(args, sset)
    legs = recourse_lines(inst, table, rep.tour, sset) if args.legs else None
    text = solution_text(inst, rep.tour, rep.objective, rep.first_stage_cost, rep.expected_recourse,
                         status=rep.status, iterations=rep.iterations,
                         residuals=rep.residual_trace, extra=extra, legs=legs)
    if args.out:
        _write(args.out, text)
    print(f"objective={g9(rep.objective)} iterations={rep.iterations} "
          f"converged={str(rep.converged).lower()} seconds={rep.wall_time:.3f}")
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK if rep.converged else EXIT_NONPROVEN


def cmd_eval(args):
    inst = _read(instance_mod.load, args.instance)
    sset, _ = _scenarios(args, inst)
    try:
        tour = parse_tour(args.tour)
    except ValueError as exc:
        raise CliError(f"bad tour: {exc}", EXIT_USAGE) from None
    if len(tour) != inst.tour_size:
        raise CliError(f"tour has {len(tour)} vertices, instance needs {inst.tour_size}", EXIT_USAGE)
    if inst.depot_mode == instance_mod.SPLIT and tour.sequence[-1] != inst.destination:
        raise CliError("split-depot tours must end at the destination", EXIT_USAGE)
    table = DetourTable.build(inst)
    total, first, rec = ph.evaluate(inst, table, tour, sset)
    print(f"objective={g9(total)} first_stage_cost={g9(first)} expected_recourse={g9(rec)}")
    return EXIT_OK


def cmd_oracle(args):
    inst = _read(instance_mod.load, args.instance)
    if inst.n > analysis.ORACLE_MAX_N:
        raise CliError(f"oracle enumerates tours only for n <= {analysis.ORACLE_MAX_N} (n={inst.n})", EXIT_SIZE)
    sset, _ = _scenarios(args, inst)
    table = DetourTable.build(inst)
    tour, total = analysis.extensive_form_bruteforce(inst, sset, table)
    _, first, rec = ph.evaluate(inst, table, tour, sset)
    text = solution_text(inst, tour, total, first, rec, status="optimal", extra=_seed_info(args, sset))
    _write(args.out, text) if args.out else sys.stdout.write(text)
    print(f"objective={g9(total)}")
    return EXIT_OK


def cmd_evp(args):
    inst = _read(instance_mod.load, args.instance)
    if not 0.0 <= args.prob <= 1.0:
        raise CliError("--prob must lie in [0, 1]", EXIT_USAGE)
    model = FidelityModel.uniform(inst.n, args.prob)
    table = DetourTable.build(inst)
    tour = analysis.solve_evp(inst, model, table)
    line = f"ev_tour={','.join(map(str, tour.sequence))}"
    if args.scenarios or args.count is not None or args.enumerate:
        sset, _ = _scenarios(args, inst)
        line += f" eev={g9(ph.evaluate(inst, table, tour, sset)[0])}"
    print(line)
    return EXIT_OK


def cmd_vss(args):
    inst = _read(instance_mod.load, args.instance)
    if args.rp == "oracle" and inst.n > analysis.ORACLE_MAX_N:
        raise CliError(f"oracle RP needs n <= {analysis.ORACLE_MAX_N}", EXIT_SIZE)
    table = DetourTable.build(inst)
    reports = []
    for p in args.prob:
        if not 0.0 <= p <= 1.0:
            raise CliError("--prob values must lie in [0, 1]", EXIT_USAGE)
        model = FidelityModel.uniform(inst.n, p)
        if args.enumerate:
            sset = scenario_mod.enumerate_scenarios(model)
        else:
            sset = scenario_mod.sample(model, args.count, args.seed)
        rep = analysis.vss(inst, model, sset, rp_source=args.rp, table=table)
        reports.append((p, rep))
        print(f"p={g9(p)} rp={g9(rep.rp)} eev={g9(rep.eev)} vss={g9(rep.vss)} "
              f"vss_percent={g9(rep.vss_percent)} rp_source={rep.rp_source}")
    if args.out:
        _write(args.out, analysis.vss_csv(reports))
    return EXIT_OK


def cmd_sweep(args):
    try:
        spec = analysis.SweepSpec.load(args.spec)
    except OSError as exc:
        raise CliError(f"cannot read {args.spec}: {exc}", EXIT_IO) from None
    except (ValueError, TypeError) as exc:
        raise CliError(f"bad sweep spec: {exc}", EXIT_USAGE) from None
    if args.threads is not None:
        spec.threads = args.threads
    rows = analysis.run_sweep(spec)
    _write(args.out, analysis.sweep_csv(rows, timing=not args.no_timing))
    if args.residuals_out:
        _write(args.residuals_out, analysis.sweep_residuals_csv(rows))
    failed = [r for r in rows if r.status.startswith("error")]
    return EXIT_NONPROVEN if failed or not all(r.converged for r in rows) else EXIT_OK


def cmd_residuals(args):
    sol = _read(read_solution, args.solution)
    _write(args.out, analysis.residual_csv(sol["residuals"]))
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="svdgp", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--radius", type=float, default=5.0)
    p.add_argument("--grid", type=float, default=100.0)
    p.add_argument("--turn-radius", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--depot-mode", choices=(instance_mod.SPLIT, instance_mod.MERGED), default=instance_mod.SPLIT)
    p.add_argument("--name")
    p.add_argument("--explicit-costs", action="store_true", help="also write the cost matrices")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="progressive hedging solve")
    p.add_argument("--instance", required=True)
    _add_scenario_opts(p)
    p.add_argument("--rho", default="auto")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--fallback", choices=(ph.NONE, ph.BEST_SCENARIO), default=ph.NONE)
    p.add_argument("--legs", action="store_true", help="write per-scenario recourse legs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="two-stage objective of a given tour")
    p.add_argument("--instance", required=True)
    p.add_argument("--tour", required=True, help="vertex list '0,3,1,2' or a solution file")
    _add_scenario_opts(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="exact optimum by tour enumeration (n <= 9)")
    p.add_argument("--instance", required=True)
    _add_scenario_opts(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("evp", help="expected-value tour")
    p.add_argument("--instance", required=True)
    _add_scenario_opts(p)
    p.set_defaults(func=cmd_evp)

    p = sub.add_parser("vss", help="value of the stochastic solution")
    p.add_argument("--instance", required=True)
    p.add_argument("--prob", type=float, nargs="+", required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--rp", choices=("auto", "oracle", "ph"), default="auto")
    p.add_argument("--out")
    p.set_defaults(func=cmd_vss)

    p = sub.add_parser("sweep", help="one-parameter experiment sweep")
    p.add_argument("--spec", required=True, help="JSON sweep specification")
    p.add_argument("--out")
    p.add_argument("--residuals-out")
    p.add_argument("--threads", type=int)
    p.add_argument("--no-timing", action="store_true", help="omit the wall-clock column")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("residuals", help="residual trace of a solution as CSV")
    p.add_argument("--solution", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_residuals)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    log.info("invocation: svdgp %s", shlex.join(argv))
    if args.command == "evp" and args.prob is None:
        ap.error("evp needs --prob")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"svdgp {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
