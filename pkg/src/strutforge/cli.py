"""Command-line front end.

Every subcommand reads a JSON problem file and writes a JSON report (to
``--output`` or stdout).  Exit codes: 0 ok, 1 infeasible, 2 bad input,
3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, svg
from .enlarge import CleavingContext, is_maximal, roll_from, roll_maximal_regions, touching_sequence
from .envelope import open_envelope, extract_net, total_weight
from .equilibrium import (
    ConsistencyError,
    EquilibriumError,
    balance_residual,
    check_balance,
    check_compressibility,
    concavity_margins,
    tangent_planes,
)
from .geometry import GeometryError
from .io import Problem, ProblemError, dumps_report, load_problem
from .loopreduce import GeneralNet, ReplacementError, complete_net, find_elementary_loops, loop_bound, planarize, reduce
from .lpsolve import SolverError
from .synthesis import avoid_multi, quick_infeasibility, solve_reactive

log = logging.getLogger("strutforge")

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3


class InputError(ValueError):
    pass


def _setup_logging() -> None:
    level = os.environ.get("STRUTFORGE_LOG", "quiet").strip().lower()
    levels = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        level = "quiet"
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("strutforge").setLevel(levels[level])


def _objective(text: str | None, prob: Problem):
    if text is None:
        return prob.objective
    if text == "weight":
        return "weight"
    if text.startswith("cleave:"):
        try:
            q = int(text.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad objective {text!r}") from None
        if not 0 <= q < len(prob.obstacles):
            raise InputError(f"objective names obstacle {q}, file has {len(prob.obstacles)}")
        return ("cleave", q)
    raise InputError(f"bad objective {text!r}; use weight or cleave:q")


def _need_system(prob: Problem, reactive_ok: bool = False):
    fs = prob.force_system
    if fs is None:
        raise InputError("problem has no force system")
    if fs.reactive and not reactive_ok:
        raise InputError("this command needs every force given; use 'reactive'")
    return fs


def _planes(planes) -> list[dict]:
    return [p.to_dict() for p in planes]


def _hull_of(fs):
    from .geometry import convex_hull

    return convex_hull(fs.points)


def _emit_svg(args, fs=None, net=None, obstacles=(), gamma=None, title="", reactive=None) -> None:
    if not args.svg:
        return
    text = svg.render(
        None if fs is None else fs.points,
        None if fs is None else fs.loads,
        sorted(reactive) if reactive is not None else (() if fs is None else sorted(fs.reactive)),
        net,
        obstacles,
        None if fs is None else _hull_of(fs),
        gamma,
        args.force_scale,
        title,
    )
    Path(args.svg).write_text(text)


# ---------------------------------------------------------------------------
# subcommands; each returns (exit code, report)


def cmd_check(prob: Problem, args) -> tuple[int, dict]:
    fs = _need_system(prob)
    net, torque = balance_residual(fs)
    tp = tangent_planes(fs)
    M = concavity_margins(tp)
    np.fill_diagonal(M, np.inf)
    comp = check_compressibility(fs)
    rep = {
        "status": "ok",
        "balanced": check_balance(fs),
        "compressible": comp,
        "net_force": net,
        "net_torque": torque,
        "orientation": "ccw" if fs.orientation > 0 else "cw",
        "min_margin": float(M.min()),
        "planes": _planes(tp.planes),
    }
    _emit_svg(args, fs, title="force system")
    return EXIT_OK, rep


def cmd_opennet(prob: Problem, args) -> tuple[int, dict]:
    fs = _need_system(prob)
    if not check_compressibility(fs):
        return EXIT_INFEASIBLE, {"status": "infeasible", "reason": "not-compressible"}
    env = open_envelope(fs)
    net = extract_net(env, fs)
    rep = {
        "status": "feasible",
        "planes": _planes(env.planes),
        "facets": env.facet_count,
        "net": net,
        "weight": total_weight(net),
        "diagnostics": {"loops": net.loop_count(), "max_residual": net.max_residual()},
    }
    _emit_svg(args, fs, net, prob.obstacles, title="open net")
    return EXIT_OK, rep


def _synthesis_report(res, prob: Problem) -> dict:
    rep = {"status": res.status.value.lower()}
    if not res.feasible:
        return rep
    s = res.summary()
    rep.update(
        planes=_planes(res.planes),
        cleaving=_planes(res.cleaving),
        net=res.net,
        reactive_forces={str(i): v for i, v in sorted(res.reactive_forces.items())},
        objective_value=res.objective_value,
        weight=s["weight"],
        diagnostics={
            "loops": s["loops"],
            "struts": s["struts"],
            "max_residual": s["max_residual"],
            "contact": res.contact,
            "min_force": float(res.net.forces.min()) if res.net.n_struts else None,
            "gamma_areas": [None if g is None else g.area for g in res.gammas],
        },
    )
    return rep


def cmd_avoid(prob: Problem, args) -> tuple[int, dict]:
    fs = _need_system(prob)
    if not prob.obstacles:
        raise InputError("avoid needs at least one obstacle")
    if not check_compressibility(fs):
        return EXIT_INFEASIBLE, {"status": "infeasible", "reason": "not-compressible"}
    hits = [q for q, ob in enumerate(prob.obstacles) if quick_infeasibility(fs, ob)]
    res = avoid_multi(fs, prob.obstacles)
    if hits:
        # the LP runs anyway so both routes are on record
        rep = {"status": "infeasible", "reason": "fig2-test", "obstacles": hits, "lp_status": res.status.value.lower()}
        if res.feasible:
            raise ConsistencyError("quick test and LP disagree on feasibility")
        return EXIT_INFEASIBLE, rep
    rep = _synthesis_report(res, prob)
    if not res.feasible:
        rep["reason"] = "lp"
        return EXIT_INFEASIBLE, rep
    _emit_svg(args, fs, res.net, prob.obstacles, res.gammas[0] if len(res.gammas) == 1 else None, "avoiding net")
    return EXIT_OK, rep


def cmd_reactive(prob: Problem, args) -> tuple[int, dict]:
    fs = _need_system(prob, reactive_ok=True)
    obj = _objective(args.objective, prob)
    res = solve_reactive(fs, prob.obstacles, obj)
    rep = _synthesis_report(res, prob)
    rep["objective"] = obj if isinstance(obj, str) else f"cleave:{obj[1]}"
    if not res.feasible:
        return EXIT_INFEASIBLE, rep
    _emit_svg(args, res.force_system, res.net, prob.obstacles, title="reactive net", reactive=fs.reactive)
    return EXIT_OK, rep


def cmd_enlarge(prob: Problem, args) -> tuple[int, dict]:
    fs = _need_system(prob)
    if not check_compressibility(fs):
        return EXIT_INFEASIBLE, {"status": "infeasible", "reason": "not-compressible"}
    ctx = CleavingContext.from_force_system(fs, args.tol)
    regions = roll_maximal_regions(ctx)
    rep = {
        "status": "ok",
        "regions": [
            {
                "touching": [k + 1 for k in st.key()],
                "plane": st.plane.to_dict(),
                "gamma": None if st.gamma is None else st.gamma.vertices,
                "area": 0.0 if st.gamma is None else st.gamma.area,
                "maximal": is_maximal(ctx, st),
            }
            for st in regions
        ],
    }
    if prob.seed is not None:
        i = prob.seed - 1
        if i >= fs.n:
            raise InputError(f"seed {prob.seed} out of range")
        rep["seed"] = prob.seed
        rep["sequence"] = [list(t) for t in touching_sequence(roll_from(ctx, i))]
    best = max(regions, key=lambda st: 0.0 if st.gamma is None else st.gamma.area, default=None)
    _emit_svg(args, fs, None, prob.obstacles, None if best is None else best.gamma, "largest region")
    return EXIT_OK, rep


def _general_net(prob: Problem, args) -> GeneralNet:
    spec = prob.net_spec
    if spec is None:
        raise InputError("reduce needs a 'net' entry")
    if spec["kind"] == "complete":
        raw = prob.raw
        forces = raw.get("forces") or []
        if raw.get("reactive") or raw.get("supports") or any(f is None for f in forces):
            raise InputError("a complete net needs every force given")
        net = complete_net(np.asarray(raw["points"], float), np.asarray(forces, float), prob.bal_tol)
    else:
        nodes = np.asarray(spec["nodes"], float).reshape(-1, 2)
        struts = spec["struts"]
        applied = np.zeros_like(nodes)
        for k, v in spec.get("applied", {}).items():
            applied[int(k)] = v
        net = GeneralNet(
            nodes,
            np.asarray([s[:2] for s in struts], int).reshape(-1, 2),
            [s[2] for s in struts],
            applied,
            bal_tol=prob.bal_tol,
        )
        if not net.balanced():
            raise InputError(f"explicit net is out of balance (residual {net.max_residual():.3g})")
    if args.tol is not None:
        net.tol = args.tol
    net.obstacles = list(prob.obstacles)
    return planarize(net)


def cmd_reduce(prob: Problem, args) -> tuple[int, dict]:
    net = _general_net(prob, args)
    frames = Path(args.frames) if args.frames else None
    if frames is not None:
        frames.mkdir(parents=True, exist_ok=True)
    history = []

    def on_step(k, cur):
        history.append({"step": k, "loops": len(find_elementary_loops(cur)), "struts": cur.n_struts,
                        "max_residual": cur.max_residual(), "min_force": float(cur.forces.min()) if cur.n_struts else None})
        if frames is not None:
            text = svg.render(net=cur, obstacles=cur.obstacles, force_scale=args.force_scale, title=f"step {k}")
            (frames / f"frame_{k:04d}.svg").write_text(text)

    trace = reduce(net, on_step)
    out = trace.net
    q, p, p0 = loop_bound(out)
    rep = {
        "status": "ok",
        "net": out,
        "diagnostics": {
            "steps": history,
            "replaced": [[int(v) for v in lp.cycle] for lp in trace.replaced],
            "loops": history[-1]["loops"],
            "bound": {"q": q, "p": p, "p0": p0, "value": q + p - p0},
            "max_residual": out.max_residual(),
        },
        "bal_tol": out.bal_tol,
    }
    _emit_svg(args, None, out, out.obstacles, title="reduced net")
    return EXIT_OK, rep


COMMANDS = {
    "check": cmd_check,
    "opennet": cmd_opennet,
    "avoid": cmd_avoid,
    "reactive": cmd_reactive,
    "enlarge": cmd_enlarge,
    "reduce": cmd_reduce,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="strutforge", description="Compression-only strut nets around obstacles.")
    ap.add_argument("--version", action="version", version=f"strutforge {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "check": "balance and compressibility of a force system",
        "opennet": "strut net of the open envelope",
        "avoid": "net avoiding the obstacles, all forces given",
        "reactive": "solve for reactive forces and an avoiding net",
        "enlarge": "roll cleaving planes to maximal obstacle regions",
        "reduce": "replace elementary loops of a general net",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--input", "-i", required=True, metavar="PATH")
        p.add_argument("--output", "-o", metavar="PATH")
        p.add_argument("--svg", metavar="PATH")
        p.add_argument("--tol", type=float, metavar="FLOAT", help="geometric / contact tolerance override")
        p.add_argument("--bal-tol", type=float, metavar="FLOAT", help="balance tolerance override")
        p.add_argument("--force-scale", type=float, metavar="FLOAT", help="arrow length per unit force in the SVG")
        if name == "reactive":
            p.add_argument("--objective", metavar="{weight|cleave:q}")
        if name == "reduce":
            p.add_argument("--frames", metavar="DIR", help="write one SVG per reduction step")
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    report: dict
    try:
        prob = load_problem(args.input, bal_tol=args.bal_tol)
        code, report = COMMANDS[args.command](prob, args)
    except ProblemError as exc:
        code, report = EXIT_INPUT, {"status": "error", "errors": [{"path": p, "message": m} for p, m in exc.errors]}
    except (InputError, GeometryError, EquilibriumError) as exc:
        code, report = EXIT_INPUT, {"status": "error", "errors": [{"path": "$", "message": str(exc)}]}
    except (SolverError, ConsistencyError, ReplacementError) as exc:
        code, report = EXIT_SOLVER, {"status": "solver-failure", "message": str(exc)}
    report = {"command": args.command, **report}
    text = dumps_report(report)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_INPUT:
        for e in report["errors"]:
            print(f"error: {e['path']}: {e['message']}", file=sys.stderr)
    elif code == EXIT_SOLVER:
        print(f"solver failure: {report['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
