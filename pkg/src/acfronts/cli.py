"""Command-line entry point: acfronts <subcommand> ..."""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .core import Orientation
from .errors import AcfrontsWarning, BadInput, NumericFailure
from .forcing import CosSinTriple, Zero, parse_forcing, parse_topography, TopographyDriven

EXIT_OK, EXIT_NUMERIC, EXIT_BAD_INPUT = 0, 2, 3

EXPLORATORY_BANNER = ("NOTE: exploratory scenario (p <= -1). H'' is unbounded and the "
                      "validity of the asymptotic theory is open here.")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise BadInput(message)


def _range(text):
    try:
        a, b, *rest = (float(v) for v in text.split(":"))
    except ValueError:
        raise BadInput(f"bad range {text!r}, expected A:B[:STEP]") from None
    if not b > a:
        raise BadInput("range needs A < B")
    return a, b, (rest[0] if rest else None)


def _floats(text):
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise BadInput(f"bad number list {text!r}") from None


def _forcing_from(args):
    if getattr(args, "zero", False):
        return Zero()
    if getattr(args, "periodic", None):
        vals = _floats(args.periodic)
        if len(vals) != 4:
            raise BadInput("--periodic expects A1,A2,A3,K")
        return CosSinTriple(*vals)
    if getattr(args, "alpha1", None) is not None:
        return CosSinTriple(args.alpha1, 0.0, getattr(args, "alpha3", 0.0) or 0.0,
                            getattr(args, "k", math.pi) or math.pi)
    if getattr(args, "topo", None):
        return TopographyDriven(parse_topography(args.topo))
    if getattr(args, "forcing", None):
        return parse_forcing(args.forcing)
    raise BadInput("give a forcing (--forcing, --topo, --periodic or --zero)")


def _add_forcing(p, alpha=False):
    p.add_argument("--forcing", help="zero | triple:A1,A2,A3,K | f1sin:A:K | topo:SPEC")
    p.add_argument("--topo", help="exp:MU[:SIGN] | alg:P[:SIGN] | sin:A:K | mixed:.. | table:PATH")
    p.add_argument("--periodic", help="A1,A2,A3,K for the cos/sin triple")
    p.add_argument("--zero", action="store_true", help="no forcing")
    if alpha:
        p.add_argument("--alpha1", type=float, help="F = alpha1 cos(k x) U + alpha3 sin(k x)")
        p.add_argument("--alpha3", type=float, default=0.0)
        p.add_argument("--k", type=float, default=math.pi)


def _emit(obj, out):
    text = json.dumps(obj, indent=2, default=_json_default)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, Orientation):
        return o.name.lower()
    raise TypeError(type(o))


# ------------------------------------------------------------ subcommands

def cmd_melnikov(args):
    from .melnikov import MelnikovFn, Quadrature, write_melnikov_csv
    f = _forcing_from(args)
    backend = Quadrature() if args.backend == "quad" else None
    fn = MelnikovFn(f, Orientation.parse(args.orientation), backend)
    a, b, h = _range(args.range)
    h = h or 0.01
    phi = np.linspace(a, b, int(round((b - a) / h)) + 1)
    r, rp = fn.both(phi)
    if args.out:
        write_melnikov_csv(args.out, phi, r, rp)
    else:
        print("phi,R,Rprime")
        for row in zip(phi, r, rp):
            print(",".join(repr(float(v)) for v in row))
    return EXIT_OK


def cmd_one_front(args):
    from .melnikov import MelnikovFn
    from .stationary import one_front_find
    fn = MelnikovFn(_forcing_from(args), Orientation.parse(args.orientation))
    a, b, _ = _range(args.range)
    fronts = one_front_find(fn, (a, b), args.eps)
    _emit({"degenerate": fronts.degenerate,
           "fronts": [dict(f.to_dict(), stable=f.stable) for f in fronts]}, args.out)
    return EXIT_OK


def cmd_two_front(args):
    from .melnikov import MelnikovFn
    from .stationary import two_front_eigenvalues, two_front_solve
    f = _forcing_from(args)
    ru, rd = MelnikovFn(f, Orientation.UP), MelnikovFn(f, Orientation.DOWN)
    seed = _floats(args.seed)
    if len(seed) != 2:
        raise BadInput("--seed expects PHI_UP,PHI_DOWN")
    sf = two_front_solve(ru, rd, args.eps, tuple(seed))
    st = two_front_eigenvalues(sf.positions[0], sf.positions[1], ru, rd, args.eps)
    rep = sf.to_dict()
    rep["closed_form"] = {"lambda1": st.lambda1, "lambda2": st.lambda2,
                          "gamma_plus_1": st.gamma_plus_1, "gamma_plus_2": st.gamma_plus_2,
                          "discriminant_D": st.discriminant_D}
    rep["stable"] = sf.stable
    _emit(rep, args.out)
    return EXIT_OK


def cmd_nfront(args):
    from .frontdyn import Controls, FrontState, integrate
    from .melnikov import CachedMelnikov, MelnikovFn
    f = _forcing_from(args)
    first = Orientation.parse(args.first)
    mu = MelnikovFn(f, Orientation.UP)
    md = MelnikovFn(f, Orientation.DOWN)
    if not isinstance(f, Zero):
        mu, md = CachedMelnikov(mu), CachedMelnikov(md)
    s0 = FrontState(_floats(args.init), first, args.eps)
    ctl = Controls(delta_min=args.delta_min, merge=args.merge, record_every=args.record_every)
    traj = integrate(s0, args.t_end, mu, md, ctl)
    if args.out:
        traj.to_csv(args.out)
        if args.events:
            traj.events_to_csv(args.events)
    else:
        print("t," + ",".join(f"phi_{j + 1}" for j in range(len(traj.positions[0]))))
        for t, p in zip(traj.times, traj.positions):
            print(",".join(repr(float(v)) for v in [t, *p]))
    if args.merge and traj.events:
        print("note: merge continuation is a heuristic", file=sys.stderr)
    return EXIT_OK


def cmd_stationary(args):
    from .melnikov import MelnikovFn
    from .stationary import (enumerate_stationary_localized, enumerate_stationary_periodic,
                             periodic_two_front_bifurcation)
    if args.bifurcation:
        vals = _floats(args.bifurcation)
        if len(vals) != 3:
            raise BadInput("--bifurcation expects A,B,K")
        _emit(periodic_two_front_bifurcation(*vals, args.eps), args.out)
        return EXIT_OK
    f = _forcing_from(args)
    if args.gaps:
        gaps = [int(g) for g in _floats(args.gaps)]
        fronts = enumerate_stationary_periodic(MelnikovFn(f), args.eps, args.n, gaps)
    else:
        if not isinstance(f, TopographyDriven):
            raise BadInput("localized enumeration needs --topo (or use --gaps for periodic)")
        fronts = enumerate_stationary_localized(f.topo, args.eps, args.n)
    _emit([dict(x.to_dict(), stable=x.stable) for x in fronts], args.out)
    return EXIT_OK


def cmd_pde(args):
    from .core import Grid1D
    from .pde import ExplicitRK4, ImexTheta, PdeRunConfig, multifront_ic, run
    from .scenarios import parse_ic
    f = _forcing_from(args)
    a, b, _ = _range(args.domain)
    grid = Grid1D.with_spacing(a, b, args.dx)
    ic = multifront_ic(grid, parse_ic(args.ic), offset=args.offset)
    scheme = ExplicitRK4() if args.scheme == "rk4" else ImexTheta(args.theta)
    cfg = PdeRunConfig(grid, f, args.eps, args.t_end, ic, dt=args.dt, scheme=scheme,
                       output_every=args.output_every, snapshot_every=args.snapshot_every,
                       stop_when_settled=args.stop_when_settled)
    res = run(cfg)
    os.makedirs(args.out, exist_ok=True)
    res.write(args.out)
    meta = {"version": __version__, "config": cfg.to_dict(), "ic": args.ic,
            "offset": args.offset, "summary": _summary(res)}
    _emit(meta, os.path.join(args.out, "meta.json"))
    print(json.dumps(meta["summary"], default=_json_default))
    return EXIT_OK


def cmd_manifold(args):
    from .geometry import bifurcation_scan, lobe_intersections, manifold_section
    a, b, _ = _range(args.phi_range)
    if args.scan:
        lo, hi, n = (float(v) for v in args.scan.split(":"))
        k, a3 = args.k, args.alpha3

        def family(al):
            return CosSinTriple(al, 0.0, a3, k)

        res = bifurcation_scan(family, args.eps, np.linspace(lo, hi, int(n)), args.section_x,
                               (a, b), args.n)
        _emit(res, args.out)
        return EXIT_OK
    f = _forcing_from(args)
    sec = manifold_section(f, args.eps, args.which, args.section_x, (a, b), args.n)
    if args.out:
        sec.to_csv(args.out)
    if args.intersect:
        other = manifold_section(f, args.eps, args.intersect, args.section_x, (a, b), args.n)
        hits = lobe_intersections(sec, other)
        print(json.dumps({"intersections": len(hits),
                          "points": [{"phi_a": h[0], "phi_b": h[1], "u": h[2][0], "p": h[2][1]}
                                     for h in hits]}, default=_json_default))
    elif not args.out:
        print("phi,u,p,in_window")
        for ph, (u, p), ok in zip(sec.phi, sec.curve, sec.in_window):
            print(f"{ph!r},{u!r},{p!r},{int(ok)}")
    return EXIT_OK


def _summary(res):
    return {"t_final": float(res.times[-1]),
            "events": [{k: v for k, v in e.items()} for e in res.events],
            "fronts_final": [{"id": tr.id, "orientation": tr.orientation.name.lower(),
                              "position": tr.positions[-1]} for tr in res.fronts_at_end()],
            "max_final_speed": res.max_final_speed(),
            "sup_dist_to_minus1": float(np.max(np.abs(res.final.values + 1))),
            "sup_dist_to_plus1": float(np.max(np.abs(res.final.values - 1)))}


def run_scenario(sid, overrides, outdir, stamp=None):
    from .pde import run
    from .scenarios import get_scenario
    sc = get_scenario(sid)
    params = sc.params(overrides)
    cfg = sc.build(overrides)
    stamp = stamp or _dt.datetime.now().strftime("%Y%m%dT%H%M%S%f")
    path = os.path.join(outdir, sc.id, stamp)
    os.makedirs(path, exist_ok=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AcfrontsWarning)
        res = run(cfg)
    res.write(path)
    meta = {"id": sc.id, "description": sc.description, "exploratory": sc.exploratory,
            "version": __version__, "params": params, "config": cfg.to_dict(),
            "summary": _summary(res)}
    with open(os.path.join(path, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, default=_json_default)
    return path, meta


def _scenario_job(job):
    sid, overrides, outdir, stamp = job
    path, meta = run_scenario(sid, overrides, outdir, stamp)
    return sid, path, meta["summary"]


def cmd_scenario(args):
    from .scenarios import get_scenario, match_scenarios
    overrides = {}
    for item in args.set or []:
        k, sep, v = item.partition("=")
        if not sep:
            raise BadInput(f"--set expects key=value, got {item!r}")
        overrides[k.strip()] = v.strip()
    if args.meta:
        with open(args.meta) as fh:
            meta = json.load(fh)
        ids = [meta["id"]]
        overrides = {**meta["params"], **overrides}
    else:
        ids = []
        for pat in args.ids:
            ids += match_scenarios(pat) if any(c in pat for c in "*?[") else [get_scenario(pat).id]
    for sid in ids:
        if get_scenario(sid).exploratory:
            print(EXPLORATORY_BANNER, file=sys.stderr)
    stamp = _dt.datetime.now().strftime("%Y%m%dT%H%M%S%f")
    jobs = [(sid, overrides, args.outdir, stamp) for sid in ids]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_scenario_job, jobs))
    else:
        results = [_scenario_job(j) for j in jobs]
    for sid, path, summary in results:
        print(json.dumps({"id": sid, "path": path, **summary}, default=_json_default))
    return EXIT_OK


def cmd_list(args):
    from .scenarios import get_scenario, scenario_ids
    for sid in scenario_ids():
        sc = get_scenario(sid)
        flag = " [exploratory]" if sc.exploratory else ""
        print(f"{sid:34s} {sc.description}{flag}")
    return EXIT_OK


# ------------------------------------------------------------ parser

def build_parser():
    p = _Parser(prog="acfronts", description="Front dynamics in the forced Allen-Cahn equation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    m = sub.add_parser("melnikov", help="tabulate R(phi) and R'(phi)")
    _add_forcing(m)
    m.add_argument("--orientation", default="up")
    m.add_argument("--range", default="-6:6:0.01", help="A:B[:STEP]")
    m.add_argument("--backend", choices=["auto", "quad"], default="auto")
    m.add_argument("--out")
    m.set_defaults(func=cmd_melnikov)

    o = sub.add_parser("one-front", help="stationary one-fronts and their eigenvalues")
    _add_forcing(o)
    o.add_argument("--orientation", default="up")
    o.add_argument("--range", default="-10:10")
    o.add_argument("--eps", type=float, default=0.1)
    o.add_argument("--out")
    o.set_defaults(func=cmd_one_front)

    t = sub.add_parser("two-front", help="refine a stationary two-front from a seed")
    _add_forcing(t)
    t.add_argument("--eps", type=float, default=0.1)
    t.add_argument("--seed", required=True, help="PHI_UP,PHI_DOWN")
    t.add_argument("--out")
    t.set_defaults(func=cmd_two_front)

    n = sub.add_parser("nfront", help="integrate the reduced N-front ODE")
    _add_forcing(n)
    n.add_argument("--eps", type=float, default=0.1)
    n.add_argument("--init", required=True, help="comma-separated initial positions")
    n.add_argument("--first", default="up")
    n.add_argument("--t-end", type=float, default=100.0)
    n.add_argument("--delta-min", type=float, default=2.0)
    n.add_argument("--merge", action="store_true")
    n.add_argument("--record-every", type=float, default=0.0)
    n.add_argument("--out")
    n.add_argument("--events")
    n.set_defaults(func=cmd_nfront)

    s = sub.add_parser("stationary", help="enumerate stationary N-front patterns")
    _add_forcing(s)
    s.add_argument("--eps", type=float, default=1e-3)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--gaps", help="period gaps n_{j+1}-n_j for periodic topographies")
    s.add_argument("--bifurcation", help="A,B,K: two-front (d,s) bifurcation report")
    s.add_argument("--out")
    s.set_defaults(func=cmd_stationary)

    d = sub.add_parser("pde", help="run the PDE")
    _add_forcing(d)
    d.add_argument("--eps", type=float, default=0.1)
    d.add_argument("--domain", default="-10:10")
    d.add_argument("--dx", type=float, default=0.05)
    d.add_argument("--ic", default="1:-4,-1:4", help="S:C[:A],... for sum S tanh(A(x-C))")
    d.add_argument("--offset", type=float, default=-1.0)
    d.add_argument("--t-end", type=float, default=100.0)
    d.add_argument("--dt", type=float)
    d.add_argument("--scheme", choices=["imex", "rk4"], default="imex")
    d.add_argument("--theta", type=float, default=0.5)
    d.add_argument("--output-every", type=float, default=1.0)
    d.add_argument("--snapshot-every", type=float, default=10.0)
    d.add_argument("--stop-when-settled", action="store_true")
    d.add_argument("--out", default="pde_run")
    d.set_defaults(func=cmd_pde)

    g = sub.add_parser("manifold", help="manifold sections and lobe intersections")
    _add_forcing(g, alpha=True)
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--which", default="Wu_minus")
    g.add_argument("--intersect", help="second manifold, e.g. Ws_minus")
    g.add_argument("--section-x", type=float, default=0.0)
    g.add_argument("--phi-range", default="-5:5")
    g.add_argument("--n", type=int, default=1001)
    g.add_argument("--scan", help="LO:HI:N alpha1 grid for the bifurcation scan")
    g.add_argument("--out")
    g.set_defaults(func=cmd_manifold)

    c = sub.add_parser("scenario", help="run built-in figure scenarios")
    c.add_argument("ids", nargs="*", help="scenario ids or glob patterns")
    c.add_argument("--set", action="append", metavar="KEY=VALUE")
    c.add_argument("--outdir", default="runs")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--meta", help="re-run from a meta.json")
    c.set_defaults(func=cmd_scenario)

    ls = sub.add_parser("list-scenarios", help="list built-in scenarios")
    ls.set_defaults(func=cmd_list)
    return p


_VALUE_OPTS = {"--range", "--domain", "--phi-range", "--scan", "--init", "--seed",
               "--bifurcation", "--ic", "--periodic", "--forcing", "--topo"}


def _join_negative_values(argv):
    # let '--range -6:6' through although the value starts with '-'
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_OPTS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_join_negative_values(argv))
        if args.cmd == "scenario" and not args.ids and not args.meta:
            raise BadInput("give at least one scenario id or --meta")
        return args.func(args)
    except BadInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
