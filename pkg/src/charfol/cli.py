"""charfol command-line front end.

Exit codes: 0 pass, 1 negative mathematical verdict, 2 usage or config
error, 3 numerical failure.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load_config

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _outdir(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


# built-in plane fields ------------------------------------------------------


def _plane_field(name):
    from .chart import FoliationField

    table = {
        "rank_one": (lambda u, v: [u, u**2], lambda u, v: [[1 + 0 * u, 0 * u], [2 * u, 0 * u]]),
        "saddle": (lambda u, v: [u + 0.3 * v**2, -v + 0 * u], lambda u, v: [[1 + 0 * u, 0.6 * v], [0 * u, -1 + 0 * u]]),
        "sink": (lambda u, v: [-u, -2 * v], lambda u, v: [[-1 + 0 * u, 0 * u], [0 * u, -2 + 0 * u]]),
        "source": (lambda u, v: [u, 2 * v], lambda u, v: [[1 + 0 * u, 0 * u], [0 * u, 2 + 0 * u]]),
        "centre": (lambda u, v: [-v, u], lambda u, v: [[0 * u, -1 + 0 * u], [1 + 0 * u, 0 * u]]),
        "model": (lambda u, v: [0 * u, -v], lambda u, v: [[0 * u, 0 * u], [0 * u, -1 + 0 * u]]),
    }
    if name not in table:
        raise UsageError(f"unknown field {name!r}; choose from {sorted(table)}")
    X, DX = table[name]

    def Xa(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.array(X(u, v), dtype=float)

    def DXa(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.array(DX(u, v), dtype=float)

    return FoliationField(Xa, DXa, ((-1.0, 1.0), (-1.0, 1.0)), (False, False), name=name)


def _profile(spec):
    from .profiles import make_profile

    spec = dict(spec)
    variant = spec.pop("variant", None)
    unknown = set(spec) - {"eps", "delta", "seed", "params"}
    if unknown:
        raise ConfigError(f"unknown profile keys {sorted(unknown)}")
    try:
        return make_profile(variant, spec.get("eps"), spec.get("delta"), spec.get("seed", 0), spec.get("params"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# commands -------------------------------------------------------------------


def cmd_contact_check(cfg):
    from .chart import contact_check, critset_chart, darboux_chart, dz_chart, model_chart, torus_chart
    from .foliation import build_critset_form

    name = cfg.get("chart")
    charts = {"darboux": darboux_chart, "dz": dz_chart, "model_plus": lambda: model_chart(1),
              "model_minus": lambda: model_chart(-1), "torus": torus_chart,
              "critset": lambda: build_critset_form(cfg.get("F", [])).chart,
              "critset_linear": lambda: critset_chart(lambda x: scale * np.asarray(x, float),
                                                      lambda x: scale + 0 * np.asarray(x, float),
                                                      label=f"{scale:g} x")}
    scale = float(cfg.get("g_scale"))
    if abs(scale) >= 1:
        raise UsageError("g_scale must satisfy |g_scale| < 1 for a contact form")
    if name not in charts:
        raise UsageError(f"unknown chart {name!r}; choose from {sorted(charts)}")
    rep = contact_check(charts[name](), grid_resolution=cfg.get("grid"), tol=cfg.get("tol"))
    write_json(os.path.join(_outdir(cfg), "contact_check.json"), {"chart": name, **rep.to_dict()})
    print(f"contact-check {name}: is_contact={rep.is_contact} min|V|={rep.min_abs_volume:.6g}")
    return EXIT_OK if rep.is_contact else EXIT_NEGATIVE


def _graph_field(profile):
    from .chart import characteristic_field, graph_surface, pullback, torus_chart

    return characteristic_field(pullback(torus_chart(), graph_surface(profile)))


def _dense_leaf(integrate_leaf, field, p0, t_max, segments=128):
    """Leaf points at (at least) ``segments`` equally spaced times, for drawing."""
    p = np.array(p0, float)
    ts, pts = [0.0], [p]
    dt = t_max / segments
    for k in range(segments):
        tr = integrate_leaf(field, p, (0.0, dt), rtol=1e-9, atol=1e-12)
        p = tr.end
        ts.append((k + 1) * dt)
        pts.append(p)
        if tr.terminal_flag != "reached_time":
            break
    return np.array(ts), np.array(pts)


def cmd_foliation(cfg):
    from .foliation import build_critset_form, find_critical_set
    from .leaves import integrate_leaf
    from .svg import portrait

    surface = cfg.get("surface")
    orbits = []
    if surface == "graph":
        prof = _profile(cfg.get("profile"))
        field = _graph_field(prof)
    elif surface == "model":
        field = _plane_field("model")
    elif surface == "critset":
        field = build_critset_form(cfg.get("F", [])).field
    else:
        raise UsageError(f"unknown surface {surface!r}; choose graph, model or critset")
    domain = cfg.get("domain") or [list(d) for d in field.domain]
    if len(domain) != 2 or any(len(d) != 2 or not d[0] < d[1] for d in domain):
        raise UsageError(f"empty or malformed domain {domain!r}")
    field.domain = tuple(tuple(map(float, d)) for d in domain)
    (u0, u1), (v0, v1) = field.domain
    n = int(cfg.get("n_leaves"))
    t_max = float(cfg.get("t_max"))
    out = _outdir(cfg)
    leaves, rows = [], []
    if surface == "graph":
        seeds = [(u0, v) for v in np.linspace(v0, v1, n, endpoint=False)]
        orbit_seeds = [(u0, 0.0), (u0, -0.5)]
    else:
        vs = (v0 + 0.05 * (v1 - v0), v1 - 0.05 * (v1 - v0))
        seeds = [(u, v) for v in vs for u in np.linspace(u0, u1, max(n // 2, 2) + 2)[1:-1]]
        orbit_seeds = []
    for k, p0 in enumerate(list(seeds) + orbit_seeds):
        ts, raw = _dense_leaf(integrate_leaf, field, p0, t_max)
        uv = np.column_stack(field.wrap(raw[:, 0], raw[:, 1]))
        (orbits if k >= len(seeds) else leaves).append(uv)
        rows.extend([k, t, u, v] for t, (u, v) in zip(ts, uv))
    cs = find_critical_set(field, grid=(cfg.get("grid"), cfg.get("grid")), tol=cfg.get("tol"))
    glyphs = [(p.location, p.kind) for p in cs.points]
    curves = [c.samples for c in cs.curves]
    svg = portrait(field.domain, leaves, glyphs, curves, orbits, field.periodic, title=f"foliation: {surface}")
    with open(os.path.join(out, "foliation.svg"), "w") as fh:
        fh.write(svg)
    write_csv(os.path.join(out, "leaves.csv"), ["leaf", "t", "u", "v"], rows)
    report = {"surface": surface, "domain": domain, "critical_set": cs.to_dict(),
              "closed_orbits": [0.0, -0.5] if surface == "graph" else []}
    write_json(os.path.join(out, "singularities.json"), report)
    print(f"foliation {surface}: {len(leaves)} leaves, {len(cs.points)} points, {len(cs.curves)} curves")
    return EXIT_OK


def _point(cfg, key, n):
    p = cfg.get(key)
    if not isinstance(p, (list, tuple)) or len(p) != n:
        raise UsageError(f"{key} must be a list of {n} numbers")
    return np.array(p, dtype=float)


def cmd_classify(cfg):
    from .foliation import DegenerateSingularity, classify

    field = _plane_field(cfg.get("field"))
    p = _point(cfg, "point", 2)
    try:
        cp = classify(field, p, tol=cfg.get("tol"))
    except DegenerateSingularity as exc:
        write_json(os.path.join(_outdir(cfg), "classify.json"), {"field": cfg.get("field"), "degenerate": str(exc)})
        print(f"classify: degenerate ({exc})")
        return EXIT_NEGATIVE
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_json(os.path.join(_outdir(cfg), "classify.json"), {"field": cfg.get("field"), **cp.to_dict()})
    print(f"classify {cfg.get('field')} at {p.tolist()}: {cp.kind}")
    return EXIT_OK


def cmd_leaves(cfg):
    from .foliation import classify, two_leaves

    field = _plane_field(cfg.get("field"))
    cp = classify(field, _point(cfg, "point", 2))
    traces = two_leaves(field, cp, a=float(cfg.get("a")), tol=cfg.get("tol"))
    out = _outdir(cfg)
    summary = []
    for k, tr in enumerate(traces):
        tr.to_csv(os.path.join(out, f"leaf_{k}.csv"))
        summary.append({"start": tr.uv[0], "end": tr.end, "flag": tr.terminal_flag,
                        "distance": float(np.linalg.norm(tr.end - cp.location))})
    write_json(os.path.join(out, "leaves.json"), {"field": cfg.get("field"), "point": cp.to_dict(), "leaves": summary})
    print(f"leaves: {len(traces)} traces converging to {cp.kind} point")
    return EXIT_OK


def cmd_hammer(cfg):
    from .flows import build_hammer, verify_hammer

    try:
        spec = build_hammer(_point(cfg, "p", 3), _point(cfg, "q", 3), float(cfg.get("eps")), T=float(cfg.get("T")))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = verify_hammer(spec, sample_grid=cfg.get("grid"), T=float(cfg.get("T")), tol=cfg.get("tol"))
    write_json(os.path.join(_outdir(cfg), "hammer.json"), {"spec": spec.to_dict(), "report": rep.to_dict()})
    print(f"hammer: (i)={rep.cond_i} (ii)={rep.cond_ii} (iii)={rep.cond_iii} (iv)={rep.cond_iv}")
    if rep.failed:
        return EXIT_NUMERICAL
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_convexity(cfg):
    from .convexity import check_convexity

    prof = _profile(cfg.get("profile"))
    rep = check_convexity(prof, tol=cfg.get("tol"))
    write_json(os.path.join(_outdir(cfg), "convexity.json"), {"profile": prof.to_dict(), **rep.to_dict()})
    d0 = rep.orbits["C1"].derivative if hasattr(rep.orbits["C1"], "derivative") else float("nan")
    print(f"convexity: {rep.verdict} (P'(0) = {d0:.12g})")
    if rep.verdict == "inconclusive":
        return EXIT_NUMERICAL
    return EXIT_OK if rep.verdict == "convex" else EXIT_NEGATIVE


def _snapshot_svgs(stage, taus, out):
    from .svg import portrait

    eps = stage.eps
    # log spacing: the f1 leaves need long times to reach the core
    ys = eps * np.logspace(0.0, -120.0, 600)
    thetas = np.linspace(0.0, 1.0, 16, endpoint=False)
    base = []
    for sgn in (1.0, -1.0):
        y = sgn * ys
        t = stage.transport.T0(y)
        for th in thetas:
            base.append((np.mod(th + t, 1.0), y))
    for tau in taus:
        leaves = [np.column_stack([x, stage.phi(tau, x, y)]) for x, y in base]
        svg = portrait(((0.0, 1.0), (-1.5 * eps, 1.5 * eps)), leaves, periodic=(True, False),
                       orbits=[np.array([[0.0, 0.0], [1.0, 0.0]])], title=f"F_tau, tau = {tau:g}")
        with open(os.path.join(out, f"snapshot_tau_{tau:g}.svg"), "w") as fh:
            fh.write(svg)


def cmd_flexibility(cfg):
    from .flexibility import InductionError, run_induction

    N = int(cfg.get("N"))
    g = cfg.get("grid")
    try:
        res = run_induction(N=N, C=float(cfg.get("C")), c=cfg.get("c"), seed=cfg.get("seed"), grid=(g, g, 9))
    except InductionError as exc:
        write_json(os.path.join(_outdir(cfg), "induction.json"),
                   {"failed_stage": exc.stage, "clause": exc.clause,
                    "record": exc.record.to_dict() if exc.record else None})
        print(f"flexibility: {exc}")
        return EXIT_NEGATIVE
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _outdir(cfg)
    write_json(os.path.join(out, "induction.json"), res.to_dict())
    from .flexibility import StageIsotopy
    from .profiles import make_profile
    first = res.records[0]
    eps0 = 0.9 * res.params["C"]
    f0 = make_profile("C_eps", eps0, eps0 / 4, res.params["seed"])
    _snapshot_svgs(StageIsotopy(f0, first.f_i, eps0), cfg.get("snapshots"), out)
    print(f"flexibility: {len(res.records)} stages, all clauses pass = {res.passed}")
    return EXIT_OK if res.passed else EXIT_NEGATIVE


def cmd_critset(cfg):
    from .acceptance import critset_roundtrip
    from .foliation import build_critset_form, find_critical_set
    from .svg import portrait

    F = cfg.get("F", [])
    try:
        form = build_critset_form(F, interval=tuple(cfg.get("interval")))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    g = cfg.get("grid")
    cs = find_critical_set(form.field, grid=(g, g), tol=cfg.get("tol"))
    rt = critset_roundtrip(F, grid=g) if tuple(cfg.get("interval")) == (-1.0, 1.0) else None
    out = _outdir(cfg)
    write_json(os.path.join(out, "critset.json"), {"form": form.to_dict(), "critical_set": cs.to_dict(), "round_trip": rt})
    glyphs = [(p.location, p.kind) for p in cs.points]
    svg = portrait(form.field.domain, critical_points=glyphs, curves=[c.samples for c in cs.curves],
                   title="critical set of y dx + g(x) dy + dz on {z = 0}")
    with open(os.path.join(out, "critset.svg"), "w") as fh:
        fh.write(svg)
    print(f"critset: {len(cs.points)} points, {len(cs.curves)} curves, {len(cs.unresolved)} unresolved cells")
    if rt is not None and not rt["ok"]:
        return EXIT_NEGATIVE
    return EXIT_OK


def _parse_criteria(spec):
    if spec is None:
        return None
    if isinstance(spec, list):
        return [int(c) for c in spec]
    nums = set()
    for part in str(spec).split(","):
        if "-" in part:
            a, b = part.split("-")
            nums.update(range(int(a), int(b) + 1))
        elif part.strip():
            nums.add(int(part))
    if not nums or not nums <= set(range(1, 12)):
        raise UsageError(f"criteria must lie in 1..11, got {spec!r}")
    return sorted(nums)


def cmd_verify(cfg):
    from .acceptance import report_json, run_acceptance

    crit = _parse_criteria(cfg.get("criteria"))
    rep = run_acceptance(crit, seed=cfg.get("seed"), threads=cfg.params["threads"], echo=print)
    with open(os.path.join(_outdir(cfg), "acceptance.json"), "w") as fh:
        fh.write(report_json(rep))
    return EXIT_OK if rep["passed"] else EXIT_NEGATIVE


COMMANDS = {
    "contact-check": (cmd_contact_check, "contact condition of a built-in chart on a grid"),
    "foliation": (cmd_foliation, "portrait, leaves and singularities of a surface foliation"),
    "classify": (cmd_classify, "classify a zero of a built-in plane field"),
    "leaves": (cmd_leaves, "two leaves converging to a critical point"),
    "hammer": (cmd_hammer, "build and verify a contact hammer"),
    "convexity": (cmd_convexity, "convexity verdict for a graph surface S_f"),
    "flexibility": (cmd_flexibility, "inductive stage sequence towards f_infty"),
    "critset": (cmd_critset, "critical set of y dx + g(x) dy + dz for a closed set F"),
    "verify": (cmd_verify, "run the acceptance suite"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON file with command parameters")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--grid", type=int, metavar="N", help="grid resolution")
    common.add_argument("--tol", type=float, metavar="X", help="tolerance")
    common.add_argument("--threads", type=int, metavar="K", help="worker threads (default CHARFOL_THREADS or 1)")
    common.add_argument("--seed", type=int, metavar="S", help="random seed")
    parser = argparse.ArgumentParser(prog="charfol", description="Characteristic foliation toolkit.")
    parser.add_argument("--version", action="version", version=f"charfol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "verify":
            p.add_argument("--criteria", help="subset such as 1-10 or 2,5")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    overrides = {k: getattr(args, k) for k in ("out", "grid", "tol", "threads", "seed")}
    if args.command == "verify":
        overrides["criteria"] = args.criteria
    fn = COMMANDS[args.command][0]
    from .chart import DomainError
    from .foliation import NoConvergingLeaf
    from .leaves import LeafIntegrationError, ReturnMapError
    from .ode import StepSizeError
    try:
        cfg = load_config(args.command, args.config, overrides)
        return fn(cfg)
    except (ConfigError, UsageError, DomainError) as exc:
        print(f"charfol {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StepSizeError, LeafIntegrationError, ReturnMapError, NoConvergingLeaf, FloatingPointError) as exc:
        print(f"charfol {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
