"""The acceptance suite: eleven end-to-end criteria with fixed tolerances.

Each criterion returns a record {id, name, passed, metrics, runtime_limit}.
Wall-clock times are kept out of the records so that reports are
byte-identical between runs; they are returned separately for display.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.spatial import cKDTree

from .chart import contact_check
from .convexity import check_convexity
from .flexibility import run_induction, slope_check, StageIsotopy, canonical_pair, stage_psi
from .flows import CATALOGUE, canonical_hammer, conformal_factor_check, hamiltonian_field, alpha_darboux, verify_hammer
from .foliation import build_critset_form, classify, find_critical_set, two_leaves
from .chart import FoliationField
from .leaves import return_map
from .profiles import make_profile

CRITERIA = {}


def criterion(num, name, limit):
    def wrap(fn):
        CRITERIA[num] = (name, limit, fn)
        return fn
    return wrap


def _f(x):
    """Round floats for the report so tiny platform noise cannot leak in."""
    if isinstance(x, dict):
        return {k: _f(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_f(v) for v in x]
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.10g}")
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


# 1 ---------------------------------------------------------------------------


@criterion(1, "contact condition for y dx + g(x) dy + dz", 10.0)
def contact_condition(seed=0):
    form = build_critset_form([0.0])
    rep = contact_check(form.chart, grid_resolution=128, tol=1e-9)
    ok = rep.is_contact and rep.min_abs_volume >= 0.5 - 1e-9
    return ok, {"min_abs_volume": rep.min_abs_volume, "is_contact": rep.is_contact, "grid": 128}


# 2 ---------------------------------------------------------------------------


def sample_closed_set(F, n=20001):
    """Dense samples of F x {0} (F a list of points and [l, r] intervals)."""
    pts = []
    for item in F:
        if np.ndim(item) == 0:
            pts.append([float(item)])
        else:
            pts.append(np.linspace(item[0], item[1], n).tolist())
    xs = np.array([x for p in pts for x in p])
    return np.column_stack([xs, np.zeros_like(xs)]) if len(xs) else np.empty((0, 2))


def hausdorff(a, b):
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return math.inf
    da = cKDTree(b).query(a)[0].max()
    db = cKDTree(a).query(b)[0].max()
    return float(max(da, db))


def critset_roundtrip(F, grid=512):
    form = build_critset_form(F)
    cs = find_critical_set(form.field, grid=(grid, grid))
    detected = [p.location for p in cs.points] + [s for c in cs.curves for s in c.samples]
    detected = np.array(detected).reshape(-1, 2)
    target = sample_closed_set(F)
    step = 2.0 / grid
    d = hausdorff(detected, target)
    unresolved = np.array(cs.unresolved).reshape(-1, 2)
    # unresolved cells only need to sit next to F (one-sided distance)
    d_unres = 0.0
    if len(unresolved):
        d_unres = float(cKDTree(target).query(unresolved)[0].max()) if len(target) else math.inf
    return {"hausdorff": d, "bound": 2 * step, "n_points": len(cs.points), "n_curves": len(cs.curves),
            "n_unresolved": len(unresolved), "unresolved_distance": d_unres,
            "ok": d <= 2 * step and d_unres <= 2 * step}


@criterion(2, "critical-set round trip", 15.0)
def critset_cases(seed=0):
    cases = {"empty": [], "point": [0.0], "point+interval": [0.0, [0.3, 0.4]]}
    out = {}
    for k, F in cases.items():
        t0 = time.perf_counter()
        out[k] = critset_roundtrip(F)
        out[k]["within_5s"] = time.perf_counter() - t0 < 5.0
    return all(v["ok"] and v["within_5s"] for v in out.values()), out


# 3 ---------------------------------------------------------------------------


def rank_one_field():
    def X(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.array([u, u**2])

    def DX(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        z = np.zeros_like(u)
        return np.array([[np.ones_like(u), z], [2 * u, z]])

    return FoliationField(X, DX, ((-1.0, 1.0), (-1.0, 1.0)), (False, False), name="(x, x^2)")


def shooting_oracle(n=10_000, r=0.2):
    """Backward limits of leaves of (x, x^2) from n seeds on a circle.

    Along leaves y - x^2/2 is constant while x -> 0 backwards, so a seed
    lands at (0, y - x^2/2). The leaves reaching the origin sit at the sign
    changes of that limit around the circle.
    """
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    x, y = r * np.cos(th), r * np.sin(th)
    c = y - x**2 / 2
    s = np.sign(c)
    flips = np.flatnonzero(s != np.roll(s, -1))
    return [{"theta": float(th[i]), "side": int(np.sign(x[i])), "x": float(x[i])} for i in flips]


@criterion(3, "two leaves at a rank-one point", 5.0)
def two_leaves_rank_one(seed=0):
    field = rank_one_field()
    cp = classify(field, np.array([0.0, 0.0]))
    traces = two_leaves(field, cp)
    oracle = shooting_oracle()
    ends, slopes, sides = [], [], []
    for tr in traces:
        uv = tr.uv
        ends.append(float(np.linalg.norm(tr.end)))
        d = uv[-1] - uv[-2]
        slopes.append(float(abs(d[1] / d[0])) if d[0] != 0 else math.inf)
        sides.append(int(np.sign(np.median(uv[:, 0]))))
    invariants = [float(abs(tr.uv[0, 1] - tr.uv[0, 0] ** 2 / 2)) for tr in traces]
    oracle_sides = sorted(o["side"] for o in oracle)
    ok = (cp.kind == "rank_one" and sorted(sides) == [-1, 1] and max(ends) < 1e-6
          and max(slopes) < 0.05 and oracle_sides == [-1, 1] and max(invariants) < 1e-6)
    return ok, {"kind": cp.kind, "terminal_distance": ends, "terminal_slope": slopes, "sides": sides,
                "oracle_basins": oracle, "seed_invariant": invariants}


# 4 ---------------------------------------------------------------------------

HAMILTONIANS = ("one", "x", "xyz", "quadratic", "wave")


@criterion(4, "contact Hamiltonian identities", 5.0)
def hamiltonian_identities(seed=0):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-1, 1, size=(3, 1000))
    out = {}
    for name in HAMILTONIANS:
        H = CATALOGUE[name]
        X = hamiltonian_field(H, p)
        a = float(np.max(np.abs(alpha_darboux(p, X) - H.H(*p))))
        r = float(np.max(conformal_factor_check(H, p)))
        out[name] = {"alpha_error": a, "conformal_residual": r}
    ok = all(v["alpha_error"] <= 1e-12 and v["conformal_residual"] < 1e-6 for v in out.values())
    return ok, out


# 5 ---------------------------------------------------------------------------


@criterion(5, "contact hammer conditions", 30.0)
def hammer(seed=0):
    spec = canonical_hammer()
    rep = verify_hammer(spec, sample_grid=50, T=1.0, tol=1e-12)
    return rep.passed, {"spec": spec.to_dict(), "report": rep.to_dict()}


# 6 ---------------------------------------------------------------------------


@criterion(6, "return maps", 2.0)
def return_maps(seed=0):
    from .profiles import custom_profile
    lin = custom_profile(lambda y: -np.asarray(y, float), lambda y: -np.ones_like(np.asarray(y, float)), "-y")
    errs = {}
    for y0 in (0.01, 0.1, 0.2):
        errs[str(y0)] = abs(return_map(lin, y0).y_out - y0 * math.exp(-1))
    d0 = return_map(lin, 0.0).derivative
    finf = return_map(make_profile("f_infty"), 0.0)
    ok = max(errs.values()) < 1e-8 and abs(d0 - math.exp(-1)) < 1e-7 and abs(finf.derivative - 1) < 1e-9 \
        and finf.degenerate
    return ok, {"P_errors": errs, "dP0_linear": d0, "dP0_f_infty": finf.derivative,
                "f_infty_degenerate": finf.degenerate}


# 7 ---------------------------------------------------------------------------

CONVEX_SAMPLES = ((0.1, 0.025, 0), (0.05, 0.0125, 1), (0.02, 0.005, 2))


@criterion(7, "convexity verdicts", 5.0)
def convexity(seed=0):
    verdicts = {}
    for eps, delta, s in CONVEX_SAMPLES:
        prof = make_profile("C_eps", eps, delta, seed + s)
        verdicts[f"C_eps(eps={eps}, seed={seed + s})"] = check_convexity(prof).verdict
    rep = check_convexity(make_profile("f_infty"))
    obstruction = bool(rep.obstruction.get("holds"))
    ok = all(v == "convex" for v in verdicts.values()) and rep.verdict == "non_convex" and obstruction
    return ok, {"C_eps": verdicts, "f_infty": rep.verdict, "obstruction": rep.obstruction}


# 8 ---------------------------------------------------------------------------


@criterion(8, "slope bound", 60.0)
def slope_bound(seed=0):
    out = {}
    for eps in (0.04, 0.01):
        f0, f1 = canonical_pair(eps, seed)
        rep = slope_check(StageIsotopy(f0, f1, eps))
        out[str(eps)] = rep.to_dict()
    return all(v["pass"] for v in out.values()), out


# 9 ---------------------------------------------------------------------------


@criterion(9, "PSI displacement", 60.0)
def psi_displacement(seed=0):
    eps = 0.01
    f0, f1 = canonical_pair(eps, seed)
    stage = StageIsotopy(f0, f1, eps)
    rep, stages = stage_psi(stage)
    ok = rep.is_psi and rep.displacement_bound < 2 * 50 * math.sqrt(eps)
    return ok, {"psi": rep.to_dict(), "supports": [s.to_dict() for s in stages]}


# 10 --------------------------------------------------------------------------


@criterion(10, "induction prefix", 300.0)
def induction(seed=0):
    res = run_induction(N=4, C=0.25, seed=seed, strict=False)
    recs = res.records
    last = recs[-1]
    ok = (len(recs) == 4 and res.passed and all(r.eps_i < 0.25 / 4**r.index for r in recs)
          and all(max(r.displacement["A"], r.displacement["B"]) <= 100 * math.sqrt(r.eps_i) for r in recs)
          and last.sup_to_f_infty < last.eps_i)
    summary = [{"i": r.index, "eps_i": r.eps_i, "displacement": [r.displacement["A"], r.displacement["B"]],
                "bound_100_sqrt_eps": 100 * math.sqrt(r.eps_i), "c0_distance": r.c0_distance,
                "c_over_2i": r.bound, "sup_f_i_minus_f_infty": r.sup_to_f_infty,
                "clauses": r.clauses} for r in recs]
    return ok, {"params": res.params, "stages": summary}


# runner ----------------------------------------------------------------------


def run_criterion(num, seed=0):
    name, limit, fn = CRITERIA[num]
    t0 = time.perf_counter()
    try:
        ok, metrics = fn(seed)
        error = None
    except Exception as exc:  # a crash is a failed criterion, reported as such
        ok, metrics, error = False, {}, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - t0
    rec = {"id": num, "name": name, "passed": bool(ok) and elapsed < limit, "runtime_limit": limit,
           "within_runtime": elapsed < limit, "metrics": _f(metrics)}
    if error:
        rec["error"] = error
    return rec, elapsed


def report_json(report):
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"


def run_acceptance(criteria=None, seed=0, threads=1, determinism=True, echo=None):
    """Run the criteria (default 1-10, plus 11 when ``determinism``).

    Criterion 11 reruns 1-10 and compares the serialised reports byte by byte.
    ``echo`` receives one line per criterion.
    """
    nums = sorted(criteria) if criteria else sorted(CRITERIA)
    base = [n for n in nums if n != 11]

    def batch():
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                return list(ex.map(lambda n: run_criterion(n, seed), base))
        return [run_criterion(n, seed) for n in base]

    results = batch()
    records = [r for r, _ in results]
    if echo:
        for rec, dt in results:
            echo(format_line(rec, dt))
    report = {"seed": seed, "criteria": records}
    want_11 = 11 in nums or (criteria is None and determinism)
    if want_11:
        again = {"seed": seed, "criteria": [r for r, _ in batch()]}
        same = report_json(report) == report_json(again)
        rec = {"id": 11, "name": "determinism", "passed": same, "runtime_limit": None,
               "within_runtime": True, "metrics": {"byte_identical": same, "criteria": base}}
        records.append(rec)
        if echo:
            echo(format_line(rec, None))
    report["passed"] = all(r["passed"] for r in records)
    return report


def format_line(rec, elapsed):
    t = f" ({elapsed:.2f} s)" if elapsed is not None else ""
    return f"[{'PASS' if rec['passed'] else 'FAIL'}] criterion {rec['id']:2d}: {rec['name']}{t}"
