"""Check registry, batch runner and report rendering."""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

import numpy as np

from . import complete as cp
from . import fincat as fc
from . import latdual as ld
from . import oracles
from .budget import DEFAULT_BUDGET, budget
from .errors import BudgetExceeded, FinSynthError, NotConnected, ValidationError
from .extend import Extender, build_retraction
from .geom import Model
from .modelfile import ModelFile, canonical, parse

ORACLE_LIMIT = 10**6

GROUPS = {
    "conditions": list(cp.CONDITIONS),
    "geometry": [
        "simplex",
        "horn",
        "horn_decomposition",
        "slice_sum",
        "lift_vs_slice",
        "sigma",
        "scone_pullback",
        "obs_top_proper",
        "open_cylinder",
    ],
    "duality": ["duality"],
    "complete": ["complete"],
    "extend": ["extend"],
}
GROUP_ORDER = list(GROUPS)


# ---------------------------------------------------------------------------
# Objects named in check inputs
# ---------------------------------------------------------------------------


def codomains(mf: ModelFile) -> dict[str, fc.Presheaf]:
    m = mf.model
    out = {"1": m.one, "2": fc.constant(m.base, 2), "J": m.J, "Omega": fc.omega(m.base)}
    out.update(mf.presheaves)
    return out


def samples(mf: ModelFile) -> dict[str, fc.Presheaf]:
    m = mf.model
    out = {"0": fc.empty(m.base), "1": m.one, "2": fc.constant(m.base, 2), "J": m.J, "IsT0": m.is_t0}
    out.update(mf.presheaves)
    return out


def _sizes(P) -> list[int]:
    return [int(s) for s in P.sizes]


def _labels(P, c, ks) -> list:
    return [_plain(P.label(c, int(k))) for k in ks]


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _point_name(m: Model, row) -> str:
    return ",".join(str(m.J.label(c, int(v))) for c, v in enumerate(row))


# ---------------------------------------------------------------------------
# Individual checks: each returns (verdict, witness, counts)
# ---------------------------------------------------------------------------


def _condition(name):
    def run(mf: ModelFile, **_):
        rep = cp.CONDITIONS[name](mf.model)
        counts = {k: _plain(v) for k, v in rep.detail.items()}
        if rep.formula:
            counts["formula"] = rep.formula
        return rep.holds, rep.witness, counts

    return run


def check_simplex(mf, **_):
    m = mf.model
    counts = {f"Delta{n}": _sizes(m.simplex(n)) for n in range(4)}
    counts["cube2"] = _sizes(m.cube(2))
    return True, None, counts


def check_horn(mf, **_):
    m = mf.model
    D, H = m.delta2, m.horn_sub
    members = [np.flatnonzero(mk) for mk in D.masks]
    missing = {m.base.obj_names[c]: _labels(D.ambient, c, members[c][~H.masks[c]]) for c in m.base.objects}
    return True, None, {"Delta2": _sizes(D), "horn": _sizes(H), "missing": missing}


def check_horn_decomposition(mf, **_):
    m = mf.model
    fam = m.scone_family()
    fibers = {m.base.obj_names[c]: fam.fiber_sizes(c) for c in m.base.objects}
    return True, None, {"total": _sizes(fam.total), "fibers": fibers, "horn": _sizes(m.horn_sub)}


def check_slice_sum(mf, **_):
    m = mf.model
    fam = m.slice_family()
    fibers = {m.base.obj_names[c]: fam.fiber_sizes(c) for c in m.base.objects}
    return True, None, {"total": _sizes(fam.total), "fibers": fibers, "Delta2": _sizes(m.delta2)}


def check_lift_vs_slice(mf, **_):
    m = mf.model
    cons = cp.check_conservative(m).holds
    per = {}
    for row in m.global_points:
        iso, n_slice, n_lift = m.slice_vs_lift(row)
        per[_point_name(m, row)] = {"iso": iso, "slice": n_slice, "lift": n_lift}
    all_iso = all(v["iso"] for v in per.values())
    if cons and not all_iso:
        raise ValidationError("conservative model with Lift(IsT i) not isomorphic to I/i")
    return all_iso, None, {"conservative": cons, "points": per}


def check_sigma(mf, **_):
    m = mf.model
    per = {}
    for name, X in samples(mf).items():
        try:
            w = m.connected_witness(X)
        except NotConnected:
            per[name] = {"connected": False}
            continue
        s = m.sigma(X, w)
        per[name] = {"connected": True, "iso": fc.is_iso(s)[0], "scone": _sizes(s.source), "lift": _sizes(s.target)}
    return True, None, {"samples": per}


def check_scone_pullback(mf, **_):
    m = mf.model
    per = {}
    for name, X in samples(mf).items():
        if not m.is_p_connected(m.is_t0, X)[0]:
            continue
        sc = m.scone(X)
        per[name] = {"pullback": sc.pullback_square_holds(), "sum_description": sc.check_sum_description()}
    ok = all(v["pullback"] and v["sum_description"] for v in per.values())
    return ok, None, {"samples": per}


def check_obs_top_proper(mf, **_):
    """A greatest observational point makes the 2-simplex closed-proper."""
    m = mf.model
    D = m.simplex(2)
    has_top, y = m.has_obs_top(D)
    counts = {"has_obs_top": has_top}
    if has_top:
        counts["top"] = [int(v) for v in fc.global_points(D)[y]]
    try:
        proper = cp.check_closed_proper(m, D)
    except BudgetExceeded as exc:
        if has_top:
            raise
        counts["closed_proper"] = f"budget_exceeded: {exc}"
        return True, None, counts
    counts["closed_proper"] = proper.holds
    return (not has_top) or proper.holds, proper.witness, counts


def check_open_cylinder(mf, **_):
    m = mf.model
    two = fc.constant(m.base, 2)
    f = fc.to_terminal(two, m.one)
    cyl = m.open_cylinder(f)
    iso, _ = cyl.fibrewise_comparison()
    return iso, None, {"map": "2 -> 1", "cylinder": _sizes(cyl.presheaf)}


def check_duality(mf, **_):
    m = mf.model
    seen, per = [], {}
    for c in m.base.objects:
        J = m.lattice.stages[c]
        if any(J == K for K in seen):
            continue
        seen.append(J)
        key = m.base.obj_names[c]
        entry = {"J": len(J)}
        spec1 = ld.enum_homs(ld.free_algebra(J, 1))
        entry["spec_free_1"] = int(len(spec1))
        for n in (1, 2, 3):
            ok, _ = ld.simplex_duality(J, n)
            entry[f"simplex_{n}"] = bool(ok)
        per[key] = entry
    ok = all(e["spec_free_1"] == e["J"] and all(e[f"simplex_{n}"] for n in (1, 2, 3)) for e in per.values())
    return ok, None, {"stages": per}


def check_complete(mf, codomain: str, **_):
    m = mf.model
    C = codomains(mf)[codomain]
    r = cp.completeness_suite(C, m, samples={k: v for k, v in samples(mf).items() if k in ("1", "IsT0")})
    counts = dict(r.to_json())
    counts["C^Delta2"] = r.sizes["C^Delta2"]
    if r.based_segal and not r.segal:
        raise ValidationError("basedSegal without Segal")
    if cp.check_conservative(m).holds and r.little_sierp is not None and r.based_segal != r.little_sierp:
        raise ValidationError("conservative model with basedSegal differing from littleSierp")
    if r.sizes["C^Delta2"] <= ORACLE_LIMIT:
        bs, ls = cp.based_segal_class(m), cp.little_sierp_class(m)
        Cs = bs.model.pull(C)
        brute = {
            "segal": oracles.unique_lifts(C, m.horn_sub.inclusion),
            "basedSegal": oracles.unique_lifts(Cs, bs.members[0]),
            "littleSierp": oracles.unique_lifts(Cs, ls.members[0]),
        }
        agree = brute == {k: counts[k] for k in brute}
        counts["oracle_agrees"] = agree
        if not agree:
            raise ValidationError(f"orthogonality oracle disagrees: {brute}")
    verdict = {k: counts[k] for k in ("segal", "basedSegal", "littleSierp", "sierp")}
    return verdict, None, counts


def check_extend(mf, codomain: str, **_):
    m = mf.model
    C = codomains(mf)[codomain]
    if not cp.completeness_suite(C, m).little_sierp:
        return None, None, {"skipped": "not little-Sierpinski complete"}
    per = {}
    for name, X in samples(mf).items():
        try:
            ext = Extender(m, X)
        except NotConnected:
            per[name] = {"connected": False}
            continue
        except BudgetExceeded:
            per[name] = {"budget_exceeded": True}
            continue
        data = ext.cone_data(C)
        LX = ext.lift.presheaf
        rows = fc.homs(LX, C)
        restricted = np.array([ext.sigma.then(fc.NatTrans.from_row(LX, C, r)).row() for r in rows])
        H = build_retraction(ext, C)
        matches = 0
        for d in data:
            e = ext.extend(d, C)
            g = ext.map_of_datum(d).row()
            pre = oracles.unique_preimage(rows, restricted, g)
            same_h = H[tuple(g.tolist())].same(e.extension)
            matches += int(len(pre) == 1 and np.array_equal(pre[0], e.extension.row()) and same_h)
        per[name] = {
            "connected": True,
            "data": len(data),
            "maps_from_lift": int(len(rows)),
            "oracle_matches": matches,
            "section": ext.check_section(),
            "eval_square": ext.check_eval_square(),
        }
    ok = all(
        v.get("oracle_matches") == v.get("data") == v.get("maps_from_lift") and v["section"] and v["eval_square"]
        for v in per.values()
        if v.get("connected") and "data" in v
    )
    return ok, None, {"samples": per}


def check_formula(mf, formula: str, **_):
    rep = cp.check_custom(mf.model, formula, **mf.presheaves)
    return rep.holds, rep.witness, {"formula": rep.formula}


CHECKS = {name: _condition(name) for name in cp.CONDITIONS}
CHECKS.update(
    simplex=check_simplex,
    horn=check_horn,
    horn_decomposition=check_horn_decomposition,
    slice_sum=check_slice_sum,
    lift_vs_slice=check_lift_vs_slice,
    sigma=check_sigma,
    scone_pullback=check_scone_pullback,
    obs_top_proper=check_obs_top_proper,
    open_cylinder=check_open_cylinder,
    duality=check_duality,
    complete=check_complete,
    extend=check_extend,
    formula=check_formula,
)


def expand(mf: ModelFile, selection: list[str], formulas: list[str] = ()) -> list[dict]:
    """Turn group and check names into concrete check invocations."""
    out = []
    for item in selection:
        names = GROUPS.get(item, [item])
        for name in names:
            if name not in CHECKS:
                raise ValueError(f"unknown check {name!r}")
            if name in ("complete", "extend"):
                out.extend({"check": name, "codomain": c} for c in codomains(mf))
            else:
                out.append({"check": name})
    out.extend({"check": "formula", "formula": f} for f in formulas)
    return out


def _order_key(inv: dict) -> tuple:
    name = inv["check"]
    group = next((i for i, g in enumerate(GROUP_ORDER) if name in GROUPS[g]), len(GROUP_ORDER))
    pos = GROUPS[GROUP_ORDER[group]].index(name) if group < len(GROUP_ORDER) else 0
    return group, pos, json.dumps(inv, sort_keys=True)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _load_cached(text: str) -> ModelFile:
    return parse(json.loads(text))


def run_one(doc_text: str, inv: dict, limit: int = DEFAULT_BUDGET, timings: bool = False) -> dict:
    mf = _load_cached(doc_text)
    params = {k: v for k, v in inv.items() if k != "check"}
    rec = {"check": inv["check"], "inputs": params}
    t0 = time.perf_counter()
    try:
        with budget(limit):
            verdict, witness, counts = CHECKS[inv["check"]](mf, **params)
        rec["status"] = "ok"
        rec["verdict"] = verdict
        if witness is not None:
            rec["witness"] = witness
        rec["counts"] = counts
    except BudgetExceeded as exc:
        rec["status"] = "budget_exceeded"
        rec["detail"] = str(exc)
    except (ValidationError, FinSynthError) as exc:
        rec["status"] = "error"
        rec["detail"] = f"{type(exc).__name__}: {exc}"
    if timings:
        rec["wall_ms"] = int((time.perf_counter() - t0) * 1000)
    return rec


def run(mf: ModelFile, selection: list[str], formulas: list[str] = (), limit: int = DEFAULT_BUDGET, jobs: int = 1, timings: bool = False) -> dict:
    invs = sorted(expand(mf, selection, formulas) + [dict(c) for c in mf.checks], key=_order_key)
    unique = []
    for inv in invs:
        if inv not in unique:
            unique.append(inv)
    text = canonical(mf.doc)
    if jobs > 1 and len(unique) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_one, [text] * len(unique), unique, [limit] * len(unique), [timings] * len(unique)))
    else:
        records = [run_one(text, inv, limit, timings) for inv in unique]
    return {"model": mf.name, "budget": limit, "records": records}


def exit_status(reports: list[dict]) -> int:
    statuses = {r["status"] for rep in reports for r in rep["records"]}
    if "error" in statuses:
        return 1
    if "budget_exceeded" in statuses:
        return 2
    return 0


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def to_json(reports: list[dict]) -> str:
    return canonical({"reports": reports})


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, ensure_ascii=False).replace("|", "\\|")
    return str(v).replace("|", "\\|")


def to_markdown(reports: list[dict]) -> str:
    lines = []
    for rep in reports:
        lines += [f"## {rep['model']}", "", "| check | inputs | status | verdict | witness | counts |", "|---|---|---|---|---|---|"]
        for r in rep["records"]:
            lines.append(
                f"| {r['check']} | {_cell(r['inputs'] or None)} | {r['status']} | {_cell(r.get('verdict'))} | {_cell(r.get('witness'))} | {_cell(r.get('counts'))} |"
            )
        lines.append("")
    return "\n".join(lines)


def verify_report(mf: ModelFile, report: dict, limit: int = DEFAULT_BUDGET) -> list[dict]:
    """Re-run every record that carries a witness; the witness must come back identical.

    Condition checks re-force the failing clause at the witness before
    returning it, so a reproduced witness has also been re-verified.
    """
    text = canonical(mf.doc)
    out = []
    for rec in report["records"]:
        if "witness" not in rec:
            continue
        again = run_one(text, {"check": rec["check"], **rec["inputs"]}, limit)
        out.append({"check": rec["check"], "inputs": rec["inputs"], "reproduced": again.get("witness") == rec["witness"]})
    return out
