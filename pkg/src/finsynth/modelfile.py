"""JSON model files.

A model file looks like::

    {
      "name": "arrow-3-2",
      "base": {"objects": ["s", "t"],
               "morphisms": [{"name": "u", "src": 0, "tgt": 1}],
               "compose": []},
      "lattice": {"stages": [{"elements": 2, "names": [...], "meet": [[...]],
                              "join": [[...]], "bottom": 0, "top": 1}, ...],
                  "restrictions": [[0, 1, 1]]},
      "presheaves": {"P": {"sizes": [1, 2], "act": [[0, 0]]}},
      "checks": [{"check": "conditions"}]
    }

Morphisms list the non-identity arrows; ``compose`` holds ``[g, f, h]``
meaning ``g . f = h`` with indices into that list; ``restrictions`` and each
presheaf's ``act`` give one array per listed morphism, mapping the stage at
``tgt`` to the stage at ``src``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .fincat import FinCategory, Presheaf
from .geom import Model
from .latdual import FinDistLattice, InternalLattice


def canonical(obj) -> str:
    """Sorted keys, two-space indent, UTF-8 text with a final newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


@dataclass
class ModelFile:
    name: str
    doc: dict
    model: Model
    presheaves: dict[str, Presheaf] = field(default_factory=dict)
    checks: list[dict] = field(default_factory=list)

    def dumps(self) -> str:
        return canonical(self.doc)


def _need(d, key, path, kind):
    if not isinstance(d, dict) or key not in d:
        raise SchemaError(path, f"missing field {key!r}")
    v = d[key]
    if kind is int:
        ok = isinstance(v, int) and not isinstance(v, bool)
    else:
        ok = isinstance(v, kind)
    if not ok:
        raise SchemaError(f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}")
    return v


def _int_list(v, path, bound=None) -> list[int]:
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise SchemaError(path, "expected a list of integers")
    if bound is not None and any(x < 0 or x >= bound for x in v):
        raise SchemaError(path, f"index out of range 0..{bound - 1}")
    return v


def _table(v, n, path) -> np.ndarray:
    if not isinstance(v, list) or len(v) != n:
        raise SchemaError(path, f"expected {n} rows")
    rows = [_int_list(r, f"{path}[{i}]", n) for i, r in enumerate(v)]
    if any(len(r) != n for r in rows):
        raise SchemaError(path, f"expected an {n}x{n} table")
    return np.array(rows, dtype=np.int64).reshape(n, n)


def parse_base(doc, path="base") -> FinCategory:
    objects = _need(doc, "objects", path, list)
    if not all(isinstance(o, str) for o in objects):
        raise SchemaError(f"{path}.objects", "object names must be strings")
    n = len(objects)
    mors = []
    for i, m in enumerate(doc.get("morphisms", [])):
        p = f"{path}.morphisms[{i}]"
        name = _need(m, "name", p, str)
        s, t = _need(m, "src", p, int), _need(m, "tgt", p, int)
        if not (0 <= s < n and 0 <= t < n):
            raise SchemaError(p, "src/tgt out of range")
        mors.append((name, s, t))
    comp = []
    for i, triple in enumerate(doc.get("compose", [])):
        comp.append(tuple(_int_list(triple, f"{path}.compose[{i}]", len(mors))))
        if len(comp[-1]) != 3:
            raise SchemaError(f"{path}.compose[{i}]", "expected [g, f, h]")
    return FinCategory.from_spec(objects, mors, comp)


def parse_lattice(doc, cat: FinCategory, path="lattice") -> InternalLattice:
    stages_doc = _need(doc, "stages", path, list)
    if len(stages_doc) != cat.n_objects:
        raise SchemaError(f"{path}.stages", f"expected {cat.n_objects} stages")
    stages = []
    for c, s in enumerate(stages_doc):
        p = f"{path}.stages[{c}]"
        n = _need(s, "elements", p, int)
        meet = _table(_need(s, "meet", p, list), n, f"{p}.meet")
        join = _table(_need(s, "join", p, list), n, f"{p}.join")
        bottom, top = _need(s, "bottom", p, int), _need(s, "top", p, int)
        if not (0 <= bottom < n and 0 <= top < n):
            raise SchemaError(p, "bottom/top out of range")
        names = s.get("names")
        if names is not None and (not isinstance(names, list) or len(names) != n):
            raise SchemaError(f"{p}.names", f"expected {n} names")
        stages.append(FinDistLattice(meet, join, bottom, top, names, validate=False))
    restr = _restrictions(doc.get("restrictions", []), cat, [L.n for L in stages], f"{path}.restrictions")
    L = InternalLattice(cat, stages, restr, validate=False)
    L.carrier.validate()
    L.validate()
    return L


def _restrictions(arrays, cat: FinCategory, sizes, path) -> list[np.ndarray]:
    n = cat.n_objects
    if len(arrays) != cat.n_morphisms - n:
        raise SchemaError(path, f"expected {cat.n_morphisms - n} arrays")
    act = [np.arange(sizes[c]) for c in range(n)]
    for k, arr in enumerate(arrays):
        f = n + k
        s, t = int(cat.src[f]), int(cat.tgt[f])
        a = _int_list(arr, f"{path}[{k}]", sizes[s])
        if len(a) != sizes[t]:
            raise SchemaError(f"{path}[{k}]", f"expected {sizes[t]} entries")
        act.append(np.array(a, dtype=np.int64))
    return act


def parse_presheaf(doc, cat: FinCategory, path) -> Presheaf:
    sizes = _int_list(_need(doc, "sizes", path, list), f"{path}.sizes")
    if len(sizes) != cat.n_objects:
        raise SchemaError(f"{path}.sizes", f"expected {cat.n_objects} sizes")
    act = _restrictions(doc.get("act", []), cat, sizes, f"{path}.act")
    labels = doc.get("labels")
    return Presheaf(cat, sizes, act, labels)


def parse(doc: dict) -> ModelFile:
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected an object")
    name = doc.get("name", "model")
    cat = parse_base(_need(doc, "base", "$", dict))
    L = parse_lattice(_need(doc, "lattice", "$", dict), cat)
    pres = {k: parse_presheaf(v, cat, f"presheaves.{k}") for k, v in sorted(doc.get("presheaves", {}).items())}
    checks = doc.get("checks", [])
    if not isinstance(checks, list) or not all(isinstance(c, dict) and isinstance(c.get("check"), str) for c in checks):
        raise SchemaError("checks", "expected a list of {\"check\": name, ...}")
    return ModelFile(name, doc, Model(L, name), pres, checks)


def load(source) -> ModelFile:
    """Load a path, a shipped model name, or an already-parsed document."""
    if isinstance(source, dict):
        return parse(source)
    p = Path(source)
    if not p.exists():
        shipped = resources.files("finsynth").joinpath(f"data/models/{source}.json")
        if shipped.is_file():
            return parse(json.loads(shipped.read_text()))
        raise SchemaError(str(source), "no such model file")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(str(source), f"invalid JSON: {exc.msg} at line {exc.lineno}") from exc
    return parse(doc)


def shipped_models() -> list[str]:
    root = resources.files("finsynth").joinpath("data/models")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def to_doc(name: str, L: InternalLattice, presheaves: dict[str, Presheaf] | None = None, checks=None) -> dict:
    """Document for a model, inverse to :func:`parse`."""
    cat = L.cat
    n = cat.n_objects
    extra = range(n, cat.n_morphisms)
    names = {int(f): k for k, f in enumerate(extra)}
    compose = []
    for g in extra:
        for f in extra:
            h = int(cat.comp[g, f])
            if h >= n:
                compose.append([names[g], names[f], names[h]])
    doc = {
        "name": name,
        "base": {
            "objects": list(cat.obj_names),
            "morphisms": [{"name": cat.mor_names[f], "src": int(cat.src[f]), "tgt": int(cat.tgt[f])} for f in extra],
            "compose": compose,
        },
        "lattice": {
            "stages": [{**s.to_json(), "names": list(s.names)} for s in L.stages],
            "restrictions": [L.carrier.act[f].tolist() for f in extra],
        },
    }
    if presheaves:
        doc["presheaves"] = {
            k: {"sizes": P.sizes.tolist(), "act": [P.act[f].tolist() for f in extra]} for k, P in presheaves.items()
        }
    if checks:
        doc["checks"] = checks
    return doc
