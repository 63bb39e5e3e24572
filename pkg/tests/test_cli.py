import json
from importlib import resources
from pathlib import Path

import pytest

from finsynth import cli
from finsynth.errors import SchemaError, StageAxiomFailure
from finsynth.latdual import FinDistLattice, InternalLattice
from finsynth.fincat import FinCategory
from finsynth.modelfile import canonical, load, parse, shipped_models, to_doc

GOLDEN = Path(str(resources.files("finsynth").joinpath("data/golden")))


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_shipped_models():
    assert shipped_models() == ["arrow-3-2", "set-2chain", "set-3chain", "set-diamond"]


def test_round_trip_through_document():
    for name in shipped_models():
        mf = load(name)
        doc = to_doc(mf.name, mf.model.lattice, mf.presheaves or None, mf.checks or None)
        again = parse(json.loads(canonical(doc)))
        assert again.model.J.sizes.tolist() == mf.model.J.sizes.tolist()
        assert canonical(to_doc(again.name, again.model.lattice)) == canonical(to_doc(mf.name, mf.model.lattice))


def test_arrow_document_shape():
    doc = load("arrow-3-2").doc
    assert doc["lattice"]["restrictions"] == [[0, 1, 1]]
    assert [s["elements"] for s in doc["lattice"]["stages"]] == [2, 3]


def _doc():
    return to_doc("tmp", InternalLattice.constant(FinCategory.terminal(), FinDistLattice.chain(3)))


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d.pop("base"), "$"),
        (lambda d: d["base"].__setitem__("objects", [1]), "base.objects"),
        (lambda d: d["lattice"]["stages"][0].__setitem__("meet", [[0]]), "lattice.stages[0].meet"),
        (lambda d: d["lattice"]["stages"][0].__setitem__("bottom", 7), "lattice.stages[0]"),
        (lambda d: d.__setitem__("checks", "all"), "checks"),
        (lambda d: d.__setitem__("presheaves", {"P": {"sizes": [1, 2]}}), "presheaves.P.sizes"),
    ],
)
def test_schema_errors_name_the_path(mutate, path):
    doc = _doc()
    mutate(doc)
    with pytest.raises(SchemaError) as info:
        parse(doc)
    assert info.value.path == path


def test_broken_lattice_is_a_validation_error():
    doc = _doc()
    doc["lattice"]["stages"][0]["meet"][0][2] = 2
    with pytest.raises(StageAxiomFailure):
        parse(doc)


def test_cli_schema_error_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x"}')
    code, out, err = run_cli(capsys, str(bad))
    assert code == 1 and "base" in err
    bad.write_text("{not json")
    assert run_cli(capsys, str(bad))[0] == 1
    assert run_cli(capsys, "no-such-model")[0] == 1


def test_cli_broken_lattice_exits_1(tmp_path, capsys):
    doc = _doc()
    doc["lattice"]["stages"][0]["join"][1][2] = 1
    p = tmp_path / "broken.json"
    p.write_text(json.dumps(doc))
    assert run_cli(capsys, str(p))[0] == 1


def test_cli_unknown_check_exits_1(capsys):
    assert run_cli(capsys, "set-2chain", "--checks", "nonsense")[0] == 1


def test_cli_json_and_markdown(capsys):
    code, out, _ = run_cli(capsys, "set-3chain", "--checks", "horn,quotient_initial")
    assert code == 0
    rep = json.loads(out)["reports"][0]
    assert [r["check"] for r in rep["records"]] == ["quotient_initial", "horn"]
    assert rep["records"][0]["witness"]["env"] == {"i": "m"}
    code, md, _ = run_cli(capsys, "set-3chain", "--checks", "horn", "--emit", "md")
    assert code == 0 and md.startswith("## set-3chain") and "| horn |" in md


def test_cli_formula(capsys):
    code, out, _ = run_cli(capsys, "set-2chain", "--checks", "", "--formula", "forall i:J. i = 0 \\/ i = 1")
    rec = json.loads(out)["reports"][0]["records"]
    assert code == 0 and rec[0]["check"] == "formula" and rec[0]["verdict"] is True


def test_cli_budget_exit_2(capsys):
    code, out, _ = run_cli(capsys, "set-3chain", "--checks", "phoa", "--budget", "10")
    assert code == 2
    assert json.loads(out)["reports"][0]["records"][0]["status"] == "budget_exceeded"


def test_cli_output_is_canonical(tmp_path, capsys):
    target = tmp_path / "r.json"
    assert run_cli(capsys, "set-2chain", "--checks", "conditions", "-o", str(target))[0] == 0
    text = target.read_text()
    assert text == canonical(json.loads(text))


def test_cli_golden(tmp_path, capsys):
    golden = tmp_path / "golden"
    assert run_cli(capsys, "set-2chain", "--checks", "conditions", "--golden", str(golden), "--update-golden")[0] == 0
    assert run_cli(capsys, "set-2chain", "--checks", "conditions", "--golden", str(golden))[0] == 0
    path = golden / "set-2chain.json"
    path.write_text(path.read_text().replace('"verdict": true', '"verdict": false', 1))
    code, _, err = run_cli(capsys, "set-2chain", "--checks", "conditions", "--golden", str(golden))
    assert code == 1 and "golden mismatch" in err


def test_shipped_golden_matches(capsys):
    assert run_cli(capsys, "set-2chain", "arrow-3-2", "--golden", str(GOLDEN))[0] == 0


def test_cli_verify_report(tmp_path, capsys):
    saved = tmp_path / "r.json"
    assert run_cli(capsys, "set-2chain", "set-3chain", "--checks", "conditions", "-o", str(saved))[0] == 0
    code, out, _ = run_cli(capsys, "set-2chain", "set-3chain", "--verify-report", str(saved))
    res = json.loads(out)
    assert code == 0 and res["verified"]
    assert sum(len(m["witnesses"]) for m in res["models"]) >= 3
    doc = json.loads(saved.read_text())
    for rep in doc["reports"]:
        for rec in rep["records"]:
            if "witness" in rec:
                rec["witness"] = {"stage": "*", "env": {}, "clause": "bot"}
    saved.write_text(json.dumps(doc))
    assert run_cli(capsys, "set-2chain", "set-3chain", "--verify-report", str(saved))[0] == 1


def test_timings_are_opt_in(capsys):
    _, out, _ = run_cli(capsys, "set-2chain", "--checks", "strict")
    assert "wall_ms" not in out
    _, out, _ = run_cli(capsys, "set-2chain", "--checks", "strict", "--timings")
    assert "wall_ms" in out
