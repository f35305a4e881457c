"""File parsing, report serialization, and the command-line surface."""

import json

import numpy as np
import pytest

from qgscatter.cli import (
    dumps_deterministic,
    parse_graph_document,
    parse_graph_file,
    run_command,
    serialize_graph,
)
from qgscatter.errors import ParseError
from qgscatter.graph_core import MetricGraph, OpenGraph

from conftest import DATA_DIR


def matrix_from_payload(payload):
    return np.array([[complex(re, im) for re, im in row] for row in payload])


def run_json(capsys, argv):
    report, code = run_command(argv)
    out = capsys.readouterr().out
    assert code == 0, out
    return json.loads(out), out


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


INTERVAL_DOC = {
    "vertices": [
        {"id": "a", "condition": {"type": "neumann"}},
        {"id": "b", "condition": {"type": "neumann"}},
    ],
    "edges": [{"id": "e", "from": "a", "to": "b", "length": 1.0}],
}

RESONATOR_DOC = {
    "vertices": [
        {"id": "c", "condition": {"type": "neumann"}},
        {"id": "w1", "condition": {"type": "dirichlet"}},
        {"id": "w2", "condition": {"type": "dirichlet"}},
    ],
    "edges": [
        {"id": "e1", "from": "c", "to": "w1", "length": 1.0},
        {"id": "e2", "from": "c", "to": "w2", "length": 1.0},
    ],
    "leads": [{"id": "l0", "at": "c"}],
}


def test_parse_shipped_star():
    og = parse_graph_file(DATA_DIR / "s3_star.json")
    assert isinstance(og, OpenGraph)
    assert og.n_leads == 6
    assert [l.id for l in og.leads] == ["e", "(1,2)", "(1,3)", "(2,3)", "(1,2,3)", "(1,3,2)"]


def test_parse_shipped_negative_pair():
    for name in ("mcdonald_meyers_1.json", "mcdonald_meyers_2.json"):
        og = parse_graph_file(DATA_DIR / name)
        assert isinstance(og, OpenGraph)
        assert og.n_leads == 2


def test_parse_rejects_unknown_keys():
    doc = {"vertices": [{"id": "a", "condition": {"type": "neumann"}, "colour": "red"}]}
    with pytest.raises(ParseError):
        parse_graph_document(doc)
    with pytest.raises(ParseError):
        parse_graph_document({"vertices": [], "metadata": {}})


def test_parse_syntax_error_carries_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"vertices": [,]}')
    with pytest.raises(ParseError) as err:
        parse_graph_file(path)
    assert "bad.json:1:" in str(err.value)


def test_compact_file_gives_metric_graph(tmp_path):
    path = write(tmp_path, "interval.json", INTERVAL_DOC)
    g = parse_graph_file(path)
    assert isinstance(g, MetricGraph)


def test_round_trip(tmp_path):
    path = write(tmp_path, "res.json", RESONATOR_DOC)
    og = parse_graph_file(path)
    doc = serialize_graph(og)
    again = parse_graph_document(doc)
    assert serialize_graph(again) == doc


def test_deterministic_serializer():
    text = dumps_deterministic({"b": 1.0 / 3.0, "a": [1, True, None, "x"]})
    assert text == '{"a":[1,true,null,"x"],"b":0.33333333333333331}'
    with pytest.raises(TypeError):
        dumps_deterministic({"x": object()})


def test_compute_s_star_golden(capsys):
    doc, _ = run_json(capsys, ["compute-s", "--graph", str(DATA_DIR / "s3_star.json"),
                               "--k", "1.0"])
    s = matrix_from_payload(doc["results"]["s"])
    np.testing.assert_allclose(s, np.full((6, 6), 1 / 3) - np.eye(6), atol=1e-13)
    assert doc["results"]["unitarity_defect"] <= 1e-12
    assert doc["command"] == "compute-s"


def test_compute_s_complex_k(capsys, tmp_path):
    path = write(tmp_path, "res.json", RESONATOR_DOC)
    doc, _ = run_json(capsys, ["compute-s", "--graph", path, "--k", "1.0,-0.2"])
    assert doc["results"]["k"] == [1.0, -0.2]


def test_quotient_golden(capsys):
    doc, _ = run_json(capsys, [
        "quotient", "--graph", str(DATA_DIR / "s3_star.json"),
        "--symmetry", str(DATA_DIR / "s3_sym.json"), "--rep", "1_H", "--k", "1.0",
    ])
    q = matrix_from_payload(doc["results"]["matrix"])
    np.testing.assert_allclose(q, np.array([[-1, 2, 2], [2, -1, 2], [2, 2, -1]]) / 3,
                               atol=1e-12)


def test_quotient_direct_sum(capsys):
    doc, _ = run_json(capsys, [
        "quotient", "--graph", str(DATA_DIR / "s3_star.json"),
        "--symmetry", str(DATA_DIR / "s3_sym.json"), "--rep", "1_G,R_2d", "--k", "2.0",
    ])
    q = matrix_from_payload(doc["results"]["matrix"])
    np.testing.assert_allclose(q, np.diag([1.0, -1.0, -1.0]), atol=1e-12)


def test_eigenvalues_json_and_csv(capsys, tmp_path):
    path = write(tmp_path, "interval.json", INTERVAL_DOC)
    doc, _ = run_json(capsys, ["eigenvalues", "--graph", path,
                               "--kmin", "0.5", "--kmax", "7.0"])
    ks = [ev["k"] for ev in doc["results"]["eigenvalues"]]
    np.testing.assert_allclose(ks, [np.pi, 2 * np.pi], atol=1e-9)

    report, code = run_command(["eigenvalues", "--graph", path,
                                "--kmin", "0.5", "--kmax", "7.0", "--emit", "csv"])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "k,multiplicity,residual"
    assert len(lines) == 3


def test_poles_csv(capsys, tmp_path):
    path = write(tmp_path, "res.json", RESONATOR_DOC)
    report, code = run_command(["poles", "--graph", path,
                                "--re-min", "0", "--re-max", "6",
                                "--im-min", "-2", "--im-max", "0", "--emit", "csv"])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "re,im,multiplicity,residual"
    assert len(lines) == 3  # two poles below the axis in this window
    first = lines[1].split(",")
    assert abs(float(first[0]) - np.pi / 2) < 1e-8
    assert abs(float(first[1]) + 0.5 * np.log(3)) < 1e-8


def test_check_induced_cli(capsys):
    doc, _ = run_json(capsys, [
        "check-induced", "--symmetry", str(DATA_DIR / "s3_sym.json"),
        "--sub1", "H", "--rep1", "1_H", "--sub2", "H2", "--rep2", "1_H2",
    ])
    assert doc["results"]["equal"] is True
    assert doc["results"]["induced_1"] == [[3.0, 0.0], [1.0, 0.0], [1.0, 0.0],
                                           [1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]


def test_check_isoscattering_cli(capsys):
    doc, _ = run_json(capsys, [
        "check-isoscattering",
        "--graph1", str(DATA_DIR / "mcdonald_meyers_1.json"),
        "--graph2", str(DATA_DIR / "mcdonald_meyers_2.json"),
    ])
    assert doc["results"]["verdict"] == "no transplantation on these lead sets"
    assert doc["results"]["isopolar"] is False
    assert doc["results"]["label"] == "numerical evidence"
    assert "pole_pairing" in doc["results"]


def test_check_isoscattering_cli_positive(capsys, tmp_path):
    star3 = {
        "vertices": [{"id": "c", "condition": {"type": "neumann"}}],
        "leads": [{"id": f"l{i}", "at": "c"} for i in range(3)],
    }
    split = {
        "vertices": [
            {"id": "n", "condition": {"type": "neumann"}},
            {"id": "d1", "condition": {"type": "dirichlet"}},
            {"id": "d2", "condition": {"type": "dirichlet"}},
        ],
        "leads": [{"id": "l0", "at": "n"}, {"id": "l1", "at": "d1"},
                  {"id": "l2", "at": "d2"}],
    }
    p1 = write(tmp_path, "a.json", star3)
    p2 = write(tmp_path, "b.json", split)
    doc, _ = run_json(capsys, [
        "check-isoscattering", "--graph1", p1, "--graph2", p2,
        "--window", "0", "4", "-2", "0",
    ])
    assert doc["results"]["verdict"] == "transplantable (numerical evidence)"
    assert doc["results"]["isophasal"] is True
    assert "pi" in doc["results"]


def test_usage_errors():
    _, code = run_command([])
    assert code == 2
    _, code = run_command(["no-such-command"])
    assert code == 2
    _, code = run_command(["compute-s"])  # missing required flags
    assert code == 2


def test_domain_error_exit_code(tmp_path, capsys):
    path = write(tmp_path, "bad.json", {"vertices": [], "colour": 1})
    _, code = run_command(["compute-s", "--graph", path, "--k", "1.0"])
    assert code == 1
    err = capsys.readouterr().err
    assert "error:" in err


def test_missing_file_exit_code(capsys):
    _, code = run_command(["compute-s", "--graph", "/nonexistent.json", "--k", "1.0"])
    assert code == 1


def test_byte_determinism(capsys):
    argv = ["compute-s", "--graph", str(DATA_DIR / "s3_star.json"), "--k", "7.3"]
    run_command(argv)
    first = capsys.readouterr().out
    run_command(argv)
    second = capsys.readouterr().out
    assert first == second
    assert "wall_time" not in first


def test_timing_flag_adds_wall_time(capsys):
    argv = ["--timing", "compute-s", "--graph", str(DATA_DIR / "s3_star.json"),
            "--k", "1.0"]
    doc, out = run_json(capsys, argv)
    assert "wall_time_s" in doc
