import json

import pytest

from structreal.cli import main
from structreal.fixtures import fixture_path
from structreal.graph import adjacency
from structreal.numerics import Tolerances
from structreal.realize import verify_structured_realization
from structreal.serialize import load_graph, load_system
from structreal.system import systems_equal

F = fixture_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_check_graph_valid(capsys):
    code, rep = run(capsys, "check-graph", F("four_node_graph.json"))
    assert code == 0 and rep["valid"]


def test_check_graph_cycle_fails(capsys, tmp_path):
    p = tmp_path / "cyc.json"
    p.write_text('{"nodes": 2, "edges": [[1, 2], [2, 1]]}')
    code, rep = run(capsys, "check-graph", p)
    assert code == 1 and rep["violations"][0]["kind"] == "cycle"


@pytest.mark.parametrize("text", ['{"nodes": 2, "edges": [[1, 9]]}', '{"nodes": 2, "edges": [[1]]}', '{"nodes": 2,'])
def test_input_errors_exit_2(capsys, tmp_path, text):
    p = tmp_path / "g.json"
    p.write_text(text)
    code, rep = run(capsys, "check-graph", p)
    assert code == 2 and rep["error"]


def test_malformed_json_location(capsys, tmp_path):
    p = tmp_path / "s.json"
    p.write_text('{\n  "kind": "ss",\n  "A": [[1,]]\n}')
    code, rep = run(capsys, "minreal", p)
    assert code == 2 and "line 3" in rep["error"]


def test_check_structure(capsys):
    code, rep = run(capsys, "check-structure", F("stable_two_node_ss.json"), F("two_node_graph.json"))
    assert code == 0 and rep["structured"] and rep["realization"]["structured"]


def test_realize_stable_roundtrip(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, rep = run(capsys, "realize", F("stable_two_node_tf.json"), F("two_node_graph.json"), "-o", out)
    assert code == 0 and rep["n"] == [1, 1]
    sys = load_system(out)
    S = adjacency(load_graph(F("two_node_graph.json")))
    assert verify_structured_realization(sys, sys.pattern(S), Tolerances()).structured
    assert systems_equal(sys, load_system(F("stable_two_node_tf.json")))


def test_realize_chain(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, rep = run(capsys, "realize", "--method", "chain", F("chain3_scrambled_ss.json"), F("chain3_graph.json"),
                    "-o", out)
    assert code == 0 and rep["transfer_equal"]
    code, rep = run(capsys, "check-structure", out, F("chain3_graph.json"))
    assert code == 0 and rep["realization"]["structured"]


def test_realize_unstable_precondition(capsys):
    code, rep = run(capsys, "realize", F("unrealizable_four_node_tf.json"), F("four_node_graph.json"))
    assert code == 1 and not rep["ok"]


@pytest.mark.parametrize(
    "system,graph,code,verdict",
    [
        ("unrealizable_four_node_tf.json", "four_node_graph.json", 1, "not S-stabilizable"),
        ("coupled_unstable_ss.json", "two_node_graph.json", 1, "not S-stabilizable"),
        ("coupled_unstable_n12_ss.json", "two_node_graph.json", 1, "not S-stabilizable"),
        ("stable_two_node_tf.json", "two_node_graph.json", 0, "S-stabilizable"),
        ("chain3_scrambled_ss.json", "chain3_graph.json", 0, "S-stabilizable"),
    ],
)
def test_stabilizability(capsys, system, graph, code, verdict):
    c, rep = run(capsys, "stabilizability", F(system), F(graph))
    assert c == code and rep["verdict"] == verdict


def test_coupled_example_both_tests_fail(capsys):
    _, rep = run(capsys, "stabilizability", F("coupled_unstable_n21_ss.json"), F("two_node_graph.json"))
    assert rep["diagonal_test"]["stabilizable"] is False
    assert rep["block_test"]["stabilizable"] is False


def test_synth_and_verify_loop(capsys, tmp_path):
    k0 = tmp_path / "k0.json"
    k = tmp_path / "k.json"
    plant = F("chain3_scrambled_ss.json")
    code, rep = run(capsys, "synth", plant, F("chain3_graph.json"), "-o", k0)
    assert code == 0 and rep["closed_loop"]["stabilizes"]
    code, rep = run(capsys, "synth", F("stable_two_node_ss.json"), F("two_node_graph.json"),
                    "--q", F("youla_param_q.json"), "-o", k)
    assert code == 0 and rep["controller"] == "youla"
    code, rep = run(capsys, "verify-loop", F("stable_two_node_ss.json"), k)
    assert code == 0 and rep["input_output"] and rep["state_space"]["stabilizes"]


def test_synth_stable_plant_gives_zero_controller(capsys):
    code, rep = run(capsys, "synth", F("stable_two_node_tf.json"), F("two_node_graph.json"))
    assert code == 0
    sysj = rep["system"]
    assert all(v == 0.0 for row in sysj["C"] for v in row)


def test_synth_fails_for_unstabilizable(capsys):
    code, rep = run(capsys, "synth", F("coupled_unstable_n21_ss.json"), F("two_node_graph.json"))
    assert code == 1 and not rep["ok"]


def test_verify_loop_indeterminate(capsys, tmp_path):
    g = tmp_path / "g.json"
    k = tmp_path / "k.json"
    g.write_text('{"kind": "ss", "A": [[1]], "B": [[1]], "C": [[1]], "D": [[0]], "k": [1], "m": [1]}')
    k.write_text('{"kind": "ss", "A": [], "B": [], "C": [], "D": [[-1]], "k": [1], "m": [1]}')
    code, _ = run(capsys, "verify-loop", g, k)
    assert code == 3


def test_minreal(capsys):
    code, rep = run(capsys, "minreal", F("unrealizable_four_node_tf.json"))
    assert code == 0 and rep["order_out"] == 1


def test_reports_deterministic(capsys):
    argv = ["--seed", "3", "stabilizability", F("chain3_scrambled_ss.json"), F("chain3_graph.json")]
    main([str(a) for a in argv])
    first = capsys.readouterr().out
    main([str(a) for a in argv])
    assert capsys.readouterr().out == first


def test_text_format(capsys):
    code = main(["--format", "text", "check-graph", str(F("two_node_graph.json"))])
    out = capsys.readouterr().out
    assert code == 0 and "valid: True" in out
