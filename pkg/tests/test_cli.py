import csv
import io
import json
import re

import pytest

import avoidance_markov.cli as cli
from avoidance_markov.cli import format_number, main


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_metrics_example1(capsys):
    code, out, _ = run(capsys, "metrics", "--gen", "example1", "--absorbing", "4")
    assert code == 0
    table = {r["node"]: r for r in rows(out)}
    assert table["1"]["H"] == "2.5" and table["1"]["Q:4"] == "1"


def test_metrics_path_from_file(tmp_path, capsys):
    path = tmp_path / "path.csv"
    path.write_text("1,2,1\n2,3,1\n")
    code, out, _ = run(capsys, "metrics", "--graph", str(path), "--absorbing", "3")
    assert code == 0
    assert [r["H"] for r in rows(out)] == ["4", "3"]


@pytest.mark.parametrize(
    "args",
    [
        ["metrics", "--gen", "example1", "--absorbing", "9"],
        ["metrics", "--gen", "example1"],
        ["avoid", "--gen", "example1", "--source", "1", "--target", "4", "--avoid", "4"],
        ["avoid", "--gen", "example1", "--source", "1", "--target", "4", "--avoid", "2", "--via", "5"],
        ["pivotality", "--gen", "example1", "--source", "1", "--target", "1"],
        ["pivotality", "--gen", "example1", "--source", "1", "--target", "4", "--metrics", "nope"],
        ["pivotality", "--gen", "example1", "--target", "4"],
        ["metrics", "--graph", "/no/such/file.csv", "--absorbing", "1"],
        ["gen", "--gen", "fat-tree:3"],
        ["gen", "--gen", "example1", "--output", "dot"],
        ["metrics", "--gen", "example1", "--graph", "x", "--absorbing", "1"],
    ],
)
def test_usage_errors_exit_2(capsys, args):
    code, out, err = run(capsys, *args)
    assert code == 2 and out == "" and err.startswith("error:")


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_corrupted_graph_file_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,1\nb,a,oops\n")
    code, _, err = run(capsys, "metrics", "--graph", str(path), "--absorbing", "a")
    assert code == 2 and "line 2" in err


def test_avoid_queries(capsys):
    _, out, _ = run(capsys, "avoid", "--gen", "example1", "--source", "1", "--target", "5", "--avoid", "4")
    (r,) = rows(out)
    assert (r["hitting_time"], r["feasibility"]) == ("1", "0.5")
    _, out, _ = run(capsys, "avoid", "--gen", "example3b", "--source", "1", "--target", "3", "--avoid", "2")
    (r,) = rows(out)
    assert r["hitting_time"] == "inf" and r["hitting_cost"] == "inf"
    _, out, _ = run(capsys, "avoid", "--gen", "example1", "--source", "1", "--target", "4", "--via", "5")
    (r,) = rows(out)
    assert r["transit_time"] == "2"


def test_avoid_json_keeps_full_precision_and_inf(capsys):
    _, out, _ = run(capsys, "avoid", "--gen", "example2:L2=3", "--source", "s", "--target", "t", "--avoid", "g", "--output", "json")
    (r,) = json.loads(out)["rows"]
    _, text, _ = run(capsys, "avoid", "--gen", "example2:L2=3", "--source", "s", "--target", "t", "--avoid", "g")
    assert format_number(r["hitting_time"]) == rows(text)[0]["hitting_time"]
    _, out, _ = run(capsys, "avoid", "--gen", "example3b", "--source", "1", "--target", "3", "--avoid", "2", "--output", "json")
    assert json.loads(out)["rows"][0]["hitting_time"] == "inf"


def test_pivotality_table1(capsys):
    code, out, _ = run(capsys, "pivotality", "--gen", "example1", "--source", "1", "--target", "4")
    assert code == 0
    table = {r["node"]: r for r in rows(out)}
    assert [table[k]["ath"] for k in "235"] == ["-0.5", "-0.5", "0.5"]
    assert [table[k]["ch"] for k in "235"] == ["-3.5"] * 3
    assert [table[k]["shp"] for k in "235"] == ["-1", "-1", "0"]
    assert [table[k]["mf"] for k in "235"] == ["0.5"] * 3
    assert [table[k]["rank"] for k in "235"] == ["2", "3", "1"]
    assert "feasibility" in table["2"]


def parse_dot(text):
    assert text.startswith(("digraph", "graph")) and text.rstrip().endswith("}")
    nodes = {}
    for m in re.finditer(r'^\s*"([^"]+)" \[(.*)\];$', text, re.M):
        attrs = dict(re.findall(r'(\w+)=("[^"]*"|[^,\s]+)', m.group(2)))
        nodes[m.group(1)] = {k: v.strip('"') for k, v in attrs.items()}
    return nodes


def test_pivotality_dot_fig3b(capsys):
    _, out, _ = run(capsys, "pivotality", "--gen", "example3b", "--source", "1", "--target", "2", "--output", "dot")
    nodes = parse_dot(out)
    assert nodes["3"]["fillcolor"] == "#000000"
    assert nodes["1"]["shape"] == "box" and nodes["2"]["shape"] == "doublecircle"
    assert all(n["style"] == "filled" for n in nodes.values())


def test_renderings_carry_the_same_numbers(capsys):
    base = ["pivotality", "--gen", "example2:L2=4,N2=2", "--source", "s", "--target", "t"]
    _, text, _ = run(capsys, *base)
    _, js, _ = run(capsys, *base, "--output", "json")
    _, dot, _ = run(capsys, *base, "--output", "dot")
    table = {r["node"]: r for r in rows(text)}
    doc = {r["node"]: r for r in json.loads(js)["rows"]}
    nodes = parse_dot(dot)
    for label, r in table.items():
        for col in ("feasibility", "ath", "ch", "shp", "mf"):
            assert format_number(doc[label][col]) == r[col]
            assert f"{col}={r[col]}" in nodes[label]["label"]


def test_fat_tree_dot_has_every_node(capsys):
    code, out, _ = run(
        capsys, "pivotality", "--gen", "fat-tree:6", "--source", "host0_0_0", "--target", "host5_2_2",
        "--metrics", "ath", "--output", "dot",
    )
    assert code == 0 and len(parse_dot(out)) == 99


def test_gen_roundtrip(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["gen", "--gen", "example1", "--output", "json", "--out", str(out)]) == 0
    code, text, _ = run(capsys, "metrics", "--graph", str(out), "--format", "json", "--absorbing", "4")
    assert code == 0 and rows(text)[0]["H"] == "2.5"


def test_graph_flag_accepts_generator_specs(capsys):
    code, out, _ = run(capsys, "metrics", "--graph", "example1", "--absorbing", "4")
    assert code == 0 and rows(out)[0]["H"] == "2.5"


def test_outputs_are_deterministic(capsys):
    args = ["verify", "--corpus", "2", "--mc-samples", "2000", "--seed", "3"]
    a = run(capsys, *args)
    b = run(capsys, *args)
    assert a == b and a[0] == 0


def test_verify_example1(capsys):
    code, out, _ = run(capsys, "verify", "--graph", "example1", "--mc-samples", "20000", "--seed", "1")
    assert code == 0 and out.rstrip().endswith("PASS")
    assert "time_decomposition" in out


def test_verify_failure_exit_1(capsys, monkeypatch):
    monkeypatch.setattr(cli, "IDENTITY_RTOL", -1.0)
    code, out, _ = run(capsys, "verify", "--graph", "example1", "--mc-samples", "1000")
    assert code == 1 and out.rstrip().endswith("FAIL")


def test_format_number():
    assert format_number(2.5) == "2.5"
    assert format_number(1 / 3) == "0.333333"
    assert format_number(float("inf")) == "inf"
    assert format_number(float("-inf")) == "-inf"
    assert format_number(7) == "7"
