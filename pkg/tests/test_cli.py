import json

import pytest

from cce_workbench.cli import taskfile as tf
from cce_workbench.cli.main import main

HYP4 = """
name: hyp
n: 4
coords: [x0, x1, x2, x3]
metric:
  conformally_flat: 1/x0^2
tasks:
  - kind: check-einstein
"""


def test_examples_listed():
    names = tf.list_examples()
    assert len(names) >= 5
    assert "adn_gauge_n4" in names


def test_example_round_trip():
    doc = tf.load_example("adn_gauge_n4")
    again = tf.loads(doc.dumps())
    assert again.to_dict() == doc.to_dict()


def test_unknown_example():
    with pytest.raises(KeyError):
        tf.load_example("nope")


def test_unknown_identifier_names_location():
    with pytest.raises(tf.TaskValidationError) as exc:
        tf.loads(HYP4.replace("1/x0^2", "1/z^2"))
    assert "metric.conformally_flat" in str(exc.value)
    assert "z" in str(exc.value)


def test_validation_errors():
    with pytest.raises(tf.TaskValidationError, match="coords"):
        tf.loads(HYP4.replace("[x0, x1, x2, x3]", "[x0, x1, x2]"))
    with pytest.raises(tf.TaskValidationError, match="unknown field"):
        tf.loads(HYP4 + "colour: red\n")
    with pytest.raises(tf.TaskValidationError, match="kind"):
        tf.loads(HYP4.replace("check-einstein", "plot"))
    with pytest.raises(tf.TaskValidationError, match="order"):
        tf.loads(HYP4.replace("check-einstein", "fg-expand"))
    with pytest.raises(tf.TaskValidationError, match="YAML"):
        tf.loads("n: [4\n")


def test_einstein_task_report():
    rep = tf.run_document(tf.loads(HYP4))
    assert rep["passed"] and rep["errors"] == 0
    task = rep["tasks"][0]
    assert task["flags"] == {"ricci": True, "scalar": True}
    assert task["residuals"]["scalar"] == "0"
    assert tf.exit_status(rep) == 0


def test_failing_task_exit_one():
    doc = tf.loads(HYP4.replace("1/x0^2", "1/x0"))
    rep = tf.run_document(doc)
    assert not rep["passed"] and rep["errors"] == 0
    assert tf.exit_status(rep) == 1


def test_adn_dimension_mismatch_is_task_error():
    doc = tf.loads(HYP4.replace("- kind: check-einstein", "- kind: adn-check\n    n: 6\n  - kind: check-einstein"))
    rep = tf.run_document(doc)
    assert rep["tasks"][0]["error"]["type"] == "DimensionError"
    # the other task still runs
    assert rep["tasks"][1]["passed"]
    assert tf.exit_status(rep) == 2


def test_decimal_rendering():
    doc = tf.loads(HYP4.replace("1/x0^2", "2/x0^2"))
    rep = tf.run_document(doc, decimals=True)
    task = rep["tasks"][0]
    assert task["residuals"]["scalar"] == "6"
    assert "decimal" in task


def test_parallel_matches_serial():
    doc = tf.load_example("hyperbolic_einstein_n4")
    a = tf.dumps_report(tf.run_document(doc), timing=False)
    b = tf.dumps_report(tf.run_document(doc, jobs=2), timing=False)
    assert a == b


def test_report_deterministic_without_timing():
    doc = tf.load_example("bach_conformal_hyperbolic")
    runs = [tf.dumps_report(tf.run_document(doc), timing=False) for _ in range(2)]
    assert runs[0] == runs[1]
    assert '"time"' not in runs[0]


# ----------------------------------------------------------------------
# command line


def test_main_examples_list(capsys):
    assert main(["examples"]) == 0
    out = capsys.readouterr().out.split()
    assert out == tf.list_examples()


def test_main_run_file(tmp_path, capsys):
    p = tmp_path / "hyp.task"
    p.write_text(HYP4)
    assert main(["--no-timing", "run", str(p)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["document"] == "hyp" and rep["passed"]


def test_main_fg_expand(capsys):
    assert main(["--no-timing", "fg-expand", "--example", "sphere_infinity_n4", "--order", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["tasks"][0]["flags"]["einstein_to_order"]


def test_main_obstruction_leading(capsys):
    assert main(["--no-timing", "obstruction", "--leading", "--example", "hyperbolic_einstein_n6"]) == 0


def test_main_adn_default_system(capsys):
    assert main(["--no-timing", "adn-check", "--samples", "3,4,0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["tasks"][0]["passed"]


def test_main_expected_failure(capsys):
    assert main(["--no-timing", "examples", "adn_oblique_fail", "--run"]) == 0


def test_main_bad_input(tmp_path, capsys):
    p = tmp_path / "bad.task"
    p.write_text(HYP4.replace("1/x0^2", "1/x0^"))
    assert main(["run", str(p)]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.task")]) == 2
    assert main(["check-einstein"]) == 2
