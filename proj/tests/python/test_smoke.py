import json
import math
import os

import pytest

import pisfp

DATA = os.environ.get("PISFP_TEST_DATA", os.path.join(os.path.dirname(__file__), "..", "data"))


def problem(name):
    with open(os.path.join(DATA, name)) as f:
        return f.read()


def test_validate_reports_marginal():
    info = pisfp.validate(problem("eps04.json"))
    assert math.isclose(info["f_yx"], 0.2, abs_tol=1e-12)


def test_validate_rejects_broken():
    with pytest.raises(ValueError, match="lower > upper"):
        pisfp.validate(problem("broken_order.json"))


def test_bound_lower_upper():
    lo = pisfp.bound(problem("eps04.json"), "lower", 1e-3, 60)
    hi = pisfp.bound(problem("eps04.json"), "upper", 1e-3, 60)
    assert lo["bound"] <= 0.2 + 1e-9
    assert abs(lo["bound"] - 0.2) < 1e-2
    assert hi["bound"] >= lo["bound"]
    trace = lo["best_bound_trace"]
    assert all(b >= a for a, b in zip(trace, trace[1:]))


def test_simulate_bracket():
    sim = pisfp.simulate(3, 2, 2, 2, 0.1)
    lo = pisfp.bound(sim["problem_json"], "lower", 1e-3, 30)
    hi = pisfp.bound(sim["problem_json"], "upper", 1e-3, 30)
    assert lo["bound"] <= sim["truth"] + 1e-9 <= hi["bound"] + 2e-9


def test_witness_round_trip():
    wit = problem("witness_eps04.json")
    assert pisfp.verify_witness(wit, problem("eps04.json"))["ok"]
    phi = json.loads(wit)["phi"]
    found = pisfp.find_witness(problem("eps04.json"), phi["theta"], phi["psi"], phi["omega"], 32, 0)
    assert found is not None
    assert pisfp.verify_witness(found, problem("eps04.json"))["ok"]


def test_oracle_agrees():
    assert abs(pisfp.brute_force(problem("eps04.json"), 1e-2, "lower") - 0.2) < 2e-2
