"""Certified bounds on interventional quantities when the proxy transition
matrix is only known up to elementwise bounds."""

from ._pisfp import (  # noqa: F401
    EmptyFeasibleRegion,
    NumericalError,
    ParseError,
    ValidationError,
    bound,
    bound_ace,
    brute_force,
    find_witness,
    identify_exact,
    load_problem,
    simulate,
    validate,
    verify_witness,
)


def load_text(path):
    with open(path, encoding="utf-8") as f:
        return f.read()
