"""Scenario documents shared across test modules, including deliberately broken ones."""

import copy

from homlag import scenarios


def builtin_doc(name):
    return {"schema_version": scenarios.SCHEMA_VERSION, "name": name, **copy.deepcopy(scenarios.BUILTIN_DOCS[name])}


def degree_two_lagrangian():
    """|qdot|^2 under the linear action s*q: homogeneous of degree 2, not 1."""
    doc = builtin_doc("harmonic-oscillator")
    doc["name"] = "broken-degree-two"
    doc["lagrangian"] = "q1dot**2 + q2dot**2"
    doc["scaling"] = {
        "psi": ["s*q1", "s*q2"],
        "f": "sqrt(q1**2 + q2**2)",
        "pi": ["arctan2(q2, q1)"],
        "triv_inv": ["sigma*cos(x)", "sigma*sin(x)"],
        "generator": ["q1", "q2"],
    }
    return doc


def cubic_f():
    """f = |q|^3 with the square-root action: f(psi_s q) = s^(3/2) f(q)."""
    doc = builtin_doc("harmonic-oscillator")
    doc["name"] = "broken-cubic-f"
    doc["scaling"]["f"] = "(q1**2 + q2**2)**1.5"
    doc["scaling"]["triv_inv"] = ["sigma**(1/3)*cos(x)", "sigma**(1/3)*sin(x)"]
    return doc


def wrong_triv_inv():
    """triv_inv drops the square root, so f(triv_inv(x, sigma)) = sigma^2."""
    doc = builtin_doc("harmonic-oscillator")
    doc["name"] = "broken-triv-inv"
    doc["scaling"]["triv_inv"] = ["sigma*cos(x)", "sigma*sin(x)"]
    return doc


BROKEN = {
    "degree-two L": (degree_two_lagrangian, "homogeneity"),
    "cubic f": (cubic_f, "scaling-function"),
    "wrong triv_inv": (wrong_triv_inv, "trivialization-inverse"),
}
