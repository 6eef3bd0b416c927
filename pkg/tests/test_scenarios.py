import json

import numpy as np
import pytest

from homlag import scenarios
from homlag.errors import ScenarioError
from homlag.systems import check_homogeneity, check_scaling_structure

E = 2.0


def grid125(xs=(0.2, 1.4), xd=(-1.5, 1.5), ys=(-2.0, 2.0)):
    X, XD, Y = np.meshgrid(np.linspace(*xs, 5), np.linspace(*xd, 5), np.linspace(*ys, 5), indexing="ij")
    return X.ravel(), XD.ravel(), Y.ravel()


def rel_err(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


def test_jacobi_reduced_closed_form():
    ell = scenarios.builtin("jacobi-arctan").reduced
    x, xd, y = grid125()
    # exclude exact zeros of the closed form from the relative comparison
    keep = (xd != 0) | (y != 0)
    got = ell(x[keep, None], xd[keep, None], y[keep])
    want = 2 * (E - x[keep]) * (xd[keep] ** 2 + (y[keep] / 2) ** 2)
    assert rel_err(got, want) <= 1e-9


def test_unhalved_variant_halves_reduced_lagrangian():
    canon = scenarios.builtin("jacobi-arctan").reduced
    half = scenarios.builtin("jacobi-arctan-unhalved").reduced
    x, xd, y = grid125()
    np.testing.assert_allclose(half(x[:, None], xd[:, None], y), 0.5 * canon(x[:, None], xd[:, None], y), rtol=1e-12, atol=1e-15)


def test_linear_counterexample_reduced_is_y():
    ell = scenarios.builtin("linear-counterexample").reduced
    x, xd, y = grid125(xs=(-2.0, 2.0))
    np.testing.assert_allclose(ell(x[:, None], xd[:, None], y), y, rtol=1e-9, atol=1e-15)


@pytest.mark.parametrize("name", [n for n in scenarios.builtin_names() if scenarios.builtin(n).scaling is not None])
def test_builtins_pass_validators(name):
    s = scenarios.builtin(name)
    reports = check_scaling_structure(s.scaling, s.box)
    assert len(reports) == 6
    assert all(r.passed for r in reports), [r.to_dict() for r in reports if not r.passed]
    if s.lagrangian is not None:
        assert check_homogeneity(s.lagrangian, s.scaling, s.box).passed


def test_unknown_builtin_lists_registered_names():
    with pytest.raises(ScenarioError) as info:
        scenarios.builtin("nosuch")
    for name in ("jacobi-arctan", "harmonic-oscillator", "linear-counterexample", "herglotz-zero", "kinetic-geodesic"):
        assert name in str(info.value)


def test_builtin_is_cached_and_immutable():
    a = scenarios.builtin("jacobi-arctan")
    assert a is scenarios.builtin("jacobi-arctan")
    with pytest.raises(Exception):
        a.name = "other"


def _report_dicts(s):
    out = [r.to_dict() for r in check_scaling_structure(s.scaling, s.box)]
    out.append(check_homogeneity(s.lagrangian, s.scaling, s.box).to_dict())
    return out


def test_save_load_round_trip(tmp_path):
    src = scenarios.builtin("jacobi-arctan")
    path = tmp_path / "j.json"
    scenarios.save(src, path)
    back = scenarios.load(path)
    assert back.name == src.name
    assert back.integrator == src.integrator and back.box == src.box
    assert _report_dicts(back) == _report_dicts(src)
    assert scenarios.dumps(back) == scenarios.dumps(src)


def _doc(**changes):
    doc = json.loads(scenarios.dumps(scenarios.builtin("jacobi-arctan")))
    doc.update(changes)
    return doc


def test_unhalved_f_with_sqrt_action_loads_and_validates(tmp_path):
    doc = _doc(name="jacobi-f-sum")
    doc["scaling"]["f"] = "a*a + b*b"
    doc["scaling"]["triv_inv"] = ["sqrt(sigma)*cos(x)", "sqrt(sigma)*sin(x)"]
    path = tmp_path / "f.json"
    path.write_text(json.dumps(doc))
    s = scenarios.load(path)
    assert all(r.passed for r in check_scaling_structure(s.scaling, s.box))


def test_missing_projection_is_named():
    doc = _doc()
    del doc["scaling"]["pi"]
    with pytest.raises(ScenarioError, match="'pi'") as info:
        scenarios.from_dict(doc)
    assert info.value.path == "/scaling"


def test_unknown_primitive_in_document_has_path():
    doc = _doc()
    doc["lagrangian"] = "cosh(a)*adot**2"
    with pytest.raises(ScenarioError) as info:
        scenarios.from_dict(doc)
    assert info.value.path == "/lagrangian"


def test_dimension_mismatch_has_path():
    doc = _doc()
    doc["scaling"]["psi"] = ["sqrt(s)*a"]
    with pytest.raises(ScenarioError) as info:
        scenarios.from_dict(doc)
    assert info.value.path == "/scaling/psi"
    doc = _doc()
    doc["initial"]["q"] = [1.0]
    with pytest.raises(ScenarioError, match="initial/q"):
        scenarios.from_dict(doc)


def test_schema_violation_path():
    doc = _doc()
    doc["integrator"]["steps"] = 0
    with pytest.raises(ScenarioError) as info:
        scenarios.from_dict(doc)
    assert info.value.path == "/integrator/steps"


def test_bad_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ScenarioError):
        scenarios.load(p)
    with pytest.raises(ScenarioError):
        scenarios.load(tmp_path / "missing.json")


def test_resolve_accepts_name_or_path(tmp_path):
    assert scenarios.resolve("harmonic-oscillator").name == "harmonic-oscillator"
    p = tmp_path / "h.json"
    scenarios.save(scenarios.builtin("harmonic-oscillator"), p)
    assert scenarios.resolve(str(p)).name == "harmonic-oscillator"
