import json

import numpy as np
import pytest

from momentdet.errors import ExprSyntaxError, ManifestError
from momentdet.manifest import DEFAULT_NUMERICS, build_measure, build_weight, load_manifest, parse_manifest
from momentdet.measures import DensityExpr, Discrete, Gamma1D, GaussianProduct, ProductOf1D, Pushforward
from momentdet.weights import AffineImage, QUASI_ANALYTIC, Tensor, classify_quasianalytic

GAUSS = {"family": "gaussian", "mean": [0.0], "sd": [1.0]}


def test_minimal_manifest_fills_defaults():
    m = parse_manifest(json.dumps({"dimension": 1, "measure": GAUSS, "analyses": [{"kind": "carleman"}]}))
    assert m.numerics == DEFAULT_NUMERICS
    a = m.analyses[0]
    assert a.id == "00_carleman" and a.params == {"M": 30, "mode": "hamburger"}
    assert isinstance(m.measure, GaussianProduct)
    assert m.basis is None and np.array_equal(m.directions, np.eye(1))
    echo = m.echo()
    assert echo["basis"] == [[1.0]] and echo["numerics"]["tol"] == 1e-8


def test_basis_columns_become_directions():
    doc = {"dimension": 2, "measure": {"family": "gaussian"}, "basis": [[1, 1], [0, 1]],
           "analyses": [{"kind": "moments", "M": 4}]}
    m = parse_manifest(doc)
    assert np.allclose(m.basis, [[1, 0], [1, 1]])


def test_singular_basis_is_rejected():
    doc = {"dimension": 2, "measure": {"family": "gaussian"}, "basis": [[1, 1], [1, 1]], "analyses": []}
    with pytest.raises(ManifestError) as exc:
        parse_manifest(doc)
    assert exc.value.field == "basis"


@pytest.mark.parametrize("doc,field", [
    ({"dimension": 1, "measure": GAUSS, "analyses": [], "extra": 1}, "manifest.extra"),
    ({"dimension": 0, "measure": GAUSS, "analyses": []}, "dimension"),
    ({"dimension": 1, "measure": GAUSS, "analyses": [{"kind": "nope"}]}, "analyses[0].kind"),
    ({"dimension": 1, "measure": GAUSS, "analyses": [{"kind": "carleman", "foo": 2}]}, "analyses[0].foo"),
    ({"dimension": 1, "measure": GAUSS, "analyses": [{"kind": "carleman", "mode": "stieltjes"}]}, "analyses[0].mode"),
    ({"dimension": 1, "measure": GAUSS, "analyses": [{"kind": "carleman", "id": "a"}, {"kind": "moments", "id": "a"}]},
     "analyses[1].id"),
    ({"dimension": 1, "measure": GAUSS, "numerics": {"tol": -1}, "analyses": []}, "numerics.tol"),
    ({"dimension": 1, "measure": GAUSS, "numerics": {"M": 0}, "analyses": []}, "numerics.M"),
    ({"dimension": 1, "analyses": [{"kind": "carleman"}]}, "measure"),
    ({"dimension": 2, "measure": {"density": "exp(-x3)"}, "analyses": []}, "measure.density"),
    ({"dimension": 1, "measure": {"family": "gamma"}, "analyses": []}, "measure.shape"),
])
def test_schema_errors_name_the_field(doc, field):
    with pytest.raises(ManifestError) as exc:
        parse_manifest(doc)
    assert exc.value.field == field


def test_invalid_json():
    with pytest.raises(ManifestError):
        parse_manifest("{not json")


def test_measure_kinds():
    assert isinstance(build_measure({"family": "product", "factors": [{"family": "gamma", "shape": 2.0}, GAUSS]}, 2),
                      ProductOf1D)
    d = build_measure({"density": "exp(-x)", "support": {"kind": "halfline"}}, 1)
    assert isinstance(d, DensityExpr)
    atoms = build_measure({"discrete": [[1.0, 0.5], [4.0, 0.5]], "truncated": True}, 1)
    assert isinstance(atoms, Discrete) and atoms.truncated
    m = parse_manifest({"dimension": 1, "cone": True, "analyses": [],
                        "measure": {"pushforward": {"family": "exponential"}, "map": "phi_sqrt"}})
    assert isinstance(m.measure, Pushforward)
    with pytest.raises(ManifestError):
        build_measure({"pushforward": {"family": "exponential"}, "map": "phi_sqrt"}, 1)


def test_weight_kinds():
    tdoc = {"kind": "tensor", "factors": [{"kind": "exp_decay", "eps": 1.0},
                                          {"kind": "repeated_log", "a": [2, 3], "p": [1, 1, 0]}]}
    t = build_weight(tdoc, 2)
    assert isinstance(t, Tensor) and classify_quasianalytic(t).outcome == QUASI_ANALYTIC
    a = build_weight({"kind": "affine", "matrix": [[2, 0], [1, 1]], "inner": tdoc}, 2)
    assert isinstance(a, AffineImage)
    with pytest.raises(ManifestError):
        build_weight({"kind": "affine", "matrix": [[1, 1], [1, 1]], "inner": tdoc}, 2)
    with pytest.raises(ManifestError):
        build_weight({"kind": "repeated_log", "a": [1], "p": [1], "typo": 1}, 1)


def test_criterion_entries():
    doc = {"dimension": 1, "measure": {"family": "exponential"}, "cone": True, "analyses": [
        {"kind": "criterion", "spec": {"kind": "stieltjes_radial", "weight": {"kind": "exp_decay", "eps": 1}}},
        {"kind": "criterion", "spec": {"kind": "radial_rho", "R": 1, "rho": "s"}, "strengthen": False},
        {"kind": "stieltjes_relation", "e": [2]},
    ]}
    m = parse_manifest(doc)
    assert m.analyses[0].built["criterion"].stieltjes
    assert m.analyses[1].params["strengthen"] is False
    assert m.analyses[2].params["tol"] == 1e-6
    doc["cone"] = False
    with pytest.raises(ManifestError):
        parse_manifest(doc)


def test_classify_weight_needs_no_measure():
    m = parse_manifest({"dimension": 1, "analyses": [{"kind": "classify_weight", "weight": {"kind": "exp_decay", "eps": 2}}]})
    assert m.measure is None


def test_load_from_file(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"dimension": 1, "measure": GAUSS, "analyses": []}))
    assert load_manifest(p).dimension == 1
