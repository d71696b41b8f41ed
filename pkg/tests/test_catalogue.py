"""Reference entries and the provenance of their expected verdicts."""

import numpy as np
import pytest

from lightcone import catalogue as C
from lightcone import core
from lightcone import expr as E


def test_names():
    assert set(C.NAMES) == {"minkowski2", "minkowski3", "beem3", "beem2", "randers4", "hopf4",
                            "odd_perturbed"}


def test_unknown_name_lists_the_choices():
    with pytest.raises(KeyError, match="minkowski2"):
        C.get("schwarzschild")


@pytest.mark.parametrize("name", C.NAMES)
def test_every_expectation_has_a_provenance(name):
    entry = C.get(name)
    assert entry.expected, name
    for key, exp in entry.expected.items():
        assert exp.provenance in C.PROVENANCE
        assert exp.note
    with pytest.raises(TypeError):
        entry.expected["validity"] = None


def test_unknown_provenance_rejected():
    with pytest.raises(ValueError):
        C.Expected(1, "FOLKLORE")


@pytest.mark.parametrize("name", [n for n in C.NAMES if n != "hopf4"])
def test_validity_expectations_match_the_scan(name):
    entry = C.get(name)
    verdict = core.beem_validity_scan(entry.spec, samples=2000)
    assert verdict.kind == entry.expected["validity"].value


@pytest.mark.parametrize("name", [n for n in C.NAMES if n not in ("hopf4", "randers4")])
def test_reversibility_expectations_match_the_expression_check(name):
    entry = C.get(name)
    ast = E.parse(entry.text(), entry.dimension, entry.spec.p)
    result = E.check_reversibility(ast)
    assert result.passed == entry.expected["reversible"].value
    assert entry.spec.reversible == entry.expected["reversible"].value


@pytest.mark.parametrize("name", [n for n in C.NAMES if n != "hopf4"])
def test_entries_are_two_homogeneous(name):
    entry = C.get(name)
    ast = E.parse(entry.text(), entry.dimension, entry.spec.p)
    assert E.validate_homogeneity(ast, domain=entry.spec.domain).passed


def test_metric_field_entry():
    hopf = C.get("hopf4")
    assert hopf.is_metric_field and hopf.dimension == 4 and hopf.text() is None
    with pytest.raises(TypeError):
        hopf.spec


def test_certified_ranges_cover_the_defaults():
    lo, hi = C.get("beem3").expected["alpha_range"].value
    assert lo < C.DEFAULT_ALPHA < hi == C.ALPHA_CERTIFIED
    lo, hi = C.get("odd_perturbed").expected["beta_range"].value
    assert lo < C.DEFAULT_BETA < hi == C.BETA_CERTIFIED
    assert core.beem_validity_scan(core.beem3(C.ALPHA_CERTIFIED)).valid
    assert core.beem_validity_scan(C.odd_perturbed(C.BETA_CERTIFIED)).valid


def test_odd_perturbation_is_minkowski_at_zero():
    spec = C.odd_perturbed(0.0)
    V = core.random_directions(3, 100, 0)
    _, L = core.evaluate_many(spec, V, order=0)
    assert np.allclose(L, 0.5 * (-V[:, 0] ** 2 + V[:, 1] ** 2 + V[:, 2] ** 2), atol=1e-15)
