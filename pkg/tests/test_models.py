import json
import math

import numpy as np
import pytest

from covercorr import (
    ConfigError,
    CoverObservable,
    ModelError,
    build_model,
    center_check,
    delta_observable,
    fiber_average,
    load_model,
    load_observable,
    random_centered_model,
    save_observable,
    ulam_compile,
)
from covercorr._fixtures import fixture_path

LAZY = {
    "name": "lazy",
    "d": 1,
    "states": 1,
    "edges": [
        {"from": 0, "to": 0, "p": 0.25, "psi": [1]},
        {"from": 0, "to": 0, "p": 0.5, "psi": [0]},
        {"from": 0, "to": 0, "p": 0.25, "psi": [-1]},
    ],
}

FAIR = {
    "name": "fair",
    "d": 1,
    "states": 2,
    "edges": [
        {"from": s, "to": t, "p": 0.5, "psi": [1 if t == 0 else -1]}
        for s in (0, 1)
        for t in (0, 1)
    ],
}


def test_lazy_walk_builds():
    model = build_model(LAZY)
    assert model.state_count == 1
    assert np.allclose(model.pi, [1.0])
    assert model.max_step == 1


def test_fair_coin_stationary_vector():
    model = build_model(FAIR)
    assert np.allclose(model.pi, [0.5, 0.5], atol=1e-14)


def test_non_stochastic_row_rejected():
    bad = {
        "name": "bad",
        "d": 1,
        "states": 1,
        "edges": [{"from": 0, "to": 0, "p": 0.9, "psi": [0]}],
    }
    with pytest.raises(ModelError, match="non-stochastic row"):
        build_model(bad)


def test_periodic_chain_rejected():
    flip = {
        "name": "flip",
        "d": 1,
        "states": 2,
        "edges": [
            {"from": 0, "to": 1, "p": 1.0, "psi": [1]},
            {"from": 1, "to": 0, "p": 1.0, "psi": [-1]},
        ],
    }
    with pytest.raises(ModelError, match="reducible or periodic"):
        build_model(flip)


def test_reducible_chain_rejected():
    two_islands = {
        "name": "islands",
        "d": 1,
        "states": 2,
        "edges": [
            {"from": 0, "to": 0, "p": 1.0, "psi": [0]},
            {"from": 1, "to": 1, "p": 1.0, "psi": [0]},
        ],
    }
    with pytest.raises(ModelError, match="reducible or periodic"):
        build_model(two_islands)


def test_non_integer_psi_rejected():
    bad = dict(LAZY, edges=[{"from": 0, "to": 0, "p": 1.0, "psi": [0.5]}])
    with pytest.raises(ConfigError, match="non-integer psi"):
        build_model(bad)


def test_decimal_string_probabilities():
    cfg = dict(LAZY, edges=[dict(e, p=str(e["p"])) for e in LAZY["edges"]])
    model = build_model(cfg)
    assert np.allclose(model.transition_matrix, [[1.0]])


def test_stationarity_invariant_random_models():
    rng = np.random.default_rng(5)
    for _ in range(10):
        model = random_centered_model(rng, states=int(rng.integers(2, 9)), d=1)
        P = model.transition_matrix
        assert np.max(np.abs(model.pi @ P - model.pi)) <= 1e-10
        assert model.pi.min() >= 0.0
        assert abs(model.pi.sum() - 1.0) <= 1e-12


# -- center check -------------------------------------------------------------


def test_center_check_lazy_passes():
    res = center_check(build_model(LAZY))
    assert res.passed
    assert np.allclose(res.drift, [0.0])


def test_center_check_biased_coin_fails():
    biased = {
        "name": "biased",
        "d": 1,
        "states": 2,
        "edges": [
            {"from": 0, "to": 0, "p": 0.75, "psi": [1]},
            {"from": 0, "to": 1, "p": 0.25, "psi": [-1]},
            {"from": 1, "to": 0, "p": 0.75, "psi": [1]},
            {"from": 1, "to": 1, "p": 0.25, "psi": [-1]},
        ],
    }
    res = center_check(build_model(biased))
    assert not res.passed
    assert res.drift[0] == pytest.approx(0.5)


def test_center_check_product_model():
    model = load_model(fixture_path("product_lazy.json"))
    res = center_check(model)
    assert res.passed and res.drift.shape == (2,)


def test_symmetrization_centers_exactly():
    rng = np.random.default_rng(17)
    model = random_centered_model(rng, states=6, d=2)
    assert center_check(model).passed  # exact cancellation by construction


# -- surjectivity surrogate ----------------------------------------------------


def test_cycle_sums_generate_lattice():
    assert build_model(LAZY).lattice_cocycle.generates_lattice()
    prod = load_model(fixture_path("product_lazy.json"))
    assert prod.lattice_cocycle.generates_lattice()


def test_even_cocycle_does_not_generate():
    even = dict(
        LAZY,
        edges=[
            {"from": 0, "to": 0, "p": 0.25, "psi": [2]},
            {"from": 0, "to": 0, "p": 0.5, "psi": [0]},
            {"from": 0, "to": 0, "p": 0.25, "psi": [-2]},
        ],
    )
    assert not build_model(even).lattice_cocycle.generates_lattice()


# -- fiber average --------------------------------------------------------------


def test_fiber_average_identity_on_mode_zero():
    f = CoverObservable(1, {(0, (0,), 0): 1.0, (0, (2,), 0): -2.0})
    assert fiber_average(f).support == f.support
    assert fiber_average(fiber_average(f)).support == f.support  # idempotent


def test_fiber_average_kills_nonzero_modes():
    f = CoverObservable(1, {(0, (0,), 1): 3.0})
    assert fiber_average(f).is_zero


def test_fiber_average_slices():
    f = CoverObservable(1, {(0, (1,), 0): 2.0 + 1.0j, (0, (1,), 3): 5.0})
    avg = fiber_average(f)
    assert avg.support == {(0, (1,), 0): 2.0 + 1.0j}


# -- ulam compilation ------------------------------------------------------------


DOUBLING = [(0.0, 0.5, 0.0, 1.0), (0.5, 1.0, 0.0, 1.0)]


def test_ulam_doubling_level_one_equals_fair_coin():
    model = ulam_compile(DOUBLING, 2, psi_by_cell=[(1,), (-1,)])
    fair = build_model(FAIR)
    as_tuples = lambda m: sorted((e.src, e.dst, e.prob, e.psi, e.phi) for e in m.edges)
    assert as_tuples(model) == as_tuples(fair)


def test_ulam_doubling_level_three():
    model = ulam_compile(DOUBLING, 8, psi_by_cell=[(1,)] * 4 + [(-1,)] * 4)
    P = model.transition_matrix
    for i in range(8):
        row = np.nonzero(P[i])[0]
        assert list(row) == [(2 * i) % 8, (2 * i + 1) % 8]
        assert np.allclose(P[i, row], 0.5)


def test_ulam_misaligned_branch_rejected():
    bad = [(0.0, 0.5, 0.0, 0.75), (0.5, 1.0, 0.75, 1.0)]
    with pytest.raises(ConfigError):
        ulam_compile(bad, 2, psi_by_cell=[(1,), (-1,)])


def test_ulam_tent_map_decreasing_branch():
    tent = [(0.0, 0.5, 0.0, 1.0), (0.5, 1.0, 1.0, 0.0)]
    model = ulam_compile(tent, 4, psi_by_cell=[(0,), (1,), (-1,), (0,)])
    P = model.transition_matrix
    # decreasing branch: cell [1/2, 3/4) maps onto the upper half, reversed
    assert np.allclose(P[2], [0.0, 0.0, 0.5, 0.5])
    assert np.allclose(P[3], [0.5, 0.5, 0.0, 0.0])
    assert np.allclose(model.pi, [0.25] * 4, atol=1e-12)


def test_ulam_refinement_preserves_twisted_eigenvalues():
    from covercorr import leading_eigen, twisted_matrix

    psi2 = [(1,), (-1,)]
    coarse = ulam_compile(DOUBLING, 2, psi_by_cell=psi2)
    fine = ulam_compile(DOUBLING, 4, psi_by_cell=[psi2[0], psi2[0], psi2[1], psi2[1]])
    for theta in (0.3, 1.1, 2.9):
        mu_c = leading_eigen(coarse, twisted_matrix(coarse, [theta])).mu
        mu_f = leading_eigen(fine, twisted_matrix(fine, [theta])).mu
        assert abs(mu_c - mu_f) <= 1e-12


# -- observables -----------------------------------------------------------------


def test_observable_radius_and_band():
    f = CoverObservable(2, {(0, (3, -1), 2): 1.0, (1, (0, 0), 0): 1.0})
    assert f.support_radius == 3
    assert f.fiber_band == 2
    assert f.fiber_modes == (0, 2)


def test_observable_shift_law():
    f = CoverObservable(1, {(0, (1,), 0): 2.0})
    shifted = f.shifted((3,))
    # (tau_m f)(i, n, k) = f(i, n + m, k): support moves from 1 to -2
    assert shifted.support == {(0, (-2,), 0): 2.0}


def test_observable_arithmetic():
    f = CoverObservable(1, {(0, (0,), 0): 1.0})
    g = CoverObservable(1, {(0, (0,), 0): -1.0, (0, (1,), 0): 2.0})
    s = f + g
    assert (0, (0,), 0) not in s.support  # exact zero dropped
    assert s.support[(0, (1,), 0)] == 2.0


def test_observable_file_roundtrip(tmp_path):
    f = CoverObservable(1, {(0, (2,), 1): 1.0 - 0.5j, (0, (-1,), 0): 3.0})
    path = tmp_path / "obs.json"
    save_observable(f, path)
    g = load_observable(path, 1)
    assert g.support == f.support


def test_model_file_roundtrip(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(LAZY))
    model = load_model(path)
    assert model.name == "lazy"
    assert model.state_count == 1


def test_delta_observable():
    model = build_model(LAZY)
    f = delta_observable(model, 0, (0,), 0)
    assert f.support == {(0, (0,), 0): 1.0}
