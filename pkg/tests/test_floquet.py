import csv

import numpy as np
import pytest

from covercorr import (
    ConfigError,
    CoverObservable,
    ThetaGrid,
    build_model,
    export_field_csv,
    floquet_derivative,
    floquet_inverse,
    floquet_transform,
    load_model,
    parseval_pairing,
    random_observable,
    transform_field,
)
from covercorr._fixtures import fixture_path


@pytest.fixture(scope="module")
def lazy():
    return load_model(fixture_path("lazy_walk.json"))


@pytest.fixture(scope="module")
def two_state():
    return load_model(fixture_path("two_state_u1.json"))


def test_transform_delta_is_unit_vector(lazy):
    f = CoverObservable(1, {(0, (0,), 0): 1.0})
    for theta in (0.0, 0.9, 2.3):
        F = floquet_transform(lazy, f, [theta])
        assert F[0] == pytest.approx(1.0)


def test_transform_single_shift_phase(lazy):
    f = CoverObservable(1, {(0, (1,), 0): 1.0})
    F = floquet_transform(lazy, f, [np.pi])
    assert F[0] == pytest.approx(-1.0, abs=1e-15)


def test_transform_two_sided_gives_cosine(lazy):
    f = CoverObservable(1, {(0, (-1,), 0): 1.0, (0, (1,), 0): 1.0})
    for theta in (0.3, 1.7):
        F = floquet_transform(lazy, f, [theta])
        assert F[0] == pytest.approx(2.0 * np.cos(theta), abs=1e-14)


def test_transform_linearity(two_state):
    rng = np.random.default_rng(1)
    f = random_observable(rng, two_state, radius=3)
    g = random_observable(rng, two_state, radius=3)
    a, b = 1.5 - 2.0j, 0.25j
    combo = a * f + b * g
    theta = [1.234]
    lhs = floquet_transform(two_state, combo, theta)
    rhs = a * floquet_transform(two_state, f, theta) + b * floquet_transform(
        two_state, g, theta
    )
    scale = max(1.0, float(np.max(np.abs(rhs))))
    assert np.max(np.abs(lhs - rhs)) <= 1e-14 * scale


def test_round_trip_exact(two_state):
    rng = np.random.default_rng(2)
    for _ in range(20):
        f = random_observable(rng, two_state, radius=3, band=1)
        field = transform_field(two_state, f, ThetaGrid(1, 8))
        back = floquet_inverse(field, 3)
        keys = set(f.support) | set(back.support)
        err = max(abs(f.support.get(k, 0.0) - back.support.get(k, 0.0)) for k in keys)
        assert err <= 1e-12


def test_inverse_constant_field_is_delta(lazy):
    grid = ThetaGrid(1, 8)
    values = np.zeros((grid.node_count, 1, 1), dtype=complex)
    values[:, 0, 0] = 1.0
    from covercorr.floquet import FloquetField

    field = FloquetField(grid, (0,), values)
    f = floquet_inverse(field, 3)
    assert f.support == {(0, (0,), 0): pytest.approx(1.0)}


def test_inverse_aliasing_refused(two_state):
    rng = np.random.default_rng(3)
    f = random_observable(rng, two_state, radius=3)
    field = transform_field(two_state, f, ThetaGrid(1, 6))
    with pytest.raises(ConfigError, match="aliasing"):
        floquet_inverse(field, 3)


def test_parseval_examples(lazy):
    f = CoverObservable(1, {(0, (0,), 0): 1.0})
    assert parseval_pairing(lazy, f, f, ThetaGrid(1, 4)) == pytest.approx(1.0)
    g = CoverObservable(1, {(0, (5,), 0): 1.0})
    disjoint = parseval_pairing(lazy, f, g, ThetaGrid(1, 11))
    assert abs(disjoint) <= 1e-14
    h = CoverObservable(1, {(0, (-1,), 0): 1.0, (0, (1,), 0): 1.0})
    assert parseval_pairing(lazy, h, h, ThetaGrid(1, 5)) == pytest.approx(2.0)


def test_parseval_matches_direct_randomized(two_state):
    rng = np.random.default_rng(4)
    for _ in range(25):
        f = random_observable(rng, two_state, radius=4, band=2)
        g = random_observable(rng, two_state, radius=4, band=2)
        n = 2 * (f.support_radius + g.support_radius) + 1
        pv = parseval_pairing(two_state, f, g, ThetaGrid(1, max(n, 3)))
        assert abs(pv - f.direct_pairing(g, two_state.pi)) <= 1e-12


def test_parseval_aliasing_refused(lazy):
    f = CoverObservable(1, {(0, (2,), 0): 1.0})
    with pytest.raises(ConfigError, match="aliasing"):
        parseval_pairing(lazy, f, f, ThetaGrid(1, 8))


def test_derivative_identity_and_monomials(lazy):
    f = CoverObservable(1, {(0, (1,), 0): 1.0})
    assert floquet_derivative(f, (0,)).support == f.support
    d1 = floquet_derivative(f, (1,))
    assert d1.support[(0, (1,), 0)] == pytest.approx(-1j)


def test_derivative_mixed_monomial():
    f = CoverObservable(2, {(0, (2, 1), 0): 1.0})
    d = floquet_derivative(f, (1, 1))
    assert d.support[(0, (2, 1), 0)] == pytest.approx((-1j) ** 2 * 2.0 * 1.0)


def test_derivative_matches_central_differences(two_state):
    rng = np.random.default_rng(6)
    f = random_observable(rng, two_state, radius=2)
    df = floquet_derivative(f, (1,))
    h = 1e-5
    theta = 0.77
    for k in f.fiber_modes:
        numeric = (
            floquet_transform(two_state, f, [theta + h], k)
            - floquet_transform(two_state, f, [theta - h], k)
        ) / (2 * h)
        exact = floquet_transform(two_state, df, [theta], k)
        scale = max(1.0, np.max(np.abs(exact)))
        assert np.max(np.abs(numeric - exact)) <= 1e-8 * scale


def test_conjugation_symmetry(two_state):
    rng = np.random.default_rng(7)
    f = random_observable(rng, two_state, radius=3, real=True)
    theta = 1.9
    plus = floquet_transform(two_state, f, [theta])
    minus = floquet_transform(two_state, f, [-theta])
    assert np.max(np.abs(minus - np.conj(plus))) <= 1e-14


def test_field_real_at_origin_for_real_observable(two_state):
    f = CoverObservable(1, {(0, (1,), 0): 2.0, (0, (-1,), 0): 2.0, (1, (0,), 0): -1.0})
    field = transform_field(two_state, f, ThetaGrid(1, 8))
    origin = field.values[0, field.mode_index(0), :]
    assert np.max(np.abs(origin.imag)) == 0.0


def test_field_csv_schema(tmp_path, lazy):
    f = CoverObservable(1, {(0, (0,), 0): 1.0, (0, (1,), 1): 2.0})
    field = transform_field(lazy, f, ThetaGrid(1, 4))
    path = tmp_path / "field.csv"
    export_field_csv(field, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["theta_1", "k", "state", "re", "im"]
    assert len(rows) == 1 + 4 * 2 * 1  # nodes x modes x states
