import math

import numpy as np
import pytest

from covercorr import (
    ConfigError,
    CoverObservable,
    TaylorJet,
    amplitude_jet,
    apply_Lj,
    brute_force_correlation,
    delta_observable,
    direct_Q,
    drift_expansion,
    expansion_coefficients,
    factor_jets,
    g_jet,
    lambda_jet,
    load_model,
    phase_jet,
    shifted_growth,
    symbol_Lj,
)
from covercorr.analysis import CovarianceMatrix
from covercorr._fixtures import fixture_path


@pytest.fixture(scope="module")
def lazy():
    return load_model(fixture_path("lazy_walk.json"))


@pytest.fixture(scope="module")
def lazy_jets(lazy):
    f = delta_observable(lazy)
    lam = lambda_jet(lazy, order=8)
    amp = amplitude_jet(lazy, f, f, order=6)
    return f, lam, amp


def gaussian_jet(degree=10, sigma2=1.0):
    """Exactly quadratic phase jet: lambda = -sigma2 theta^2 / 2."""
    return TaylorJet(1, degree, {(2,): -sigma2 / 2.0})


# -- g jet ---------------------------------------------------------------------


def test_g_jet_lazy(lazy_jets):
    _, lam, _ = lazy_jets
    g = g_jet(lam)
    assert g.min_order() >= 3
    assert g[(4,)] == pytest.approx(1j / 96.0, abs=1e-9)


def test_g_jet_vanishes_for_pure_gaussian():
    g = g_jet(gaussian_jet())
    assert not g.coeffs


def test_g_jet_separates_for_product_model():
    prod = load_model(fixture_path("product_lazy.json"))
    lam = lambda_jet(prod, order=6)
    g = g_jet(lam)
    for alpha, c in g.coeffs.items():
        if alpha[0] > 0 and alpha[1] > 0:  # no mixed terms
            assert abs(c) <= 1e-9


def test_g_jet_rejects_drifting_jet():
    jet = TaylorJet(1, 6, {(1,): 0.1, (2,): -0.5})
    with pytest.raises(Exception, match="drift"):
        g_jet(jet)


# -- L_j operators -----------------------------------------------------------------


def test_L0_is_identity(lazy_jets):
    _, lam, amp = lazy_jets
    u = TaylorJet(1, 6, {(0,): 2.5, (2,): 1.0})
    assert apply_Lj(lam, u, 0) == pytest.approx(2.5)


def test_L1_lazy_constant(lazy_jets):
    _, lam, _ = lazy_jets
    one = TaylorJet.constant(1.0, 1, 6)
    assert apply_Lj(lam, one, 1) == pytest.approx(-0.125, abs=1e-9)


def test_L1_gaussian_quadratic_amplitude_vs_quadrature():
    # For lambda = -theta^2/2 and u = theta^2 the expansion of
    # (2pi)^-1 int e^{t lambda} u dtheta is kappa * L_1(u) / t with
    # L_0(u) = 0; high-precision quadrature of the Gaussian moment gives
    # the exact coefficient: int e^{-t theta^2/2} theta^2 dtheta
    # = sqrt(2 pi) t^{-3/2}, so t^{1/2} Q(t) = (2pi)^{-1/2} / t exactly.
    lam = gaussian_jet()
    u = TaylorJet(1, 8, {(2,): 1.0})
    val = apply_Lj(lam, u, 1)
    # quadrature at large t
    t = 40.0
    theta = np.linspace(-np.pi, np.pi, 400001)
    q = np.trapezoid(np.exp(-t * theta**2 / 2) * theta**2, theta) / (2 * np.pi)
    kappa = (2 * np.pi) ** -0.5
    assert math.sqrt(t) * q == pytest.approx(kappa * val.real / t, rel=1e-9)
    assert val == pytest.approx(1.0, abs=1e-12)  # closed form of the moment


def test_Lj_degree_requirements(lazy_jets):
    _, lam, amp = lazy_jets
    with pytest.raises(ConfigError, match="need >= 4"):
        apply_Lj(lam, TaylorJet.constant(1.0, 1, 1), 2)
    with pytest.raises(ConfigError, match="lambda jet degree"):
        apply_Lj(lam.truncate(3), TaylorJet.constant(1.0, 1, 8), 1)


# -- expansion coefficients -----------------------------------------------------------


def test_lazy_expansion_coefficients(lazy_jets):
    _, lam, amp = lazy_jets
    exp = expansion_coefficients(lam, amp, 3)
    assert exp.kappa == pytest.approx(1 / math.sqrt(math.pi), abs=1e-10)
    assert exp.c[0] == pytest.approx(1.0, abs=1e-10)
    assert exp.c[1] == pytest.approx(-0.125, abs=1e-8)
    assert exp.c[2] == pytest.approx(1 / 128.0, abs=1e-6)


def test_gaussian_corrections_vanish():
    lam = gaussian_jet(degree=10)
    one = TaylorJet.constant(1.0, 1, 8)
    exp = expansion_coefficients(lam, one, 3)
    assert abs(exp.c[1]) <= 1e-14 and abs(exp.c[2]) <= 1e-14


def test_product_model_first_correction_adds():
    prod = load_model(fixture_path("product_lazy.json"))
    f = delta_observable(prod)
    lam = lambda_jet(prod, order=6)
    amp = amplitude_jet(prod, f, f, order=4)
    exp = expansion_coefficients(lam, amp, 2)
    assert exp.c[1] == pytest.approx(-0.25, abs=1e-7)  # twice the 1-d value
    assert exp.kappa == pytest.approx(1 / math.pi, abs=1e-9)


def test_degenerate_hessian_refused():
    lam = TaylorJet(2, 6, {(2, 0): -0.5})  # flat along the second axis
    one = TaylorJet.constant(1.0, 2, 4)
    with pytest.raises(Exception, match="positive definite"):
        expansion_coefficients(lam, one, 1)


def test_bilinearity_of_coefficients():
    model = load_model(fixture_path("two_state_u1.json"))
    rng = np.random.default_rng(20)
    lam = lambda_jet(model, order=6)
    f1 = CoverObservable(1, {(0, (0,), 0): 1.0})
    f2 = CoverObservable(1, {(1, (1,), 0): 1.0 - 0.5j})
    g = CoverObservable(1, {(0, (0,), 0): 2.0, (1, (-1,), 0): 1.0j})
    a, b = 0.7 - 0.1j, -1.3 + 0.4j
    combo = a * f1 + b * f2
    for j in (0, 1):
        c_combo = apply_Lj(lam, amplitude_jet(model, combo, g, order=4), j)
        c1 = apply_Lj(lam, amplitude_jet(model, f1, g, order=4), j)
        c2 = apply_Lj(lam, amplitude_jet(model, f2, g, order=4), j)
        assert abs(c_combo - (a * c1 + b * c2)) <= 1e-8


def test_c1_factorization_for_zero_mean_pairs():
    model = load_model(fixture_path("two_state_u1.json"))
    # zero-mean observables (pi is uniform on two states)
    f = CoverObservable(1, {(0, (0,), 0): 1.0, (1, (1,), 0): -1.0})
    g = CoverObservable(1, {(0, (1,), 0): 1.0 + 0.5j, (1, (0,), 0): -1.0 - 0.5j})
    lam = lambda_jet(model, order=6)
    amp = amplitude_jet(model, f, g, order=4)
    assert abs(amp.value()) <= 1e-12
    c1_direct = apply_Lj(lam, amp, 1)
    sigma = CovarianceMatrix.from_matrix(-lam.hessian().real)
    p, q = factor_jets(model, f, g, order=2)
    alpha = np.array([p[(1,)]])
    beta = np.array([q[(1,)]])
    c1_factored = complex(alpha @ sigma.inverse @ beta)
    assert abs(c1_direct - c1_factored) <= 1e-8


# -- symbols ---------------------------------------------------------------------------


def test_symbol_j0_phase():
    sigma = CovarianceMatrix.from_matrix([[0.5]])
    assert symbol_Lj(sigma, [1.0], 0) == pytest.approx(-1j)


def test_symbol_j1_closed_form():
    sigma = CovarianceMatrix.from_matrix([[0.5]])
    assert symbol_Lj(sigma, [1.0], 1) == pytest.approx(-1.0)


def test_symbol_homogeneous_zero():
    sigma = CovarianceMatrix.from_matrix([[0.5]])
    assert symbol_Lj(sigma, [0.0], 1) == 0.0
    assert symbol_Lj(sigma, [0.0], 3) == 0.0


# -- shifted growth -----------------------------------------------------------------------


def test_shifted_growth_no_shift(lazy_jets):
    _, lam, amp = lazy_jets
    assert shifted_growth(lam, amp, (0,), 1) == pytest.approx(
        apply_Lj(lam, amp, 1), abs=1e-12
    )


def test_shifted_growth_rate(lazy_jets):
    _, lam, amp = lazy_jets
    exp = expansion_coefficients(lam, amp, 2)
    target = abs(symbol_Lj(exp.sigma, [1.0], 1)) * abs(amp.value())
    for m in (8, 32):
        val = shifted_growth(lam, amp, (m,), 1)
        rel = abs(abs(val) / m**2 - target) / target
        assert rel <= 2.0 / m


def test_shifted_growth_j2_modulus(lazy_jets):
    _, lam, amp = lazy_jets
    exp = expansion_coefficients(lam, amp, 2)
    target = abs(symbol_Lj(exp.sigma, [1.0], 2)) * abs(amp.value())
    m = 48
    val = shifted_growth(lam, amp, (m,), 2)
    rel = abs(abs(val) / m**4 - target) / target
    assert rel <= 2.0 / m


def test_shifted_growth_direction_selects_block():
    prod = load_model(fixture_path("product_lazy.json"))
    f = delta_observable(prod)
    lam = lambda_jet(prod, order=6)
    amp = amplitude_jet(prod, f, f, order=4)
    exp = expansion_coefficients(lam, amp, 2)
    m = 32
    val = shifted_growth(lam, amp, (m, 0), 1)
    # only the (1,1) entry of the inverse covariance enters
    target = abs(symbol_Lj(exp.sigma, [1.0, 0.0], 1))
    assert abs(abs(val) / m**2 - target) / target <= 2.0 / m


# -- direct quadrature -----------------------------------------------------------------------


def test_direct_Q_lazy_t2(lazy):
    f = delta_observable(lazy)
    assert direct_Q(lazy, f, f, 2) == pytest.approx(0.375, abs=1e-13)


def test_direct_Q_time_zero_is_pairing(lazy):
    f = CoverObservable(1, {(0, (0,), 0): 1.0, (0, (1,), 0): 2.0j})
    g = CoverObservable(1, {(0, (1,), 0): 1.0})
    assert direct_Q(lazy, f, g, 0) == pytest.approx(
        f.direct_pairing(g, lazy.pi), abs=1e-14
    )


def test_direct_Q_parity():
    fair = load_model(fixture_path("fair_coin.json"))
    f = delta_observable(fair)
    assert abs(direct_Q(fair, f, f, 3)) <= 1e-14  # odd time, even target


def test_direct_Q_matches_brute(lazy):
    f = delta_observable(lazy)
    for t in (5, 13, 40):
        assert abs(direct_Q(lazy, f, f, t) - brute_force_correlation(lazy, f, f, t)) <= 1e-12


def test_gaussian_exactness_of_quadrature():
    # lambda exactly quadratic: the torus integral equals the Gaussian
    # integral up to exponentially small tails, so the scaled value hits
    # kappa a(0) at machine precision for t >= 10
    kappa = (2 * np.pi * 0.5) ** -0.5  # Sigma = 1/2... here Sigma = 1
    for t in (10, 25):
        n = 4096
        theta = 2 * np.pi * np.arange(n) / n - np.pi
        q = np.mean(np.exp(-t * theta**2 / 2.0))
        scaled = math.sqrt(t) * q * math.sqrt(2 * np.pi)  # x (2pi)^{d/2} det^{1/2}
        assert abs(scaled - 1.0) <= 1e-10


# -- drift regime ------------------------------------------------------------------------------


def test_drift_boundary_epsilon(lazy, lazy_jets):
    f, lam, amp = lazy_jets
    exp = expansion_coefficients(lam, amp, 2)
    res = drift_expansion(lam, amp, exp.sigma, 0.5, 100, (1,), model=lazy, f=f, g=f)
    assert res.k == (1,)  # t^0 rounds to 1
    assert res.rel_err <= 5e-3


def test_drift_epsilon_validation(lazy_jets):
    _, lam, amp = lazy_jets
    sigma = CovarianceMatrix.from_matrix([[0.5]])
    with pytest.raises(ConfigError, match="epsilon"):
        drift_expansion(lam, amp, sigma, 0.6, 100, (1,))
    with pytest.raises(ConfigError, match="epsilon"):
        drift_expansion(lam, amp, sigma, 0.0, 100, (1,))


def test_drift_direction_selection_d2():
    prod = load_model(fixture_path("product_lazy.json"))
    f = delta_observable(prod)
    lam = lambda_jet(prod, order=6)
    amp = amplitude_jet(prod, f, f, order=4)
    exp = expansion_coefficients(lam, amp, 2)
    res = drift_expansion(lam, amp, exp.sigma, 0.2, 100, (1, 0), model=prod, f=f, g=f)
    assert res.k[1] == 0
    # prediction uses only the (1,1) entry of the inverse covariance
    expect = exp.kappa * (1.0 - 0.5 * res.k[0] ** 2 * exp.sigma.inverse[0, 0] / 100)
    assert res.predicted == pytest.approx(expect, abs=1e-12)
    assert res.rel_err <= 5e-2
