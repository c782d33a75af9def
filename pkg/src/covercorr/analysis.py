r"""Taylor data of the leading eigenvalue branch and its cross-checks.

Two independent computations of the diffusion covariance meet here and
serve as each other's oracle:

* the Hessian of :math:`\lambda(\theta) = \log \mu(\theta)` at the
  origin, extracted from a local polynomial least-squares fit of the
  branch-continued eigenvalue on a symmetric stencil, and
* the summed-autocorrelation (Green-Kubo) covariance of the lattice
  cocycle, evaluated in closed form through the fundamental matrix
  ``Z = (I - P + 1 pi)^{-1}`` rather than by truncated time sums.

Their agreement (:func:`hessian_check`) is the discrete face of the
identity between the second derivative of the leading resonance and the
dynamical variance of the cocycle, and it gates every asymptotic
expansion downstream.

Derivatives are obtained by least squares on a ``(2m+1)^d`` stencil of
spacing ``h`` with ``m = ceil((D+2)/2)``, fitted in scaled coordinates
for conditioning; repeating the fit at ``h/2`` yields the reported
per-coefficient error estimate.  Defaults: ``h = 1e-2`` for degrees up
to 4, ``h = 5e-2`` above (cross-checked by the halved fit).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ModelError, NumericalError
from .floquet import floquet_transform
from .jets import TaylorJet, multi_indices
from .models import center_check, fiber_average
from .spectrum import EigenTriple, leading_eigen, projector_pairing, twisted_matrix

__all__ = [
    "CovarianceMatrix",
    "lambda_jet",
    "amplitude_jet",
    "factor_jets",
    "green_kubo_covariance",
    "hessian_check",
    "export_jet_json",
]

GRADIENT_TOL = 1e-8
FIT_RESIDUAL_TOL = 1e-5

# Fits carry guard degrees: a jet of nominal degree D is extracted from a
# least-squares fit of degree D + _GUARD_DEGREE and truncated back.  Without
# the guard, the aliasing of the first neglected Taylor term onto the top
# requested coefficient floors the accuracy near 5e-7, far above what exact
# models achieve elsewhere; with it, requested coefficients sit at the
# roundoff floor of the eigensolver.
_GUARD_DEGREE = 4


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric positive definite covariance with cached inverse."""

    sigma: np.ndarray
    det: float
    inverse: np.ndarray

    @staticmethod
    def from_matrix(sigma, sym_tol=1e-12, eig_floor=1e-10):
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ConfigError("covariance must be square")
        asym = np.max(np.abs(sigma - sigma.T)) if sigma.size else 0.0
        if asym > sym_tol:
            raise NumericalError(f"covariance asymmetry {asym:.3e}")
        sigma = 0.5 * (sigma + sigma.T)
        ev = np.linalg.eigvalsh(sigma)
        if np.min(ev) <= eig_floor:
            raise NumericalError(
                f"covariance not positive definite: smallest eigenvalue {np.min(ev):.3e}"
            )
        return CovarianceMatrix(sigma, float(np.linalg.det(sigma)), np.linalg.inv(sigma))


def default_h(order, max_step=1):
    """Default stencil spacing; shrinks with the cocycle stretch.

    The twisted eigenvalue varies on the scale of ``theta . psi``, so the
    stencil must shrink as ``max |psi|`` grows or the polynomial fit
    leaves the disc where the eigenvalue branch is tame.
    """
    base = 1e-2 if order <= 4 else 5e-2
    return base / max(1, int(max_step))


def stencil_m(order):
    return math.ceil((order + 2) / 2)


def _stencil_offsets(d, m):
    ax = np.arange(-m, m + 1, dtype=np.int64)
    grids = np.meshgrid(*([ax] * d), indexing="ij")
    offsets = np.stack([g.reshape(-1) for g in grids], axis=-1)
    order = np.lexsort(
        tuple(offsets[:, a] for a in range(d - 1, -1, -1)) + (np.abs(offsets).sum(axis=1),)
    )
    return offsets[order]  # sorted by L1 distance, then lexicographic


def _continued_values(model, offsets, h, evaluate, origin_value=None):
    """Evaluate a spectral quantity over the stencil with branch continuation.

    `evaluate(theta, seed_triple) -> (value, triple)`; nodes are visited
    in increasing L1 distance from the center, each seeded by the
    neighbor one step toward the center (deterministic choice).
    """
    values = {}
    triples = {}
    for off in offsets:
        key = tuple(int(x) for x in off)
        if all(x == 0 for x in key) and origin_value is not None:
            values[key], triples[key] = origin_value
            continue
        seed = None
        if any(key):
            axis = int(np.argmax(np.abs(off)))
            step = list(key)
            step[axis] -= int(np.sign(step[axis]))
            seed = triples[tuple(step)]
        theta = h * off.astype(float)
        values[key], triples[key] = evaluate(theta, seed)
    return values


def _polyfit_jet(values, offsets, h, d, order):
    """Least-squares polynomial fit in scaled coordinates; returns a jet."""
    m = int(np.max(np.abs(offsets))) if offsets.size else 1
    r = m * h
    alphas = multi_indices(d, order)
    tau = offsets.astype(float) / m  # in [-1, 1]^d
    V = np.ones((len(offsets), len(alphas)), dtype=float)
    for col, alpha in enumerate(alphas):
        for a, p in enumerate(alpha):
            if p:
                V[:, col] *= tau[:, a] ** p
    y = np.array([values[tuple(int(x) for x in off)] for off in offsets], dtype=complex)
    coef, _, _, _ = np.linalg.lstsq(V, y, rcond=None)
    residual = np.max(np.abs(V @ coef - y))
    scale = max(1.0, float(np.max(np.abs(y))))
    coeffs = {
        alpha: coef[col] / (r ** sum(alpha)) for col, alpha in enumerate(alphas)
    }
    return TaylorJet(d, order, coeffs), residual / scale


def _origin_triple(model):
    ones = np.ones(model.state_count, dtype=complex)
    ev = np.sort(np.abs(np.linalg.eigvals(model.transition_matrix)))
    gap = 1.0 - (ev[-2] if len(ev) > 1 else 0.0)
    return EigenTriple(1.0 + 0.0j, ones, ones, float(gap))


def _log_mu_values(model, offsets, h):
    def evaluate(theta, seed):
        M = twisted_matrix(model, theta, 0)
        if model.state_count == 1:
            mu = complex(M.entries[0, 0])
            triple = EigenTriple(mu, np.ones(1, dtype=complex), np.ones(1, dtype=complex), abs(mu))
        else:
            triple = leading_eigen(model, M, seed=seed)
            mu = triple.mu
        if mu.real <= 0.0:
            raise NumericalError(
                "stencil leaves the right half-plane (Re mu <= 0); reduce h"
            )
        return complex(np.log(mu)), triple

    origin = (0.0 + 0.0j, _origin_triple(model))
    return _continued_values(model, offsets, h, evaluate, origin_value=origin)


def lambda_jet(model, order=4, h=None, fit_tol=FIT_RESIDUAL_TOL):
    r"""Jet of :math:`\lambda(\theta) = \log \mu(\theta)` at the origin.

    The constant term is pinned to zero exactly; the linear part must
    vanish to ``1e-8`` (a centered cocycle) and is then zeroed as well,
    so downstream consumers see a clean critical point.  The attached
    ``error_estimate`` is the coefficient-wise difference against the
    fit with halved spacing.

    Raises
    ------
    ModelError
        Non-centered model (exact drift or fitted gradient too large).
    NumericalError
        Fit residual above `fit_tol`, or eigenvalue branch leaving the
        right half plane on the stencil.
    """
    if model.d == 0:
        raise ConfigError("lambda jet needs d >= 1")
    if not center_check(model).passed:
        raise ModelError("non-centered model")
    fit_degree = order + _GUARD_DEGREE
    if h is None:
        h = default_h(fit_degree, model.max_step)
    m = stencil_m(fit_degree)
    offsets = _stencil_offsets(model.d, m)

    def fit(hh):
        vals = _log_mu_values(model, offsets, hh)
        full, res = _polyfit_jet(vals, offsets, hh, model.d, fit_degree)
        return full.truncate(order), res

    jet, residual = fit(h)
    if residual > fit_tol:
        raise NumericalError(f"lambda fit residual {residual:.3e} above {fit_tol:.1e}")
    jet_half, _ = fit(h / 2.0)

    grad = np.array([jet[tuple(np.eye(model.d, dtype=int)[a])] for a in range(model.d)])
    if np.max(np.abs(grad)) > GRADIENT_TOL:
        raise ModelError(
            f"non-centered model: fitted gradient {np.max(np.abs(grad)):.3e}"
        )
    coeffs = dict(jet.coeffs)
    coeffs.pop((0,) * model.d, None)
    for a in range(model.d):
        coeffs.pop(tuple(np.eye(model.d, dtype=int)[a]), None)
    estimate = {
        alpha: float(abs(jet[alpha] - jet_half[alpha]) + 1e-16)
        for alpha in multi_indices(model.d, order)
    }
    return TaylorJet(model.d, order, coeffs, error_estimate=estimate)


def _pairing_values(model, f, g, offsets, h, which="a"):
    """Stencil values of the projector pairing (or one of its factors)."""
    f0 = fiber_average(f)
    g0 = fiber_average(g)
    pi = model.pi

    def evaluate(theta, seed):
        M = twisted_matrix(model, theta, 0)
        if model.state_count == 1:
            mu = complex(M.entries[0, 0])
            triple = EigenTriple(mu, np.ones(1, dtype=complex), np.ones(1, dtype=complex), abs(mu))
        else:
            triple = leading_eigen(model, M, seed=seed)
        F = floquet_transform(model, f0, theta, 0)
        G = floquet_transform(model, g0, theta, 0)
        if which == "a":
            val = projector_pairing(model, triple, F, G)
        elif which == "p":
            val = complex(np.sum(pi * F * np.conj(triple.v)))
        else:
            val = complex(np.sum(pi * triple.u * np.conj(G)))
        return val, triple

    triple0 = _origin_triple(model)
    F0 = floquet_transform(model, f0, np.zeros(model.d), 0)
    G0 = floquet_transform(model, g0, np.zeros(model.d), 0)
    p0 = complex(np.sum(pi * F0))
    q0 = complex(np.conj(np.sum(pi * G0)))
    origin = {"a": p0 * q0, "p": p0, "q": q0}[which]
    return _continued_values(model, offsets, h, evaluate, origin_value=(origin, triple0))


def amplitude_jet(model, f, g, order=4, h=None, fit_tol=FIT_RESIDUAL_TOL):
    r"""Jet at the origin of the rank-one amplitude
    :math:`a(\theta) = \langle F_\theta, v_\theta \rangle_\pi \langle u_\theta, G_\theta \rangle_\pi`.

    The value at the origin is computed in closed form (the resonant pair
    is the constant vector there), so ``a(0)`` is exact.  Observables
    carrying fiber modes contribute through their mode-0 slice, which is
    the part the slow expansion sees.
    """
    if not center_check(model).passed:
        raise ModelError("non-centered model")
    fit_degree = order + _GUARD_DEGREE
    if h is None:
        h = default_h(fit_degree, model.max_step)
    m = stencil_m(fit_degree)
    offsets = _stencil_offsets(model.d, m)

    def fit(hh):
        vals = _pairing_values(model, f, g, offsets, hh, which="a")
        full, res = _polyfit_jet(vals, offsets, hh, model.d, fit_degree)
        return full.truncate(order), res

    jet, residual = fit(h)
    if residual > fit_tol:
        raise NumericalError(f"amplitude fit residual {residual:.3e} above {fit_tol:.1e}")
    jet_half, _ = fit(h / 2.0)
    estimate = {
        alpha: float(abs(jet[alpha] - jet_half[alpha]) + 1e-16)
        for alpha in multi_indices(model.d, order)
    }
    return TaylorJet(model.d, order, dict(jet.coeffs), error_estimate=estimate)


def factor_jets(model, f, g, order=2, h=None):
    r"""Jets of the two rank-one factors
    :math:`p(\theta) = \langle F_\theta, v_\theta \rangle_\pi` and
    :math:`q(\theta) = \langle u_\theta, G_\theta \rangle_\pi`,
    whose first derivatives drive the leading coefficient for zero-mean
    observable pairs.
    """
    fit_degree = order + _GUARD_DEGREE
    if h is None:
        h = default_h(fit_degree, model.max_step)
    m = stencil_m(fit_degree)
    offsets = _stencil_offsets(model.d, m)
    vals_p = _pairing_values(model, f, g, offsets, h, which="p")
    vals_q = _pairing_values(model, f, g, offsets, h, which="q")
    pjet, _ = _polyfit_jet(vals_p, offsets, h, model.d, fit_degree)
    qjet, _ = _polyfit_jet(vals_q, offsets, h, model.d, fit_degree)
    return pjet.truncate(order), qjet.truncate(order)


def green_kubo_covariance(model):
    r"""Asymptotic covariance of the lattice cocycle, in closed form.

    .. math::

        \Sigma_{ab} = E_\pi[\psi_a \psi_b]
            + \sum_{t \ge 1} \left( E_\pi[\psi_a \, \psi_b \circ T^t]
            + E_\pi[\psi_b \, \psi_a \circ T^t] \right)

    with the tail summed exactly through the fundamental matrix
    ``Z = (I - P + 1 pi)^{-1}`` applied to the conditional step means.
    Requires a centered, mixing model; the result is validated symmetric
    positive definite.
    """
    if model.d == 0:
        raise ConfigError("covariance needs d >= 1")
    if not center_check(model).passed:
        raise ModelError("non-centered model")
    src, dst, prob, psi, _ = model.edge_arrays
    pi = model.pi
    s, d = model.state_count, model.d
    w = pi[src] * prob

    same = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            same[a, b] = np.sum(w * psi[:, a] * psi[:, b])

    cond_mean = np.zeros((s, d))
    np.add.at(cond_mean, src, prob[:, None] * psi.astype(float))

    A = np.eye(s) - model.transition_matrix + np.outer(np.ones(s), pi)
    try:
        tail_potential = np.linalg.solve(A, cond_mean)  # Z applied columnwise
    except np.linalg.LinAlgError as exc:
        raise NumericalError("fundamental matrix is singular") from exc

    cross = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            # sum_{t>=1} E[psi_a (psi_b o T^t)]  =  E[psi_a * (Z m_b)(dst)] - E[psi_a * pi.m_b]
            zb = tail_potential[:, b] - float(pi @ cond_mean[:, b])
            cross[a, b] = np.sum(w * psi[:, a] * zb[dst])

    sigma = same + cross + cross.T
    return CovarianceMatrix.from_matrix(sigma)


def hessian_check(model, order=6, h=None):
    """Max deviation between ``-Hessian(log mu)`` and the Green-Kubo matrix.

    The two sides are computed by unrelated routes (eigenvalue stencil
    fit vs fundamental matrix), so agreement at 1e-6 certifies both.
    Second derivatives tolerate a tighter stencil than high-order jets,
    so the default spacing here is sharper than the jet default.
    """
    if h is None:
        h = 1.25e-2 / max(1, model.max_step)
    jet = lambda_jet(model, order=order, h=h)
    H = jet.hessian()
    if np.max(np.abs(H.imag)) > 1e-8:
        raise NumericalError("Hessian has a significant imaginary part")
    sigma = green_kubo_covariance(model)
    return float(np.max(np.abs(-H.real - sigma.sigma)))


def export_jet_json(jet, path, order=None, h=None):
    """Jet file: multi-index strings mapped to [re, im] plus metadata."""
    doc = jet.to_json_dict(order=order if order is not None else jet.degree, h=h)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
