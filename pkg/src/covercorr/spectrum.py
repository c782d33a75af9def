r"""Twisted transfer matrices, leading eigen-triples, resonance surfaces.

The one-step evolution twisted at a torus point :math:`\theta` and fiber
mode :math:`k` is the complex matrix

.. math:: M_{\theta,k}[i][j] = \sum_{e: i \to j} p_e \, e^{i \theta \cdot \psi_e} \, e^{i k \phi_e},

a contraction in the sup norm whose leading eigenvalue :math:`\mu(\theta)`
plays the role of the exponentiated leading resonance of the generator.
The associated rank-one spectral projector is ``F -> <F, v>_pi u`` with
the right/left eigenvectors normalized to ``<u, v>_pi = 1``, where
``<a, b>_pi = sum_i pi_i a_i conj(b_i)``.

Surfaces over a torus grid are computed by *branch continuation* outward
from the origin: nodes are processed in expanding diamond layers, each
eigensolve seeded by an already-computed neighbor, and the branch is the
eigenvalue closest to the seed rather than the one of largest modulus.
This follows the smooth eigenvalue family and refuses loudly when a
continuity bound is violated (a branch crossing).  Layer order is fixed,
so results are deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError, SpectralError
from .floquet import ThetaGrid

__all__ = [
    "TwistedMatrix",
    "EigenTriple",
    "ResonanceSurface",
    "twisted_matrix",
    "leading_eigen",
    "resonance_surface",
    "specrad_scan",
    "projector_pairing",
    "per_theta_decay_check",
    "export_surface_csv",
]

GAP_FLOOR_DEFAULT = 1e-8
_SIMPLE_SEP = 1e-10
_DEFECTIVE_SEP = 1e-7  # below the sqrt(eps) splitting of a defective pair
_RESIDUAL_TOL = 1e-12
_DENSE_LIMIT = 128


@dataclass(frozen=True)
class TwistedMatrix:
    theta: tuple
    k: int
    entries: np.ndarray


@dataclass(frozen=True)
class EigenTriple:
    """Leading eigenvalue with resonant and coresonant states.

    ``u`` solves ``M u = mu u``; ``v`` solves ``M* v = conj(mu) v`` for
    the adjoint with respect to the pi-weighted inner product, and the
    pair is normalized to ``<u, v>_pi = 1`` exactly.  ``gap`` is
    ``|mu|`` minus the largest modulus among the other eigenvalues (it
    can be negative on a continued branch that is no longer dominant).
    """

    mu: complex
    u: np.ndarray
    v: np.ndarray
    gap: float

    @property
    def rho2(self):
        """Modulus of the subdominant spectrum."""
        return abs(self.mu) - self.gap


@dataclass(frozen=True)
class ResonanceSurface:
    grid: ThetaGrid
    k: int
    mu: np.ndarray
    specrad: np.ndarray
    gap: np.ndarray
    gap_ok: np.ndarray
    gap_floor: float

    def node_value(self, index_tuple):
        flat = 0
        for j in index_tuple:
            flat = flat * self.grid.n + int(j)
        return self.mu[flat]


def twisted_matrix(model, theta, k=0):
    """Assemble ``M_{theta,k}``; the untwisted case returns the base chain."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (model.d,):
        raise ConfigError(f"theta must have length d = {model.d}")
    src, dst, prob, psi, phi = model.edge_arrays
    weights = prob * np.exp(1j * (psi @ theta) + 1j * k * phi)
    M = np.zeros((model.state_count, model.state_count), dtype=complex)
    np.add.at(M, (src, dst), weights)
    return TwistedMatrix(tuple(theta), int(k), M)


def _eigendecomposition(M):
    if M.shape[0] <= _DENSE_LIMIT:
        ev, vec = np.linalg.eig(M)
        order = np.lexsort((np.angle(ev), -np.abs(ev)))
        return ev[order], vec[:, order]
    raise NumericalError(
        "dense eigendecomposition limited to 128 states; "
        "use leading_eigen with a seed for larger models"
    )


def _inverse_iteration(M, shift, v0, tol=1e-13, maxiter=200):
    """Shifted inverse iteration towards the eigenvalue nearest `shift`."""
    n = M.shape[0]
    x = v0 / np.linalg.norm(v0)
    lam = shift
    A = M - shift * np.eye(n)
    for _ in range(maxiter):
        try:
            y = np.linalg.solve(A, x)
        except np.linalg.LinAlgError:
            A = M - (shift + 1e-12) * np.eye(n)
            y = np.linalg.solve(A, x)
        x = y / np.linalg.norm(y)
        lam = np.vdot(x, M @ x)
        if np.linalg.norm(M @ x - lam * x) <= tol * (1.0 + abs(lam)):
            return lam, x
    raise NumericalError("inverse iteration did not converge")


def leading_eigen(model, M, seed=None, min_sep=_SIMPLE_SEP):
    """Leading (or branch-continued) eigen-triple of a twisted matrix.

    Without a seed the eigenvalue of largest modulus is returned and must
    be simple; with a seed the branch *closest to the seed's eigenvalue*
    is followed, which is the continuation step used by surfaces.

    Raises
    ------
    SpectralError
        Near-degenerate leading eigenvalue (separation below `min_sep`).
    NumericalError
        Eigensolver failure or residual above tolerance.
    """
    A = M.entries if isinstance(M, TwistedMatrix) else np.asarray(M, dtype=complex)
    s = A.shape[0]
    if s > _DENSE_LIMIT and seed is not None:
        mu, u = _inverse_iteration(A, seed.mu, seed.u.astype(complex))
        _, w = _inverse_iteration(A.conj().T, np.conj(mu), seed.v * model.pi)
        gap = np.nan  # not resolved by iteration alone
        return _assemble_triple(model, A, mu, u, w, gap)

    ev, vec = _eigendecomposition(A)
    if seed is None:
        branch = 0
    else:
        branch = int(np.argmin(np.abs(ev - seed.mu)))
    mu = ev[branch]
    others = np.abs(np.delete(ev, branch)) if s > 1 else np.zeros(0)
    sep = np.min(np.abs(np.delete(ev, branch) - mu)) if s > 1 else np.inf
    # a defective pair splits numerically by about sqrt(eps); anything in
    # that range cannot support the projector residual demanded below
    if sep < max(min_sep, _DEFECTIVE_SEP * (1.0 + abs(mu))):
        raise SpectralError(
            f"near-degenerate leading eigenvalue: separation {sep:.3e} at "
            f"theta={getattr(M, 'theta', None)}, k={getattr(M, 'k', None)}"
        )
    gap = abs(mu) - (others.max() if others.size else 0.0)
    u = vec[:, branch]

    evH, vecH = np.linalg.eig(A.conj().T)
    left = int(np.argmin(np.abs(evH - np.conj(mu))))
    w = vecH[:, left]
    return _assemble_triple(model, A, mu, u, w, gap)


def _polish_vector(A, lam, x):
    """One shifted solve pushes an eigenvector to the residual floor."""
    n = A.shape[0]
    delta = 1e-13 * (1.0 + abs(lam))
    try:
        y = np.linalg.solve(A - (lam + delta) * np.eye(n), x)
    except np.linalg.LinAlgError:
        return x
    return y / np.linalg.norm(y)


def _assemble_triple(model, A, mu, u, w, gap):
    res_r = np.max(np.abs(A @ u - mu * u)) / max(1.0, float(np.max(np.abs(u))))
    if res_r > 1e-13:
        u = _polish_vector(A, mu, u)
    res_l = np.max(np.abs(A.conj().T @ w - np.conj(mu) * w)) / max(
        1.0, float(np.max(np.abs(w)))
    )
    if res_l > 1e-13:
        w = _polish_vector(A.conj().T, np.conj(mu), w)
    # deterministic scaling: sup-norm 1 with the largest entry real positive
    imax = int(np.argmax(np.abs(u)))
    u = u / u[imax]
    t = np.vdot(w, u)  # sum_i u_i conj(w_i)
    if abs(t) < 1e-10 * np.linalg.norm(u) * np.linalg.norm(w):
        # a defective (Jordan) pair: the eigenvalue separation may look
        # finite numerically but the spectral projector does not exist
        raise SpectralError(
            "near-degenerate leading eigenvalue: resonant and coresonant "
            "states nearly orthogonal"
        )
    w = w / np.conj(t)
    v = w / model.pi
    res_r = np.max(np.abs(A @ u - mu * u)) / max(1.0, float(np.max(np.abs(u))))
    res_l = np.max(np.abs(A.conj().T @ w - np.conj(mu) * w)) / max(
        1.0, float(np.max(np.abs(w)))
    )
    if max(res_r, res_l) > _RESIDUAL_TOL:
        raise NumericalError(
            f"eigenpair residual {max(res_r, res_l):.3e} above tolerance"
        )
    return EigenTriple(complex(mu), u, v, float(gap))


def projector_pairing(model, triple, F, G):
    """Rank-one amplitude ``<F, v>_pi <u, G>_pi`` of the spectral projector."""
    pi = model.pi
    left = np.sum(pi * F * np.conj(triple.v))
    right = np.sum(pi * triple.u * np.conj(G))
    return complex(left * right)


def resonance_surface(model, grid, k=0, gap_floor=GAP_FLOOR_DEFAULT, continuity_factor=10.0):
    """Branch-continued leading eigenvalue over a full torus grid.

    Continuation proceeds in expanding diamond layers from the origin;
    within a layer nodes are independent, and each is seeded by its
    already-computed neighbor closest to the origin (lexicographic
    tie-break), so the result does not depend on evaluation order.

    ``gap_ok`` records the spectral health per node: at the origin of the
    untwisted family it means a positive eigenvalue gap; everywhere else
    it means the whole spectrum stays strictly inside the unit circle,
    which is the numerical stand-in for the absence of twisted unimodular
    eigenvalues.

    Raises
    ------
    SpectralError
        When consecutive nodes jump by more than
        ``continuity_factor * spacing * max(1, max |psi|)``, which signals
        a branch crossing rather than a smooth family.
    """
    if grid.d != model.d:
        raise ConfigError("grid dimension does not match model")
    n = grid.n
    count = grid.node_count
    mu = np.zeros(count, dtype=complex)
    specrad = np.zeros(count)
    gap = np.zeros(count)

    idx_tuples = grid.index_tuples
    if model.d == 0:
        layers = {0: [0]}
        signed_dist = np.zeros(1, dtype=int)
    else:
        signed = np.minimum(idx_tuples, n - idx_tuples)
        signed_dist = signed.sum(axis=1)
        layers = {}
        for flat, dist in enumerate(signed_dist):
            layers.setdefault(int(dist), []).append(flat)

    strides = n ** np.arange(model.d - 1, -1, -1) if model.d else np.zeros(0, dtype=int)
    bound = continuity_factor * grid.spacing * max(1.0, float(model.max_step))

    # continuation tracks eigenvalues only; eigenvectors can degenerate at
    # interior branch collisions without invalidating the surface.  The
    # seed at each node is the *average* over every already-computed
    # neighbor closer to the origin: the closer-neighbor set is invariant
    # under theta -> -theta, which keeps the branch selection exactly
    # conjugation-symmetric (a single-neighbor rule is not).
    for dist in sorted(layers):
        for flat in layers[dist]:
            it = idx_tuples[flat] if model.d else np.zeros(0, dtype=int)
            theta = (2.0 * np.pi / n) * it
            M = twisted_matrix(model, theta, k)
            ev = np.linalg.eigvals(M.entries)
            order = np.lexsort((np.angle(ev), -np.abs(ev)))
            ev = ev[order]
            if dist == 0:
                branch = 0
            else:
                seeds = _closer_neighbors(it, n, strides, signed_dist)
                seed_mu = np.mean(mu[seeds])
                dists = np.abs(ev - seed_mu)
                order2 = np.argsort(dists)
                branch = int(order2[0])
                if len(ev) > 1:
                    runner = int(order2[1])
                    scale = 1.0 + abs(ev[branch])
                    # two materially different eigenvalues equidistant from
                    # the seed: the smooth branch has split (typically into
                    # a conjugate pair of a real family) and any choice is
                    # arbitrary; refuse rather than break symmetry silently
                    if (
                        dists[runner] - dists[branch] <= 1e-9 * scale
                        and abs(ev[runner] - ev[branch]) > 1e-6 * scale
                    ):
                        raise SpectralError(
                            f"branch crossing detected at theta={tuple(theta)}: "
                            "ambiguous continuation between "
                            f"{ev[branch]:.6g} and {ev[runner]:.6g}"
                        )
                if dists[branch] > bound:
                    raise SpectralError(
                        f"branch crossing detected at theta={tuple(theta)}: "
                        f"jump {dists[branch]:.3e} exceeds bound {bound:.3e}"
                    )
            mu[flat] = ev[branch]
            specrad[flat] = float(np.max(np.abs(ev)))
            others = np.abs(np.delete(ev, branch))
            gap[flat] = abs(ev[branch]) - (others.max() if others.size else 0.0)

    origin_flat = 0
    gap_ok = specrad < 1.0 - gap_floor
    if k == 0:
        gap_ok[origin_flat] = gap[origin_flat] > gap_floor
    return ResonanceSurface(grid, int(k), mu, specrad, gap, gap_ok, float(gap_floor))


def _closer_neighbors(it, n, strides, signed_dist):
    """All grid neighbors strictly closer to the origin (never empty)."""
    my = int(np.minimum(it, n - it).sum())
    out = []
    for axis in range(len(it)):
        for step in (-1, 1):
            nb = it.copy()
            nb[axis] = (nb[axis] + step) % n
            flat = int((nb * strides).sum())
            if signed_dist[flat] < my:
                out.append(flat)
    if not out:
        raise NumericalError("no seed neighbor found; grid too small")
    return sorted(out)


def specrad_scan(model, grid, k=0, gap_floor=GAP_FLOOR_DEFAULT):
    """Branch-free gap scan: spectral radius per node plus origin flags.

    Used by mixing guards: unlike :func:`resonance_surface` it never
    follows a branch, so it cannot fail at interior branch collisions;
    it answers only whether any twisted spectrum touches the unit circle.
    Returns ``(specrad, gap_ok)`` arrays in grid order.
    """
    if grid.d != model.d:
        raise ConfigError("grid dimension does not match model")
    count = grid.node_count
    specrad = np.zeros(count)
    origin_gap = 0.0
    for flat in range(count):
        theta = grid.nodes[flat]
        ev = np.abs(np.linalg.eigvals(twisted_matrix(model, theta, k).entries))
        ev.sort()
        specrad[flat] = ev[-1]
        if flat == 0:
            origin_gap = ev[-1] - (ev[-2] if len(ev) > 1 else 0.0)
    gap_ok = specrad < 1.0 - gap_floor
    if k == 0:
        gap_ok[0] = origin_gap > gap_floor
    return specrad, gap_ok


def per_theta_decay_check(model, theta, k, F, G, t_max):
    """Worst normalized deviation of the correlation from its rank-one law.

    Propagates ``F`` by the twisted matrix and compares against
    ``mu^t a(theta)`` where ``a`` is the projector pairing; the residual
    at time t is divided by ``rho2^t`` (the subdominant modulus), which
    is the exact decay rate of the remainder for a finite model.  Times
    ``1 <= t <= t_max`` are scanned.  Once ``rho2^t`` falls below the
    floating-point noise floor the remainder is numerically zero and the
    ratio is no longer meaningful; such times only contribute if the
    residual is visibly nonzero (a genuine failure of the rank-one law).
    """
    M = twisted_matrix(model, theta, k)
    triple = leading_eigen(model, M)
    a = projector_pairing(model, triple, F, G)
    rho2 = triple.rho2
    pi = model.pi
    scale = max(1.0, float(np.max(np.abs(F)) * np.max(np.abs(G))))
    noise_floor = 1e-13 * scale
    worst = 0.0
    current = np.array(F, dtype=complex)
    for t in range(1, int(t_max) + 1):
        current = M.entries @ current
        value = np.sum(pi * current * np.conj(G))
        residual = abs(value - (triple.mu**t) * a)
        denom = rho2**t if rho2 > 0 else 0.0
        if denom >= noise_floor:
            worst = max(worst, residual / denom)
        elif residual > 10.0 * noise_floor:
            # the remainder should be numerically zero here; a visible
            # residual means the rank-one law failed, not roundoff
            worst = max(worst, residual / max(denom, 1e-300))
    return worst


def export_surface_csv(surface, path):
    """CSV schema: theta_1..theta_d, k, mu_re, mu_im, specrad, gap, gap_ok."""
    grid = surface.grid
    header = [f"theta_{a + 1}" for a in range(grid.d)] + [
        "k",
        "mu_re",
        "mu_im",
        "specrad",
        "gap",
        "gap_ok",
    ]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for flat, node in enumerate(grid.nodes):
            w.writerow(
                [f"{x:.17g}" for x in node]
                + [
                    surface.k,
                    f"{surface.mu[flat].real:.17g}",
                    f"{surface.mu[flat].imag:.17g}",
                    f"{surface.specrad[flat]:.17g}",
                    f"{surface.gap[flat]:.17g}",
                    int(surface.gap_ok[flat]),
                ]
            )
