r"""Finite base dynamics, lattice and circle cocycles, and cover observables.

The base system is a finite irreducible aperiodic Markov model whose
edges carry an integer displacement vector ``psi`` (the lattice cocycle,
one step of the :math:`\mathbb{Z}^d` extension) and an angle ``phi``
(the circle cocycle of the optional U(1) extension).  The cover dynamics
is the skew product

.. math:: (x, n, \omega) \mapsto (x', \, n + \psi(x \to x'), \, \omega + \phi(x \to x'))

with the invariant measure ``pi x counting x Haar``.  Parallel edges
with distinct ``psi`` are allowed, so single-state walks exist.

Observables on the cover are finitely supported functions of
``(state, lattice point, fiber mode)``; the fiber dependence is stored
mode-by-mode, i.e. already Fourier transformed along the circle fiber.

All types are immutable after construction and safe to share between
threads for reading.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, ModelError, NumericalError

__all__ = [
    "Edge",
    "MarkovModel",
    "LatticeCocycle",
    "FiberCocycle",
    "CoverObservable",
    "CenterCheck",
    "build_model",
    "load_model",
    "ulam_compile",
    "center_check",
    "fiber_average",
    "delta_observable",
    "random_observable",
    "random_centered_model",
    "load_observable",
    "save_observable",
]

ROW_SUM_TOL = 1e-12
PI_RESIDUAL_TOL = 1e-10
SLEM_TOL = 1e-9
DRIFT_TOL = 1e-12
_DENSE_PI_LIMIT = 64
_CYCLE_LENGTH_MARGIN = 2
_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Edge:
    """One transition of the base chain with its cocycle data."""

    src: int
    dst: int
    prob: float
    psi: tuple
    phi: float = 0.0


@dataclass(frozen=True)
class MarkovModel:
    """Validated finite Markov model with cocycle-decorated edges.

    Build instances through :func:`build_model`, :func:`load_model` or
    :func:`ulam_compile`; the constructor itself assumes the invariants
    (stochastic rows, irreducible aperiodic chain, stationary ``pi``)
    already hold.
    """

    state_count: int
    edges: tuple
    d: int
    pi: np.ndarray
    name: str = "model"

    @cached_property
    def transition_matrix(self):
        P = np.zeros((self.state_count, self.state_count))
        for e in self.edges:
            P[e.src, e.dst] += e.prob
        return P

    @cached_property
    def edge_arrays(self):
        """Columns (src, dst, prob, psi, phi) as numpy arrays, edge order fixed."""
        src = np.array([e.src for e in self.edges], dtype=np.intp)
        dst = np.array([e.dst for e in self.edges], dtype=np.intp)
        prob = np.array([e.prob for e in self.edges])
        psi = np.array([e.psi for e in self.edges], dtype=np.int64).reshape(len(self.edges), self.d)
        phi = np.array([e.phi for e in self.edges])
        return src, dst, prob, psi, phi

    @cached_property
    def max_step(self):
        """Largest ``|psi|_inf`` over edges (0 for d = 0)."""
        if self.d == 0 or not self.edges:
            return 0
        return int(max(max(abs(x) for x in e.psi) for e in self.edges))

    @cached_property
    def step_range(self):
        """Per-axis (min, max) of psi over edges."""
        psi = self.edge_arrays[3]
        if self.d == 0:
            return np.zeros((0, 2), dtype=np.int64)
        return np.stack([psi.min(axis=0), psi.max(axis=0)], axis=1)

    @property
    def lattice_cocycle(self):
        return LatticeCocycle(self)

    @property
    def fiber_cocycle(self):
        return FiberCocycle(self)

    def stationary_edge_weights(self):
        """pi[src] * prob per edge: the invariant measure on transitions."""
        src, _, prob, _, _ = self.edge_arrays
        return self.pi[src] * prob


@dataclass(frozen=True)
class LatticeCocycle:
    """View of the per-edge integer displacements of a model."""

    model: MarkovModel

    @property
    def psi(self):
        return self.model.edge_arrays[3]

    @cached_property
    def mean_drift(self):
        w = self.model.stationary_edge_weights()
        if self.model.d == 0:
            return np.zeros(0)
        return w @ self.psi

    def generates_lattice(self, max_length=None):
        """Whether cycle displacement sums generate the full integer lattice.

        Enumerates closed edge paths up to ``state_count + 2`` steps
        (longer cycles are integer combinations of short ones at this
        scale) and checks that the collected sums span a sublattice of
        covolume one.
        """
        model = self.model
        if model.d == 0:
            return True
        if max_length is None:
            max_length = model.state_count + _CYCLE_LENGTH_MARGIN
        sums = set()
        by_state = {}
        for e in model.edges:
            by_state.setdefault(e.src, []).append(e)
        for start in range(model.state_count):
            frontier = {(start, (0,) * model.d)}
            for _ in range(max_length):
                nxt = set()
                for state, off in frontier:
                    for e in by_state.get(state, ()):
                        noff = tuple(o + p for o, p in zip(off, e.psi))
                        nxt.add((e.dst, noff))
                        if e.dst == start:
                            sums.add(noff)
                frontier = nxt
        sums.discard((0,) * model.d)
        return _lattice_is_full([list(s) for s in sums], model.d)


@dataclass(frozen=True)
class FiberCocycle:
    """View of the per-edge circle angles of a model."""

    model: MarkovModel

    @property
    def phi(self):
        return self.model.edge_arrays[4]

    @property
    def is_trivial(self):
        """True when the model carries no circle extension (all angles 0)."""
        return bool(np.all(self.phi == 0.0))


@dataclass(frozen=True)
class CoverObservable:
    """Finitely supported function on (state, lattice point, fiber mode).

    ``support`` maps ``(state, n, k)`` with ``n`` a length-`d` integer
    tuple and ``k`` an integer fiber mode to a complex value.  Exact
    zeros are dropped on construction.
    """

    d: int
    support: dict

    def __post_init__(self):
        clean = {}
        for (state, n, k), val in self.support.items():
            n = tuple(int(x) for x in n)
            if len(n) != self.d:
                raise ConfigError(f"lattice point {n} has length != d = {self.d}")
            val = complex(val)
            if val != 0:
                clean[(int(state), n, int(k))] = val
        object.__setattr__(self, "support", clean)

    @cached_property
    def support_radius(self):
        if not self.support or self.d == 0:
            return 0
        return max(max(abs(x) for x in n) if n else 0 for (_, n, _) in self.support)

    @cached_property
    def fiber_band(self):
        if not self.support:
            return 0
        return max(abs(k) for (_, _, k) in self.support)

    @cached_property
    def fiber_modes(self):
        return tuple(sorted({k for (_, _, k) in self.support}))

    @property
    def is_zero(self):
        return not self.support

    def mode_slice(self, k):
        """The mode-`k` component as a new observable (still at mode k)."""
        return CoverObservable(
            self.d, {key: v for key, v in self.support.items() if key[2] == k}
        )

    def mode_entries(self, k):
        """(states, lattice points, values) arrays for one fiber mode."""
        items = sorted(
            (key, v) for key, v in self.support.items() if key[2] == k
        )
        states = np.array([key[0] for key, _ in items], dtype=np.intp)
        points = np.array([key[1] for key, _ in items], dtype=np.int64).reshape(
            len(items), self.d
        )
        values = np.array([v for _, v in items], dtype=complex)
        return states, points, values

    def shifted(self, m):
        """Pullback by the deck translation: ``(tau_m f)(i, n, k) = f(i, n + m, k)``."""
        m = tuple(int(x) for x in m)
        if len(m) != self.d:
            raise ConfigError("shift vector has wrong length")
        return CoverObservable(
            self.d,
            {
                (s, tuple(a - b for a, b in zip(n, m)), k): v
                for (s, n, k), v in self.support.items()
            },
        )

    def __add__(self, other):
        if other.d != self.d:
            raise ConfigError("observable dimensions differ")
        out = dict(self.support)
        for key, v in other.support.items():
            out[key] = out.get(key, 0.0) + v
        return CoverObservable(self.d, out)

    def __sub__(self, other):
        return self + (other * (-1.0))

    def __mul__(self, scalar):
        return CoverObservable(
            self.d, {key: v * complex(scalar) for key, v in self.support.items()}
        )

    __rmul__ = __mul__

    def direct_pairing(self, other, pi):
        """``sum_{i,n,k} pi_i f(i,n,k) conj g(i,n,k)`` without any transform."""
        total = 0.0 + 0.0j
        for key in sorted(self.support.keys() & other.support.keys()):
            total += pi[key[0]] * self.support[key] * np.conj(other.support[key])
        return total


@dataclass(frozen=True)
class CenterCheck:
    drift: np.ndarray
    passed: bool


# ---------------------------------------------------------------------------
# construction and validation


def build_model(config):
    """Build and validate a :class:`MarkovModel` from a config mapping.

    The mapping follows the model file schema::

        {"name": str, "d": int, "states": int,
         "edges": [{"from": i, "to": j, "p": prob, "psi": [..], "phi": angle}]}

    Probabilities may be given as decimal strings; they are parsed to
    binary floats.  ``phi`` is optional and defaults to 0.

    Raises
    ------
    ConfigError
        Structural problems (missing fields, bad indices, non-integer psi).
    ModelError
        Non-stochastic rows, reducible or periodic chain.
    """
    try:
        name = str(config.get("name", "model"))
        d = int(config["d"])
        states = int(config["states"])
        raw_edges = config["edges"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad model config: {exc}") from exc
    if states < 1:
        raise ConfigError("state count must be positive")
    if d < 0:
        raise ConfigError("lattice dimension must be >= 0")

    edges = []
    for raw in raw_edges:
        try:
            src = int(raw["from"])
            dst = int(raw["to"])
            prob = float(raw["p"])
            psi_raw = raw.get("psi", [0] * d)
            phi = float(raw.get("phi", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad edge entry {raw}: {exc}") from exc
        if not (0 <= src < states and 0 <= dst < states):
            raise ConfigError(f"edge {src}->{dst} outside state range")
        if not (0.0 < prob <= 1.0):
            raise ConfigError(f"edge probability {prob} outside (0, 1]")
        psi = []
        for x in psi_raw:
            if float(x) != int(float(x)):
                raise ConfigError(f"non-integer psi entry {x}")
            psi.append(int(float(x)))
        if len(psi) != d:
            raise ConfigError(f"psi {psi} has length != d = {d}")
        if not (0.0 <= phi < _TWO_PI):
            phi = float(np.mod(phi, _TWO_PI))
        edges.append(Edge(src, dst, prob, tuple(psi), phi))

    P = np.zeros((states, states))
    for e in edges:
        P[e.src, e.dst] += e.prob
    row_sums = P.sum(axis=1)
    bad = np.nonzero(np.abs(row_sums - 1.0) > ROW_SUM_TOL)[0]
    if bad.size:
        raise ModelError(
            f"non-stochastic row {int(bad[0])}: sums to {row_sums[bad[0]]:.15g}"
        )

    _check_mixing(P)
    pi = _stationary_distribution(P)
    model = MarkovModel(states, tuple(edges), d, pi, name=name)
    residual = np.max(np.abs(pi @ P - pi))
    if residual > PI_RESIDUAL_TOL:
        raise NumericalError(f"stationary vector residual {residual:.2e}")
    return model


def load_model(path):
    """Read a model config file (JSON syntax) and build the model."""
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    return build_model(config)


def _check_mixing(P):
    """Reject reducible or periodic chains via the second eigenvalue modulus."""
    ev = np.linalg.eigvals(P)
    ev = ev[np.argsort(-np.abs(ev))]
    slem = np.abs(ev[1]) if len(ev) > 1 else 0.0
    if slem >= 1.0 - SLEM_TOL:
        raise ModelError(
            f"chain is reducible or periodic: second eigenvalue modulus {slem:.12f}"
        )


def _stationary_distribution(P):
    n = P.shape[0]
    if n == 1:
        return np.array([1.0])
    if n <= _DENSE_PI_LIMIT:
        ev, vec = np.linalg.eig(P.T)
        idx = int(np.argmin(np.abs(ev - 1.0)))
        pi = np.real(vec[:, idx])
        pi = pi / pi.sum()
    else:
        pi = np.full(n, 1.0 / n)
        for _ in range(200000):
            nxt = pi @ P
            if np.max(np.abs(nxt - pi)) <= 1e-14:
                pi = nxt
                break
            pi = nxt
        else:
            raise NumericalError("power iteration for pi did not converge")
    if pi.min() < -1e-12:
        raise NumericalError(f"stationary vector has negative entry {pi.min():.2e}")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _lattice_is_full(vectors, d):
    """True when the integer span of `vectors` is all of Z^d."""
    rows = [[int(x) for x in v] for v in vectors if any(v)]
    if not rows:
        return d == 0
    # integer row echelon; the lattice is full iff the pivot product is +-1
    det = 1
    for col in range(d):
        pivot_row = None
        for r in range(len(rows)):
            if rows[r][col] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            return False
        rows[0], rows[pivot_row] = rows[pivot_row], rows[0]
        # gcd elimination below the pivot
        changed = True
        while changed:
            changed = False
            for r in range(1, len(rows)):
                if rows[r][col] == 0:
                    continue
                if abs(rows[r][col]) < abs(rows[0][col]):
                    rows[0], rows[r] = rows[r], rows[0]
                q = rows[r][col] // rows[0][col]
                rows[r] = [a - q * b for a, b in zip(rows[r], rows[0])]
                if rows[r][col] != 0:
                    changed = True
        det *= rows[0][col]
        rows = [row for row in rows[1:] if any(row)]
    return abs(det) == 1


# ---------------------------------------------------------------------------
# operations


def center_check(model):
    """Mean displacement of the lattice cocycle and whether it vanishes.

    Expansion operations require a centered cocycle; they call this and
    refuse on failure rather than silently expanding around a drifting
    maximum.
    """
    drift = model.lattice_cocycle.mean_drift
    passed = bool(drift.size == 0 or np.max(np.abs(drift)) <= DRIFT_TOL)
    return CenterCheck(drift, passed)


def fiber_average(f):
    """Average over the circle fiber: keep exactly the mode k = 0 slice.

    Idempotent; for observables already living at k = 0 this is the
    identity.
    """
    return f.mode_slice(0)


def ulam_compile(branches, cells, psi_by_cell, phi_by_cell=None, d=None, name="ulam"):
    """Compile a piecewise-affine expanding interval map into a Markov model.

    Parameters
    ----------
    branches : sequence of (x0, x1, y0, y1)
        Affine branches of the map: ``[x0, x1)`` is mapped monotonically
        onto ``[y0, y1)`` (``y0 > y1`` denotes a decreasing branch).
        Branch endpoints and images must align with the uniform
        partition of ``[0, 1)`` into `cells` cells, and each branch must
        stretch every cell onto a whole number of cells (integer slope);
        this makes the compiled transition matrix an exact representation
        of the transfer operator on cell indicators.  For the doubling
        map use ``cells = 2**level``.
    cells : int
        Number of partition cells (= states of the compiled model).
    psi_by_cell : sequence of int vectors
        Displacement attached to each cell; an edge ``i -> j`` carries
        the displacement of its destination cell ``j``.
    phi_by_cell : sequence of float, optional
        Circle angle per destination cell, default all zero.

    Raises
    ------
    ConfigError
        Branch endpoints or images not aligned with the cell grid, or a
        branch stretching cells onto fractional numbers of cells.
    """
    cells = int(cells)
    if cells < 1:
        raise ConfigError("need at least one cell")
    width = 1.0 / cells
    psi_by_cell = [tuple(int(x) for x in p) if np.iterable(p) else (int(p),) for p in psi_by_cell]
    if len(psi_by_cell) != cells:
        raise ConfigError("psi assignment must list one vector per cell")
    if d is None:
        d = len(psi_by_cell[0])
    if any(len(p) != d for p in psi_by_cell):
        raise ConfigError("inconsistent psi dimensions across cells")
    if phi_by_cell is None:
        phi_by_cell = [0.0] * cells
    if len(phi_by_cell) != cells:
        raise ConfigError("phi assignment must list one angle per cell")

    def _grid_index(x, what):
        g = x * cells
        j = round(g)
        if abs(g - j) > 1e-9:
            raise ConfigError(
                f"branch {what} {x} not aligned with the level grid "
                f"(cells of width 1/{cells})"
            )
        return int(j)

    P = np.zeros((cells, cells))
    for x0, x1, y0, y1 in branches:
        i0 = _grid_index(x0, "endpoint")
        i1 = _grid_index(x1, "endpoint")
        j0 = _grid_index(min(y0, y1), "image endpoint")
        j1 = _grid_index(max(y0, y1), "image endpoint")
        if i1 <= i0 or j1 <= j0:
            raise ConfigError("degenerate branch")
        slope_cells = (j1 - j0) / (i1 - i0)
        if abs(slope_cells - round(slope_cells)) > 1e-12 or round(slope_cells) < 1:
            raise ConfigError(
                "branch not surjective onto a union of cells at this level: "
                f"each cell must map onto a whole number of cells, got slope {slope_cells}"
            )
        stretch = int(round(slope_cells))
        increasing = y1 >= y0
        for i in range(i0, i1):
            # cell i maps onto `stretch` consecutive cells inside the image
            offset = (i - i0) if increasing else (i1 - 1 - i)
            jlo = j0 + offset * stretch
            for j in range(jlo, jlo + stretch):
                P[i, j] += 1.0 / stretch
    rows = P.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > 1e-9):
        raise ConfigError("branches do not partition [0, 1): row sums " + str(rows))

    edges = []
    for i in range(cells):
        for j in range(cells):
            if P[i, j] > 0:
                edges.append(
                    {
                        "from": i,
                        "to": j,
                        "p": P[i, j],
                        "psi": list(psi_by_cell[j]),
                        "phi": float(phi_by_cell[j]),
                    }
                )
    return build_model({"name": name, "d": d, "states": cells, "edges": edges})


# ---------------------------------------------------------------------------
# observable helpers and file formats


def delta_observable(model, state=0, n=None, k=0, value=1.0):
    """Dirac observable at one (state, lattice point, fiber mode)."""
    if n is None:
        n = (0,) * model.d
    return CoverObservable(model.d, {(state, tuple(n), k): value})


def random_observable(rng, model, radius=2, band=0, real=False):
    """Random finitely supported observable, for randomized test suites."""
    support = {}
    count = rng.integers(1, 5)
    for _ in range(count):
        state = int(rng.integers(model.state_count))
        n = tuple(int(x) for x in rng.integers(-radius, radius + 1, size=model.d))
        k = int(rng.integers(-band, band + 1)) if band else 0
        val = complex(rng.normal(), 0.0 if real else rng.normal())
        support[(state, n, k)] = support.get((state, n, k), 0.0) + val
    return CoverObservable(model.d, support)


def random_centered_model(rng, states=5, d=1, max_psi=2, name=None):
    """Random dense aperiodic model with an exactly centered cocycle.

    Centering is exact by construction: every displacement edge is split
    into a ``(psi, -psi)`` pair at half probability, which cancels the
    drift in exact arithmetic regardless of ``pi``.
    """
    A = rng.uniform(0.2, 1.0, size=(states, states))
    P = A / A.sum(axis=1, keepdims=True)
    edges = []
    for i in range(states):
        for j in range(states):
            psi = tuple(int(x) for x in rng.integers(-max_psi, max_psi + 1, size=d))
            if any(psi):
                edges.append({"from": i, "to": j, "p": P[i, j] / 2, "psi": list(psi)})
                edges.append(
                    {"from": i, "to": j, "p": P[i, j] / 2, "psi": [-x for x in psi]}
                )
            else:
                edges.append({"from": i, "to": j, "p": P[i, j], "psi": list(psi)})
    model = build_model(
        {"name": name or f"random-{states}s-{d}d", "d": d, "states": states, "edges": edges}
    )
    if not model.lattice_cocycle.generates_lattice():
        # rare with random psi; retry with fresh draws
        return random_centered_model(rng, states, d, max_psi, name)
    return model


def load_observable(path, d):
    """Read an observable file: JSON list of {state, n, k, re, im}."""
    try:
        with open(path) as fh:
            entries = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read observable file {path}: {exc}") from exc
    support = {}
    for raw in entries:
        try:
            key = (
                int(raw["state"]),
                tuple(int(x) for x in raw["n"]),
                int(raw.get("k", 0)),
            )
            val = complex(float(raw.get("re", 0.0)), float(raw.get("im", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad observable entry {raw}: {exc}") from exc
        support[key] = support.get(key, 0.0) + val
    return CoverObservable(d, support)


def save_observable(f, path):
    entries = [
        {"state": s, "n": list(n), "k": k, "re": v.real, "im": v.imag}
        for (s, n, k), v in sorted(f.support.items())
    ]
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=1)
