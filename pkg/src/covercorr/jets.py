r"""Truncated multivariate Taylor series (jets) at the origin.

A :class:`TaylorJet` stores the coefficients of a polynomial truncation

.. math:: f(\theta) \approx \sum_{|\alpha| \le D} c_\alpha \, \theta^\alpha

as a map from multi-indices to complex numbers.  Jets are the common
currency between the eigenvalue analysis (jets of :math:`\log\mu(\theta)`
and of amplitude pairings) and the asymptotic coefficient operators,
which consume them through truncated products, derivatives and
evaluation at the origin.

All operations preserve the truncation degree: a product of two jets is
truncated to the smaller of the two degrees unless an explicit degree is
requested.  Coefficients absent from the map are zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product as _iproduct

import numpy as np

__all__ = [
    "TaylorJet",
    "multi_indices",
    "phase_jet",
]


def multi_indices(dim, max_total):
    """All multi-indices alpha with ``|alpha| <= max_total``, lexicographic."""
    out = []
    for alpha in _iproduct(range(max_total + 1), repeat=dim):
        if sum(alpha) <= max_total:
            out.append(alpha)
    return out


@dataclass(frozen=True)
class TaylorJet:
    """Truncated power series at the origin.

    Attributes
    ----------
    dim : int
        Number of variables.
    degree : int
        Truncation degree ``D``; coefficients with ``|alpha| > D`` are
        identically zero and never stored.
    coeffs : dict
        Map ``alpha`` (tuple of ints) -> complex coefficient.
    error_estimate : dict or None
        Optional per-coefficient error bars attached by fitting
        routines.  Ignored by all algebraic operations.
    """

    dim: int
    degree: int
    coeffs: dict
    error_estimate: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        clean = {}
        for alpha, c in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim:
                raise ValueError(f"multi-index {alpha} has wrong length")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative multi-index {alpha}")
            if sum(alpha) > self.degree:
                continue
            c = complex(c)
            if c != 0:
                clean[alpha] = c
        object.__setattr__(self, "coeffs", clean)

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero(dim, degree):
        return TaylorJet(dim, degree, {})

    @staticmethod
    def constant(value, dim, degree):
        return TaylorJet(dim, degree, {(0,) * dim: complex(value)})

    # -- access ----------------------------------------------------------

    def __getitem__(self, alpha):
        return self.coeffs.get(tuple(alpha), 0.0 + 0.0j)

    def value(self):
        """Value at the origin (the constant coefficient)."""
        return self[(0,) * self.dim]

    # -- ring operations --------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        deg = min(self.degree, other.degree)
        out = dict(self._clip(deg))
        for a, c in other._clip(deg).items():
            out[a] = out.get(a, 0.0) + c
        return TaylorJet(self.dim, deg, out)

    def __sub__(self, other):
        return self + (self._coerce(other) * (-1.0))

    def __mul__(self, other):
        if isinstance(other, TaylorJet):
            return self.mul(other)
        out = {a: c * complex(other) for a, c in self.coeffs.items()}
        return TaylorJet(self.dim, self.degree, out)

    __rmul__ = __mul__

    def mul(self, other, degree=None):
        """Truncated product with `other`, to `degree` if given."""
        if not isinstance(other, TaylorJet):
            raise TypeError("mul expects a TaylorJet")
        if other.dim != self.dim:
            raise ValueError("jet dimensions differ")
        deg = min(self.degree, other.degree) if degree is None else int(degree)
        out = {}
        for a, ca in self.coeffs.items():
            sa = sum(a)
            for b, cb in other.coeffs.items():
                if sa + sum(b) > deg:
                    continue
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0.0) + ca * cb
        return TaylorJet(self.dim, deg, out)

    def pow(self, n, degree=None):
        """Truncated integer power (n >= 0)."""
        if n < 0:
            raise ValueError("negative power")
        deg = self.degree if degree is None else int(degree)
        acc = TaylorJet.constant(1.0, self.dim, deg)
        for _ in range(n):
            acc = acc.mul(self, degree=deg)
        return acc

    def truncate(self, degree):
        return TaylorJet(self.dim, int(degree), self._clip(int(degree)))

    def diff(self, axis):
        """Partial derivative along `axis`; degree drops by one."""
        out = {}
        for a, c in self.coeffs.items():
            if a[axis] == 0:
                continue
            b = list(a)
            b[axis] -= 1
            out[tuple(b)] = c * a[axis]
        return TaylorJet(self.dim, max(self.degree - 1, 0), out)

    def log(self):
        r"""Jet of :math:`\log f` for a jet with constant term near 1.

        Uses the principal branch: ``log(c0) + log(1 + w)`` where
        ``w = f/c0 - 1`` has no constant term.
        """
        c0 = self.value()
        if c0 == 0 or c0.real <= 0:
            raise ValueError("log requires a constant term with positive real part")
        w = (self * (1.0 / c0)) - TaylorJet.constant(1.0, self.dim, self.degree)
        out = TaylorJet.constant(np.log(complex(c0)), self.dim, self.degree)
        term = TaylorJet.constant(1.0, self.dim, self.degree)
        for k in range(1, self.degree + 1):
            term = term.mul(w)
            if not term.coeffs:
                break
            out = out + term * (((-1.0) ** (k + 1)) / k)
        return out

    # -- structure --------------------------------------------------------

    def min_order(self):
        """Lowest total order with a nonzero coefficient (degree+1 if zero)."""
        if not self.coeffs:
            return self.degree + 1
        return min(sum(a) for a in self.coeffs)

    def hessian(self):
        """The symmetric matrix of second derivatives at the origin."""
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for a in range(self.dim):
            for b in range(a, self.dim):
                alpha = [0] * self.dim
                alpha[a] += 1
                alpha[b] += 1
                c = self[tuple(alpha)]
                val = c * (2.0 if a == b else 1.0)
                H[a, b] = val
                H[b, a] = val
        return H

    def _clip(self, degree):
        return {a: c for a, c in self.coeffs.items() if sum(a) <= degree}

    def _coerce(self, other):
        if isinstance(other, TaylorJet):
            if other.dim != self.dim:
                raise ValueError("jet dimensions differ")
            return other
        return TaylorJet.constant(other, self.dim, self.degree)

    # -- serialization ------------------------------------------------------

    def to_json_dict(self, **metadata):
        coeffs = {
            ",".join(str(a) for a in alpha): [c.real, c.imag]
            for alpha, c in sorted(self.coeffs.items())
        }
        doc = {"dim": self.dim, "order": self.degree, "coeffs": coeffs}
        if self.error_estimate is not None:
            doc["error_estimate"] = {
                ",".join(str(a) for a in alpha): err
                for alpha, err in sorted(self.error_estimate.items())
            }
        doc.update(metadata)
        return doc

    def save(self, path, **metadata):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(**metadata), fh, indent=1, sort_keys=True)

    @staticmethod
    def from_json_dict(doc):
        coeffs = {
            tuple(int(x) for x in key.split(",")): complex(re, im)
            for key, (re, im) in doc["coeffs"].items()
        }
        return TaylorJet(int(doc["dim"]), int(doc["order"]), coeffs)


def phase_jet(m, dim, degree):
    r"""Jet of the plane wave :math:`e^{i m \cdot \theta}`.

    Coefficients are :math:`\prod_a (i m_a)^{\alpha_a} / \alpha_a!`,
    exact for any integer shift vector `m`.
    """
    m = tuple(m)
    if len(m) != dim:
        raise ValueError("shift vector has wrong length")
    out = {}
    for alpha in multi_indices(dim, degree):
        c = 1.0 + 0.0j
        for ma, aa in zip(m, alpha):
            c *= (1j * ma) ** aa / math.factorial(aa)
        if c != 0:
            out[alpha] = c
    return TaylorJet(dim, degree, out)
