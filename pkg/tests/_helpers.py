"""Small constructors shared by the test modules."""

import numpy as np

from vvbmo.disc_harmonics import TrigPolynomial


def monomial(space, a, k, N=None):
    """``a * w^k`` (``a * conj(w)^|k|`` for negative ``k``) as a TrigPolynomial."""
    N = max(abs(k), 1) if N is None else N
    c = np.zeros((2 * N + 1, space.d), dtype=complex)
    c[N + k] = a
    return TrigPolynomial(c, space)


def from_dict(space, terms, N=None):
    """Polynomial with ``coefficient(k) = terms[k]``."""
    N = max(abs(k) for k in terms) if N is None else N
    c = np.zeros((2 * N + 1, space.d), dtype=complex)
    for k, a in terms.items():
        c[N + k] = a
    return TrigPolynomial(c, space)
