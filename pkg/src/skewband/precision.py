"""Working-precision helpers.

Heavy constructions (moments, skew elimination, band assembly) run in
mpmath arbitrary precision; everything downstream of the band entries is
plain float64/complex128 linear algebra.  The default of 30 significant
digits leaves ~14 digits of headroom over float64 for the digit loss of
skew Gram-Schmidt at desk-scale truncations.
"""

from __future__ import annotations

from contextlib import contextmanager

import mpmath as mp

DEFAULT_DPS = 30


@contextmanager
def working_dps(dps: int):
    """Temporarily set the mpmath working precision (decimal digits)."""
    with mp.workdps(dps):
        yield


def to_float(value):
    """Cast an mpmath scalar to float or complex."""
    if isinstance(value, mp.mpc) or (hasattr(value, "imag") and value.imag != 0):
        return complex(value)
    return float(value)


def mpf_list(values, dps: int = DEFAULT_DPS):
    with mp.workdps(dps):
        return [mp.mpf(v) for v in values]


def poly_eval(coeffs, x):
    """Horner evaluation of an ascending coefficient list at mp scalar x."""
    acc = mp.mpf(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def poly_derivative(coeffs):
    """Ascending-coefficient derivative."""
    return [k * c for k, c in enumerate(coeffs)][1:] if len(coeffs) > 1 else [mp.mpf(0)]


def poly_mul(a, b):
    out = [mp.mpf(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def expand_in_monic_basis(coeffs, basis_rows):
    """Expand a polynomial over a monic triangular basis.

    ``basis_rows[n]`` holds the ascending coefficients of the degree-n basis
    polynomial (unit leading coefficient).  Returns the expansion
    coefficients b with ``poly = sum_n b[n] * basis[n]``, by back
    substitution from the top degree.
    """
    work = list(coeffs)
    deg = len(work) - 1
    while deg >= 0 and work[deg] == 0:
        deg -= 1
    out = [mp.mpf(0)] * (deg + 1 if deg >= 0 else 1)
    for n in range(deg, -1, -1):
        b = work[n]
        out[n] = b
        if b != 0:
            row = basis_rows[n]
            for k in range(n + 1):
                work[k] -= b * row[k]
    return out
