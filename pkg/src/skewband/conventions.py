"""Centralized sign/normalization convention table.

Every factor of 2, 1/2 and every orientation sign that differs between the
orthogonal (beta=1) and symplectic (beta=4) lanes lives here, so each
formula can name the variant it consumes.  The calibrated entries were
fixed once against the 2N=2 eigenvalue-density oracle and the trace
normalization of the projected kernel (integral of the level density
equals the eigenvalue count), and are frozen; the test suite re-derives
them.

Summary of the scheme (w(x) = exp(-V(x)), w2 = exp(-2V(x))):

* ``mu_k = int x^k w2 dx``  -- moment table of the squared weight.
* beta=4 skew table: ``M_jk = (k-j) mu_{j+k-1}`` (classical convention).
  The true integral pairing int f w (g w)' dx equals M/2, hence
  ``pairing_scale[4] = 1/2``.
* beta=1 skew table: ``M_jk = -int int x^j y^k eps(x-y) w(x) w(y)``; the
  sign makes every skew norm positive.  ``pairing_scale[1] = 1``.
* Wave functions are pair-normalized: ``phi_n = pi_n w / sqrt(g ga)``
  with ``ga = wave_norm_scale[beta]`` chosen so the integral pairing of
  normalized vectors is exactly unit.  This is what makes the projected
  kernel trace out to the eigenvalue count.
* ``kernel_sign[beta]``: overall sign applied to the projected kernel
  sums so the level density is nonnegative (beta=1 needs the flip, a
  consequence of the eps-convolution orientation).
* ``cd_pencil_scale[beta]``: the Christoffel-Darboux pencil is
  ``scale * (R - x P)``; ladders and folding always use the unscaled
  pencil, only the CD identity consumes the 1/2 for beta=1.
* ``cd_sign[beta]`` and which argument (x or y) the pencil takes in the
  CD identity; see kernels.py.
* ``jpdf_exponent[beta]``: per-eigenvalue weight in the eigenvalue jpdf
  is ``exp(-2 V(x) * kappa)``; calibrated kappa(1) = 1/2, kappa(4) = 1.
* ``partition_prefactor(beta, N)``: N! * prod(g) equals that multiple of
  the plain ordered-coordinate integral of the jpdf.
"""

from __future__ import annotations

from fractions import Fraction

BETAS = (1, 4)

#: scale applied to the stored skew-moment table to get the true pairing
PAIRING_SCALE = {4: Fraction(1, 2), 1: Fraction(1, 1)}

#: phi_n = pi_n e^{-V} / sqrt(g_n * WAVE_NORM_SCALE[beta])
WAVE_NORM_SCALE = {4: Fraction(1, 2), 1: Fraction(1, 1)}

#: orientation of the unit pairing of normalized vectors:
#: +1 means (Phi_n, hat Psi_m) = +delta, -1 means the transposed pairing
#: (Psi_n, hat Phi_m) is the +delta one.
PAIR_ORIENTATION = {4: +1, 1: -1}

#: sign applied to hat-Psi/ hat-Phi projected sums so the density is >= 0
KERNEL_SIGN = {4: +1.0, 1: -1.0}

#: Christoffel-Darboux pencil = CD_PENCIL_SCALE * (R - xP)
CD_PENCIL_SCALE = {4: 1.0, 1: 0.5}

#: (x-y) S(x,y) = CD_SIGN * hat(x) [pencil(arg), proj_N] vec(y);
#: arg = "x" uses the first argument in the pencil, "y" the second.
#: Calibrated numerically; see tests/test_kernels.py.
CD_SIGN = {4: -1.0, 1: -1.0}
CD_PENCIL_ARG = {4: "x", 1: "y"}

#: eigenvalue jpdf ~ prod |x_i-x_j|^beta * prod exp(-2 V(x_i) * kappa)
JPDF_EXPONENT = {4: 1.0, 1: 0.5}

#: eps(0) convention applied in all step-function integrals
EPSILON_AT_ZERO = 0.0

#: gauge of the odd polynomials: coefficient of x^{2n} in pi_{2n+1} is 0,
#: and the matching lower-left entry of diagonal deformation cells is 0.
GAUGE = "zero-subleading-odd"


def partition_prefactor(beta: int, n_pairs: int) -> Fraction:
    """N! prod g_j = prefactor * (plain eigenvalue-coordinate integral).

    beta=4: the integral over N eigenvalues of prod (dl)^4 * prod w2 is
    exactly N! prod g_j under the classical table, so the prefactor is 1.
    beta=1: the integral over 2N unordered eigenvalues equals
    (2N)!/N! * (N! prod g_j).
    """
    if beta == 4:
        return Fraction(1, 1)
    f = Fraction(1, 1)
    for k in range(n_pairs + 1, 2 * n_pairs + 1):
        f /= k
    return f


def convention_tag(beta: int) -> str:
    """Short machine-readable tag recorded with every family export."""
    return (
        f"beta{beta}:classical-table,pair-normalized-waves"
        f",pairing-scale={PAIRING_SCALE[beta]},kernel-sign={KERNEL_SIGN[beta]:+.0f}"
    )
