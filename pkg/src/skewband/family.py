"""Skew-orthogonal polynomial families.

The family is built by sequential skew elimination against the skew
moment table (O(n^3)), which is equivalent to Pfaffian minor ratios but
constructive.  All heavy arithmetic is mpmath; float64 views are exposed
for the operator layer.
"""

from __future__ import annotations

import json
import math

import mpmath as mp
import numpy as np

from . import conventions as conv
from .errors import Degenerate, DomainError, PrecisionLoss
from .moments import EpsilonTable, MomentTable, Potential, extend_moments, seed_moments
from .precision import (DEFAULT_DPS, expand_in_monic_basis, poly_derivative,
                        poly_eval, to_float, working_dps)

__all__ = [
    "SkewMomentMatrix",
    "SopFamily",
    "WaveEval",
    "skew_moment_matrix",
    "build_family",
    "partition_function",
]


class SkewMomentMatrix:
    """Antisymmetric monomial pairing table.

    beta=4: M_jk = (k - j) mu_{j+k-1}   (classical convention; the true
            integral pairing int x^j w (x^k w)' dx is M/2).
    beta=1: M_jk = -int x^j w(x) h_k(x) dx with h_k the eps-cumulative
            integral of y^k w(y); the sign makes every skew norm positive.
    """

    def __init__(self, beta: int, entries, convention: str):
        self.beta = beta
        self.entries = entries  # list of mp rows, n x n
        self.n = len(entries)
        self.convention = convention

    def __getitem__(self, jk):
        j, k = jk
        return self.entries[j][k]

    def pairing(self, j: int, k: int):
        """True integral pairing of monomials (table times the scale)."""
        scale = conv.PAIRING_SCALE[self.beta]
        return self.entries[j][k] * mp.mpf(scale.numerator) / scale.denominator

    def antisymmetry_residual(self) -> float:
        worst = mp.mpf(0)
        scale = max(abs(self.entries[0][1]), mp.mpf(1))
        for j in range(self.n):
            for k in range(j, self.n):
                worst = max(worst, abs(self.entries[j][k] + self.entries[k][j]))
        return float(worst / scale)


def skew_moment_matrix(potential: Potential, beta: int, n_scalar: int,
                       moments: MomentTable | None = None,
                       eps: EpsilonTable | None = None,
                       dps: int = DEFAULT_DPS) -> SkewMomentMatrix:
    if beta not in (1, 4):
        raise ValueError(f"beta must be 1 or 4, got {beta}")
    with working_dps(dps):
        if moments is None:
            moments = seed_moments(potential, potential.degree + 2, dps=dps)
        need = 2 * n_scalar + potential.degree
        if len(moments) <= need:
            moments = extend_moments(moments, need)
        if beta == 4:
            rows = [[(k - j) * moments[j + k - 1] if j + k >= 1 else mp.mpf(0)
                     for k in range(n_scalar)] for j in range(n_scalar)]
            m = SkewMomentMatrix(4, rows, conv.convention_tag(4))
        else:
            if eps is None:
                eps = EpsilonTable(potential, n_scalar + potential.degree, dps=dps)
            m = SkewMomentMatrix(1, _beta1_entries(potential, n_scalar, eps),
                                 conv.convention_tag(1))
        res = m.antisymmetry_residual()
        if res > 1e-10:
            raise PrecisionLoss(f"skew table antisymmetry residual {res:g}")
        return m


def _beta1_entries(potential: Potential, n: int, eps: EpsilonTable):
    """Quadrature of -int x^j w h_k dx on one shared node set, all (j,k)."""
    from .moments import _gl_nodes

    L = eps.cutoff
    order = 48
    n_seg = max(6, int(2 * L))
    nodes, weights = _gl_nodes(order, mp.mp.prec)
    width = 2 * L / n_seg
    half = width / 2
    xs = []
    for s in range(n_seg):
        mid = -L + s * width + half
        xs.extend(mid + half * xi for xi in nodes)
    eps.prime_cache(xs)
    acc = [[mp.mpf(0)] * n for _ in range(n)]
    wlist = [wi * half for _ in range(n_seg) for wi in weights]
    for x, wq in zip(xs, wlist):
        w = wq * potential.weight(x, scale=1)
        powers = [mp.mpf(1)]
        for _ in range(n - 1):
            powers.append(powers[-1] * x)
        hb = eps.h_block(x)
        for j in range(n):
            pw = powers[j] * w
            row = acc[j]
            for k in range(j + 1, n):
                row[k] += pw * hb[k]
    out = [[mp.mpf(0)] * n for _ in range(n)]
    for j in range(n):
        for k in range(j + 1, n):
            # antisymmetric completion; the sign fixes g_0 > 0
            v = -acc[j][k]
            out[j][k] = v
            out[k][j] = -v
    return out


class WaveEval:
    """phi_n, psi_n and phi_n' at one point (float or complex)."""

    __slots__ = ("n", "x", "phi", "psi", "phi_prime")

    def __init__(self, n, x, phi, psi, phi_prime):
        self.n, self.x = n, x
        self.phi, self.psi, self.phi_prime = phi, psi, phi_prime


class SopFamily:
    """Monic skew-orthogonal family with pair-shared normalizations."""

    def __init__(self, potential: Potential, beta: int, n_scalar: int, coeffs, g,
                 table: SkewMomentMatrix, moments: MomentTable,
                 eps: EpsilonTable | None, dps: int, residuals: dict):
        self.potential = potential
        self.beta = beta
        self.n_scalar = n_scalar
        self.coeffs = coeffs          # coeffs[n]: ascending mp list, monic
        self.g = g                    # g[m] for quaternion pair m
        self.table = table
        self.moments = moments
        self._eps = eps
        self.dps = dps
        self.residuals = residuals
        self.convention = table.convention
        self.gauge = conv.GAUGE
        ns = conv.WAVE_NORM_SCALE[beta]
        self._norms = [mp.sqrt(g[n // 2] * ns.numerator / ns.denominator)
                       for n in range(n_scalar)]

    # -- structure ----------------------------------------------------------
    @property
    def n_pairs(self) -> int:
        return self.n_scalar // 2

    @property
    def d(self) -> int:
        return self.potential.d

    def eps_table(self) -> EpsilonTable:
        if self._eps is None:
            with working_dps(self.dps):
                self._eps = EpsilonTable(self.potential,
                                         self.n_scalar + self.potential.degree,
                                         dps=self.dps)
        return self._eps

    def coeff_float(self) -> np.ndarray:
        out = np.zeros((self.n_scalar, self.n_scalar))
        for n, row in enumerate(self.coeffs):
            out[n, : n + 1] = [float(c) for c in row]
        return out

    # -- evaluation ----------------------------------------------------------
    def _to_mp(self, x):
        if isinstance(x, (mp.mpf, mp.mpc)):
            return x
        if isinstance(x, complex) or (hasattr(x, "imag") and np.iscomplexobj(x)):
            xc = complex(x)
            return mp.mpc(xc.real, xc.imag)
        return mp.mpf(float(x))

    def pi(self, n: int, x):
        return poly_eval(self.coeffs[n], self._to_mp(x))

    def phi_mp(self, n: int, x):
        xm = self._to_mp(x)
        return poly_eval(self.coeffs[n], xm) * mp.e ** (-self.potential.value(xm)) \
            / self._norms[n]

    def phi_prime_mp(self, n: int, x):
        xm = self._to_mp(x)
        p = poly_eval(self.coeffs[n], xm)
        dp = poly_eval(poly_derivative(self.coeffs[n]), xm)
        vp = self.potential.derivative_value(xm)
        return (dp - vp * p) * mp.e ** (-self.potential.value(xm)) / self._norms[n]

    def psi_mp(self, n: int, x):
        if self.beta == 4:
            return self.phi_prime_mp(n, x)
        xm = self._to_mp(x)
        if isinstance(xm, mp.mpc):
            raise DomainError("beta=1 psi is defined on the real axis only")
        eps = self.eps_table()
        eps.require_domain(xm)
        hb = eps.h_block(xm)
        acc = mp.fsum(c * hb[k] for k, c in enumerate(self.coeffs[n]))
        return acc / self._norms[n]

    def evaluate_wave(self, n: int, x) -> WaveEval:
        if n >= self.n_scalar:
            raise IndexError(f"n={n} beyond family truncation {self.n_scalar}")
        return WaveEval(n, x, to_float(self.phi_mp(n, x)), to_float(self.psi_mp(n, x)),
                        to_float(self.phi_prime_mp(n, x)))

    def wave_pair(self, i: int, x, kind: str = "phi") -> np.ndarray:
        """Quaternion entry: (kind_{2i}, kind_{2i+1}) as a length-2 vector."""
        f = {"phi": self.phi_mp, "psi": self.psi_mp, "phi_prime": self.phi_prime_mp}[kind]
        vals = [to_float(f(2 * i, x)), to_float(f(2 * i + 1, x))]
        return np.array(vals)

    # -- global checks --------------------------------------------------------
    def normalized_gram(self):
        """Pairing matrix of normalized vectors; target is the Z-block pattern."""
        n = self.n_scalar
        scale = conv.PAIRING_SCALE[self.beta]
        gram = [[mp.mpf(0)] * n for _ in range(n)]
        # pairing of pi_j with monomial x^k, then contract with coefficients
        for j in range(n):
            prow = [mp.fsum(cj * self.table[l, k] for l, cj in enumerate(self.coeffs[j]))
                    for k in range(n)]
            for k in range(n):
                gram[j][k] = mp.fsum(ck * prow[l] for l, ck in enumerate(self.coeffs[k])) \
                    * scale.numerator / scale.denominator / (self._norms[j] * self._norms[k])
        return gram

    def orthonormality_residual(self) -> float:
        gram = self.normalized_gram()
        n = self.n_scalar
        worst = mp.mpf(0)
        for j in range(n):
            for k in range(n):
                target = mp.mpf(0)
                if j % 2 == 0 and k == j + 1:
                    target = mp.mpf(1)
                elif j % 2 == 1 and k == j - 1:
                    target = mp.mpf(-1)
                worst = max(worst, abs(gram[j][k] - target))
        return float(worst)

    def parity_residual(self) -> float:
        """For symmetric potentials pi_n has parity (-1)^n."""
        worst = 0.0
        for n, row in enumerate(self.coeffs):
            for k, c in enumerate(row):
                if (n - k) % 2 == 1:
                    worst = max(worst, abs(float(c)))
        return worst

    # -- exports ---------------------------------------------------------------
    def export_csv(self, path):
        with open(path, "w") as fh:
            fh.write("n," + ",".join(f"c{k}" for k in range(self.n_scalar)) + ",g_pair\n")
            for n, row in enumerate(self.coeffs):
                cs = [mp.nstr(c, 17) for c in row] + ["0"] * (self.n_scalar - len(row))
                fh.write(f"{n},{','.join(cs)},{mp.nstr(self.g[n // 2], 17)}\n")

    def summary(self) -> dict:
        return {
            "beta": self.beta,
            "n_scalar": self.n_scalar,
            "degree": self.potential.degree,
            "convention": self.convention,
            "gauge": self.gauge,
            "precision_digits": self.dps,
            "residuals": self.residuals,
            "g": [float(v) for v in self.g],
        }

    def export_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def build_family(potential: Potential, beta: int, n_scalar: int,
                 dps: int = DEFAULT_DPS, g_tol: float = 1e-12,
                 moments: MomentTable | None = None,
                 eps: EpsilonTable | None = None) -> SopFamily:
    """Sequential skew elimination against the moment table.

    Even step 2m: all pairings with pi_0..pi_{2m-1} vanish; the block
    skew structure of the running Gram matrix makes the corrections an
    O(n) back substitution.  Odd step 2m+1: same conditions below index
    2m, the x^{2m} coefficient is gauged to zero, and the unconstrained
    pairing with pi_{2m} is the skew norm g_m.
    """
    if n_scalar % 2:
        raise ValueError("n_scalar must be even (quaternion pairs)")
    with working_dps(dps):
        if moments is None:
            moments = seed_moments(potential, potential.degree + 2, dps=dps)
        moments = extend_moments(moments, 2 * n_scalar + potential.degree)
        table = skew_moment_matrix(potential, beta, n_scalar, moments=moments,
                                   eps=eps, dps=dps)
        n = n_scalar
        coeffs: list[list] = []
        prows: list[list] = []  # prows[j][k] = <pi_j, x^k>_table
        g: list = []

        def add_prow(row):
            prows.append([mp.fsum(c * table[l, k] for l, c in enumerate(row))
                          for k in range(n)])

        for m in range(n):
            row = [mp.mpf(0)] * (m + 1)
            row[m] = mp.mpf(1)
            if m >= 1:
                # expansion over completed pairs; odd steps stop one pair short
                # and the gauge kills the remaining pi_{m-1} direction (b=0)
                limit = m if m % 2 == 0 else m - 1
                for i in range(0, limit, 2):
                    pair = i // 2
                    b_even = prows[i + 1][m] / g[pair]      # multiplies pi_i
                    b_odd = -prows[i][m] / g[pair]          # multiplies pi_{i+1}
                    for k, c in enumerate(coeffs[i]):
                        row[k] += b_even * c
                    for k, c in enumerate(coeffs[i + 1]):
                        row[k] += b_odd * c
                # odd step: gauge kills the pi_{m-1} direction, so b_{m-1}=0
            coeffs.append(row)
            add_prow(row)
            if m % 2 == 1:
                gm = mp.fsum(c * prows[m - 1][k] for k, c in enumerate(row))
                scale = max(abs(table[0, 1]), mp.mpf(1))
                if not gm > g_tol * scale:
                    raise Degenerate(
                        f"skew norm g_{m // 2} = {mp.nstr(gm, 8)} not positive at tolerance"
                    )
                g.append(gm)

        residuals = {"antisymmetry": table.antisymmetry_residual()}
        fam = SopFamily(potential, beta, n_scalar, coeffs, g, table, moments, eps,
                        dps, residuals)
        res = fam.orthonormality_residual()
        residuals["orthonormality"] = res
        if res > 1e-8:
            raise PrecisionLoss(f"orthonormality residual {res:g}; raise precision")
        return fam


def partition_function(family: SopFamily, N: int, log: bool = False):
    """N! times the product of the first N skew norms."""
    if N < 0 or N > family.n_pairs:
        raise ValueError(f"need 0 <= N <= {family.n_pairs}")
    if log:
        acc = mp.fsum(mp.log(family.g[j]) for j in range(N)) + sum(
            math.log(k) for k in range(1, N + 1))
        return float(acc)
    acc = mp.mpf(math.factorial(N))
    for j in range(N):
        acc *= family.g[j]
    return float(acc)


def coefficient_stability(potential: Potential, beta: int, n_scalar: int,
                          dps: int = DEFAULT_DPS) -> float:
    """Estimated digits lost by the elimination: rebuild at dps+16 and compare."""
    lo = build_family(potential, beta, n_scalar, dps=dps)
    hi = build_family(potential, beta, n_scalar, dps=dps + 16)
    worst = mp.mpf(0)
    for n in range(n_scalar):
        for k in range(n + 1):
            a, b = lo.coeffs[n][k], hi.coeffs[n][k]
            scale = max(abs(b), mp.mpf(1))
            worst = max(worst, abs(a - b) / scale)
    if worst == 0:
        return 0.0
    return max(0.0, dps + float(mp.log10(worst)))
