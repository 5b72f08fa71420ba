"""Multiplication/differentiation band operators of a skew-orthogonal family.

Q, P are assembled by exact polynomial algebra on the monic coefficient
table (mp precision, then cast): row n of Q expands x*pi_n over the pi
basis, row n of P expands pi_n' - V' pi_n.  R is the operator of x d/dx,
equal to PQ (symplectic lane) and QP (orthogonal lane).  Rows near the
truncation edge are polluted and excluded from every check via the
``*_rows`` attributes.
"""

from __future__ import annotations

import numpy as np

from . import conventions as conv
from .errors import PrecisionLoss, Singular
from .family import SopFamily
from .precision import expand_in_monic_basis, poly_derivative, poly_mul, working_dps
from .qlinalg import QMatrix, qcell_dual, qcell_inverse

__all__ = ["OperatorSet", "BandDiagonals", "build_operators"]

import mpmath as mp


def _expansion_matrix(family: SopFamily, rows):
    """Float cast of the normalized expansion rows (list of (n, coeffs))."""
    n = family.n_scalar
    out = np.zeros((n, n))
    norms = family._norms
    for j, expans in rows:
        for m, b in enumerate(expans):
            if m < n and b != 0:
                out[j, m] = float(b * norms[m] / norms[j])
    return out


class BandDiagonals:
    """zeta_k(n), eta_k(n) cells for k = -d..d, and the pencil cells.

    zeta_k(n) is the P cell at (n, n-k); eta_k(n) the R cell; the pencil
    cell is eta_k(n) - x zeta_k(n) (no beta-dependent factor here; the
    Christoffel-Darboux scale lives in the kernel module).
    """

    def __init__(self, opset: "OperatorSet"):
        self.d = opset.d
        self.n_q = opset.n_q
        self._zeta = {}
        self._eta = {}
        for n in range(self.n_q):
            for k in range(-self.d, self.d + 1):
                m = n - k
                if 0 <= m < self.n_q:
                    self._zeta[(k, n)] = opset.p.cell(n, m).copy()
                    self._eta[(k, n)] = opset.r.cell(n, m).copy()

    def zeta(self, k: int, n: int):
        return self._zeta.get((k, n), np.zeros((2, 2)))

    def eta(self, k: int, n: int):
        return self._eta.get((k, n), np.zeros((2, 2)))

    def alpha(self, k: int, n: int, x):
        dtype = complex if isinstance(x, complex) else float
        return self.eta(k, n).astype(dtype) - x * self.zeta(k, n).astype(dtype)

    def outer_structure_residual(self, rows) -> float:
        """Outermost band shape: zeta_{+-d} has only the lower-left entry,
        eta_{+-d} is lower triangular as a 2x2 cell (even-degree potentials)."""
        worst = 0.0
        for n in rows:
            for k in (-self.d, self.d):
                z = self.zeta(k, n)
                worst = max(worst, abs(z[0, 0]), abs(z[0, 1]), abs(z[1, 1]))
                worst = max(worst, abs(self.eta(k, n)[0, 1]))
        return worst

    def alpha_invertibility(self, rows, x_max: float = 6.0, samples: int = 41) -> float:
        """min |det alpha_{+-d}(n, x)| over the scan; 0 means failure."""
        best = np.inf
        for x in np.linspace(-x_max, x_max, samples):
            for n in rows:
                for k in (-self.d, self.d):
                    a = self.alpha(k, n, float(x))
                    best = min(best, abs(np.linalg.det(a)))
        return float(best)

    def alpha_inv(self, k: int, n: int, x):
        try:
            return qcell_inverse(self.alpha(k, n, x), tol=1e-13)
        except Singular as exc:
            raise Singular(f"alpha_{k}({n}) singular at x={x}: {exc}") from exc


class OperatorSet:
    """Q (lower Hessenberg), P, R (band half-width d) plus diagnostics."""

    def __init__(self, family: SopFamily):
        self.family = family
        self.beta = family.beta
        self.d = family.d
        self.n_q = family.n_pairs
        with working_dps(family.dps):
            self.q = QMatrix(_expansion_matrix(family, self._q_rows()))
            self.p = QMatrix(_expansion_matrix(family, self._p_rows()))
        if self.beta == 4:
            self.r = QMatrix(self.p.m @ self.q.m)
        else:
            self.r = QMatrix(self.q.m @ self.p.m)
        # quaternion rows safe for each operator (edge rows are truncated)
        self.q_rows = range(self.n_q - 1)
        self.p_rows = range(self.n_q - self.d)
        self.r_rows = range(self.n_q - self.d - 1)
        self.bands = BandDiagonals(self)
        leak = max(self.p.band_leak(self.d, self.p_rows),
                   self.r.band_leak(self.d, self.r_rows))
        if leak > 1e-9:
            raise PrecisionLoss(f"band tail {leak:g} exceeds 1e-9")

    # -- assembly ------------------------------------------------------------
    def _q_rows(self):
        fam = self.family
        for j in range(fam.n_scalar - 1):
            shifted = [mp.mpf(0)] + list(fam.coeffs[j])
            yield j, expand_in_monic_basis(shifted, fam.coeffs)

    def _p_rows(self):
        fam = self.family
        vp = fam.potential.derivative_coeffs()
        for j in range(fam.n_scalar - fam.potential.degree):
            work = poly_mul([-c for c in vp], fam.coeffs[j])
            dp = poly_derivative(fam.coeffs[j])
            for k, c in enumerate(dp):
                work[k] += c
            yield j, expand_in_monic_basis(work, fam.coeffs)

    # -- interior guards -------------------------------------------------------
    def interior(self, guard: int):
        return range(guard, self.n_q - guard)

    def default_guard(self, products: int = 1) -> int:
        """2d per single product, 4d per double product (band pollution depth)."""
        return 2 * self.d * products

    # -- pencil -----------------------------------------------------------------
    def pencil(self, x) -> QMatrix:
        """R - xP; annihilates the primary wave kind."""
        if isinstance(x, complex):
            return QMatrix(self.r.m.astype(complex) - x * self.p.m.astype(complex))
        return QMatrix(self.r.m - x * self.p.m)

    def pencil_shifted(self, x) -> QMatrix:
        """R - xP - 1; annihilates the tilde wave kind."""
        pen = self.pencil(x)
        return QMatrix(pen.m - np.eye(pen.m.shape[0], dtype=pen.m.dtype))

    def cd_pencil(self, x) -> QMatrix:
        """Christoffel-Darboux pencil: the beta-dependent scale lives here."""
        return self.pencil(x).scaled(conv.CD_PENCIL_SCALE[self.beta])

    # -- wave kinds ---------------------------------------------------------------
    @property
    def primary_kind(self) -> str:
        """Wave kind annihilated by the pencil (phi for beta=4, psi for beta=1)."""
        return "phi" if self.beta == 4 else "psi"

    @property
    def tilde_kind(self) -> str:
        return "psi" if self.beta == 4 else "phi"

    def wave_vector(self, x, kind: str) -> np.ndarray:
        fam = self.family
        f = {"phi": fam.phi_mp, "psi": fam.psi_mp, "phi_prime": fam.phi_prime_mp}[kind]
        from .precision import to_float
        vals = [to_float(f(n, x)) for n in range(fam.n_scalar)]
        return np.array(vals)

    # -- residual checks ------------------------------------------------------------
    def vprime_of_q(self) -> QMatrix:
        u = [float(c) for c in self.family.potential.coeffs]
        acc = np.zeros_like(self.q.m)
        power = np.eye(self.q.m.shape[0])
        for K, uk in enumerate(u, start=1):
            acc += uk * power
            power = power @ self.q.m
        return QMatrix(acc)

    def string_residual(self) -> dict:
        """[Q,P] = 1 and [R,P] = P on the interior."""
        eye = QMatrix.identity(self.n_q)
        g = self.default_guard(1)
        qp = self.q.commutator(self.p).interior_max(eye, g)
        rp = self.r.commutator(self.p).interior_max(self.p, self.default_guard(2))
        return {"qp_minus_one": qp, "rp_minus_p": rp}

    def duality_residual(self) -> dict:
        g = self.default_guard(1)
        return {
            "p_anti_self_dual": self.p.anti_self_dual_residual(self.interior(g)),
            "r_anti_self_dual": self.r.anti_self_dual_residual(self.interior(max(g, 2 * self.d + 1))),
        }

    def qqd_residual(self) -> float:
        """(Q - Q^D) P = P (Q - Q^D) = 1 on the interior."""
        eye = QMatrix.identity(self.n_q)
        diff = self.q - self.q.dual()
        g = self.default_guard(1) + 1
        left = QMatrix(diff.m @ self.p.m).interior_max(eye, g)
        right = QMatrix(self.p.m @ diff.m).interior_max(eye, g)
        return max(left, right)

    def lower_triangularity_residual(self) -> dict:
        """P + V'(Q) strictly lower; R + Q V'(Q) lower-with-diagonal."""
        vq = self.vprime_of_q()
        s1 = QMatrix(self.p.m + vq.m)
        s2 = QMatrix(self.r.m + self.q.m @ vq.m)
        g = 2 * self.d * self.family.potential.degree + 1
        rows = self.interior(g)
        leak1 = 0.0
        for i in rows:
            for j in rows:
                if j >= i:
                    leak1 = max(leak1, float(np.abs(s1.cell(i, j)).max()))
        leak2 = 0.0
        for i in rows:
            for j in rows:
                if j > i:
                    leak2 = max(leak2, float(np.abs(s2.cell(i, j)).max()))
        return {"p_plus_vprime_upper": leak1, "r_plus_qvprime_upper": leak2}

    def quadratic_band_residual(self) -> float:
        """Componentwise [R,P] = P through the band cells, per (l, n)."""
        d = self.d
        worst = 0.0
        for n in self.interior(self.default_guard(2)):
            for l in range(-2 * d, 2 * d + 1):
                acc = -self.bands.zeta(l, n).astype(float).copy()
                for j in range(max(-d, l - d), min(d, l + d) + 1):
                    m = n - j
                    if not 0 <= m < self.n_q:
                        continue
                    acc += self.bands.eta(j, n) @ self.bands.zeta(l - j, m)
                    acc -= self.bands.zeta(j, n) @ self.bands.eta(l - j, m)
                worst = max(worst, float(np.abs(acc).max()))
        return worst

    def annihilation_residual(self, xs) -> dict:
        """pencil(x) kills the primary kind; pencil(x)-1 kills the tilde kind."""
        worst_p, worst_t = 0.0, 0.0
        rows = [2 * n + s for n in self.r_rows for s in (0, 1)]
        for x in xs:
            vp = self.wave_vector(x, self.primary_kind)
            vt = self.wave_vector(x, self.tilde_kind)
            rp = (self.pencil(float(x)) @ vp)[rows]
            rt = (self.pencil_shifted(float(x)) @ vt)[rows]
            worst_p = max(worst_p, float(np.abs(rp).max()))
            worst_t = max(worst_t, float(np.abs(rt).max()))
        return {"pencil_primary": worst_p, "pencil_shifted_tilde": worst_t}

    def diagnostics(self, xs=(-1.3, 0.4, 2.1)) -> dict:
        out = {}
        out.update(self.string_residual())
        out.update(self.duality_residual())
        out["qqd"] = self.qqd_residual()
        out.update(self.lower_triangularity_residual())
        out["band_quadratic"] = self.quadratic_band_residual()
        out.update(self.annihilation_residual(xs))
        out["p_band_leak"] = self.p.band_leak(self.d, self.p_rows)
        out["r_band_leak"] = self.r.band_leak(self.d, self.r_rows)
        out["outer_band_structure"] = self.bands.outer_structure_residual(self.r_rows)
        return out


def build_operators(family: SopFamily) -> OperatorSet:
    return OperatorSet(family)
