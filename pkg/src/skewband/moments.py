"""Weight moments and step-function integrals of a polynomial potential.

Everything here runs in mpmath working precision: these tables seed the
skew products, and the skew elimination downstream amplifies any seed
error.  The quadrature is composite Gauss-Legendre with mp-accurate
nodes; refinement doubles the segment count until two successive levels
agree to the requested tolerance.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .errors import DomainError, InvalidPotential, NonConvergent, PrecisionLoss
from .precision import DEFAULT_DPS, poly_eval, working_dps

__all__ = [
    "Potential",
    "GridSpec",
    "MomentTable",
    "EpsilonTable",
    "seed_moments",
    "extend_moments",
    "epsilon_table",
]


class Potential:
    """Polynomial confining potential ``V(x) = sum_K (u_K / K) x^K``.

    ``coeffs`` lists u_1 .. u_2d; the degree must be even and the leading
    coefficient positive, otherwise the weight is not normalizable (and
    the outermost band cells of the operator calculus lose invertibility).
    """

    def __init__(self, coeffs, dps: int = DEFAULT_DPS):
        coeffs = list(coeffs)
        if not coeffs or len(coeffs) % 2 != 0:
            raise InvalidPotential(
                f"potential degree must be even and positive, got degree {len(coeffs)}"
            )
        with working_dps(dps):
            self.coeffs = [mp.mpf(str(c)) if not isinstance(c, mp.mpf) else c for c in coeffs]
        if not self.coeffs[-1] > 0:
            raise InvalidPotential(f"leading coefficient u_{len(coeffs)} must be > 0")
        self.dps = dps

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def d(self) -> int:
        return len(self.coeffs) // 2

    @property
    def is_symmetric(self) -> bool:
        return all(c == 0 for c in self.coeffs[0::2])

    def value(self, x):
        """V(x); x may be mpf/mpc."""
        acc = mp.mpf(0)
        for K in range(self.degree, 0, -1):
            acc = acc * x + self.coeffs[K - 1] / K
        return acc * x

    def derivative_coeffs(self):
        """Ascending coefficients of V'(x) = sum u_K x^{K-1}."""
        return list(self.coeffs)

    def derivative_value(self, x):
        return poly_eval(self.derivative_coeffs(), x)

    def weight(self, x, scale: int = 2):
        """exp(-scale * V(x))."""
        return mp.e ** (-scale * self.value(x))

    def perturbed(self, K: int, delta) -> "Potential":
        """Copy with u_K shifted by delta (deformation-parameter probes)."""
        coeffs = list(self.coeffs)
        coeffs[K - 1] = coeffs[K - 1] + mp.mpf(str(delta))
        return Potential(coeffs, dps=self.dps)

    def cutoff(self, k_max: int, tol, scale: int = 2):
        """Smallest L with ``scale*V(L) - k_max*ln L >= -ln tol`` (both signs).

        Uniform tail bound: beyond |x| = L the integrand x^k e^{-scale V}
        is below tol for every k <= k_max.
        """
        logtol = -mp.log(mp.mpf(str(tol)))

        def short(L):
            vals = [scale * self.value(s * L) - k_max * mp.log(L) - logtol for s in (1, -1)]
            return min(vals)

        L = mp.mpf(2)
        budget = 60
        while short(L) < 0:
            L *= 2
            budget -= 1
            if budget == 0:
                raise NonConvergent("tail cutoff search failed to bracket")
        lo, hi = L / 2, L
        for _ in range(80):
            mid = (lo + hi) / 2
            if short(mid) < 0:
                lo = mid
            else:
                hi = mid
        return hi * mp.mpf("1.05") + 1

    def __repr__(self):
        cs = ", ".join(mp.nstr(c, 6) for c in self.coeffs)
        return f"Potential([{cs}])"


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    points: int

    def nodes(self):
        return np.linspace(self.lo, self.hi, self.points)


# ---------------------------------------------------------------------------
# composite Gauss-Legendre in mp precision


@functools.lru_cache(maxsize=32)
def _gl_nodes(n: int, prec: int):
    """Gauss-Legendre nodes/weights on [-1,1] at binary precision ``prec``.

    float64 starting guesses polished by Newton iteration on P_n; the
    iteration is quadratic, so a handful of sweeps reaches full precision.
    """
    x0, _ = np.polynomial.legendre.leggauss(n)
    with mp.workprec(prec + 20):
        nodes, weights = [], []
        for xi in x0:
            x = mp.mpf(float(xi))
            for _ in range(12):
                p0, p1 = mp.mpf(1), x
                for k in range(2, n + 1):
                    p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
                dp = n * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < mp.mpf(2) ** (-prec - 10):
                    break
            p0, p1 = mp.mpf(1), x
            for k in range(2, n + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = n * (x * p1 - p0) / (x * x - 1)
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
    return nodes, weights


def composite_quad(f, a, b, segments: int, order: int = 40):
    """Composite Gauss-Legendre of a scalar mp function over [a, b]."""
    a, b = mp.mpf(a), mp.mpf(b)
    nodes, weights = _gl_nodes(order, mp.mp.prec)
    total = mp.mpf(0)
    width = (b - a) / segments
    for s in range(segments):
        lo = a + s * width
        half = width / 2
        mid = lo + half
        for xi, wi in zip(nodes, weights):
            total += wi * f(mid + half * xi)
        # weight scaling folded in once per segment
    return total * (width / 2)


def refining_quad(f, a, b, tol, order: int = 40, max_level: int = 5, seg0: int = 4):
    """Refine composite GL until two levels agree to tol (absolute)."""
    prev = composite_quad(f, a, b, seg0, order)
    segs = seg0 * 2
    for _ in range(max_level):
        cur = composite_quad(f, a, b, segs, order)
        if abs(cur - prev) <= tol:
            return cur, abs(cur - prev)
        prev, segs = cur, segs * 2
    raise NonConvergent(f"quadrature did not reach tol={tol} within budget")


# ---------------------------------------------------------------------------


@dataclass
class MomentTable:
    """mu_k = int x^k exp(-2 V(x)) dx for k = 0..count-1."""

    potential: Potential
    values: list = field(repr=False)
    tol: float = 1e-12
    cutoff: float = 0.0
    seeded: int = 0  # how many entries came from quadrature

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def recursion_residual(self) -> float:
        """max_k |k mu_{k-1} - 2 sum_K u_K mu_{k+K-1}| / max(1, |mu_{k+2d-1}|).

        Integration-by-parts consistency of the table; holds for exact
        moments of any admissible potential.
        """
        pot = self.potential
        worst = mp.mpf(0)
        for k in range(1, len(self.values) - pot.degree + 1):
            lhs = k * self.values[k - 1]
            rhs = 2 * mp.fsum(
                pot.coeffs[K - 1] * self.values[k + K - 1] for K in range(1, pot.degree + 1)
            )
            res = abs(lhs - rhs) / max(mp.mpf(1), abs(self.values[k + pot.degree - 1]))
            worst = max(worst, res)
        return float(worst)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("k,mu_k\n")
            for k, v in enumerate(self.values):
                fh.write(f"{k},{mp.nstr(v, 17)}\n")


def seed_moments(potential: Potential, count: int, tol: float = 1e-14,
                 dps: int = DEFAULT_DPS) -> MomentTable:
    """Quadrature moments of exp(-2V) up to index count-1."""
    if count < potential.degree:
        raise ValueError(f"count must be >= 2d={potential.degree}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    with working_dps(dps):
        L = potential.cutoff(count + potential.degree, mp.mpf(str(tol)) * mp.mpf("1e-4"))
        vals = []
        mu0, _ = refining_quad(lambda x: potential.weight(x), -L, L,
                               mp.mpf(str(tol)) ** 2, seg0=max(4, int(2 * L)))
        scale = mu0
        for k in range(count):
            f = lambda x, k=k: x ** k * potential.weight(x)
            v, _err = refining_quad(f, -L, L, mp.mpf(str(tol)) * scale,
                                    seg0=max(4, int(2 * L)))
            vals.append(v)
        return MomentTable(potential, vals, tol=tol, cutoff=float(L), seeded=count)


def extend_moments(table: MomentTable, up_to: int) -> MomentTable:
    """Extend by the upward recursion; no-op if the table already reaches."""
    if up_to < len(table.values):
        return table
    pot = table.potential
    if len(table.values) < pot.degree - 1:
        raise ValueError("need at least 2d-1 seed moments")
    vals = list(table.values)
    lead = 2 * pot.coeffs[-1]
    while len(vals) <= up_to:
        k = len(vals) - pot.degree + 1  # produce index k + 2d - 1
        acc = k * vals[k - 1] if k >= 1 else mp.mpf(0)
        acc -= 2 * mp.fsum(pot.coeffs[K - 1] * vals[k + K - 1] for K in range(1, pot.degree))
        vals.append(acc / lead)
    out = MomentTable(pot, vals, tol=table.tol, cutoff=table.cutoff, seeded=table.seeded)
    res = out.recursion_residual()
    if res > 1e-8:
        raise PrecisionLoss(f"moment recursion residual {res:g}; raise working precision")
    return out


class EpsilonTable:
    """Cumulative step-function integrals of the single weight exp(-V).

    h_k(x) = int eps(x-y) y^k exp(-V(y)) dy, with eps(0)=0; h_k' = 2 x^k w.
    Values are assembled from J_k(x) = int_0^x y^k w dy (cached per x) and
    the half-line constants, so one weight evaluation per node serves all
    orders simultaneously.
    """

    def __init__(self, potential: Potential, k_max: int, grid: GridSpec | None = None,
                 tol: float = 1e-14, dps: int = DEFAULT_DPS):
        if k_max < potential.degree:
            raise ValueError(f"k_max must be >= 2d={potential.degree}")
        self.potential = potential
        self.k_max = k_max
        self.dps = dps
        self.tol = tol
        with working_dps(dps):
            self.cutoff = potential.cutoff(k_max + 2, mp.mpf(str(tol)) * mp.mpf("1e-4"),
                                           scale=1)
            self._jcache: dict = {}
            # half-line integrals of y^k w(y): plus_k - minus_k and totals
            plus = self._block(self.cutoff)
            minus = self._block(-self.cutoff)
            self.totals = [p - m for p, m in zip(plus, minus)]   # T_k = int_R y^k w
            self.balance = [-(p + m) for p, m in zip(plus, minus)]  # 2A_k - T_k
        self.grid = grid or GridSpec(-float(self.cutoff), float(self.cutoff), 257)
        self._table = None

    @property
    def table(self) -> np.ndarray:
        """Grid tabulation of h_k (lazy; one chained cache pass)."""
        if self._table is None:
            with working_dps(self.dps):
                xs = [mp.mpf(float(x)) for x in self.grid.nodes()]
                self.prime_cache(xs)
                self._table = np.array(
                    [[float(v) for v in self.h_block(x)] for x in xs]
                )
        return self._table

    def _block(self, x):
        """[J_0(x) .. J_{k_max}(x)] by composite GL from 0 to x, cached."""
        key = mp.mpf(x)
        hit = self._jcache.get(key)
        if hit is not None:
            return hit
        n_seg = max(2, int(abs(key)) + 1)
        nodes, weights = _gl_nodes(48, mp.mp.prec)
        out = [mp.mpf(0)] * (self.k_max + 1)
        width = key / n_seg
        half = width / 2
        for s in range(n_seg):
            mid = s * width + half
            for xi, wi in zip(nodes, weights):
                y = mid + half * xi
                w = wi * self.potential.weight(y, scale=1)
                p = w
                out[0] += p
                for k in range(1, self.k_max + 1):
                    p *= y
                    out[k] += p
        out = [v * half for v in out]  # width/2 scaling, sign via half
        self._jcache[key] = out
        return out

    def prime_cache(self, xs):
        """Populate the J cache for many points by chaining short segments.

        Sorting the points and integrating only the gaps between neighbours
        turns the per-point cost from O(|x|) into O(gap); the gap widths of
        quadrature node sets are small, so low-order panels stay exact.
        """
        nodes, weights = _gl_nodes(16, mp.mp.prec)

        def panel(a, b, running):
            width = b - a
            # panel size shrinks with |y| to track the local decay scale of w
            cap = min(mp.mpf("0.5"), 4 / (1 + max(abs(a), abs(b))))
            n_sub = max(1, int(abs(width) / cap) + 1)
            sub = width / n_sub
            out = list(running)
            for s in range(n_sub):
                mid = a + s * sub + sub / 2
                half = sub / 2
                for xi, wi in zip(nodes, weights):
                    y = mid + half * xi
                    w = wi * half * self.potential.weight(y, scale=1)
                    p = w
                    out[0] += p
                    for k in range(1, self.k_max + 1):
                        p *= y
                        out[k] += p
            return out

        pts = sorted({mp.mpf(x) for x in xs})
        for sign in (1, -1):
            side = [p for p in pts if (p > 0) == (sign > 0) and p != 0]
            if sign < 0:
                side = sorted(side, reverse=True)
            prev = mp.mpf(0)
            running = [mp.mpf(0)] * (self.k_max + 1)
            for x in side:
                if x in self._jcache:
                    running, prev = list(self._jcache[x]), x
                    continue
                running = panel(prev, x, running)
                self._jcache[x] = list(running)
                prev = x

    def h(self, k: int, x):
        """h_k(x) in mp precision; clamps to the tail limits beyond cutoff."""
        if k > self.k_max:
            raise ValueError(f"k={k} beyond tabulated k_max={self.k_max}")
        xm = mp.mpf(x) if not isinstance(x, mp.mpf) else x
        if xm > self.cutoff:
            return self.totals[k]
        if xm < -self.cutoff:
            return -self.totals[k]
        return 2 * self._block(xm)[k] + self.balance[k]

    def h_block(self, x):
        """[h_0(x) .. h_{k_max}(x)] sharing one weight sweep."""
        xm = mp.mpf(x) if not isinstance(x, mp.mpf) else x
        if abs(xm) > self.cutoff:
            s = 1 if xm > 0 else -1
            return [s * t for t in self.totals]
        block = self._block(xm)
        return [2 * b + c for b, c in zip(block, self.balance)]

    def require_domain(self, x):
        if abs(float(x)) > float(self.cutoff):
            raise DomainError(f"x={float(x):g} outside eps-table domain |x|<={float(self.cutoff):g}")

    def derivative_residual(self, k: int, xs) -> float:
        """max |central-difference h_k' - 2 x^k w| over xs (grid-scale step)."""
        step = mp.mpf(self.grid.hi - self.grid.lo) / (4 * (self.grid.points - 1))
        worst = 0.0
        for x in xs:
            xm = mp.mpf(float(x))
            fd = (self.h(k, xm + step) - self.h(k, xm - step)) / (2 * step)
            exact = 2 * xm ** k * self.potential.weight(xm, scale=1) if k else \
                2 * self.potential.weight(xm, scale=1)
            worst = max(worst, abs(float(fd - exact)))
        return worst

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x," + ",".join(f"h_{k}" for k in range(self.k_max + 1)) + "\n")
            for x, row in zip(self.grid.nodes(), self.table):
                fh.write(f"{x!r}," + ",".join(repr(v) for v in row) + "\n")


def epsilon_table(potential: Potential, k_max: int, grid: GridSpec | None = None,
                  tol: float = 1e-14, dps: int = DEFAULT_DPS) -> EpsilonTable:
    return EpsilonTable(potential, k_max, grid=grid, tol=tol, dps=dps)
