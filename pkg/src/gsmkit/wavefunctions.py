"""Vector-spherical-wavefunction index bookkeeping and special functions.

Everything downstream (rotation/translation operators, Mie generators, far
fields) is built on the primitives in this module: the canonical mode
ordering, spherical Bessel/Hankel functions, orthonormal associated Legendre
functions with their angular derivatives, Jacobi polynomials, Wigner 3-j
symbols and Gauss-Legendre rules.

Mode convention: a mode is labelled (tau, sigma, m, l) with tau = 1 (TE) or
2 (TM), sigma = 0 (even, cos m*phi) or 1 (odd, sin m*phi), order 0 <= m <= l
and degree l >= 1.  The (m = 0, odd) combination vanishes identically and is
excluded, which makes the mode count 2*l_max*(l_max + 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, sqrt

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_jacobi, spherical_jn, spherical_yn

EVEN = 0
ODD = 1

TE = 1
TM = 2


@dataclass(frozen=True)
class VswfIndex:
    """One vector-spherical-wavefunction mode label."""

    tau: int      # 1 = TE, 2 = TM
    sigma: int    # 0 = even (cos), 1 = odd (sin)
    m: int        # azimuthal order, 0 <= m <= l
    l: int        # degree, >= 1

    def __post_init__(self):
        if self.tau not in (TE, TM):
            raise ValueError(f"tau must be 1 or 2, got {self.tau}")
        if self.sigma not in (EVEN, ODD):
            raise ValueError(f"sigma must be 0 (even) or 1 (odd), got {self.sigma}")
        if self.l < 1:
            raise ValueError(f"l must be >= 1, got {self.l}")
        if not 0 <= self.m <= self.l:
            raise ValueError(f"need 0 <= m <= l, got m={self.m}, l={self.l}")
        if self.m == 0 and self.sigma == ODD:
            raise ValueError("(m=0, odd) modes vanish identically and are excluded")


def index_count(l_max: int) -> int:
    """Number of VSWF modes at truncation degree l_max: 2*l_max*(l_max+2)."""
    if l_max < 1:
        raise ValueError(f"l_max must be >= 1, got {l_max}")
    return 2 * l_max * (l_max + 2)


def truncation_degree(kr_min: float) -> int:
    """Empirical truncation degree ceil(kR + 7*kR^(1/3) + 3) for electrical radius kR."""
    if kr_min <= 0:
        raise ValueError(f"kR_min must be positive, got {kr_min}")
    return int(ceil(kr_min + 7.0 * kr_min ** (1.0 / 3.0) + 3.0))


@dataclass(frozen=True)
class VswfBasis:
    """Canonical ordered VSWF basis at a given truncation degree.

    Ordering is (l, tau, m, sigma) with sigma even before odd; fixed so that
    operator matrices and GS-matrix files are interchangeable.
    """

    l_max: int
    ordering: tuple = field(repr=False)

    def __post_init__(self):
        if len(self.ordering) != index_count(self.l_max):
            raise ValueError("ordering length inconsistent with l_max")

    def __len__(self):
        return len(self.ordering)

    def position(self, idx: VswfIndex) -> int:
        return self._positions()[idx]

    def _positions(self):
        # cached on first use; object is frozen so this is write-once
        pos = self.__dict__.get("_pos")
        if pos is None:
            pos = {n: i for i, n in enumerate(self.ordering)}
            object.__setattr__(self, "_pos", pos)
        return pos

    @property
    def arrays(self):
        """(tau, sigma, m, l) as four int arrays in basis order."""
        arr = self.__dict__.get("_arr")
        if arr is None:
            arr = tuple(
                np.array([getattr(n, f) for n in self.ordering], dtype=int)
                for f in ("tau", "sigma", "m", "l")
            )
            object.__setattr__(self, "_arr", arr)
        return arr


def canonical_basis(l_max: int) -> VswfBasis:
    """Enumerate all modes sorted by (l, tau, m, sigma), skipping (m=0, odd)."""
    if l_max < 1:
        raise ValueError(f"l_max must be >= 1, got {l_max}")
    order = []
    for l in range(1, l_max + 1):
        for tau in (TE, TM):
            for m in range(0, l + 1):
                for sigma in (EVEN, ODD):
                    if m == 0 and sigma == ODD:
                        continue
                    order.append(VswfIndex(tau, sigma, m, l))
    return VswfBasis(l_max=l_max, ordering=tuple(order))


# ---------------------------------------------------------------------------
# radial functions
# ---------------------------------------------------------------------------

def spherical_bessel_j(l, x):
    """Spherical Bessel j_l(x) for x >= 0; j_l(0) = delta_{l0}."""
    return spherical_jn(l, x)


def spherical_bessel_y(l, x):
    """Spherical Neumann y_l(x), x > 0."""
    return spherical_yn(l, x)


def spherical_hankel2(l, x):
    """Spherical Hankel of the second kind, h_l^(2)(x) = j_l(x) - i y_l(x).

    Outgoing radial dependence under the e^{+j omega t} time convention.
    Singular at the origin, so x must be positive.
    """
    if np.any(np.asarray(x) <= 0):
        raise ValueError("spherical_hankel2 requires x > 0")
    return spherical_jn(l, x) - 1j * spherical_yn(l, x)


# ---------------------------------------------------------------------------
# normalized associated Legendre functions and angular derivatives
# ---------------------------------------------------------------------------

def _as_u_array(u):
    u = np.asarray(u)
    if not np.iscomplexobj(u):
        if np.any(np.abs(u) > 1):
            raise ValueError("normalized Legendre functions need |u| <= 1 for real u")
        u = u.astype(float)
    return np.atleast_1d(u)


def legendre_norm_all(l_max, u):
    """P~_l^m(u) for all 0 <= m <= l <= l_max, orthonormal on [-1, 1].

    Convention: integral of P~_l^m * P~_{l'}^m over [-1, 1] equals
    delta_{ll'}; no Condon-Shortley phase.  Accepts real u in [-1, 1] or
    complex u, with sqrt(1 - u^2) taken on the branch that is positive on
    the real interval (-1, 1).

    Returns an array of shape (l_max+1, l_max+1) + u.shape indexed [l, m].
    """
    uu = _as_u_array(u)
    w = np.sqrt((1.0 + 0j) - uu.astype(complex) ** 2)
    P = np.zeros((l_max + 1, l_max + 1) + uu.shape, dtype=complex)
    pmm = np.full(uu.shape, sqrt(0.5), dtype=complex)
    for m in range(0, l_max + 1):
        if m > 0:
            pmm = pmm * sqrt((2 * m + 1) / (2.0 * m)) * w
        P[m, m] = pmm
        for l in range(m + 1, l_max + 1):
            a = sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            P[l, m] = a * uu * P[l - 1, m]
            if l - 2 >= m:
                b = sqrt((2.0 * l + 1.0) / (2.0 * l - 3.0) * ((l - 1.0) ** 2 - m * m) / (l * l - m * m))
                P[l, m] = P[l, m] - b * P[l - 2, m]
    if not np.iscomplexobj(np.asarray(u)):
        return P.real
    return P


def normalized_legendre(l: int, m: int, u):
    """P~_l^m(u) under the orthonormal convention (see legendre_norm_all)."""
    if not 0 <= m <= l:
        raise ValueError(f"need 0 <= m <= l, got m={m}, l={l}")
    tab = legendre_norm_all(l, u)
    out = tab[l, m]
    return out[0].item() if np.asarray(u).ndim == 0 else out


def delta_pi_all(l_max, u):
    """Angular functions Delta_l^m(u) and pi_l^m(u) for all modes at once.

    Delta_l^m = -sqrt(1-u^2)/sqrt(l(l+1)) * d/du P~_l^m
    pi_l^m    = -m * P~_l^m / (sqrt(l(l+1)) * sqrt(1-u^2))

    Finite on (-1, 1); at u = +-1 only the m = 1 functions survive and the
    analytic limits are used.  Complex u is supported on the same branch of
    sqrt(1 - u^2) as legendre_norm_all (used by the contour integral form of
    the translation operator).

    Returns (Delta, Pi), each shaped (l_max+1, l_max+1) + u.shape.
    """
    uu = _as_u_array(u)
    complex_in = np.iscomplexobj(np.asarray(u))
    P = legendre_norm_all(l_max, uu).astype(complex)
    w = np.sqrt((1.0 + 0j) - uu.astype(complex) ** 2)
    at_pole = (np.abs(np.abs(uu) - 1.0) < 1e-15) if not complex_in else np.zeros(uu.shape, bool)
    wsafe = np.where(at_pole, 1.0, w)
    D = np.zeros_like(P)
    Pi = np.zeros_like(P)
    for l in range(1, l_max + 1):
        s = sqrt(l * (l + 1.0))
        for m in range(0, l + 1):
            e = sqrt((2.0 * l + 1.0) * (l * l - m * m) / (2.0 * l - 1.0))
            plm1 = P[l - 1, m] if l - 1 >= m else 0.0
            D[l, m] = -(e * plm1 - l * uu * P[l, m]) / (s * wsafe)
            Pi[l, m] = -m * P[l, m] / (s * wsafe)
        if np.any(at_pole):
            # analytic limits: only m = 1 is nonzero at the poles
            v = 0.5 * sqrt((2.0 * l + 1.0) / 2.0)
            for m in range(0, l + 1):
                dpole = np.where(uu.real > 0, v, (-1.0) ** l * v) if m == 1 else 0.0
                ppole = np.where(uu.real > 0, -v, (-1.0) ** l * v) if m == 1 else 0.0
                D[l, m] = np.where(at_pole, dpole, D[l, m])
                Pi[l, m] = np.where(at_pole, ppole, Pi[l, m])
    if not complex_in:
        return D.real, Pi.real
    return D, Pi


def delta_pi(l: int, m: int, u):
    """(Delta_l^m(u), pi_l^m(u)) for a single mode; see delta_pi_all."""
    if not 0 <= m <= l:
        raise ValueError(f"need 0 <= m <= l, got m={m}, l={l}")
    D, Pi = delta_pi_all(l, u)
    if np.asarray(u).ndim == 0:
        return D[l, m][0].item(), Pi[l, m][0].item()
    return D[l, m], Pi[l, m]


def jacobi_polynomial(n: int, a: int, b: int, x):
    """Jacobi polynomial P_n^{(a,b)}(x) (three-term recurrence, via scipy)."""
    if n < 0:
        raise ValueError(f"degree must be >= 0, got {n}")
    return eval_jacobi(n, a, b, x)


# ---------------------------------------------------------------------------
# Wigner 3-j symbols
# ---------------------------------------------------------------------------

def wigner3j_range(j1: int, j2: int, m1: int, m2: int):
    """All 3-j symbols (j1 j2 j3; m1 m2 -m1-m2) over the allowed j3 range.

    Two-sided three-term recurrence in j3 with global normalization
    sum_j3 (2 j3 + 1) f^2 = 1 and the sign of f(j1+j2) fixed to
    (-1)^(j1-j2+m1+m2).  Stable far beyond the factorial-overflow limit.

    Returns (j3_min, values) where values[i] is the symbol at j3 = j3_min + i.
    """
    m3 = -m1 - m2
    if abs(m1) > j1 or abs(m2) > j2:
        return 0, np.zeros(0)
    j3min = max(abs(j1 - j2), abs(m3))
    j3max = j1 + j2
    n = j3max - j3min + 1
    if n <= 0:
        return j3min, np.zeros(0)

    sign_top = (-1.0) ** ((j1 - j2 + m1 + m2) % 2)
    if n == 1:
        return j3min, np.array([sign_top / sqrt(2.0 * j3min + 1.0)])

    # recurrence coefficients over the full range, A at j3min..j3max+1
    jj = np.arange(j3min, j3max + 2, dtype=float)
    A = np.sqrt(np.maximum(
        (jj * jj - (j1 - j2) ** 2) * ((j1 + j2 + 1.0) ** 2 - jj * jj) * (jj * jj - m3 * m3),
        0.0))
    jb = jj[:-1]
    B = -(2.0 * jb + 1.0) * ((m1 - m2) * jb * (jb + 1.0)
                             + m3 * (j1 * (j1 + 1.0) - j2 * (j2 + 1.0)))

    ff = np.zeros(n)
    ff[0] = 1.0
    if j3min == 0:
        # implies j1 == j2 and m2 == -m1; ratio from the closed forms at j3 = 0, 1
        ff[1] = m1 / sqrt(j1 * (j1 + 1.0))
    else:
        ff[1] = -B[0] / (j3min * A[1]) * ff[0]
    for i in range(2, n):
        j = j3min + i - 1
        ff[i] = -(B[i - 1] * ff[i - 1] + (j + 1.0) * A[i - 1] * ff[i - 2]) / (j * A[i])
        if abs(ff[i]) > 1e250:
            ff[: i + 1] /= 1e250

    fb = np.zeros(n)
    fb[-1] = 1.0
    fb[-2] = -B[n - 1] / ((j3max + 1.0) * A[n - 1]) * fb[-1]
    for i in range(n - 3, -1, -1):
        j = j3min + i + 1
        fb[i] = -(B[i + 1] * fb[i + 1] + j * A[i + 2] * fb[i + 2]) / ((j + 1.0) * A[i + 1])
        if abs(fb[i]) > 1e250:
            fb[i:] /= 1e250

    # stitch the two stable halves at the forward maximum
    imid = int(np.argmax(np.abs(ff)))
    if fb[imid] == 0.0:
        imid = int(np.argmax(np.abs(fb)))
    f = np.concatenate([ff[: imid + 1], fb[imid + 1:] * (ff[imid] / fb[imid])])
    j3 = np.arange(j3min, j3max + 1)
    f /= sqrt(np.sum((2.0 * j3 + 1.0) * f * f))
    if f[-1] * sign_top < 0:
        f = -f
    return j3min, f


def wigner3j(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    """Wigner 3-j symbol; returns 0 for any selection-rule violation."""
    if m1 + m2 + m3 != 0:
        return 0.0
    if j3 < abs(j1 - j2) or j3 > j1 + j2:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    j3min, f = wigner3j_range(j1, j2, m1, m2)
    if len(f) == 0:
        return 0.0
    return float(f[j3 - j3min])


def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1]; exact to degree 2n-1."""
    if n < 1:
        raise ValueError(f"quadrature order must be >= 1, got {n}")
    return leggauss(n)
