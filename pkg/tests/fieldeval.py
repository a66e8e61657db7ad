"""Brute-force VSWF field evaluation for test oracles.

Evaluates expansion fields by direct summation of the vector wavefunctions
at arbitrary cartesian points.  Deliberately independent of the package's
vectorized far-field path: harmonics are reassembled here from the scalar
angular primitives, so translation/rotation operators and far fields can
be checked against physical fields.

Kinds: "regular" sums j_l-based waves, "outgoing" sums h^(2)-based waves,
"incident" applies the GS convention (u1 + u2 = 2x regular).
"""

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from gsmkit.wavefunctions import delta_pi_all, legendre_norm_all


def _vector_harmonics_point(l_max, theta, phi):
    """A_1, A_2, A_3 cartesian components at one direction, keyed (sig, m, l)."""
    u = float(np.cos(theta))
    D, Pi = delta_pi_all(l_max, u)
    P = legendre_norm_all(l_max, u)
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    th_hat = np.array([ct * cp, ct * sp, -st])
    ph_hat = np.array([-sp, cp, 0.0])
    r_hat = np.array([st * cp, st * sp, ct])
    A1, A2, A3 = {}, {}, {}
    for l in range(1, l_max + 1):
        for m in range(0, l + 1):
            nrm = np.sqrt((2.0 if m > 0 else 1.0) / (2.0 * np.pi))
            dd = float(D[l, m, 0])
            pp = float(Pi[l, m, 0])
            yy = nrm * float(P[l, m, 0])
            for sig in (0, 1):
                if m == 0 and sig == 1:
                    continue
                if sig == 0:
                    a2 = nrm * (dd * np.cos(m * phi) * th_hat + pp * np.sin(m * phi) * ph_hat)
                    yv = yy * np.cos(m * phi)
                else:
                    a2 = nrm * (dd * np.sin(m * phi) * th_hat - pp * np.cos(m * phi) * ph_hat)
                    yv = yy * np.sin(m * phi)
                A2[(sig, m, l)] = a2
                A1[(sig, m, l)] = -np.cross(r_hat, a2)
                A3[(sig, m, l)] = r_hat * yv
    return A1, A2, A3


def eval_field(basis, k, points, coeffs, kind="regular"):
    """Sum the expansion at cartesian points; returns (npts, 3) complex."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    coeffs = np.asarray(coeffs, dtype=complex)
    out = np.zeros((len(pts), 3), dtype=complex)
    l_max = basis.l_max
    scale = 2.0 if kind == "incident" else 1.0
    radial_kind = "regular" if kind in ("regular", "incident") else "outgoing"
    ls = np.arange(0, l_max + 1)
    for ip, p in enumerate(pts):
        r = np.linalg.norm(p)
        if r == 0:
            raise ValueError("evaluation at the origin is not supported")
        theta = np.arccos(np.clip(p[2] / r, -1.0, 1.0))
        phi = np.arctan2(p[1], p[0])
        A1, A2, A3 = _vector_harmonics_point(l_max, theta, phi)
        x = k * r
        if radial_kind == "regular":
            z = spherical_jn(ls, x)
            zp = spherical_jn(ls, x, derivative=True)
        else:
            z = spherical_jn(ls, x) - 1j * spherical_yn(ls, x)
            zp = spherical_jn(ls, x, derivative=True) - 1j * spherical_yn(ls, x, derivative=True)
        acc = np.zeros(3, dtype=complex)
        for i, n in enumerate(basis.ordering):
            c = coeffs[i]
            if c == 0:
                continue
            if n.tau == 1:
                acc += c * z[n.l] * A1[(n.sigma, n.m, n.l)]
            else:
                rad1 = zp[n.l] + z[n.l] / x
                rad2 = np.sqrt(n.l * (n.l + 1.0)) * z[n.l] / x
                acc += c * (rad1 * A2[(n.sigma, n.m, n.l)] + rad2 * A3[(n.sigma, n.m, n.l)])
        out[ip] = scale * acc
    return out
