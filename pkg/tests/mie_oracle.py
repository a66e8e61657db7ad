"""Independent Mie-series oracle for sphere scattering.

Classic S1/S2 angular-function series with its own pi_n/tau_n recurrences
and Riccati-Bessel coefficient formulas, written against the e^{+j omega t}
convention (outgoing h^(2)).  Shares nothing with the package's VSWF
pipeline beyond scipy's Bessel functions.

Incident wave: E = E0 x_hat exp(-j k z) (propagating along +z).
"""

import numpy as np
from scipy.special import spherical_jn, spherical_yn


def _coefficients(ka, eps_r=None, nmax=None):
    """Mie a_n (TM) and b_n (TE) for PEC (eps_r=None) or dielectric spheres."""
    if nmax is None:
        nmax = int(np.ceil(ka + 4.05 * ka ** (1.0 / 3.0) + 8))
    ns = np.arange(0, nmax + 1)
    j = spherical_jn(ns, ka)
    y = spherical_yn(ns, ka)
    jp = spherical_jn(ns, ka, derivative=True)
    yp = spherical_yn(ns, ka, derivative=True)
    psi = ka * j
    psip = j + ka * jp
    xi2 = ka * (j - 1j * y)
    xi2p = (j - 1j * y) + ka * (jp - 1j * yp)
    if eps_r is None:
        a_n = psip / xi2p
        b_n = psi / xi2
    else:
        m = np.sqrt(complex(eps_r))
        if m.imag > 0:
            m = -m
        x2 = m * ka
        # upward recurrences at complex argument (small orders only)
        jm = np.zeros(nmax + 1, dtype=complex)
        jm[0] = np.sin(x2) / x2
        if nmax >= 1:
            jm[1] = np.sin(x2) / x2**2 - np.cos(x2) / x2
        for n in range(2, nmax + 1):
            jm[n] = (2 * n - 1) / x2 * jm[n - 1] - jm[n - 2]
        jmp = np.zeros(nmax + 1, dtype=complex)
        jmp[0] = -jm[1] if nmax >= 1 else np.cos(x2) / x2 - np.sin(x2) / x2**2
        for n in range(1, nmax + 1):
            jmp[n] = jm[n - 1] - (n + 1) / x2 * jm[n]
        psim = x2 * jm
        psimp = jm + x2 * jmp
        a_n = (m * psim * psip - psi * psimp) / (m * psim * xi2p - xi2 * psimp)
        b_n = (psim * psip - m * psi * psimp) / (psim * xi2p - m * xi2 * psimp)
    return a_n[1:], b_n[1:]


def amplitudes(ka, thetas, eps_r=None):
    """S1(theta), S2(theta) series with local pi_n/tau_n recurrences."""
    a_n, b_n = _coefficients(ka, eps_r)
    nmax = len(a_n)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    s1 = np.zeros(len(thetas), dtype=complex)
    s2 = np.zeros(len(thetas), dtype=complex)
    for it, th in enumerate(thetas):
        mu = np.cos(th)
        pi_nm1, pi_n = 0.0, 1.0
        acc1 = 0j
        acc2 = 0j
        for n in range(1, nmax + 1):
            tau_n = n * mu * pi_n - (n + 1) * pi_nm1
            c = (2 * n + 1) / (n * (n + 1))
            acc1 += c * (a_n[n - 1] * pi_n + b_n[n - 1] * tau_n)
            acc2 += c * (a_n[n - 1] * tau_n + b_n[n - 1] * pi_n)
            pi_np1 = ((2 * n + 1) * mu * pi_n - (n + 1) * pi_nm1) / n
            pi_nm1, pi_n = pi_n, pi_np1
        s1[it], s2[it] = acc1, acc2
    return s1, s2


def bistatic_rcs(ka, k, thetas, phi, eps_r=None):
    """sigma(theta) on the cone phi = const; units of 1/k^2."""
    s1, s2 = amplitudes(ka, thetas, eps_r)
    return 4.0 * np.pi / k**2 * (np.abs(s2 * np.cos(phi)) ** 2 + np.abs(s1 * np.sin(phi)) ** 2)


def far_field(ka, k, theta, phi, e0=1.0, eps_r=None):
    """Complex far-field pattern (F_theta, F_phi), E_s = F e^{-jkr}/r.

    Conjugated from the classic e^{-i omega t} form: F_theta follows
    cos(phi) S2, F_phi follows -sin(phi) S1, with the overall 1/(jk).
    """
    s1, s2 = amplitudes(ka, np.atleast_1d(theta), eps_r)
    f_th = e0 / (1j * k) * np.cos(phi) * s2
    f_ph = -e0 / (1j * k) * np.sin(phi) * s1
    return f_th, f_ph
