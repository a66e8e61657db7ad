"""Physical observables from expansion vectors.

Plane-wave excitation coefficients, far-field patterns, bistatic radar
cross sections, gain patterns and port S-parameters.  Far fields are
pattern functions F with E_scattered = F(theta, phi) e^{-jkr}/r; the
bistatic RCS is sigma = 4 pi |F|^2 / |E0|^2.  Gain uses accepted power
(sum |v|^2 - sum |w|^2 under the unit-power port normalization), so
mismatched antennas report realized-gain-consistent values.

Units are SI-consistent: lengths and wavenumber in one length unit,
sigma in that unit squared.  eta0 = 376.730313668 ohm.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

from .components import ExpansionVector, GsMatrix
from .synthesis import Scene, SolverOptions, system_response
from .wavefunctions import VswfBasis, canonical_basis, delta_pi_all

ETA0 = 376.730313668


@dataclass(frozen=True)
class PlaneWaveSpec:
    """Propagation direction, polarization and amplitude of a plane wave.

    The field is E(r) = amplitude * polarization * exp(-j k direction . r)
    (e^{+j omega t} convention).  The polarization must be a unit vector
    orthogonal to the direction; it may be complex for circular states.
    """

    direction: np.ndarray
    polarization: np.ndarray
    amplitude: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        p = np.asarray(self.polarization, dtype=complex)
        if d.shape != (3,) or p.shape != (3,):
            raise ValueError("direction and polarization must be 3-vectors")
        nd = np.linalg.norm(d)
        if nd == 0:
            raise ValueError("direction must be nonzero")
        d = d / nd
        npol = np.linalg.norm(p)
        if npol == 0:
            raise ValueError("polarization must be nonzero")
        p = p / npol
        if abs(np.dot(p, d)) > 1e-10:
            raise ValueError("polarization must be orthogonal to the direction")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "polarization", p)


@dataclass(frozen=True)
class FarFieldCut:
    """Sampled far-field pattern on one cut plane.

    ``angles`` are radians within the cut (strictly increasing), ``e_theta``
    and ``e_phi`` the complex pattern components at each sample.
    """

    plane: str
    angles: np.ndarray
    e_theta: np.ndarray
    e_phi: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 1 or np.any(np.diff(a) <= 0):
            raise ValueError("angle samples must be strictly increasing")
        object.__setattr__(self, "angles", a)


CUT_PLANES = ("xoz", "yoz", "xoy")


def cut_directions(plane: str, angles):
    """Unit observation directions for a named principal-plane cut.

    xoz: (sin a, 0, cos a); yoz: (0, sin a, cos a); xoy: (cos a, sin a, 0).
    """
    a = np.asarray(angles, dtype=float)
    z = np.zeros_like(a)
    if plane == "xoz":
        return np.stack([np.sin(a), z, np.cos(a)], axis=-1)
    if plane == "yoz":
        return np.stack([z, np.sin(a), np.cos(a)], axis=-1)
    if plane == "xoy":
        return np.stack([np.cos(a), np.sin(a), z], axis=-1)
    raise ValueError(f"unknown cut plane {plane!r}; use one of {CUT_PLANES}")


def _angles_of(directions):
    d = np.asarray(directions, dtype=float)
    theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
    phi = np.arctan2(d[..., 1], d[..., 0])
    return theta, phi


def _tangential_harmonics(basis: VswfBasis, theta, phi):
    """(A_theta, A_phi) of every mode at every direction, shape (modes, n).

    Real vector spherical harmonics built from the Delta/pi angular
    functions and sqrt(eps_m / 2 pi) azimuthal normalization.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    u = np.cos(theta)
    D, Pi = delta_pi_all(basis.l_max, u)
    tau_a, sig_a, m_a, l_a = basis.arrays
    nb = len(basis)
    a_th = np.zeros((nb, len(theta)))
    a_ph = np.zeros((nb, len(theta)))
    for i in range(nb):
        tau, sig, m, l = tau_a[i], sig_a[i], m_a[i], l_a[i]
        nrm = sqrt((2.0 if m > 0 else 1.0) / (2.0 * pi))
        c, s = np.cos(m * phi), np.sin(m * phi)
        dd, pp = D[l, m], Pi[l, m]
        if tau == 1:
            if sig == 0:
                a_th[i] = nrm * pp * s
                a_ph[i] = -nrm * dd * c
            else:
                a_th[i] = -nrm * pp * c
                a_ph[i] = -nrm * dd * s
        else:
            if sig == 0:
                a_th[i] = nrm * dd * c
                a_ph[i] = nrm * pp * s
            else:
                a_th[i] = nrm * dd * s
                a_ph[i] = -nrm * pp * c
    return a_th, a_ph


def plane_wave_coefficients(basis: VswfBasis, k: float, spec: PlaneWaveSpec) -> ExpansionVector:
    """Incident-a expansion of a plane wave about the origin.

    a_n = 2 pi E0 (-j)^(l+1-tau) (pol . A_n(k_hat)); under the GS wave-state
    convention the incident field is sum a_n (u1_n + u2_n), i.e. twice the
    regular j_l-based waves.  The coefficients are independent of k (the
    phase reference is the expansion origin).
    """
    del k  # phase referenced to the origin; kept for interface symmetry
    theta, phi = _angles_of(spec.direction)
    a_th, a_ph = _tangential_harmonics(basis, theta, phi)
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    th_hat = np.array([ct * cp, ct * sp, -st])
    ph_hat = np.array([-sp, cp, 0.0])
    p_th = np.dot(spec.polarization, th_hat)
    p_ph = np.dot(spec.polarization, ph_hat)
    _, _, _, l_a = basis.arrays
    tau_a = basis.arrays[0]
    coeff = (2.0 * pi * spec.amplitude
             * (-1j) ** ((l_a + 1 - tau_a) % 4)
             * (p_th * a_th[:, 0] + p_ph * a_ph[:, 0]))
    return ExpansionVector("incident-a", coeff, basis)


def far_field(f, k: float, theta, phi, basis: VswfBasis | None = None):
    """Far-field pattern (E_theta, E_phi) of outgoing coefficients.

    F = (1/k) sum_n f_n j^(l+2-tau) A_n(theta, phi), from the large-argument
    limit h_l^(2)(kr) -> j^(l+1) e^(-jkr)/(kr); the scattered field is
    F e^{-jkr}/r.  Linear in f; accepts angle arrays.
    """
    if isinstance(f, ExpansionVector):
        basis = f.basis
        f = f.coefficients
    if basis is None:
        raise ValueError("far_field needs a basis when given a bare array")
    f = np.asarray(f, dtype=complex)
    a_th, a_ph = _tangential_harmonics(basis, theta, phi)
    tau_a, _, _, l_a = basis.arrays
    w = f * (1j) ** ((l_a + 2 - tau_a) % 4) / k
    return w @ a_th, w @ a_ph


def bistatic_rcs(scene: Scene, spec: PlaneWaveSpec, plane: str = "xoz",
                 angles=None, solver: SolverOptions | None = None):
    """Bistatic RCS curve sigma(angle) = 4 pi |F|^2 / |E0|^2 on a cut plane.

    Solves the scene with the plane-wave excitation only (no port drive)
    and evaluates the globalized far field along the cut.  Returns
    (angles, sigma) with sigma in squared length units of 1/k.
    """
    if angles is None:
        angles = np.radians(np.arange(-180.0, 180.5, 1.0))
    angles = np.asarray(angles, dtype=float)
    l_max = scene.global_l_max()
    gbasis = canonical_basis(l_max)
    a = plane_wave_coefficients(gbasis, scene.k, spec)
    _, f_glob = system_response(scene, None, a.coefficients, solver=solver, l_max=l_max)
    theta, phi = _angles_of(cut_directions(plane, angles))
    fth, fph = far_field(f_glob, scene.k, theta, phi, basis=gbasis)
    sigma = 4.0 * pi * (np.abs(fth) ** 2 + np.abs(fph) ** 2) / spec.amplitude ** 2
    return angles, sigma


def gain_pattern(scene: Scene, v, plane: str = "xoz", angles=None,
                 solver: SolverOptions | None = None):
    """Gain cut for a port excitation: G = 4 pi U / P_accepted.

    Port modes carry unit power, so P_accepted = sum|v|^2 - sum|w|^2 and
    the radiation intensity is U = k^2 |F|^2 (wave modes are also
    unit-power normalized).  Returns (FarFieldCut of the pattern, gain
    values in dBi, peak gain dBi).
    """
    if scene.n_antennas == 0:
        raise ValueError("gain pattern needs at least one antenna in the scene")
    if angles is None:
        angles = np.radians(np.arange(-180.0, 180.5, 1.0))
    angles = np.asarray(angles, dtype=float)
    v = np.asarray(v, dtype=complex)
    w, f_glob = system_response(scene, v, None, solver=solver)
    p_acc = float(np.sum(np.abs(v) ** 2) - np.sum(np.abs(w) ** 2))
    if p_acc <= 0.0:
        raise ValueError(f"nonpositive accepted power {p_acc:.3e}; cannot normalize gain")
    gbasis = canonical_basis(scene.global_l_max())
    theta, phi = _angles_of(cut_directions(plane, angles))
    fth, fph = far_field(f_glob, scene.k, theta, phi, basis=gbasis)
    u = scene.k ** 2 * (np.abs(fth) ** 2 + np.abs(fph) ** 2)
    gain = 4.0 * pi * u / p_acc
    with np.errstate(divide="ignore"):
        gain_dbi = 10.0 * np.log10(gain)
    cut = FarFieldCut(plane, angles, fth, fph)
    return cut, gain_dbi, float(np.max(gain_dbi))


def port_sparams(gs: GsMatrix):
    """Port S-parameters in dB magnitude and degrees phase."""
    if gs.n_ports < 1:
        raise ValueError("structure has no ports")
    g = gs.gamma
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.abs(g))
    return {"db": db, "phase_deg": np.degrees(np.angle(g)), "complex": g.copy()}


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def write_rcs_csv(path, angles, sigma_dbsm) -> None:
    """angle_deg,sigma_dbsm rows; LF endings, 9 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("angle_deg,sigma_dbsm\n")
        for a, s in zip(np.degrees(angles), sigma_dbsm):
            fh.write(f"{a:.9g},{s:.9g}\n")


def write_gain_csv(path, angles, gain_dbi, phase_deg) -> None:
    """angle_deg,gain_dbi,phase_deg rows; LF endings, 9 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("angle_deg,gain_dbi,phase_deg\n")
        for a, g, p in zip(np.degrees(angles), gain_dbi, phase_deg):
            fh.write(f"{a:.9g},{g:.9g},{p:.9g}\n")
