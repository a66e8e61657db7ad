"""Per-structure generalized scattering matrices.

A GS-matrix collects the four blocks

    [ Gamma  R ]   port reflection (e x e), receiving (e x j)
    [ T      S ]   transmitting (j x e), spherical S-matrix (j x j)

relating incoming states (port modes v, spherical waves a) to outgoing
states (port modes w, spherical waves b = S a + T v).  Wave-state
convention, recorded in the file format: the incident coefficients a
multiply incoming-plus-outgoing standing waves (u1 + u2 = twice the
regular j_l-based wave), outgoing coefficients multiply h^(2) waves, time
dependence e^{+j omega t}.  The variant used for coupling replaces S by
S - 1, acting on the scattered coefficients f = b - a; the classic
T-matrix is (S - 1)/2.

This module provides analytic generators (PEC and homogeneous dielectric
Mie spheres, a synthetic matched single-port dipole antenna), GS-matrix
rotation, a passivity/unitarity report and the GSMAT v1 text format.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .rototranslation import rotation_matrix
from .wavefunctions import (
    EVEN,
    TM,
    VswfBasis,
    VswfIndex,
    canonical_basis,
    spherical_bessel_j,
    spherical_bessel_y,
)


@dataclass(frozen=True)
class GsMatrix:
    """GS-matrix blocks of one structure on the canonical basis."""

    basis: VswfBasis
    n_ports: int
    gamma: np.ndarray   # (e, e)
    r: np.ndarray       # (e, j)
    t: np.ndarray       # (j, e)
    s: np.ndarray       # (j, j)

    def __post_init__(self):
        j = len(self.basis)
        e = self.n_ports
        if e < 0:
            raise ValueError("n_ports must be >= 0")
        for name, blk, shape in (
            ("gamma", self.gamma, (e, e)),
            ("r", self.r, (e, j)),
            ("t", self.t, (j, e)),
            ("s", self.s, (j, j)),
        ):
            if blk.shape != shape:
                raise ValueError(f"{name} block must have shape {shape}, got {blk.shape}")

    @property
    def full(self) -> np.ndarray:
        """The assembled (e+j) x (e+j) block matrix."""
        top = np.hstack([self.gamma, self.r])
        bot = np.hstack([self.t, self.s])
        return np.vstack([top, bot])


@dataclass(frozen=True)
class StructureInstance:
    """A GS-matrix placed in the scene.

    ``euler`` is applied to the stored matrix (rotate_gs) before placement
    so that the local frame differs from the global one by translation
    only, as the synthesis requires.  ``extent_fn(direction)`` returns the
    conservative (lo, hi) projection interval of the structure onto a unit
    direction; the default is the bounding sphere.
    """

    gs: GsMatrix
    position: np.ndarray
    bounding_radius: float
    euler: tuple = (0.0, 0.0, 0.0)
    extent_fn: object = None
    label: str = ""

    def __post_init__(self):
        if self.bounding_radius <= 0:
            raise ValueError("bounding_radius must be positive")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.position.shape != (3,):
            raise ValueError("position must be a 3-vector")

    def extent(self, direction) -> tuple:
        if self.extent_fn is not None:
            return self.extent_fn(np.asarray(direction, dtype=float))
        return (-self.bounding_radius, self.bounding_radius)

    def placed_gs(self) -> GsMatrix:
        """GS-matrix with the instance rotation folded in."""
        if self.euler == (0.0, 0.0, 0.0):
            return self.gs
        return rotate_gs(self.gs, *self.euler)


EXPANSION_KINDS = ("incident-a", "outgoing-b", "scattered-f", "port-in-v", "port-out-w")


@dataclass(frozen=True)
class ExpansionVector:
    """Coefficient vector over VSWF modes or port modes."""

    kind: str
    coefficients: np.ndarray
    basis: VswfBasis | None = None

    def __post_init__(self):
        if self.kind not in EXPANSION_KINDS:
            raise ValueError(f"kind must be one of {EXPANSION_KINDS}")
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=complex))
        if self.kind in ("incident-a", "outgoing-b", "scattered-f"):
            if self.basis is None:
                raise ValueError(f"{self.kind} vectors need a basis")
            if self.coefficients.shape != (len(self.basis),):
                raise ValueError("coefficient length does not match basis")


# ---------------------------------------------------------------------------
# Mie sphere generators
# ---------------------------------------------------------------------------

def _riccati(l_arr, x):
    """psi = x j_l(x), xi2 = x h2_l(x) and their derivatives, complex x ok."""
    if np.iscomplexobj(np.asarray(x)):
        # complex argument: explicit upward recurrence for j_l
        lmax = int(np.max(l_arr))
        j = np.zeros(lmax + 1, dtype=complex)
        y = np.zeros(lmax + 1, dtype=complex)
        j0, j1 = np.sin(x) / x, np.sin(x) / x**2 - np.cos(x) / x
        y0, y1 = -np.cos(x) / x, -np.cos(x) / x**2 - np.sin(x) / x
        j[0], y[0] = j0, y0
        if lmax >= 1:
            j[1], y[1] = j1, y1
        for l in range(2, lmax + 1):
            j[l] = (2 * l - 1) / x * j[l - 1] - j[l - 2]
            y[l] = (2 * l - 1) / x * y[l - 1] - y[l - 2]
        # downward recurrence for j when |x| < lmax (upward is unstable)
        if abs(x) < lmax:
            nstart = lmax + int(np.ceil(8 * np.sqrt(lmax + 1))) + 10
            jd = np.zeros(nstart + 2, dtype=complex)
            jd[nstart + 1] = 0.0
            jd[nstart] = 1e-280
            for l in range(nstart, 0, -1):
                jd[l - 1] = (2 * l + 1) / x * jd[l] - jd[l + 1]
            jd *= j0 / jd[0]
            j = jd[: lmax + 1]
        jp = np.zeros(lmax + 1, dtype=complex)
        yp = np.zeros(lmax + 1, dtype=complex)
        jp[0] = -j[1] if lmax >= 1 else -(np.sin(x) / x**2 - np.cos(x) / x)
        yp[0] = -y[1] if lmax >= 1 else -(-np.cos(x) / x**2 - np.sin(x) / x)
        for l in range(1, lmax + 1):
            jp[l] = j[l - 1] - (l + 1) / x * j[l]
            yp[l] = y[l - 1] - (l + 1) / x * y[l]
        j, y, jp, yp = j[l_arr], y[l_arr], jp[l_arr], yp[l_arr]
    else:
        j = spherical_bessel_j(l_arr, x)
        y = spherical_bessel_y(l_arr, x)
        from scipy.special import spherical_jn, spherical_yn
        jp = spherical_jn(l_arr, x, derivative=True)
        yp = spherical_yn(l_arr, x, derivative=True)
    psi = x * j
    psip = j + x * jp
    h2 = j - 1j * y
    h2p = jp - 1j * yp
    xi2 = x * h2
    xi2p = h2 + x * h2p
    return psi, psip, xi2, xi2p


def _mie_diag(basis: VswfBasis, s_te, s_tm) -> np.ndarray:
    """Diagonal S from per-degree TE/TM entries (index 1..l_max)."""
    tau_a, _, _, l_a = basis.arrays
    diag = np.where(tau_a == 1, s_te[l_a], s_tm[l_a])
    return np.diag(diag)


def _empty_ports(basis: VswfBasis):
    j = len(basis)
    return (np.zeros((0, 0), dtype=complex),
            np.zeros((0, j), dtype=complex),
            np.zeros((j, 0), dtype=complex))


def mie_pec_sphere(basis: VswfBasis, ka: float) -> GsMatrix:
    """PEC sphere of electrical radius ka; diagonal lossless S-matrix.

    TE entries -h^(1)_l(ka)/h^(2)_l(ka); TM entries built from the
    Riccati-Bessel derivatives.  Entries depend on (tau, l) only.
    """
    if ka <= 0:
        raise ValueError("ka must be positive")
    l_arr = np.arange(0, basis.l_max + 1)
    psi, psip, xi2, xi2p = _riccati(l_arr, float(ka))
    # S = 1 - 2 b_n (TE), 1 - 2 a_n (TM) with PEC-limit Mie coefficients
    s_te = 1.0 - 2.0 * psi / xi2
    s_tm = 1.0 - 2.0 * psip / xi2p
    gamma, r, t = _empty_ports(basis)
    return GsMatrix(basis, 0, gamma, r, t, _mie_diag(basis, s_te, s_tm))


def mie_dielectric_sphere(basis: VswfBasis, ka: float, eps_r: complex) -> GsMatrix:
    """Homogeneous dielectric sphere, relative permittivity eps_r.

    Under e^{+j omega t}, lossy media have Im(eps_r) <= 0; gain media are
    rejected.  Standard Mie coefficients from tangential-field continuity
    at the surface, with h^(2) outgoing radial functions.
    """
    if ka <= 0:
        raise ValueError("ka must be positive")
    eps_r = complex(eps_r)
    if eps_r.imag > 0:
        raise ValueError("gain media (Im eps_r > 0) are out of scope")
    mref = np.sqrt(eps_r)
    if mref.imag > 0:
        mref = -mref
    l_arr = np.arange(0, basis.l_max + 1)
    psi, psip, xi2, xi2p = _riccati(l_arr, float(ka))
    psim, psimp, _, _ = _riccati(l_arr, mref * ka)
    # a_n (TM), b_n (TE) with xi -> xi2 for the e^{+jwt} convention
    a_n = (mref * psim * psip - psi * psimp) / (mref * psim * xi2p - xi2 * psimp)
    b_n = (psim * psip - mref * psi * psimp) / (psim * xi2p - mref * xi2 * psimp)
    s_te = 1.0 - 2.0 * b_n
    s_tm = 1.0 - 2.0 * a_n
    gamma, r, t = _empty_ports(basis)
    return GsMatrix(basis, 0, gamma, r, t, _mie_diag(basis, s_te, s_tm))


def canonical_dipole_antenna(basis: VswfBasis, mode: VswfIndex | None = None,
                             phase: float = 0.0) -> GsMatrix:
    """Synthetic matched lossless single-port antenna coupled to one mode.

    The default mode is the (TM, even, m=0, l=1) electric dipole.  The port
    absorbs and re-radiates that mode completely (Gamma = 0, S zero on the
    mode, identity elsewhere); the full block matrix is unitary by
    construction.  Port modes carry unit power.
    """
    if mode is None:
        mode = VswfIndex(TM, EVEN, 0, 1)
    try:
        i = basis.position(mode)
    except KeyError:
        raise ValueError(f"mode {mode} is not in the basis (l_max={basis.l_max})")
    j = len(basis)
    ph = np.exp(1j * phase)
    gamma = np.zeros((1, 1), dtype=complex)
    r = np.zeros((1, j), dtype=complex)
    r[0, i] = ph
    t = np.zeros((j, 1), dtype=complex)
    t[i, 0] = ph
    s = np.eye(j, dtype=complex)
    s[i, i] = 0.0
    return GsMatrix(basis, 1, gamma, r, t, s)


# ---------------------------------------------------------------------------
# transformations and validation
# ---------------------------------------------------------------------------

def rotate_gs(gs: GsMatrix, alpha: float, beta: float, gamma: float) -> GsMatrix:
    """GS-matrix of the structure rotated actively by Rz(alpha)Ry(beta)Rz(gamma).

    Gamma' = Gamma, R' = R D, T' = D^t T, S' = D^t S D with the spherical
    rotation operator D(alpha, beta, gamma).  Since D is orthogonal the
    same congruence applies to the S - 1 variant.
    """
    if alpha == 0.0 and beta == 0.0 and gamma == 0.0:
        return gs
    d = rotation_matrix(gs.basis, alpha, beta, gamma).entries
    return GsMatrix(
        gs.basis,
        gs.n_ports,
        gs.gamma.copy(),
        gs.r @ d,
        d.T @ gs.t,
        d.T @ gs.s @ d,
    )


def passivity_report(gs: GsMatrix) -> dict:
    """Largest singular value of the full block matrix and unitarity defect."""
    full = gs.full
    smax = float(np.linalg.norm(full, 2))
    defect = float(np.linalg.norm(full.conj().T @ full - np.eye(full.shape[0])))
    return {"max_singular_value": smax, "unitarity_defect": defect}


# ---------------------------------------------------------------------------
# GSMAT v1 file format
# ---------------------------------------------------------------------------

FORMAT_MAGIC = "GSMAT v1"
_CONVENTION = "regular-in/h2-out"
_TIME_CONVENTION = "+jwt"


class GsmParseError(ValueError):
    """Malformed GS-matrix file; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def save_gsm(gs: GsMatrix, path) -> None:
    """Write the GSMAT v1 text format (17 significant digits, round-trip exact)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(FORMAT_MAGIC + "\n")
        fh.write(f"lmax {gs.basis.l_max} ports {gs.n_ports} "
                 f"convention {_CONVENTION} time-convention {_TIME_CONVENTION}\n")
        for name, blk in (("GAMMA", gs.gamma), ("R", gs.r), ("T", gs.t), ("S", gs.s)):
            rows, cols = blk.shape
            fh.write(f"BLOCK {name} {rows} {cols}\n")
            if cols == 0:
                continue  # degenerate block: header only
            for row in blk:
                fh.write(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row) + "\n")


def _block_shapes(j: int, e: int) -> dict:
    return {"GAMMA": (e, e), "R": (e, j), "T": (j, e), "S": (j, j)}


def save_operator(op, path) -> None:
    """Dump a LinearOperatorOnModes in the shared line-oriented block format."""
    ent = np.asarray(op.entries, dtype=complex)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("GSMOP v1\n")
        fh.write(f"lmax {op.basis.l_max} kind {op.kind}\n")
        rows, cols = ent.shape
        fh.write(f"BLOCK OP {rows} {cols}\n")
        for row in ent:
            fh.write(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row) + "\n")


def load_operator(path):
    """Read an operator dump; returns (l_max, kind, entries)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [(i + 1, ln.rstrip("\n")) for i, ln in enumerate(fh)]
    content = [(no, ln) for no, ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not content or content[0][1].strip() != "GSMOP v1":
        raise GsmParseError("expected header 'GSMOP v1'", content[0][0] if content else 1)
    no, hdr = content[1]
    toks = hdr.split()
    if len(toks) < 4 or toks[0] != "lmax" or toks[2] != "kind":
        raise GsmParseError("expected 'lmax <int> kind <kind>'", no)
    l_max = int(toks[1])
    kind = toks[3]
    no, blk = content[2]
    toks = blk.split()
    if toks[:2] != ["BLOCK", "OP"] or len(toks) != 4:
        raise GsmParseError("expected 'BLOCK OP <rows> <cols>'", no)
    rows, cols = int(toks[2]), int(toks[3])
    data = np.zeros((rows, cols), dtype=complex)
    body = content[3:]
    if len(body) != rows:
        raise GsmParseError(f"OP block: expected {rows} rows, got {len(body)}",
                            content[-1][0])
    for irow, (rno, rline) in enumerate(body):
        vals = rline.split()
        if len(vals) != 2 * cols:
            raise GsmParseError(
                f"OP block: expected {2 * cols} numbers per row, got {len(vals)}", rno)
        nums = [float(v) for v in vals]
        data[irow] = np.array(nums[0::2]) + 1j * np.array(nums[1::2])
    return l_max, kind, data


def load_gsm(path) -> GsMatrix:
    """Read a GSMAT v1 file; validates header, shapes and entry counts."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.readlines()
    lines = [(i + 1, ln.rstrip("\n")) for i, ln in enumerate(raw)]
    content = [(no, ln) for no, ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not content:
        raise GsmParseError("empty file", 1)
    pos = 0
    no, magic = content[pos]
    if magic.strip() != FORMAT_MAGIC:
        raise GsmParseError(f"expected header {FORMAT_MAGIC!r}, got {magic.strip()!r}", no)
    pos += 1
    if pos >= len(content):
        raise GsmParseError("missing dimension header", no)
    no, header = content[pos]
    toks = header.split()
    try:
        if toks[0] != "lmax" or toks[2] != "ports":
            raise ValueError
        l_max = int(toks[1])
        e = int(toks[3])
    except (ValueError, IndexError):
        raise GsmParseError("dimension header must read 'lmax <int> ports <int> ...'", no)
    if l_max < 1:
        raise GsmParseError(f"lmax must be >= 1, got {l_max}", no)
    if e < 0:
        raise GsmParseError(f"ports must be >= 0, got {e}", no)
    if "convention" in toks:
        conv = toks[toks.index("convention") + 1]
        if conv != _CONVENTION:
            raise GsmParseError(f"unsupported wave-state convention {conv!r}", no)
    pos += 1
    basis = canonical_basis(l_max)
    shapes = _block_shapes(len(basis), e)
    blocks = {}
    while pos < len(content):
        no, ln = content[pos]
        toks = ln.split()
        if toks[0] != "BLOCK" or len(toks) != 4:
            raise GsmParseError(f"expected 'BLOCK <name> <rows> <cols>', got {ln.strip()!r}", no)
        name = toks[1]
        if name not in shapes:
            raise GsmParseError(f"unknown block {name!r}", no)
        if name in blocks:
            raise GsmParseError(f"duplicate block {name!r}", no)
        try:
            rows, cols = int(toks[2]), int(toks[3])
        except ValueError:
            raise GsmParseError("block dimensions must be integers", no)
        if (rows, cols) != shapes[name]:
            raise GsmParseError(
                f"{name} block: expected {shapes[name][0]}x{shapes[name][1]}, "
                f"got {rows}x{cols}", no)
        pos += 1
        data = np.zeros((rows, cols), dtype=complex)
        for irow in range(rows if cols > 0 else 0):
            if pos >= len(content):
                raise GsmParseError(
                    f"{name} block: expected {rows}*{cols} entries, file ended early",
                    content[-1][0])
            rno, rline = content[pos]
            vals = rline.split()
            if len(vals) != 2 * cols:
                raise GsmParseError(
                    f"{name} block: expected {rows}*{cols} entries "
                    f"({2 * cols} numbers per row), got {len(vals)}", rno)
            try:
                nums = [float(v) for v in vals]
            except ValueError:
                raise GsmParseError(f"{name} block: non-numeric entry", rno)
            data[irow] = np.array(nums[0::2]) + 1j * np.array(nums[1::2])
            pos += 1
        blocks[name] = data
    missing = [nm for nm in ("GAMMA", "R", "T", "S") if nm not in blocks]
    if missing:
        raise GsmParseError(f"missing blocks: {', '.join(missing)}", content[-1][0])
    gs = GsMatrix(basis, e, blocks["GAMMA"], blocks["R"], blocks["T"], blocks["S"])
    rep = passivity_report(gs)
    if rep["max_singular_value"] > 1.0 + 1e-6:
        warnings.warn(
            f"loaded GS-matrix is not passive: max singular value "
            f"{rep['max_singular_value']:.6g}", stacklevel=2)
    return gs
