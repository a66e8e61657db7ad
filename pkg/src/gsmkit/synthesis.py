"""Assembly of the system GS-matrix from placed component matrices.

The stacked multiple-scattering system couples every structure's scattered
field into every other structure's incident field through the pairwise
operator blocks G(k d_pq)^t with d_pq = r_p - r_q.  With the auxiliary
matrix M = 1 - (S_hat - 1) G_hat, the local system blocks are

    Gamma_G = Gamma_hat + R_hat G_hat^A M_L T_hat
    R_G     = [R_hat 0] + R_hat G_hat^A M^{-1} (S_hat - 1)
    T_G     = M_L T_hat
    S_G - 1 = M^{-1} (S_hat - 1)

where M_L is the left block column of M^{-1}, computed through the Schur
complement of the scatterer-scatterer block.  Globalization translates the
stacked local expansions to a single expansion about the global origin.

Antennas (structures with ports) must precede scatterers in the scene.
Structures with different truncation degrees are zero-padded into the
scene-wide basis: padded modes carry S = 1 (uncoupled) and zero R, T.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .components import GsMatrix, StructureInstance
from .rototranslation import (
    kappa_truncation,
    separability_margin,
    translate_outgoing,
    translate_regular,
)
from .wavefunctions import VswfBasis, canonical_basis, truncation_degree


class SeparabilityError(ValueError):
    """A structure pair violates the geometry required by the translation mode."""


@dataclass(frozen=True)
class TranslationPolicy:
    """How pairwise coupling operators are evaluated."""

    mode: str = "auto"                 # auto | force-analytic | force-integral
    kappa_m: float | None = None       # override for the integral truncation
    n_quad: int = 200

    def __post_init__(self):
        if self.mode not in ("auto", "force-analytic", "force-integral"):
            raise ValueError(f"unknown translation mode {self.mode!r}")
        if self.kappa_m is not None and self.kappa_m <= 1:
            raise ValueError("kappa_m must exceed 1")


@dataclass(frozen=True)
class SolverOptions:
    """Linear-solver policy for responses (direct dense or Neumann series)."""

    method: str = "direct"             # direct | neumann
    tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self):
        if self.method not in ("direct", "neumann"):
            raise ValueError(f"unknown solver method {self.method!r}")


class Scene:
    """Placed structures sharing one wavenumber and one scene-wide basis.

    Structures must be ordered antennas (n_ports > 0) first, scatterers
    after; all component matrices are embedded into the basis of the
    largest component truncation degree.
    """

    def __init__(self, structures, k: float, translation_policy: TranslationPolicy | None = None):
        if k <= 0:
            raise ValueError("wavenumber k must be positive")
        if not structures:
            raise ValueError("scene needs at least one structure")
        self.structures = tuple(structures)
        self.k = float(k)
        self.policy = translation_policy or TranslationPolicy()

        ports = [s.gs.n_ports for s in self.structures]
        first_scatterer = next((i for i, p in enumerate(ports) if p == 0), len(ports))
        if any(p > 0 for p in ports[first_scatterer:]):
            raise ValueError("structures must be ordered antennas first, then scatterers")
        self.n_antennas = first_scatterer
        self.n_scatterers = len(ports) - first_scatterer

        l_max = max(s.gs.basis.l_max for s in self.structures)
        self.basis = canonical_basis(l_max)
        self._gs = [_embed(s.placed_gs(), self.basis) for s in self.structures]
        self.port_counts = [g.n_ports for g in self._gs]
        self.n_ports = sum(self.port_counts)

    @property
    def j_modes(self) -> int:
        return len(self.basis)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.structures])

    def padded_gs(self, p: int) -> GsMatrix:
        """Component p's GS-matrix on the scene basis (rotation applied)."""
        return self._gs[p]

    def system_radius(self) -> float:
        return max(float(np.linalg.norm(s.position)) + s.bounding_radius
                   for s in self.structures)

    def global_l_max(self) -> int:
        """Truncation degree for the whole-system circumscribing sphere."""
        return max(truncation_degree(self.k * self.system_radius()), self.basis.l_max)

    def _label(self, p: int) -> str:
        lab = self.structures[p].label
        return lab if lab else f"structure {p}"


def _embed(gs: GsMatrix, basis: VswfBasis) -> GsMatrix:
    """Zero-pad a component matrix into a larger basis (S = 1 on padded modes)."""
    if gs.basis.l_max == basis.l_max:
        return gs
    if gs.basis.l_max > basis.l_max:
        raise ValueError("cannot embed into a smaller basis")
    j_small, j_big = len(gs.basis), len(basis)
    e = gs.n_ports
    r = np.zeros((e, j_big), dtype=complex)
    r[:, :j_small] = gs.r
    t = np.zeros((j_big, e), dtype=complex)
    t[:j_small, :] = gs.t
    s = np.eye(j_big, dtype=complex)
    s[:j_small, :j_small] = gs.s
    return GsMatrix(basis, e, gs.gamma.copy(), r, t, s)


# ---------------------------------------------------------------------------
# stacked operators
# ---------------------------------------------------------------------------

def _pair_mode(scene: Scene, p: int, q: int) -> str:
    """Pick analytic/integral per policy; raise if geometry forbids both."""
    sp, sq = scene.structures[p], scene.structures[q]
    d_vec = sp.position - sq.position
    d = float(np.linalg.norm(d_vec))
    sphere_gap = d - sp.bounding_radius - sq.bounding_radius
    u = d_vec / d if d > 0 else np.array([0.0, 0.0, 1.0])
    margin = separability_margin(sq.extent(u), sp.extent(u), d)

    mode = scene.policy.mode
    if mode == "force-analytic":
        if sphere_gap <= 0:
            raise SeparabilityError(
                f"{scene._label(p)} and {scene._label(q)}: circumscribing spheres "
                f"overlap (gap {sphere_gap:.6g}); analytic translation invalid")
        return "analytic"
    if mode == "force-integral":
        if margin <= 0:
            raise SeparabilityError(
                f"{scene._label(p)} and {scene._label(q)}: plane-separability "
                f"margin {margin:.6g} <= 0; integral translation invalid")
        return "integral"
    if sphere_gap > 0:
        return "analytic"
    if margin > 0:
        return "integral"
    raise SeparabilityError(
        f"{scene._label(p)} and {scene._label(q)}: structures are not separable "
        f"by a plane (sphere gap {sphere_gap:.6g}, margin {margin:.6g})")


def _pair_kappa(scene: Scene, p: int, q: int) -> float:
    if scene.policy.kappa_m is not None:
        return scene.policy.kappa_m
    kr = scene.k * max(scene.structures[p].bounding_radius,
                       scene.structures[q].bounding_radius)
    return kappa_truncation(scene.basis.l_max, kr)


def coupling_operator(scene: Scene) -> np.ndarray:
    """Stacked coupling matrix G_hat: block (p, q) = (1 - delta_pq) G(k d_pq)^t.

    d_pq = r_p - r_q; diagonal blocks vanish.  The mirrored block is
    obtained from the d -> -d transpose symmetry, so each unordered pair is
    evaluated once.
    """
    n = len(scene.structures)
    j = scene.j_modes
    out = np.zeros((n * j, n * j), dtype=complex)
    for p in range(n):
        for q in range(p + 1, n):
            mode = _pair_mode(scene, p, q)
            d_pq = scene.structures[p].position - scene.structures[q].position
            if mode == "integral":
                g = translate_outgoing(scene.basis, scene.k, d_pq, mode="integral",
                                       kappa_m=_pair_kappa(scene, p, q),
                                       n_quad=scene.policy.n_quad)
            else:
                g = translate_outgoing(scene.basis, scene.k, d_pq, mode="analytic")
            out[p * j:(p + 1) * j, q * j:(q + 1) * j] = g.entries.T
            # G(-d) = G(d)^t  =>  block(q, p) = block(p, q)^t
            out[q * j:(q + 1) * j, p * j:(p + 1) * j] = g.entries
    return out


def _stacked_s_minus_1(scene: Scene) -> np.ndarray:
    j = scene.j_modes
    n = len(scene.structures)
    out = np.zeros((n * j, n * j), dtype=complex)
    for p in range(n):
        out[p * j:(p + 1) * j, p * j:(p + 1) * j] = scene.padded_gs(p).s - np.eye(j)
    return out


def system_matrix(scene: Scene, ghat: np.ndarray | None = None) -> np.ndarray:
    """Auxiliary matrix M = 1 - (S_hat - 1) G_hat of the stacked system."""
    if ghat is None:
        ghat = coupling_operator(scene)
    sm1 = _stacked_s_minus_1(scene)
    return np.eye(ghat.shape[0]) - sm1 @ ghat


def schur_left_column(m_mat: np.ndarray, antenna_span: int) -> np.ndarray:
    """Left block column M_L of M^{-1} via the Schur complement of M_SS.

    ``antenna_span`` is the number of leading rows/columns belonging to
    antennas.  Satisfies M @ M_L = [1; 0].
    """
    n = m_mat.shape[0]
    ja = antenna_span
    m_as = m_mat[:ja, ja:]
    m_sa = m_mat[ja:, :ja]
    m_ss = m_mat[ja:, ja:]
    try:
        x = np.linalg.solve(m_ss, m_sa) if n > ja else np.zeros((0, ja), dtype=m_mat.dtype)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "scatterer block M_SS is singular; fall back to a direct full "
            "inverse of M") from exc
    schur = m_mat[:ja, :ja] - m_as @ x
    schur_inv = np.linalg.inv(schur)
    return np.vstack([schur_inv, -x @ schur_inv])


@dataclass(frozen=True)
class NeumannResult:
    """Outcome of a truncated Neumann-series solve."""

    x: np.ndarray
    iterations: int
    residual: float
    history: tuple
    converged: bool


def neumann_apply(sm1: np.ndarray, ghat: np.ndarray, rhs: np.ndarray,
                  tol: float = 1e-10, max_iter: int = 50) -> NeumannResult:
    """x = sum_k [(S_hat - 1) G_hat]^k rhs, truncated on relative increment.

    Matrix-vector products only; no inverse is formed.  On reaching
    ``max_iter`` without convergence the partial sum is returned with
    ``converged=False`` and the increment history for diagnosis.
    """
    x = rhs.astype(complex).copy()
    term = x.copy()
    history = []
    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        term = sm1 @ (ghat @ term)
        x += term
        inc = float(np.linalg.norm(term) / max(np.linalg.norm(x), 1e-300))
        history.append(inc)
        iterations = it
        if inc < tol:
            converged = True
            break
    residual = float(np.linalg.norm(x - sm1 @ (ghat @ x) - rhs))
    return NeumannResult(x, iterations, residual, tuple(history), converged)


# ---------------------------------------------------------------------------
# local synthesis and globalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemBlocks:
    """System GS blocks in stacked-local coordinates, plus span bookkeeping."""

    gamma_g: np.ndarray       # (e_tot, e_tot)
    r_g: np.ndarray           # (e_tot, n j)
    t_g: np.ndarray           # (n j, e_tot)
    s_g_minus_1: np.ndarray   # (n j, n j)
    j_modes: int
    port_counts: tuple

    @property
    def n_structures(self) -> int:
        return self.s_g_minus_1.shape[0] // self.j_modes


def _antenna_blocks(scene: Scene):
    """Block-diagonal Gamma_hat, R_hat, T_hat over the antenna set."""
    j = scene.j_modes
    m = scene.n_antennas
    e_tot = scene.n_ports
    gam = np.zeros((e_tot, e_tot), dtype=complex)
    rr = np.zeros((e_tot, m * j), dtype=complex)
    tt = np.zeros((m * j, e_tot), dtype=complex)
    off = 0
    for p in range(m):
        g = scene.padded_gs(p)
        e = g.n_ports
        gam[off:off + e, off:off + e] = g.gamma
        rr[off:off + e, p * j:(p + 1) * j] = g.r
        tt[p * j:(p + 1) * j, off:off + e] = g.t
        off += e
    return gam, rr, tt


def synthesize_local(scene: Scene, ml_method: str = "schur") -> SystemBlocks:
    """Form the stacked-local system blocks (direct dense solves).

    ``ml_method`` selects the Schur-complement route for M_L ("schur") or
    the full inverse of M ("full"); the two agree and exist as separate
    paths so the degenerate antenna-only reduction M_L = M^{-1} can be
    exercised explicitly.
    """
    if ml_method not in ("schur", "full"):
        raise ValueError(f"ml_method must be 'schur' or 'full', got {ml_method!r}")
    j = scene.j_modes
    n = len(scene.structures)
    m_ant = scene.n_antennas
    ja = m_ant * j
    ghat = coupling_operator(scene)
    sm1 = _stacked_s_minus_1(scene)
    m_mat = np.eye(n * j) - sm1 @ ghat
    s_g_minus_1 = np.linalg.solve(m_mat, sm1)
    gam, rr, tt = _antenna_blocks(scene)
    if m_ant == 0:
        return SystemBlocks(gam, np.zeros((0, n * j), dtype=complex),
                            np.zeros((n * j, 0), dtype=complex),
                            s_g_minus_1, j, tuple(scene.port_counts))
    if ml_method == "schur":
        m_l = schur_left_column(m_mat, ja)
    else:
        m_l = np.linalg.inv(m_mat)[:, :ja]
    ghat_a = ghat[:ja, :]
    t_g = m_l @ tt
    gamma_g = gam + rr @ (ghat_a @ t_g)
    r_g = np.hstack([rr, np.zeros((scene.n_ports, (n - m_ant) * j), dtype=complex)])
    r_g = r_g + rr @ (ghat_a @ s_g_minus_1)
    return SystemBlocks(gamma_g, r_g, t_g, s_g_minus_1, j, tuple(scene.port_counts))


def synthesize_local_split(scene: Scene):
    """Diagnostic decomposition: (intrinsic, coupling) parts of the blocks.

    The intrinsic part is the block-diagonal isolated response of each
    component; the coupling part carries every interaction term.  Their
    sums equal the synthesize_local blocks.
    """
    full = synthesize_local(scene)
    j = scene.j_modes
    n = len(scene.structures)
    gam, rr, tt = _antenna_blocks(scene)
    sm1 = _stacked_s_minus_1(scene)
    r0 = np.hstack([rr, np.zeros((scene.n_ports, (n - scene.n_antennas) * j), dtype=complex)])
    t0 = np.vstack([tt, np.zeros(((n - scene.n_antennas) * j, scene.n_ports), dtype=complex)])
    intrinsic = SystemBlocks(gam, r0, t0, sm1, j, tuple(scene.port_counts))
    coupling = SystemBlocks(full.gamma_g - gam, full.r_g - r0, full.t_g - t0,
                            full.s_g_minus_1 - sm1, j, tuple(scene.port_counts))
    return intrinsic, coupling


def _global_translators(scene: Scene, l_max: int):
    """R_p operators mapping each local origin to the global origin.

    Returned as (j_global, j_scene) slabs: columns are the scene-basis
    modes (the canonical ordering nests by degree, so the leading columns
    of the global operator are exactly the scene modes).
    """
    gbasis = canonical_basis(l_max)
    j_s = scene.j_modes
    slabs = []
    for s in scene.structures:
        r_op = translate_regular(gbasis, scene.k, s.position)
        slabs.append(r_op.entries[:, :j_s])
    return gbasis, slabs


def globalize(blocks: SystemBlocks, scene: Scene, l_max: int | None = None) -> GsMatrix:
    """System GS-matrix on a single global basis about the origin.

    Gamma is unchanged; R, T and S - 1 are conjugated by the stacked
    regular translators R_hat = [R_1 ... R_n].  The global truncation
    defaults to the system circumscribing sphere rule and may not be below
    the scene basis degree.
    """
    if l_max is None:
        l_max = scene.global_l_max()
    if l_max < scene.basis.l_max:
        raise ValueError(
            f"global l_max {l_max} is below the scene basis degree {scene.basis.l_max}")
    gbasis, slabs = _global_translators(scene, l_max)
    rhat = np.hstack(slabs)
    s_minus_1 = rhat @ blocks.s_g_minus_1 @ rhat.T
    j_g = len(gbasis)
    s = np.eye(j_g, dtype=complex) + s_minus_1
    r = blocks.r_g @ rhat.T
    t = rhat @ blocks.t_g
    return GsMatrix(gbasis, scene.n_ports, blocks.gamma_g.copy(), r, t, s)


def system_response(scene: Scene, v: np.ndarray | None, a_global: np.ndarray | None,
                    solver: SolverOptions | None = None,
                    l_max: int | None = None):
    """Port and global-wave response (w_hat, f_global) to an excitation.

    ``v`` stacks the antenna port excitations (length total ports) and
    ``a_global`` is the incident expansion on the global basis; either may
    be None for zero.  Computed matrix-free from the stacked system: the
    scattered locals come from one linear solve (direct or Neumann per
    ``solver``), then are translated to the global origin.
    """
    solver = solver or SolverOptions()
    if l_max is None:
        l_max = scene.global_l_max()
    if l_max < scene.basis.l_max:
        raise ValueError("global l_max below the scene basis degree")
    j = scene.j_modes
    n = len(scene.structures)
    m_ant = scene.n_antennas
    ja = m_ant * j
    gbasis, slabs = _global_translators(scene, l_max)
    if v is None:
        v = np.zeros(scene.n_ports, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if v.shape != (scene.n_ports,):
        raise ValueError(f"v must have length {scene.n_ports}")
    if a_global is None:
        a_global = np.zeros(len(gbasis), dtype=complex)
    a_global = np.asarray(a_global, dtype=complex)
    if a_global.shape != (len(gbasis),):
        raise ValueError(f"a_global must have length {len(gbasis)}")

    a_d = np.concatenate([slab.T @ a_global for slab in slabs])
    ghat = coupling_operator(scene)
    sm1 = _stacked_s_minus_1(scene)
    gam, rr, tt = _antenna_blocks(scene)
    rhs = sm1 @ a_d
    if m_ant:
        rhs[:ja] += tt @ v
    if solver.method == "neumann":
        res = neumann_apply(sm1, ghat, rhs, tol=solver.tol, max_iter=solver.max_iter)
        if not res.converged:
            warnings.warn(
                f"Neumann series did not converge in {res.iterations} iterations "
                f"(last increment {res.history[-1]:.3e}); falling back to a "
                "direct solve", stacklevel=2)
            m_mat = np.eye(n * j) - sm1 @ ghat
            fhat = np.linalg.solve(m_mat, rhs)
        else:
            fhat = res.x
    else:
        m_mat = np.eye(n * j) - sm1 @ ghat
        fhat = np.linalg.solve(m_mat, rhs)

    w = np.zeros(scene.n_ports, dtype=complex)
    if m_ant:
        w = gam @ v + rr @ a_d[:ja] + rr @ (ghat[:ja, :] @ fhat)
    f_global = np.zeros(len(gbasis), dtype=complex)
    for p, slab in enumerate(slabs):
        f_global += slab @ fhat[p * j:(p + 1) * j]
    return w, f_global
