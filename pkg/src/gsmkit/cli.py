"""Command-line front end.

Subcommands: translate (operator dumps), synthesize (scene to system
GS-matrix file), rcs (bistatic cut CSV), pattern (gain cut CSV), sparams
(port S-parameter table), validate (GS-matrix file report).

Scene files are line-oriented ``key = value`` stanzas under [global],
[structure] (repeatable) and [solver] section headers; lengths are in
millimeters, frequencies in MHz.  Unknown keys are rejected.

Exit codes: 0 success, 2 usage or parse error, 3 geometry/precondition
violation, 4 numerical failure.
"""

from __future__ import annotations

import os

# Honor the thread cap before any BLAS-backed import happens.
_threads = os.environ.get("GSMKIT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import sys
from math import pi

import numpy as np

from .components import (
    GsmParseError,
    StructureInstance,
    canonical_dipole_antenna,
    load_gsm,
    mie_dielectric_sphere,
    mie_pec_sphere,
    passivity_report,
    save_gsm,
    save_operator,
)
from .observables import (
    CUT_PLANES,
    PlaneWaveSpec,
    bistatic_rcs,
    gain_pattern,
    port_sparams,
    write_gain_csv,
    write_rcs_csv,
)
from .rototranslation import (
    translation_z_outgoing_analytic,
    translation_z_outgoing_integral,
    translation_z_regular,
)
from .synthesis import (
    Scene,
    SeparabilityError,
    SolverOptions,
    TranslationPolicy,
    globalize,
    synthesize_local,
)
from .wavefunctions import canonical_basis, truncation_degree

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GEOMETRY = 3
EXIT_NUMERICAL = 4

C_MM_PER_S = 2.99792458e11


class SceneFileError(ValueError):
    """Malformed scene file; message carries the line number."""


# ---------------------------------------------------------------------------
# scene files
# ---------------------------------------------------------------------------

_GLOBAL_KEYS = {"frequency_mhz", "k_per_mm", "lmax"}
_STRUCTURE_KEYS = {"type", "label", "radius_mm", "eps_re", "eps_im", "path",
                   "position_mm", "euler_deg", "lmax", "phase_deg",
                   "bounding_radius_mm"}
_SOLVER_KEYS = {"method", "tol", "max_iter", "translation", "kappa", "n_quad"}
_TOP_KEYS = {"version"}


def _parse_stanzas(path):
    """Split the file into (top, global, [structures], solver) key dicts."""
    top, glob, solver = {}, {}, {}
    structures = []
    current = top
    current_keys = _TOP_KEYS
    with open(path, "r", encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                name = line.strip("[]").strip().lower()
                if name == "global":
                    current, current_keys = glob, _GLOBAL_KEYS
                elif name == "structure":
                    structures.append({})
                    current, current_keys = structures[-1], _STRUCTURE_KEYS
                elif name == "solver":
                    current, current_keys = solver, _SOLVER_KEYS
                else:
                    raise SceneFileError(f"line {no}: unknown section [{name}]")
                continue
            if "=" not in line:
                raise SceneFileError(f"line {no}: expected 'key = value', got {line!r}")
            key, val = (t.strip() for t in line.split("=", 1))
            key = key.lower()
            if key not in current_keys:
                raise SceneFileError(f"line {no}: unknown key {key!r}")
            if key in current:
                raise SceneFileError(f"line {no}: duplicate key {key!r}")
            current[key] = (val, no)
    return top, glob, structures, solver


def _take(d, key, conv, default=None, required=False):
    if key not in d:
        if required:
            raise SceneFileError(f"missing required key {key!r}")
        return default
    val, no = d[key]
    try:
        return conv(val)
    except ValueError:
        raise SceneFileError(f"line {no}: bad value for {key!r}: {val!r}")


def _vec3(val: str):
    parts = val.split()
    if len(parts) != 3:
        raise ValueError("need three numbers")
    return np.array([float(p) for p in parts])


def load_scene(path):
    """Build a Scene (and solver options) from a scene file.

    Antennas are moved ahead of scatterers (stable order within each
    group); the port numbering follows the resulting antenna order.
    """
    top, glob, stanzas, solver = _parse_stanzas(path)
    version = _take(top, "version", int, default=1)
    if version != 1:
        raise SceneFileError(f"unsupported scene file version {version}")
    freq = _take(glob, "frequency_mhz", float)
    k = _take(glob, "k_per_mm", float)
    if (freq is None) == (k is None):
        raise SceneFileError("[global] needs exactly one of frequency_mhz or k_per_mm")
    if k is None:
        if freq <= 0:
            raise SceneFileError("frequency_mhz must be positive")
        k = 2.0 * pi * freq * 1e6 / C_MM_PER_S
    elif k <= 0:
        raise SceneFileError("k_per_mm must be positive")
    scene_lmax = _take(glob, "lmax", int)
    if not stanzas:
        raise SceneFileError("scene has no [structure] stanzas")

    instances = []
    for i, st in enumerate(stanzas):
        typ = _take(st, "type", str, required=True).lower()
        label = _take(st, "label", str, default=f"structure {i}")
        pos = _take(st, "position_mm", _vec3, default=np.zeros(3))
        euler_deg = _take(st, "euler_deg", _vec3, default=np.zeros(3))
        euler = tuple(np.radians(euler_deg))
        lmax_in = _take(st, "lmax", int)

        if typ in ("mie-pec", "mie-dielectric"):
            radius = _take(st, "radius_mm", float, required=True)
            if radius <= 0:
                raise SceneFileError(f"structure {i}: radius_mm must be positive")
            lmax = lmax_in or scene_lmax or truncation_degree(k * radius)
            basis = canonical_basis(lmax)
            if typ == "mie-pec":
                gs = mie_pec_sphere(basis, k * radius)
            else:
                eps_re = _take(st, "eps_re", float, required=True)
                eps_im = _take(st, "eps_im", float, default=0.0)
                gs = mie_dielectric_sphere(basis, k * radius, complex(eps_re, eps_im))
            bounding = _take(st, "bounding_radius_mm", float, default=radius)
        elif typ == "dipole":
            lmax = lmax_in or scene_lmax or 1
            basis = canonical_basis(lmax)
            phase = np.radians(_take(st, "phase_deg", float, default=0.0))
            gs = canonical_dipole_antenna(basis, phase=phase)
            default_r = pi / (2.0 * k)  # quarter wavelength
            bounding = _take(st, "bounding_radius_mm", float, default=default_r)
        elif typ == "file":
            gpath = _take(st, "path", str, required=True)
            if not os.path.isabs(gpath):
                gpath = os.path.join(os.path.dirname(os.path.abspath(path)), gpath)
            gs = load_gsm(gpath)
            bounding = _take(st, "bounding_radius_mm", float, required=True)
        else:
            raise SceneFileError(f"structure {i}: unknown type {typ!r}")
        if bounding <= 0:
            raise SceneFileError(f"structure {i}: bounding radius must be positive")
        instances.append(StructureInstance(gs, pos, bounding, euler=euler, label=label))

    # antennas first; stable within each group
    instances.sort(key=lambda s: 0 if s.gs.n_ports > 0 else 1)

    mode = _take(solver, "translation", str, default="auto").lower()
    mode_map = {"auto": "auto", "analytic": "force-analytic",
                "integral": "force-integral"}
    if mode not in mode_map:
        raise SceneFileError(f"translation must be auto, analytic or integral, got {mode!r}")
    policy = TranslationPolicy(
        mode=mode_map[mode],
        kappa_m=_take(solver, "kappa", float),
        n_quad=_take(solver, "n_quad", int, default=200),
    )
    opts = SolverOptions(
        method=_take(solver, "method", str, default="direct").lower(),
        tol=_take(solver, "tol", float, default=1e-10),
        max_iter=_take(solver, "max_iter", int, default=50),
    )
    return Scene(instances, k, policy), opts


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_translate(args) -> int:
    basis = canonical_basis(args.lmax)
    if args.mode == "regular":
        op = translation_z_regular(basis, args.kd)
    elif args.mode == "analytic":
        op = translation_z_outgoing_analytic(basis, args.kd)
    else:
        if args.kappa is None:
            print("error: integral mode requires --kappa", file=sys.stderr)
            return EXIT_USAGE
        if args.kappa <= 1.0:
            print("error: kappa must exceed 1", file=sys.stderr)
            return EXIT_USAGE
        op = translation_z_outgoing_integral(basis, args.kd, args.kappa, args.nquad)
    save_operator(op, args.out)
    return EXIT_OK


def _cmd_synthesize(args) -> int:
    scene, _ = load_scene(args.scene)
    blocks = synthesize_local(scene)
    system = globalize(blocks, scene, l_max=args.lmax_global)
    save_gsm(system, args.out)
    print(f"wrote {args.out}: lmax {system.basis.l_max}, ports {system.n_ports}")
    return EXIT_OK


def _parse_triplet(text, name):
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise SceneFileError(f"{name} needs three components, got {text!r}")
    return np.array([float(p) for p in parts])


def _cmd_rcs(args) -> int:
    scene, opts = load_scene(args.scene)
    spec = PlaneWaveSpec(_parse_triplet(args.incidence, "--incidence"),
                         _parse_triplet(args.pol, "--pol"))
    angles = np.radians(np.arange(-180.0, 180.0 + args.step / 2.0, args.step))
    ang, sigma = bistatic_rcs(scene, spec, plane=args.cut, angles=angles, solver=opts)
    with np.errstate(divide="ignore"):
        dbsm = 10.0 * np.log10(sigma * 1e-6)   # mm^2 -> m^2
    write_rcs_csv(args.out, ang, dbsm)
    print(f"wrote {args.out}: {len(ang)} rows")
    return EXIT_OK


def _cmd_pattern(args) -> int:
    scene, opts = load_scene(args.scene)
    if not args.excite.startswith("port="):
        print("error: --excite must look like port=<index>", file=sys.stderr)
        return EXIT_USAGE
    port = int(args.excite.split("=", 1)[1])
    if not 1 <= port <= scene.n_ports:
        print(f"error: port {port} out of range 1..{scene.n_ports}", file=sys.stderr)
        return EXIT_USAGE
    v = np.zeros(scene.n_ports, dtype=complex)
    v[port - 1] = 1.0
    angles = np.radians(np.arange(-180.0, 180.0 + args.step / 2.0, args.step))
    cut, gain_dbi, peak = gain_pattern(scene, v, plane=args.cut, angles=angles, solver=opts)
    phase = np.degrees(np.angle(cut.e_theta))
    write_gain_csv(args.out, cut.angles, gain_dbi, phase)
    print(f"wrote {args.out}: {len(cut.angles)} rows, peak {peak:.2f} dBi")
    return EXIT_OK


def _cmd_sparams(args) -> int:
    scene, opts = load_scene(args.scene)
    if scene.n_ports == 0:
        print("error: scene has no antenna ports", file=sys.stderr)
        return EXIT_USAGE
    blocks = synthesize_local(scene)
    system = globalize(blocks, scene)
    rep = port_sparams(system)
    n = scene.n_ports
    print("port S-parameters (dB / deg):")
    for i in range(n):
        cells = [f"G{i+1}{j+1} {rep['db'][i, j]:8.2f} dB {rep['phase_deg'][i, j]:8.2f} deg"
                 for j in range(n)]
        print("  " + "   ".join(cells))
    return EXIT_OK


def _cmd_validate(args) -> int:
    gs = load_gsm(args.path)
    rep = passivity_report(gs)
    print(f"lmax {gs.basis.l_max}, modes {len(gs.basis)}, ports {gs.n_ports}")
    print(f"max singular value: {rep['max_singular_value']:.6g}")
    print(f"unitarity defect:   {rep['unitarity_defect']:.3e}")
    if rep["unitarity_defect"] < 1e-10:
        print(f"unitary within {max(rep['unitarity_defect'], 1e-16):.0e}")
    elif rep["max_singular_value"] <= 1.0 + 1e-6:
        print("passive (non-unitary): lossy structure")
    else:
        print("warning: not passive")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gsmkit",
        description="Generalized scattering matrix synthesis for antenna-scatterer systems",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("translate", help="dump a z-axis translation operator")
    t.add_argument("--lmax", type=int, required=True)
    t.add_argument("--kd", type=float, required=True)
    t.add_argument("--mode", choices=("regular", "analytic", "integral"), required=True)
    t.add_argument("--kappa", type=float, default=None)
    t.add_argument("--nquad", type=int, default=200)
    t.add_argument("--out", required=True)
    t.set_defaults(func=_cmd_translate)

    s = sub.add_parser("synthesize", help="synthesize the system GS-matrix of a scene")
    s.add_argument("scene")
    s.add_argument("--out", required=True)
    s.add_argument("--lmax-global", type=int, default=None)
    s.set_defaults(func=_cmd_synthesize)

    r = sub.add_parser("rcs", help="bistatic RCS cut to CSV")
    r.add_argument("scene")
    r.add_argument("--incidence", required=True, help="propagation direction dx,dy,dz")
    r.add_argument("--pol", required=True, help="polarization px,py,pz")
    r.add_argument("--cut", choices=CUT_PLANES, default="xoz")
    r.add_argument("--step", type=float, default=1.0, help="angle step in degrees")
    r.add_argument("--out", required=True)
    r.set_defaults(func=_cmd_rcs)

    p = sub.add_parser("pattern", help="gain pattern cut to CSV")
    p.add_argument("scene")
    p.add_argument("--excite", required=True, help="port=<1-based index>")
    p.add_argument("--cut", choices=CUT_PLANES, default="xoz")
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pattern)

    q = sub.add_parser("sparams", help="print port S-parameters of a scene")
    q.add_argument("scene")
    q.set_defaults(func=_cmd_sparams)

    v = sub.add_parser("validate", help="validate a GS-matrix file")
    v.add_argument("path")
    v.set_defaults(func=_cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (SceneFileError, GsmParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SeparabilityError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
