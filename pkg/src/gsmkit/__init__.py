"""gsmkit: generalized scattering matrix synthesis for hybrid antenna-scatterer systems."""

__version__ = "0.1.0"

_EXPORTS = {
    # wavefunctions
    "VswfIndex": "wavefunctions",
    "VswfBasis": "wavefunctions",
    "canonical_basis": "wavefunctions",
    "index_count": "wavefunctions",
    "truncation_degree": "wavefunctions",
    "spherical_bessel_j": "wavefunctions",
    "spherical_hankel2": "wavefunctions",
    "normalized_legendre": "wavefunctions",
    "delta_pi": "wavefunctions",
    "jacobi_polynomial": "wavefunctions",
    "wigner3j": "wavefunctions",
    "gauss_legendre": "wavefunctions",
    # rototranslation
    "LinearOperatorOnModes": "rototranslation",
    "TranslationSpec": "rototranslation",
    "wigner_d_small": "rototranslation",
    "rotation_matrix": "rototranslation",
    "translation_z_regular": "rototranslation",
    "translation_z_outgoing_analytic": "rototranslation",
    "translation_z_outgoing_integral": "rototranslation",
    "kappa_truncation": "rototranslation",
    "translate_regular": "rototranslation",
    "translate_outgoing": "rototranslation",
    "separability_margin": "rototranslation",
    # components
    "GsMatrix": "components",
    "StructureInstance": "components",
    "ExpansionVector": "components",
    "mie_pec_sphere": "components",
    "mie_dielectric_sphere": "components",
    "canonical_dipole_antenna": "components",
    "rotate_gs": "components",
    "passivity_report": "components",
    "save_gsm": "components",
    "load_gsm": "components",
    "GsmParseError": "components",
    # synthesis
    "Scene": "synthesis",
    "SystemBlocks": "synthesis",
    "TranslationPolicy": "synthesis",
    "SolverOptions": "synthesis",
    "SeparabilityError": "synthesis",
    "coupling_operator": "synthesis",
    "system_matrix": "synthesis",
    "schur_left_column": "synthesis",
    "neumann_apply": "synthesis",
    "synthesize_local": "synthesis",
    "synthesize_local_split": "synthesis",
    "globalize": "synthesis",
    "system_response": "synthesis",
    # observables
    "PlaneWaveSpec": "observables",
    "FarFieldCut": "observables",
    "plane_wave_coefficients": "observables",
    "far_field": "observables",
    "bistatic_rcs": "observables",
    "gain_pattern": "observables",
    "port_sparams": "observables",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    # lazy imports keep `import gsmkit` light and let the CLI cap BLAS
    # threads before any numerical module loads
    if name in _EXPORTS:
        import importlib

        mod = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(mod, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return __all__
