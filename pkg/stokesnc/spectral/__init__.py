"""Spectrum and eigenfunctions of the Stokes operator in a periodic channel.

Root localization and refinement of the characteristic equation, closed-form
eigenfunctions and an independent Galerkin oracle.
"""
from .roots import (ModeIndex, SpectralRoot, char_eq, rearranged_f,
                    rearranged_f_prime, bracket_roots, refine_root,
                    determinant_residual, zero_mode_eigenvalue,
                    gap_and_summability, localization_report,
                    compute_mode_roots, detect_k0)
from .eigenfunctions import (EigenfunctionCoefficients, ModalEigenfunction,
                             coefficients, evaluate_xi, evaluate_phi,
                             evaluate_q, xi_triple_prime_at_one,
                             modal_eigenfunction, normalize_and_gram,
                             trace_bound_report)
from .oracle import collocation_spectrum_oracle
from .base import ChannelSpectrum

__all__ = ["ModeIndex",
           "SpectralRoot",
           "char_eq",
           "rearranged_f",
           "rearranged_f_prime",
           "bracket_roots",
           "refine_root",
           "determinant_residual",
           "zero_mode_eigenvalue",
           "gap_and_summability",
           "localization_report",
           "compute_mode_roots",
           "detect_k0",
           "EigenfunctionCoefficients",
           "ModalEigenfunction",
           "coefficients",
           "evaluate_xi",
           "evaluate_phi",
           "evaluate_q",
           "xi_triple_prime_at_one",
           "modal_eigenfunction",
           "normalize_and_gram",
           "trace_bound_report",
           "collocation_spectrum_oracle",
           "ChannelSpectrum"]
