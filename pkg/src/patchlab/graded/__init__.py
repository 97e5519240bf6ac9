"""Graded commutative algebra over F_p[x_1..x_q]."""

from .modules import (GradedComplex, GradedModule, HilbertData, HomologicalReport, Resolution,
                      annihilator, check_depth_bound, check_length_criterion, cyclic_module,
                      depth_pd, direct_sum, free_module, graded_koszul, hilbert_data,
                      minimal_free_resolution, monomial_quotient, nearly_faithful, submodule)
from .poly import GB, buchberger, syzygies

__all__ = [
    "GB", "GradedComplex", "GradedModule", "HilbertData", "HomologicalReport", "Resolution",
    "annihilator", "buchberger", "check_depth_bound", "check_length_criterion", "cyclic_module",
    "depth_pd", "direct_sum", "free_module", "graded_koszul", "hilbert_data",
    "minimal_free_resolution", "monomial_quotient", "nearly_faithful", "submodule", "syzygies",
]
