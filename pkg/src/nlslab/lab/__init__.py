"""Numerical checks of the lattice sums, smoothing and bilinear estimates."""

from .probes import (bilinear_ratio, check_cp_bound, kpv_bilinear_ratio, kpv_failure_probe,
                     random_expsum_field, smoothing_sweep, sup_I)
from .region import RegionSpec, admissible_region, scaling_check, theorem_hypotheses
from .sums import (SupSumReport, check_convolution_lemma, check_corollary_sums,
                   check_decay_lemma, double_root_family, sup_sum_quadratic, sup_sum_shift)

__all__ = [
    "SupSumReport", "sup_sum_shift", "sup_sum_quadratic", "double_root_family",
    "check_corollary_sums", "check_decay_lemma", "check_convolution_lemma",
    "check_cp_bound", "sup_I", "bilinear_ratio", "kpv_bilinear_ratio", "kpv_failure_probe",
    "random_expsum_field", "smoothing_sweep",
    "RegionSpec", "admissible_region", "theorem_hypotheses", "scaling_check",
]
