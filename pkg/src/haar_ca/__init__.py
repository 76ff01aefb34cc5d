"""Cesàro randomisation of Markov measures by Phi = id + sigma on Markov subgroups."""
from .errors import (
    CompatibilityError,
    DomainError,
    HaarCAError,
    NonSurjectiveError,
    NotIrreducibleError,
    NotSubgroupError,
    ParameterError,
    PreconditionError,
    ResourceError,
    StructureError,
    ValidationError,
)
from .group import GroupElement, GroupSpec, add, enumerate_elements, neg, scalar_mul, unit_inverse
from .shift import (
    CylinderDistribution,
    SubgroupShift,
    enumerate_words,
    follower_set,
    haar_kernel,
    haar_marginal,
    path_count,
    validate_subgroup_shift,
)
from .measure import (
    MarkovMeasure,
    PathTrace,
    RegenSampler,
    RenewalStats,
    build_regen,
    delta_bound,
    haar_measure,
    m_separated,
    renewal_times,
    sample_path,
    step_H,
    validate_measure,
)
from .binomial import (
    DigitExpansion,
    IsolationReport,
    binom_mod,
    carry_count,
    digit_profile,
    in_M0,
    isolated_set,
    lemma34_check,
    m0_density,
)
from .pushforward import (
    CesaroReport,
    PhiCoefficientRow,
    Subsequence,
    brute_marginal,
    cesaro_scan,
    check_haar_fixed,
    check_lemma31,
    check_lemma32,
    exact_marginal,
    mc_marginal,
    phi_row,
    tv_distance,
)

__version__ = "0.1.0"
