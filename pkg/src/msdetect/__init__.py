"""Matched subspace detection when most entries of the signal are missing."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    LemmaValidationReport,
    SandwichBound,
    TheoremParams,
    min_samples,
    sandwich,
    theorem_params,
    validate_lemma1,
    validate_lemma2,
    validate_lemma3,
)
from .coherence import CoherenceReport, subspace_coherence, vector_coherence  # noqa: E402
from .detect import (  # noqa: E402
    DetectionOutcome,
    Hypothesis,
    TestConfig,
    chi2_quantile,
    detection_probability,
    noiseless_test,
    noisy_test,
    noncentral_chi2_sf,
)
from .estimator import ResidualReport, full_residual_energy, residual_energy, zero_fill_residual  # noqa: E402
from .sampling import SeedSpec, sample_with_replacement, sample_without_replacement  # noqa: E402
from .vecspace import (  # noqa: E402
    RestrictedBasis,
    SampleIndexSet,
    SubspaceBasis,
    decompose,
    orthonormalize,
    project_full,
    project_restricted,
    restrict,
    restrict_vector,
)
