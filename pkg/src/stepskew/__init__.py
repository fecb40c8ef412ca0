"""Simulator and desk-scale verifier for step skew products whose
statistical attractor carries an invisible part."""

from .baseseq import BaseSequence, craft_base, sample_base
from .fiber import FiberFamily, make_family
from .orbit import (
    OrbitEscapeError,
    PerturbationSpec,
    apply_word,
    apply_word_box,
    make_perturbation,
    run_ensemble,
    run_orbit,
)
from .params import Box, Params, RegionId, derive_params, region_box, region_contains
from .verify import (
    attractor_histogram,
    check_directional_movement,
    check_discrepancy_bound,
    check_norm_bounds,
    check_strip_dynamics,
    check_zero_run_lemma,
    invisibility_report,
)
from .words import (
    check_ifs_assumptions,
    critical_word_for,
    entry_word,
    make_descent_base,
    negut_frequency_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "BaseSequence",
    "Box",
    "FiberFamily",
    "OrbitEscapeError",
    "Params",
    "PerturbationSpec",
    "RegionId",
    "__version__",
    "apply_word",
    "apply_word_box",
    "attractor_histogram",
    "check_directional_movement",
    "check_discrepancy_bound",
    "check_ifs_assumptions",
    "check_norm_bounds",
    "check_strip_dynamics",
    "check_zero_run_lemma",
    "craft_base",
    "critical_word_for",
    "derive_params",
    "entry_word",
    "invisibility_report",
    "make_descent_base",
    "make_family",
    "make_perturbation",
    "negut_frequency_experiment",
    "region_box",
    "region_contains",
    "run_ensemble",
    "run_orbit",
    "sample_base",
]
