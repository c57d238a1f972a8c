"""Finite-truncation engine for Wilson loops in the one-loop Chern-Simons expansion."""

from .errors import DomainError, InvariantViolation, ValidationError
from .expansion import ExpansionReport, closed_form_su2, coefficient_jm, decay_check, series_su2
from .gaussian import GaussianSystem, LoopData, SampleBatch, mc_wilson, realize_process, sample, wick_moment
from .geometry import LoopCurve, Mollifier, SmoothOneForm, line_integral, mollified_line_integral
from .lie_rep import RepBasis, casimir_tensor, su2_basis, tensor_power, tensor_trace_power
from .signature import DrivingPath, GradedHolonomy, holonomy_full, holonomy_graded, tail_bound, wilson_slices
from .spectral import (CurrentPath, CurrentVector, SpectralModel, covariance_rk, cs_form, dual_lift,
                       inner_p, rk_coefficients, z_normalizer)
from .topology import LinkResult, link, linking_crossing, linking_gauss

__version__ = "0.1.0"
