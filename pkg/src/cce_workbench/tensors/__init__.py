"""Chart-based tensor calculus and conformal transformation laws."""
from .metric import (
    MetricChart, TensorField, metric_inverse, christoffel, riemann, ricci, scalar_curvature,
    covariant_derivative, laplacian_power, rough_trace, schouten, trace_free_part, trace,
    unit_normal, second_fundamental_form, harmonic_residual, ricci_harmonic_decomposition,
    at_boundary,
)
