"""
densitybayes
~~~~~~~~~~~~
Probability calculus on density matrices: generalized probabilities ``u^T A u``,
joints and partial traces, the commutative ``S (.) T = exp(log S + log T)``
product, conditionals, Bayes rules, marginal recovery and continuous-time
updates. Diagonal inputs reduce every operation to conventional probability.
"""
from .bayes import (
    BayesUpdate,
    BoundReport,
    TotalProbabilityReport,
    bayes_B_given_A,
    bayes_B_given_a,
    bayes_b_given_A,
    bayes_full,
    bayes_iterate,
    bayes_main,
    bayes_scalar,
    bound_report,
    total_probability_report,
)
from .conditional import (
    Conditional,
    FullConditional,
    certifies_entanglement,
    cond_full,
    cond_given_A,
    cond_given_a,
    cond_given_b,
    cond_scalar,
    separability_witness,
)
from .dynamics import (
    FlowTrace,
    conjugate,
    conjugate_flow,
    flow_conventional,
    flow_generalized,
    integrate_log_ode,
)
from .em_invert import InversionResult, em_invert, em_step
from .errors import *  # noqa: F401,F403
from .gleason import (
    Density,
    EventProjector,
    as_density,
    dyad,
    event_prob,
    expectation,
    mixture_density,
    prob,
    random_density,
    sphere_average,
    unit_vector,
)
from .odot import OdotResult, golden_thompson_gap, odot, odot_all, odot_lie_limit
from .symmat import (
    SpectralMatrix,
    Spectrum,
    eigendecompose,
    jacobi_eigh,
    mat_exp,
    mat_log,
    mat_log_plus,
    mat_power,
    pseudo_inverse,
)
from .tensor import (
    JointDensity,
    bell_joint,
    joint_prob,
    kron,
    marginal,
    partial_trace,
    product_joint,
    separable_joint,
    slice_a,
    slice_b,
)

__version__ = "0.1.0"
