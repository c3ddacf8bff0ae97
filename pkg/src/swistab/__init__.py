"""Stability analysis for discrete-time switched linear systems ``x_n = S_{s_n} ... S_{s_1} x_0``
whose matrices share a common, not necessarily strict, quadratic Lyapunov function.
"""

__version__ = "0.1.0"

from .dynamics import (
    Dichotomy,
    dichotomy_check,
    iterate,
    monte_carlo_stability,
    omega_estimate,
    split2,
    split_from_limit,
)
from .errors import SwistabError
from .ksub import (
    Subspace,
    check_iv1,
    intersect,
    is_invariant,
    k_conorm_subspace,
    k_subspace,
    unit_gain_subspace,
)
from .lyapunov import (
    LyapunovCertificate,
    SwitchedSystem,
    power_contraction_index,
    strictification_check,
    verify_weak_lyapunov,
)
from .matcore import DEFAULT_TOL, Tolerance, p_conorm, p_opnorm, spectral_radius
from .signals import (
    SwitchingSignal,
    classify_prefix,
    make_bernoulli,
    make_constant_run,
    make_markov,
    make_periodic,
    sample_bernoulli,
    sample_markov,
)
from .words import (
    Status,
    decide_d2,
    decide_d3,
    enumerate_words,
    gsr_lower_bound,
    periodic_switched_stability,
    product_of_word,
)
