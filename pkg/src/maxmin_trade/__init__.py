"""Maxmin mechanisms for a bilateral trade intermediary who knows only the two mean values."""

__version__ = "0.1.0"

from .calibration import (  # noqa: E402
    AsymmetricThresholds,
    eval_h1_h2,
    maxmin_mechanism,
    solve_asymmetric_thresholds,
    solve_iota,
    solve_r_symmetric,
)
from .core import (  # noqa: E402
    RDA,
    DoublePostedPrice,
    EdgeBuyerOne,
    EfficientOnSupport,
    Expectations,
    LinearDet,
    Logarithmic,
    MechanismOutcome,
    NeverTrade,
    Regime,
    ValueProfile,
    evaluate,
)
from .distributions import (  # noqa: E402
    DiscreteDistribution,
    MixedDistribution,
    build_asymmetric_triangular,
    build_det_worst_case,
    build_edge_worst_case,
    build_symmetric_triangular,
    first_best_gain,
    moments,
    sample,
)
from .simulation import WelfareBreakdown, info_design_sweep, monte_carlo_profit, welfare_accounting  # noqa: E402
from .verification import (  # noqa: E402
    DualCertificate,
    VerificationReport,
    analytic_guarantee,
    check_dsic,
    check_duality,
    check_epir,
    dual_certificate,
    lp_adversary,
    reconstruct_payments,
)
