"""Static output-feedback H-infinity policy optimization toolkit.

Solves min_K ||T_zw(K)||_Hinf over stabilizing static gains by the
subgradient method, with a certified frequency-sweep norm oracle, Clarke
subgradients, Moreau-envelope stationarity estimates, landscape probes
(connected components, weak convexity, weak-PL ratios), and bounded-real
certificates with their convex-LMI mirror.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .certify import (
    CvxTriple,
    LiftedTriple,
    RiccatiResult,
    lambda_matrix,
    lmi_matrix,
    pi_map,
    psi_map,
    riccati_fixed_point,
)
from .hinf import HinfResult, SingularTriple, hinf_bisection, hinf_norm, sigma_max_triple
from .landscape import (
    GridScan,
    WeakConvexityEstimate,
    estimate_lipschitz,
    estimate_weak_convexity,
    grid_scan_2d,
    weak_pl_ratio,
)
from .optimizer import (
    ConstantStep,
    MoreauEstimate,
    RunLog,
    SqrtHorizonStep,
    moreau_gradient,
    subgradient_method,
    summarize_run,
    write_run_csv,
)
from .plant import (
    ClosedLoop,
    Gain,
    Plant,
    builtin_example,
    is_stabilizing,
    load_plant,
    plant_from_dict,
    plant_to_dict,
    save_plant,
    spectral_radius,
    sqrt_psd,
    transfer,
    validate,
)
from .subgrad import (
    SubgradientInfo,
    clarke_subgradient,
    fd_directional,
    min_norm_element,
    phi_gradient,
    subdifferential_sample,
)
from .svgplot import emit_svg

__all__ = [
    "BACKEND",
    "__version__",
    "Plant", "Gain", "ClosedLoop", "builtin_example", "validate", "sqrt_psd",
    "spectral_radius", "is_stabilizing", "transfer", "plant_from_dict",
    "plant_to_dict", "load_plant", "save_plant",
    "SingularTriple", "HinfResult", "sigma_max_triple", "hinf_norm", "hinf_bisection",
    "SubgradientInfo", "phi_gradient", "clarke_subgradient",
    "subdifferential_sample", "min_norm_element", "fd_directional",
    "ConstantStep", "SqrtHorizonStep", "RunLog", "MoreauEstimate",
    "subgradient_method", "moreau_gradient", "summarize_run", "write_run_csv",
    "GridScan", "WeakConvexityEstimate", "grid_scan_2d",
    "estimate_weak_convexity", "estimate_lipschitz", "weak_pl_ratio",
    "LiftedTriple", "CvxTriple", "RiccatiResult", "psi_map", "lambda_matrix",
    "riccati_fixed_point", "pi_map", "lmi_matrix",
    "emit_svg",
]
