"""slwalk: a simulation laboratory for random matrix products on SL_d.

Construct rational representations and linearized varieties, run seeded
random walks, and measure escape rates, Lyapunov spectra, Cartan-part
convergence and genericity statistics.
"""

__version__ = "0.1.0"

from .engine import (
    MeasureSpec,
    load_measure,
    perturbation_measure,
    preset_measure,
    run_replicas,
    validate_measure,
)
from .linearize import (
    LinearizedVariety,
    linearize_entry_polynomial,
    linearize_orbit_variety,
    membership,
    preset_variety,
    v1_variety,
    v2_variety,
)
from .matkit import (
    CartanTriple,
    CartanVector,
    ProjPoint,
    RenormProduct,
    SquareMatrix,
    cartan_projection,
    fubini_study,
    jordan_projection,
    renorm_step,
    svd_cartan,
    wedge_power_matrix,
)
from .polynomials import EntryPolynomial, Polynomial, parse_entry_polynomial
from .reps import (
    Representation,
    direct_sum_rep,
    dual_rep,
    example1_rep,
    example2_rep,
    parse_rep_descriptor,
    standard_rep,
    sym_power_rep,
    wedge_rep,
    weight_data,
)

__all__ = [name for name in dir() if not name.startswith("_")]
