"""Binomial asset pricing over information-distorting filtrations.

The lattice at time n is the set of binary words d_1…d_n; a filtration
schedule links consecutive levels by truncation (full information) or by
forgetting maps that overwrite a digit. The package builds product and
risk-neutral measures over such schedules, checks martingale and arbitrage
properties, and prices and replicates claims for agents whose information
flow forgets.
"""

from .binword import BinWord, enumerate_words
from .condexp import AdaptedProcess, RandomVariable, cond_exp, is_martingale, xi_process
from .errors import (
    BinfiltError,
    CapacityError,
    LevelMismatchError,
    NoSolutionError,
    NullPreservationError,
    ScenarioError,
    ScheduleError,
)
from .filtration import (
    FiltMap,
    FiltrationSchedule,
    MapKind,
    classical_schedule,
    drop_k_schedule,
    elderly_schedule,
    validate_schedule,
)
from .market import (
    MarketParams,
    Strategy,
    bond_process,
    construct_arbitrage,
    detect_arbitrage_small,
    gain_process,
    stock_process,
    value_process,
)
from .measure import FiniteMeasure, ProbSequence, product_measure, product_measures
from .riskneutral import (
    FreeValuePolicy,
    RiskNeutralSolution,
    TransitionKernel,
    solve_classical,
    solve_drop_k,
    solve_schedule,
    transition_check,
)
from .valuation import (
    Claim,
    call_claim,
    digital_claim,
    price_claim,
    put_claim,
    replicate,
    verify_replication,
)

__version__ = "0.1.0"
