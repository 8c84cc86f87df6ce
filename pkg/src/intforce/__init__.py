"""Integer-forcing linear transceivers for MIMO uplink and downlink channels.

Submodules
----------
model        configuration types and validation
lattice      effective lattice basis and LLL integer-matrix selection
rates        effective noise, optimal equalizers, admissibility, rates
duality      uplink/downlink SINR-preserving transformation
optimizer    duality-based iterative transceiver optimization
baselines    sum capacity, identity-matrix baseline, constant-gap scheme
finite_field Z_p algebraic SIC and staged pre-inversion
harness      seeded Monte Carlo sweeps and CSV output
"""

from . import errors
from .baselines import (bc_sum_capacity, constant_gap_check, mac_sum_capacity,
                        zf_baseline)
from .duality import (DualitySystem, build_downlink_system, build_uplink_system,
                      dual_transform, solve_dual_powers, sum_rate_compare, verify_m_matrix)
from .finite_field import (FieldMatrix, LevelPlan, MessageSet, choose_prime,
                           downlink_decode_verify, downlink_precode, invert_mod_p,
                           triangularize_over_zp, uplink_sic_solve)
from .harness import SweepResult, SweepSpec, emit_csv, generate_channel, run_sweep
from .lattice import CholeskyFactor, cholesky_effective_basis, lll_reduce, select_integer_matrix
from .model import (ChannelDownlink, ChannelUplink, DownlinkConfig, EffectiveStats,
                    IntegerMatrix, PowerAllocation, UplinkConfig, validate)
from .optimizer import OptimizerOptions, OptimizerReport, iterate_downlink, iterate_uplink
from .rates import (check_identity_admissible_downlink, check_identity_admissible_uplink,
                    conventional_rates, downlink_effective_noise, effective_stats,
                    find_admissible_permutations, if_rates, optimal_downlink_equalizer,
                    optimal_uplink_equalizer, uplink_effective_noise)

__version__ = "0.1.0"

__all__ = [
    "bc_sum_capacity",
    "build_downlink_system",
    "build_uplink_system",
    "ChannelDownlink",
    "ChannelUplink",
    "check_identity_admissible_downlink",
    "check_identity_admissible_uplink",
    "cholesky_effective_basis",
    "CholeskyFactor",
    "choose_prime",
    "constant_gap_check",
    "conventional_rates",
    "downlink_decode_verify",
    "downlink_effective_noise",
    "downlink_precode",
    "DownlinkConfig",
    "dual_transform",
    "DualitySystem",
    "effective_stats",
    "EffectiveStats",
    "emit_csv",
    "errors",
    "FieldMatrix",
    "find_admissible_permutations",
    "generate_channel",
    "if_rates",
    "IntegerMatrix",
    "invert_mod_p",
    "iterate_downlink",
    "iterate_uplink",
    "LevelPlan",
    "lll_reduce",
    "mac_sum_capacity",
    "MessageSet",
    "optimal_downlink_equalizer",
    "optimal_uplink_equalizer",
    "OptimizerOptions",
    "OptimizerReport",
    "PowerAllocation",
    "run_sweep",
    "select_integer_matrix",
    "solve_dual_powers",
    "sum_rate_compare",
    "SweepResult",
    "SweepSpec",
    "triangularize_over_zp",
    "uplink_effective_noise",
    "uplink_sic_solve",
    "UplinkConfig",
    "validate",
    "verify_m_matrix",
    "zf_baseline",
]
