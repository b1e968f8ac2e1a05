"""Achievable rates and upper bounds for relay channels with intersymbol interference.

Modules
-------
circulant
    Block-circular channel, DFT diagonalization and dense mutual-information oracles.
bounds
    Per-band decode-and-forward, compress-and-forward and cut-set rates.
optimizers
    Power allocation solvers for each bound.
models
    Channel constructors for the lowpass, underwater and asynchronous scenarios.
cli
    Config-driven scenario runner.
"""

from .bounds import (
    AsynchronyProfile,
    CompressionProfile,
    PowerAllocation,
    RateBounds,
    asynch_cf_rate,
    asynch_cutset_rate,
    asynch_df_rate,
    cf_modified_rate,
    cf_rate,
    cutset_rate,
    df_rate,
)
from .circulant import (
    CirculantChannel,
    CovarianceSet,
    ImpulseResponse,
    NoiseAutocorrelation,
    SubbandChannel,
    build_circulant,
    subband_decompose,
)
from .errors import (
    ConvergenceError,
    DimensionMismatch,
    IndefiniteNoise,
    InvalidBlockLength,
    InvalidWaveform,
    NumericalRankError,
    RelayError,
)
from .models import (
    AsynchGeometry,
    LowpassRelaySpec,
    UnderwaterSpec,
    ambient_noise_psd,
    asynch_profile,
    equal_bandwidth_capacity,
    path_loss,
    permutation_experiment,
    thorp_absorption,
    underwater_channel,
    unequal_bandwidth_capacity,
    worst_case_asynch_rate,
)
from .optimizers import (
    CfKktSolution,
    MaximinSolution,
    WaterfillSolution,
    solve_alpha_star,
    solve_cf_kkt,
    solve_cf_modified,
    solve_df_maximin,
    solve_df_maximin_total,
    solve_df_waterfill,
)

__version__ = "0.1.0"
