"""SIR statistics of heterogeneous Poisson ad hoc networks.

The analytic layer (:mod:`.sirdist`, :mod:`.perf`) computes SIR distributions,
success probabilities, ergodic capacities and spatial throughput; the
Monte Carlo layer (:mod:`.simulator`) provides an independent check.
"""

from .errors import (
    AccuracyError,
    CapabilityError,
    ConvergenceError,
    DivergenceError,
    DivergenceWarning,
    DomainError,
    HetAdHocError,
    QualityWarning,
    TruncationWarning,
)
from .model import (
    DistributionSpec,
    NetworkConfig,
    PowerControlSpec,
    TypeClassConfig,
    derive_intensities,
    mapped_intensity,
    table1_network,
)
from .sirdist import CancellationSpec

__version__ = "0.1.0"
