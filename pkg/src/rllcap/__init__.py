"""Capacity bounds for runlength-constrained binary-input memoryless channels.

Upper bounds come from the dual capacity method with Markov test
distributions whose length-normalized cycle metrics are equalized (the
KKT structure of the capacity-achieving output law); lower bounds from
simulation of Markov inputs with a forward-recursion entropy-rate
estimate.
"""

from .constraints import (
    INF,
    ConstraintSpec,
    build_state_diagram,
    decompose_walk,
    enumerate_cycles,
    is_valid_word,
    noiseless_capacity,
)
from .channels import GaussianChannel, bec, bsc, relative_entropy
from .families import family_for, conditional_row
from .metrics import edge_metric, metric_table, kkt_residuals, finite_n_divergence
from .solvers import (
    BoundResult,
    generic_kkt_bound,
    thm2_part1,
    thm2_part2,
    thm3_part1,
    thm3_part2,
    thm4_dinfty,
    thm5_bsc,
)
from .biawgn import (
    biawgn_capacity,
    constrained_awgn_bound,
    d_x,
    unconstrained_awgn_bound,
)
from .simulate import (
    InputProcess,
    RateEstimate,
    input_process,
    maxentropic_process,
    optimize_input,
    simulate_rate,
)
from .oracle import OracleReport, brute_dual_bound, count_words

__version__ = "0.1.0"
