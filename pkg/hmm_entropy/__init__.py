"""hmm-entropy - asymptotic expansions of hidden Markov entropy rates."""
__version__ = "0.1.0"

from .channels import (
    MarkovInput,
    MemorylessChannelSpec,
    MutualInformation,
    bec_model,
    block_chain,
    blocked_markov,
    bsc_model,
    build_memoryless,
    ge_model,
    markov_entropy,
    mutual_information_expansion,
    output_entropy,
)
from .expansion import (
    ExpansionResult,
    birch_lower,
    birch_upper,
    enumerate_sequences,
    expand,
    stabilization_check,
)
from .hmm import (
    BeliefVector,
    Classification,
    HmmModel,
    belief_step,
    check_normal,
    classify,
    cond_prob,
    restrict,
    seq_prob,
    stationary_series,
)
from .numeric import McConfig, eval_expansion, exact_hn, mc_entropy
from .series import LogSeries, TruncSeries, log_expand
