"""Random-list-based likelihood ascent search (RLB-LAS) detection for
large multiuser MIMO uplinks, with linear baselines and a Monte Carlo harness."""

from .channel import (RngStream, draw_channel, draw_noise, draw_symbol_indices,
                      make_received, snr_to_sigma2)
from .constellation import Constellation, build_qam
from .flops import FlopLedger
from .harness import (BerRecord, ConfigError, RunConfig, awgn_siso_reference,
                      complexity_sweep, oracle_compare, run_trials)
from .las import LasState, best_update, delta_cost, las_search, ml_cost
from .linear import (GramCache, build_gram, matched_filter_detect, ml_oracle, mmse_detect,
                     mmse_sic_detect, zf_detect)
from .rlb import (DetectionReport, RlbConfig, compute_np, random_perturbation,
                  rlb_las_detect, standardized_cost)

__version__ = "0.1.0"
