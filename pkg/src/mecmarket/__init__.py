"""Edge-market simulator: Stackelberg pricing, threshold offloading, learned caching.

One base station prices per-program task execution each slot; users split
their tasks between local CPUs and the edge in best response. On the slower
frame scale a deep-Q agent picks which service programs to cache. Everything
is seed-reproducible end to end.
"""
from .caching import (CachingEnv, GndrlConfig, GndrlResult, MdpState,
                      ReplayBuffer, RewardCache, Transition, decode_action,
                      encode_action, frame_reward, greedy_rollout,
                      load_checkpoint, posc, run_gndrl, save_checkpoint,
                      select_action, stsc, train_step)
from .config import (ConfigError, ScenarioConfig, WorkloadSpec, default_config)
from .harness import (MetricsRow, ScenarioResult, emit, emit_sweep,
                      run_scenario, substream, sweep)
from .kernels import BACKEND
from .model import (CachingDecision, DelayBreakdown, OffloadProfile,
                    PriceVector, SystemParams, Task, UserProfile, bs_frame_utility,
                    bs_slot_payment, channel_gain, delays, uplink_rate, user_cost)
from .qnet import QNetwork
from .stage1 import (EquilibriumResult, PricingTimer, SlotMarket, SlotOutcome,
                     cpto, dpo, evaluate_slot, lp, ltsp_schedule, program_profit,
                     respond, scao, stackelberg_equilibrium)
from .stage2 import (FrequencyDistribution, PopularityVector, baseline_profile,
                     delta_threshold, estimate_offloaders, offload_probability,
                     optimal_alpha)
from .workload import (FrameWorkload, SlotLoad, TraceRecord, UserSampler,
                       estimate_popularity, ingest_trace, parse_trace_file,
                       synth_workload, true_popularity, zipf_probabilities)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
