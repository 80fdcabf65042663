"""Service caching on the frame time scale.

The caching agent (``run_gndrl``) is a deep-Q learner over binary caching
masks: one episode walks the J frames of the workload, the action is the
mask for the frame (encoded as an integer), and the reward is the frame
utility of the pricing/offloading games played under that mask — or a
capacity penalty when the mask does not fit. Frame workloads are identical
across episodes (the environment replays the same trace), so frame rewards
are memoized: a (frame, action) pair is computed at most once.

``posc`` (popularity greedy) and ``stsc`` (static frame-1 mask) are the
non-learning baselines.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import CachingDecision, SystemParams, bs_frame_utility
from .qnet import QNetwork
from .stage1 import SlotMarket, evaluate_slot, stackelberg_equilibrium
from .stage2 import FrequencyDistribution, PopularityVector
from .workload import FrameWorkload

MAX_PROGRAMS = 15  # keeps the action space (2^N) within 32,768 outputs


def encode_action(mask: np.ndarray) -> int:
    """Decimal action code of a binary mask: sum of mask[n] * 2**n."""
    code = 0
    for n, x in enumerate(np.asarray(mask)):
        if x not in (0, 1):
            raise ValueError("mask entries must be 0 or 1")
        code |= int(x) << n
    return code


def decode_action(code: int, num_programs: int) -> np.ndarray:
    """Binary mask for an action code."""
    if not 0 <= code < (1 << num_programs):
        raise ValueError(f"action code {code} out of range for {num_programs} programs")
    return np.array([(code >> n) & 1 for n in range(num_programs)], dtype=np.int8)


@dataclass(frozen=True)
class MdpState:
    """Agent observation for one frame."""

    frame_index: int  # 1-based
    num_frames: int
    popularity: PopularityVector
    prev_action: int

    def __post_init__(self) -> None:
        if not 1 <= self.frame_index <= self.num_frames + 1:
            raise ValueError("frame_index out of range")
        n = self.popularity.values.size
        if not 0 <= self.prev_action < (1 << n):
            raise ValueError("prev_action out of range")

    def to_vector(self) -> np.ndarray:
        """Network input: normalized frame index, popularity, previous mask bits."""
        n = self.popularity.values.size
        bits = decode_action(self.prev_action, n).astype(np.float64)
        head = np.array([self.frame_index / self.num_frames])
        return np.concatenate([head, self.popularity.values, bits])


@dataclass(frozen=True)
class Transition:
    state: MdpState
    action: int
    reward: float
    next_state: MdpState
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, k: int, rng: np.random.Generator) -> list[Transition]:
        """k distinct stored transitions, uniformly."""
        if not 1 <= k <= len(self._items):
            raise ValueError("cannot sample more transitions than stored")
        idx = rng.choice(len(self._items), size=k, replace=False)
        return [self._items[i] for i in idx]

    def __len__(self) -> int:
        return len(self._items)


class RewardCache:
    """Memo of frame rewards keyed by (frame_index, action_code)."""

    def __init__(self) -> None:
        self._table: dict[tuple[int, int], float] = {}
        self.hits = 0
        self.misses = 0

    def get(self, frame_index: int, action: int) -> float | None:
        key = (frame_index, action)
        if key in self._table:
            self.hits += 1
            return self._table[key]
        self.misses += 1
        return None

    def put(self, frame_index: int, action: int, reward: float) -> None:
        self._table[(frame_index, action)] = reward

    def __len__(self) -> int:
        return len(self._table)


def _frame_games(
    frame: FrameWorkload,
    caching: CachingDecision,
    popularity: PopularityVector,
    freq_dist: FrequencyDistribution,
    params: SystemParams,
    pricer: str,
    rng: np.random.Generator | None,
) -> tuple[list[float], np.ndarray]:
    """Run the frame's slot games; return per-slot payments and per-program totals."""
    payments: list[float] = []
    per_program = np.zeros(params.num_programs)
    for slot in frame.slots:
        market = SlotMarket(slot.users, slot.tasks, slot.programs, caching,
                            popularity, freq_dist, params)
        eq = stackelberg_equilibrium(market, pricer, rng=rng)
        outcome = evaluate_slot(market, eq.prices, eq.profile)
        payments.append(outcome.bs_payment)
        per_program += outcome.per_program_payments
    return payments, per_program


def frame_reward(
    frame_index: int,
    action: int,
    frame_workload: FrameWorkload,
    prev_action: int,
    pricer: str,
    *,
    popularity: PopularityVector,
    sizes: np.ndarray,
    freq_dist: FrequencyDistribution,
    params: SystemParams,
    penalty_rho: float = 0.02,
    rng: np.random.Generator | None = None,
) -> float:
    """Frame utility of a caching action, or the capacity penalty.

    An infeasible mask skips the games entirely and earns
    ``-penalty_rho * (used - capacity)``; a feasible one plays the T slot
    games under the mask and earns the frame utility (payments minus the
    cost of newly cached programs).
    """
    caching = CachingDecision.from_code(action, sizes)
    if not caching.feasible(params.cache_capacity):
        return -penalty_rho * (caching.used() - params.cache_capacity)
    payments, per_program = _frame_games(
        frame_workload, caching, popularity, freq_dist, params, pricer, rng)
    prev = CachingDecision.from_code(prev_action, sizes)
    return bs_frame_utility(payments, caching, prev, per_program,
                            params.caching_cost_rate)


class CachingEnv:
    """Replayable frame sequence the caching agent acts on.

    Slot-game results are memoized per (frame, action): the expensive
    equilibria run once per pair, and ``equilibrium_calls`` counts actual
    slot-game solves for the cache-effectiveness instrumentation.
    """

    def __init__(
        self,
        frames: Sequence[FrameWorkload],
        popularity: Sequence[PopularityVector],
        sizes: np.ndarray,
        freq_dist: FrequencyDistribution,
        params: SystemParams,
        pricer: str = "cpto",
        penalty_rho: float = 0.02,
        seed: int = 0,
    ) -> None:
        if len(frames) != len(popularity):
            raise ValueError("need one popularity estimate per frame")
        if len(frames) == 0:
            raise ValueError("need at least one frame")
        sizes = np.asarray(sizes, dtype=np.float64)
        if sizes.size != params.num_programs:
            raise ValueError("sizes must cover all programs")
        if params.num_programs > MAX_PROGRAMS:
            raise ValueError(f"at most {MAX_PROGRAMS} programs supported")
        self.frames = list(frames)
        self.popularity = list(popularity)
        self.sizes = sizes
        self.freq_dist = freq_dist
        self.params = params
        self.pricer = pricer
        self.penalty_rho = penalty_rho
        self.seed = seed
        self.equilibrium_calls = 0
        self._memo: dict[tuple[int, int], tuple[list[float], np.ndarray]] = {}

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def num_programs(self) -> int:
        return self.params.num_programs

    @property
    def num_actions(self) -> int:
        return 1 << self.num_programs

    def state(self, frame_index: int, prev_action: int) -> MdpState:
        """Observation entering ``frame_index`` (1-based; J+1 is the exit state)."""
        j = min(frame_index, self.num_frames)
        return MdpState(frame_index=frame_index, num_frames=self.num_frames,
                        popularity=self.popularity[j - 1], prev_action=prev_action)

    def feasible(self, action: int) -> bool:
        return CachingDecision.from_code(action, self.sizes).feasible(
            self.params.cache_capacity)

    def reward(self, frame_index: int, action: int, prev_action: int) -> float:
        """Frame reward with slot-game memoization."""
        caching = CachingDecision.from_code(action, self.sizes)
        if not caching.feasible(self.params.cache_capacity):
            return -self.penalty_rho * (caching.used() - self.params.cache_capacity)
        key = (frame_index, action)
        if key not in self._memo:
            rng = (np.random.default_rng((self.seed, frame_index, action))
                   if self.pricer == "dpo" else None)
            self._memo[key] = _frame_games(
                self.frames[frame_index - 1], caching,
                self.popularity[frame_index - 1], self.freq_dist, self.params,
                self.pricer, rng)
            self.equilibrium_calls += len(self.frames[frame_index - 1].slots)
        payments, per_program = self._memo[key]
        prev = CachingDecision.from_code(prev_action, self.sizes)
        return bs_frame_utility(payments, caching, prev, per_program,
                                self.params.caching_cost_rate)

    def suggest_reward_scale(self) -> float:
        """Deterministic normalization for training: frame-1 POSC utility."""
        mask = posc(self.popularity[0], self.sizes, self.params.cache_capacity)
        value = self.reward(1, encode_action(mask.mask), 0)
        return max(1.0, abs(value))


def select_action(
    state_vector: np.ndarray,
    epsilon: float,
    qnet: QNetwork,
    rng: np.random.Generator,
) -> int:
    """Epsilon-greedy action: explore uniformly, else argmax Q (lowest index wins)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(qnet.num_actions))
    return int(np.argmax(qnet.forward(state_vector)[0]))


def train_step(
    qnet: QNetwork,
    target_net: QNetwork,
    batch: Sequence[Transition],
    gamma: float,
    learning_rate: float,
) -> float:
    """One fixed-step descent on the MSE toward the bootstrapped targets.

    Target is the reward alone for terminal transitions, otherwise reward
    plus ``gamma`` times the target network's best next-state value. Returns
    the pre-update loss.
    """
    if len(batch) == 0:
        raise ValueError("batch must be nonempty")
    states = np.stack([t.state.to_vector() for t in batch])
    actions = np.array([t.action for t in batch], dtype=np.int64)
    rewards = np.array([t.reward for t in batch])
    terminal = np.array([t.terminal for t in batch])
    next_states = np.stack([t.next_state.to_vector() for t in batch])

    next_best = target_net.forward(next_states).max(axis=1)
    targets = np.where(terminal, rewards, rewards + gamma * next_best)
    loss, grads = qnet.loss_and_gradients(states, actions, targets)
    qnet.apply_gradients(grads, learning_rate)
    return loss


@dataclass(frozen=True)
class GndrlConfig:
    """Training hyperparameters for the caching agent."""

    episodes: int = 500
    gamma: float = 0.9
    learning_rate: float = 0.001
    batch_size: int = 64
    replay_capacity: int = 10_000
    target_sync: int = 20
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.8
    hidden: int = 64
    penalty_rho: float = 0.02
    reward_scale: float | None = None  # None: ask the environment

    def __post_init__(self) -> None:
        if self.episodes < 1 or self.batch_size < 1 or self.replay_capacity < 1:
            raise ValueError("episodes, batch_size and replay_capacity must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.learning_rate <= 0 or self.target_sync < 1 or self.hidden < 1:
            raise ValueError("learning_rate, target_sync and hidden must be positive")
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")
        if not 0.0 < self.eps_decay_fraction <= 1.0:
            raise ValueError("eps_decay_fraction must lie in (0, 1]")
        if self.penalty_rho < 0:
            raise ValueError("penalty_rho must be nonnegative")

    def epsilon(self, episode: int) -> float:
        """Linear decay over the first eps_decay_fraction of episodes."""
        decay_span = max(1, int(self.eps_decay_fraction * self.episodes))
        frac = min(1.0, episode / decay_span)
        return self.eps_start + (self.eps_end - self.eps_start) * frac


@dataclass(frozen=True)
class GndrlResult:
    qnet: QNetwork
    target: QNetwork
    episode_returns: np.ndarray
    greedy_returns: np.ndarray
    greedy_infeasible: np.ndarray
    greedy_actions: list[int]      # final greedy rollout, one action per frame
    reward_cache: RewardCache
    steps: int


def greedy_rollout(env, qnet: QNetwork) -> tuple[list[int], float, int]:
    """Walk the frames taking argmax actions; returns (actions, return, infeasible)."""
    prev = 0
    actions: list[int] = []
    total = 0.0
    infeasible = 0
    for j in range(1, env.num_frames + 1):
        vec = env.state(j, prev).to_vector()
        a = int(np.argmax(qnet.forward(vec)[0]))
        actions.append(a)
        total += env.reward(j, a, prev)
        if not env.feasible(a):
            infeasible += 1
        prev = a
    return actions, total, infeasible


def run_gndrl(env, config: GndrlConfig, rng: np.random.Generator) -> GndrlResult:
    """Deep-Q training over caching masks (epsilon-greedy, replay, target net).

    Per frame: pick an action, look the reward up in the reward cache before
    computing it, store the transition, train on one uniform minibatch, and
    sync the target network every ``target_sync`` steps. Rewards enter
    training scaled by a fixed normalization constant; reported returns are
    unscaled.
    """
    num_actions = env.num_actions
    num_inputs = 2 * env.num_programs + 1
    qnet = QNetwork(num_inputs, num_actions, hidden=config.hidden,
                    seed=int(rng.integers(2**63)))
    target = qnet.clone()

    scale = config.reward_scale
    if scale is None:
        scale = (env.suggest_reward_scale()
                 if hasattr(env, "suggest_reward_scale") else 1.0)
    if scale <= 0:
        raise ValueError("reward_scale must be positive")

    buffer = ReplayBuffer(config.replay_capacity)
    cache = RewardCache()
    steps = 0
    episode_returns = np.zeros(config.episodes)
    greedy_returns = np.zeros(config.episodes)
    greedy_infeasible = np.zeros(config.episodes, dtype=np.int64)
    greedy_actions: list[int] = []

    for ep in range(config.episodes):
        eps = config.epsilon(ep)
        prev = 0
        ep_return = 0.0
        for j in range(1, env.num_frames + 1):
            state = env.state(j, prev)
            action = select_action(state.to_vector(), eps, qnet, rng)
            reward = cache.get(j, action)
            if reward is None:
                reward = env.reward(j, action, prev)
                cache.put(j, action, reward)
            terminal = j == env.num_frames
            next_state = state if terminal else env.state(j + 1, action)
            buffer.push(Transition(state, action, reward / scale,
                                   next_state, terminal))
            batch = buffer.sample(min(config.batch_size, len(buffer)), rng)
            train_step(qnet, target, batch, config.gamma, config.learning_rate)
            steps += 1
            if steps % config.target_sync == 0:
                target.copy_from(qnet)
            ep_return += reward
            prev = action
        episode_returns[ep] = ep_return
        greedy_actions, greedy_returns[ep], greedy_infeasible[ep] = (
            greedy_rollout(env, qnet))

    return GndrlResult(
        qnet=qnet,
        target=target,
        episode_returns=episode_returns,
        greedy_returns=greedy_returns,
        greedy_infeasible=greedy_infeasible,
        greedy_actions=greedy_actions,
        reward_cache=cache,
        steps=steps,
    )


def posc(popularity: PopularityVector, sizes: np.ndarray, capacity: float) -> CachingDecision:
    """Popularity-greedy caching: most popular first, stop at the first misfit."""
    sizes = np.asarray(sizes, dtype=np.float64)
    order = np.argsort(-popularity.values, kind="stable")
    mask = np.zeros(sizes.size, dtype=np.int8)
    used = 0.0
    for n in order:
        if used + sizes[n] <= capacity:
            mask[n] = 1
            used += sizes[n]
        else:
            break
    return CachingDecision(mask=mask, sizes=sizes)


def stsc(initial: CachingDecision, num_frames: int) -> list[CachingDecision]:
    """Static caching: the initial (frame-1) mask repeated for every frame."""
    if num_frames < 1:
        raise ValueError("num_frames must be positive")
    return [initial] * num_frames


# -- checkpointing --------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: str,
    qnet: QNetwork,
    target_net: QNetwork,
    config: GndrlConfig,
    rng: np.random.Generator,
    steps: int = 0,
) -> None:
    """Versioned npz dump: weights, target weights, hyperparams, RNG state."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "num_inputs": qnet.num_inputs,
        "num_actions": qnet.num_actions,
        "hidden": qnet.hidden,
        "steps": steps,
        "config": {k: v for k, v in vars(config).items()},
        "rng_state": rng.bit_generator.state,
    }
    arrays = {f"online_{k}": v for k, v in qnet.parameters().items()}
    arrays.update({f"target_{k}": v for k, v in target_net.parameters().items()})
    np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)


def load_checkpoint(path: str) -> tuple[QNetwork, QNetwork, GndrlConfig,
                                        np.random.Generator, int]:
    """Restore a checkpoint; round-trips weights and RNG state bit-exactly."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: {meta['version']}")
        qnet = QNetwork(meta["num_inputs"], meta["num_actions"], meta["hidden"])
        target = QNetwork(meta["num_inputs"], meta["num_actions"], meta["hidden"])
        for name in qnet.parameters():
            setattr(qnet, name, data[f"online_{name}"].copy())
            setattr(target, name, data[f"target_{name}"].copy())
    config = GndrlConfig(**meta["config"])
    rng = np.random.default_rng(0)
    rng.bit_generator.state = meta["rng_state"]
    return qnet, target, config, rng, int(meta["steps"])
