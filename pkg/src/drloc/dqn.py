"""Deep Q-network training and greedy localization rollouts."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .env import Environment, ExperienceTuple, Trajectory
from .grid import ACTION_OFFSETS, N_ACTIONS, Action, CellIndex, available_mask
from .neural import Mlp, SgdConfig, clone_parameters, copy_into, loss_and_grad, q_network, sgd_update

log = logging.getLogger(__name__)


class ReplayNotWarm(RuntimeError):
    pass


class TrainingDiverged(FloatingPointError):
    pass


class Batch(NamedTuple):
    phi_prev: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    phi_next: np.ndarray
    mask_next: np.ndarray


class ReplayMemory:
    """Fixed-capacity FIFO ring of experience tuples, stored column-wise."""

    def __init__(self, capacity: int, state_dim: int, start_size: int = 0):
        if capacity < 1:
            raise ValueError("replay capacity must be >= 1")
        if start_size > capacity:
            raise ValueError("replay start size exceeds capacity")
        self.capacity = capacity
        self.start_size = start_size
        self.phi_prev = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.phi_next = np.zeros((capacity, state_dim))
        self.mask_next = np.ones((capacity, N_ACTIONS), dtype=bool)
        self._head = 0
        self._len = 0

    def __len__(self):
        return self._len

    def push(self, e: ExperienceTuple, mask_next: np.ndarray | None = None) -> None:
        i = self._head
        self.phi_prev[i] = e.phi_prev
        self.actions[i] = int(e.action)
        self.rewards[i] = e.reward
        self.phi_next[i] = e.phi_next
        self.mask_next[i] = True if mask_next is None else mask_next
        self._head = (i + 1) % self.capacity
        self._len = min(self._len + 1, self.capacity)

    def _order(self) -> np.ndarray:
        start = (self._head - self._len) % self.capacity
        return (start + np.arange(self._len)) % self.capacity

    def items(self) -> list[ExperienceTuple]:
        """Stored tuples, oldest first."""
        return [
            ExperienceTuple(self.phi_prev[i].copy(), Action(int(self.actions[i])), float(self.rewards[i]), self.phi_next[i].copy())
            for i in self._order()
        ]

    def take(self, idx: np.ndarray) -> Batch:
        return Batch(self.phi_prev[idx], self.actions[idx], self.rewards[idx], self.phi_next[idx], self.mask_next[idx])


def push_experience(mem: ReplayMemory, e: ExperienceTuple, mask_next: np.ndarray | None = None) -> None:
    mem.push(e, mask_next)


def sample_minibatch(mem: ReplayMemory, n: int, rng: np.random.Generator) -> Batch:
    """``n`` tuples drawn uniformly with replacement; ``n`` may exceed the stored count."""
    if n < 1:
        raise ValueError("minibatch size must be >= 1")
    if len(mem) < max(mem.start_size, 1):
        raise ReplayNotWarm(f"replay not warm: {len(mem)} stored, need {max(mem.start_size, 1)}")
    idx = rng.integers(0, len(mem), size=n)
    # ring slot of the k-th oldest is (start + k) % capacity; uniform either way
    return mem.take((idx + (mem._head - len(mem))) % mem.capacity)


@dataclass(frozen=True)
class EpsilonSchedule:
    initial: float = 1.0
    final: float = 0.05
    horizon: int = 1

    def __post_init__(self):
        if not (0.0 <= self.final <= self.initial <= 1.0):
            raise ValueError("need 0 <= final <= initial <= 1")
        if self.horizon < 1:
            raise ValueError("decay horizon must be >= 1")


def epsilon_at(s: EpsilonSchedule, t: int) -> float:
    if t < 0:
        raise ValueError("step must be >= 0")
    if t >= s.horizon:
        return s.final
    return s.initial - (s.initial - s.final) * (t / s.horizon)


@dataclass(frozen=True)
class DqnConfig:
    replay_capacity: int = 10000
    replay_start: int = 2500
    minibatch: int = 200
    sync_period: int = 100
    gamma: float = 0.9
    epsilon_initial: float = 1.0
    epsilon_final: float = 0.05
    # None -> half of the total training steps
    epsilon_horizon: int | None = None
    learning_rate: float = 0.001
    hidden: int = 200
    epochs: int = 1

    def __post_init__(self):
        if not self.replay_start <= self.replay_capacity:
            raise ValueError("replay_start must be <= replay_capacity")
        if not self.minibatch <= self.replay_start:
            raise ValueError("minibatch must be <= replay_start")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.sync_period < 1:
            raise ValueError("sync_period must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        SgdConfig(self.learning_rate)

    def schedule(self, total_steps: int) -> EpsilonSchedule:
        horizon = self.epsilon_horizon or max(1, total_steps // 2)
        return EpsilonSchedule(self.epsilon_initial, self.epsilon_final, horizon)


class QNetworkPair:
    def __init__(self, q_net: Mlp, target_net: Mlp | None = None):
        self.q_net = q_net
        self.target_net = clone_parameters(q_net) if target_net is None else target_net
        if self.target_net.dims != q_net.dims:
            raise ValueError("q and target networks differ in architecture")
        self.steps_since_sync = 0


def sync_target(pair: QNetworkPair) -> None:
    copy_into(pair.target_net, pair.q_net)
    pair.steps_since_sync = 0


def greedy_action(net: Mlp, phi: np.ndarray, mask: np.ndarray) -> int:
    q = net.forward(np.asarray(phi, dtype=np.float64).reshape(1, -1))[0]
    return kernels.masked_argmax(q, mask)


def select_action(
    pair: QNetworkPair | Mlp, phi: np.ndarray, available, eps: float, rng: np.random.Generator
) -> Action:
    """Epsilon-greedy over the available actions only.

    ``available`` is a 9-wide boolean mask or a collection of actions.
    """
    mask = _as_mask(available)
    allowed = np.flatnonzero(mask)
    if allowed.size == 0:
        raise ValueError("empty available action set")
    net = pair.q_net if isinstance(pair, QNetworkPair) else pair
    if rng.random() < eps:
        return Action(int(allowed[rng.integers(0, allowed.size)]))
    return Action(greedy_action(net, phi, mask))


def _as_mask(available) -> np.ndarray:
    if isinstance(available, np.ndarray) and available.dtype == bool:
        return available
    mask = np.zeros(N_ACTIONS, dtype=bool)
    mask[[int(a) for a in available]] = True
    return mask


def compute_targets(batch: Batch, target_net: Mlp, gamma: float, mask_next=None) -> np.ndarray:
    """reward + gamma * max over available next actions of the target network's Q."""
    if len(batch.rewards) == 0:
        raise ValueError("empty batch")
    mask = batch.mask_next if mask_next is None else np.asarray(mask_next, dtype=bool)
    q = target_net.forward(batch.phi_next)
    q = np.where(mask, q, -np.inf)
    return batch.rewards + gamma * q.max(axis=1)


@dataclass
class TrainingLog:
    """One record per SGD update plus one discounted return per episode."""

    steps: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)
    episode_returns: list[float] = field(default_factory=list)
    total_steps: int = 0
    syncs: int = 0

    def lines(self):
        for s, l, r, e in zip(self.steps, self.losses, self.rewards, self.epsilons):
            yield f"{s}\t{l!r}\t{r!r}\t{e!r}\n"


def train(
    dataset: Sequence[Trajectory],
    env: Environment,
    cfg: DqnConfig,
    rng: np.random.Generator,
    pair: QNetworkPair | None = None,
    on_epoch: Callable[[int, QNetworkPair, TrainingLog], None] | None = None,
) -> tuple[QNetworkPair, TrainingLog]:
    """Run the DQN loop with each trajectory as one fixed-length episode.

    The location estimate starts in a uniformly random cell per episode.
    Tuples never span two episodes. After the replay holds ``replay_start``
    tuples, every environment step does one minibatch SGD update; the target
    network is synced whenever the global step is a multiple of
    ``sync_period``. ``on_epoch`` is called after each pass over the data.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    grid = env.grid
    if pair is None:
        pair = QNetworkPair(q_network(env.n_gw, rng, cfg.hidden))
    total = cfg.epochs * sum(len(tr) for tr in dataset)
    schedule = cfg.schedule(total)
    sgd = SgdConfig(cfg.learning_rate)
    mem = ReplayMemory(cfg.replay_capacity, env.state_dim, cfg.replay_start)
    masks = np.array([available_mask(grid, c) for c in grid.cells()])
    out = TrainingLog(total_steps=total)
    t = 0
    for epoch in range(cfg.epochs):
        for traj in dataset:
            rss_feat = env.features(np.zeros((len(traj), 2)), traj.rss_seq)
            k = int(rng.integers(0, grid.n_cells))
            est = np.array(divmod(k, grid.cols), dtype=np.int64)
            phi_prev = a_prev = None
            ret, disc = 0.0, 1.0
            for i in range(len(traj)):
                t += 1
                rss = traj.rss_seq[i]
                r = 0.0
                if i > 0:
                    est = est + ACTION_OFFSETS[a_prev]
                    r = env.reward(est, rss)
                    ret += disc * r
                    disc *= cfg.gamma
                k = int(est[0]) * grid.cols + int(est[1])
                phi = rss_feat[i].copy()
                phi[:2] = _pos(est, grid)
                if i > 0:
                    mem.push(ExperienceTuple(phi_prev, a_prev, r, phi), masks[k])
                eps = epsilon_at(schedule, t)
                a = int(select_action(pair.q_net, phi, masks[k], eps, rng))
                if len(mem) >= cfg.replay_start:
                    batch = sample_minibatch(mem, cfg.minibatch, rng)
                    y = compute_targets(batch, pair.target_net, cfg.gamma)
                    loss, grads = loss_and_grad(pair.q_net, batch.phi_prev, batch.actions, y)
                    if not math.isfinite(loss):
                        raise TrainingDiverged(f"training diverged: non-finite loss at step {t}")
                    sgd_update(pair.q_net, grads, sgd)
                    pair.steps_since_sync += 1
                    out.steps.append(t)
                    out.losses.append(loss)
                    out.rewards.append(r)
                    out.epsilons.append(eps)
                if t % cfg.sync_period == 0:
                    sync_target(pair)
                    out.syncs += 1
                phi_prev, a_prev = phi, a
            out.episode_returns.append(ret)
        if on_epoch is not None:
            on_epoch(epoch, pair, out)
    return pair, out


def _pos(est: np.ndarray, grid) -> np.ndarray:
    return np.array(
        [est[0] / max(grid.rows - 1, 1), est[1] / max(grid.cols - 1, 1)], dtype=np.float64
    )


def localize_trajectory(
    pair: QNetworkPair | Mlp,
    rss_seq: np.ndarray,
    env: Environment,
    initial: tuple[int, int] = (0, 0),
) -> list[CellIndex]:
    """Greedy rollout: each RSS reading moves the previous estimate by the best available action."""
    net = pair.q_net if isinstance(pair, QNetworkPair) else pair
    rss_seq = np.asarray(rss_seq, dtype=np.float64)
    if len(rss_seq) == 0:
        raise ValueError("empty RSS sequence")
    grid = env.grid
    rss_feat = env.features(np.zeros((len(rss_seq), 2)), rss_seq)
    est = np.array(CellIndex(*initial, grid), dtype=np.int64)
    out = []
    for i in range(len(rss_seq)):
        phi = rss_feat[i].copy()
        phi[:2] = _pos(est, grid)
        a = greedy_action(net, phi, available_mask(grid, est))
        est = est + ACTION_OFFSETS[a]
        out.append(CellIndex(est[0], est[1], grid))
    return out
