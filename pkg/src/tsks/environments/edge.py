"""
Task offloading to edge servers whose load shifts between epochs.

Units: cycles, cycles/second and seconds. One bandit play per second.

Within an epoch of length ``|T|`` the number of primary users on server k is
fixed at ``m_k``. The server's workload buffer is drawn each second from

    U(B0 + (m_k eta - C_k)|T|, B0)   if m_k eta <= C_k   (draining)
    U(B0, B0 + (m_k eta - C_k)|T|)   otherwise           (filling)

clamped to ``[0, B_max_k]``. A task of ``delta`` cycles finishes after
``(B + delta) / C_k`` seconds and succeeds if that is within the deadline.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import StepOutcome
from .gaussian import draw_gap

GIGA = 1e9
MEGA = 1e6


@dataclass(frozen=True)
class Server:
    capacity: float      # C_k, cycles / s
    buffer_max: float    # B_max, cycles


def partition_users(user_count: int, server_count: int, rng: np.random.Generator) -> np.ndarray:
    """Users per server when each picks a server uniformly at random."""
    if server_count < 1:
        raise ValueError("server_count must be >= 1")
    if user_count < 0:
        raise ValueError("user_count must be >= 0")
    return rng.multinomial(user_count, np.full(server_count, 1.0 / server_count))


def buffer_interval(start_buffer: float, m_users: int, eta: float, capacity: float,
                    epoch_length: float) -> tuple[float, float]:
    """Unclamped support of the buffer law for one epoch."""
    drift = (m_users * eta - capacity) * epoch_length
    if m_users * eta <= capacity:
        return start_buffer + drift, start_buffer
    return start_buffer, start_buffer + drift


def buffer_sample(server: Server, start_buffer: float, m_users: int, eta: float,
                  epoch_length: float, rng: np.random.Generator) -> float:
    lo, hi = buffer_interval(start_buffer, m_users, eta, server.capacity, epoch_length)
    return float(np.clip(rng.uniform(lo, hi), 0.0, server.buffer_max))


def expected_clipped_uniform(a: float, b: float, lo: float, hi: float) -> float:
    """E[clip(U, lo, hi)] for U uniform on [a, b]."""
    if b < a:
        a, b = b, a
    if b == a:
        return min(max(a, lo), hi)
    width = b - a
    total = 0.0
    # mass below lo
    below = max(0.0, min(b, lo) - a)
    total += lo * below
    # mass above hi
    above = max(0.0, b - max(a, hi))
    total += hi * above
    # interior part
    u, v = max(a, lo), min(b, hi)
    if v > u:
        total += 0.5 * (v * v - u * u)
    return total / width


def latency(buffer: float, task_cycles: float, capacity: float) -> float:
    return (buffer + task_cycles) / capacity


class EdgeComputeEnv:
    """Secondary user choosing among edge servers.

    ``raw_reward`` is ``deadline - latency`` (negative when late) and
    ``success_prob`` is the 0/1 deadline indicator. The oracle arm minimises
    expected latency given the current epoch's user counts.

    Defaults: capacities U(2, 4) GHz, buffer caps U(0.5, 1) Giga-cycles,
    eta = 8 Mega-cycles/s per user, 20 Mega-cycle tasks, 50 ms deadline.
    """

    def __init__(self, n_servers: int = 3, n_users: int = 1000, mean_epoch: float = 300.0,
                 capacity_range=(2 * GIGA, 4 * GIGA), buffer_max_range=(0.5 * GIGA, 1 * GIGA),
                 eta: float = 8 * MEGA, task_cycles: float = 20 * MEGA, deadline: float = 0.05,
                 servers=None, seed=None):
        if n_servers < 1:
            raise ValueError("n_servers must be >= 1")
        if mean_epoch <= 0:
            raise ValueError("mean_epoch must be positive")
        traj_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
        self.trajectory = np.random.default_rng(traj_seq)
        self.noise = np.random.default_rng(noise_seq)
        if servers is None:
            caps = self.trajectory.uniform(*capacity_range, n_servers)
            bmax = self.trajectory.uniform(*buffer_max_range, n_servers)
            servers = [Server(float(c), float(b)) for c, b in zip(caps, bmax)]
        self.servers = list(servers)
        self.n_arms = len(self.servers)
        self.n_users = int(n_users)
        self.change_rate = 1.0 / mean_epoch
        self.user_rate = self.change_rate / max(1, self.n_users)
        self.eta = float(eta)
        self.task_cycles = float(task_cycles)
        self.deadline = float(deadline)
        self._caps = np.array([s.capacity for s in self.servers])
        self._bmax = np.array([s.buffer_max for s in self.servers])
        self.t = 0
        self.epoch_end = 0
        self.change_times: list[int] = []
        self._new_epoch()

    def _new_epoch(self) -> None:
        length = draw_gap(self.trajectory, self.change_rate)
        self.epoch_start = self.t
        self.epoch_length = length
        self.epoch_end = self.t + length
        self.users = partition_users(self.n_users, self.n_arms, self.trajectory)
        self.start_buffers = self.trajectory.uniform(0.0, self._bmax)
        lo = np.empty(self.n_arms)
        hi = np.empty(self.n_arms)
        for k in range(self.n_arms):
            lo[k], hi[k] = buffer_interval(self.start_buffers[k], int(self.users[k]), self.eta,
                                           self._caps[k], length)
        self._lo, self._hi = lo, hi
        exp_buf = np.array([expected_clipped_uniform(lo[k], hi[k], 0.0, self._bmax[k])
                            for k in range(self.n_arms)])
        self.expected_latency = (exp_buf + self.task_cycles) / self._caps

    def reward_bounds(self) -> tuple[float, float, float]:
        worst = float(np.max((self._bmax + self.task_cycles) / self._caps))
        best = float(np.min(self.task_cycles / self._caps))
        return self.deadline - worst, self.deadline - best, 1e-6

    def expected_rewards(self) -> np.ndarray:
        return self.deadline - self.expected_latency

    def step(self, arm: int) -> StepOutcome:
        changed = False
        if self.t >= self.epoch_end:
            self._new_epoch()
            self.change_times.append(self.t)
            changed = True
        self.t += 1
        u = self.noise.random(self.n_arms)
        buffers = np.clip(self._lo + u * (self._hi - self._lo), 0.0, self._bmax)
        zeta = (buffers[arm] + self.task_cycles) / self._caps[arm]
        best = int(np.argmin(self.expected_latency))
        return StepOutcome(
            raw_reward=float(self.deadline - zeta),
            oracle_optimal_arm=best,
            oracle_optimal_mean=float(self.deadline - self.expected_latency[best]),
            chosen_mean=float(self.deadline - self.expected_latency[arm]),
            change_occurred_this_step=changed,
            success_prob=1.0 if zeta <= self.deadline else 0.0,
        )
