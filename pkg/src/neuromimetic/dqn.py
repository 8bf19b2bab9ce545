"""Deep Q-learning selection of a quantized direction at a fixed sphere point.

The action space is the list of candidate output directions.  Rewards are
``-G(d, x0)``: they depend on the action and the anchor point ``x0`` only,
while the state walks over the sphere by ``x <- normalize(x + h d)``.  A
threshold ``kappa`` marks actions that beat the incumbent as terminal; each
time the greedy policy settles on a single terminating direction the
threshold is tightened to that direction's loss.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alphabet import AlphabetEntry
from .emulation import EmulationConfig, _unit, candidate_entries, directions_of, objective_matrix
from .errors import ConvergenceError, DivergenceError

DIVERGENCE_LOSS = 1e12


@dataclass
class DqnHyper:
    """Learner settings; everything is seeded from ``seed``."""

    capacity: int = 10_000
    batch_size: int = 32
    gamma: float = 0.9
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 2000
    learn_rate: float = 1e-3
    optimizer: str = "adam"
    target_period: int = 100
    hidden: int = 32
    episode_steps: int = 8
    patience: int = 300
    min_phase_steps: int = 400
    max_episodes: int = 3000
    reward_scale: str = "auto"
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        for name in ("capacity", "batch_size", "target_period", "hidden", "episode_steps", "patience", "max_episodes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learn_rate <= 0:
            raise ValueError("learn_rate must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.reward_scale not in ("auto", "none"):
            raise ValueError(f"unknown reward_scale {self.reward_scale!r}")

    def epsilon(self, step: int) -> float:
        frac = min(1.0, step / max(1, self.eps_decay_steps))
        return self.eps_start + frac * (self.eps_end - self.eps_start)


@dataclass
class ReplayCue:
    x: np.ndarray
    action: int
    reward: float
    x_next: np.ndarray
    terminal: bool = False


class ReplayMemory:
    """Fixed-capacity ring of transitions; the oldest entry is overwritten first."""

    def __init__(self, capacity: int, n: int):
        self.capacity = capacity
        self.x = np.zeros((capacity, n))
        self.action = np.zeros(capacity, dtype=int)
        self.reward = np.zeros(capacity)
        self.x_next = np.zeros((capacity, n))
        self.terminal = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.position = 0

    def __len__(self):
        return self.size

    def push(self, cue: ReplayCue):
        i = self.position
        self.x[i] = cue.x
        self.action[i] = cue.action
        self.reward[i] = cue.reward
        self.x_next[i] = cue.x_next
        self.terminal[i] = cue.terminal
        self.position = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.size, size=batch_size)

    def cues(self, idx) -> list[ReplayCue]:
        return [ReplayCue(self.x[i], int(self.action[i]), float(self.reward[i]), self.x_next[i], bool(self.terminal[i]))
                for i in idx]


def _relu(z):
    return np.maximum(z, 0.0)


class QNetwork:
    """``n -> hidden -> hidden -> K`` rectifier network with a frozen target copy."""

    names = ("W1", "b1", "W2", "b2", "W3", "b3")

    def __init__(self, n: int, K: int, hidden: int = 32, rng: np.random.Generator | None = None):
        self.n, self.K, self.hidden = n, K, hidden
        if rng is None:
            self.params = {
                "W1": np.zeros((hidden, n)), "b1": np.zeros(hidden),
                "W2": np.zeros((hidden, hidden)), "b2": np.zeros(hidden),
                "W3": np.zeros((K, hidden)), "b3": np.zeros(K),
            }
        else:
            self.params = {
                "W1": rng.standard_normal((hidden, n)) * np.sqrt(2.0 / n), "b1": np.zeros(hidden),
                "W2": rng.standard_normal((hidden, hidden)) * np.sqrt(2.0 / hidden), "b2": np.zeros(hidden),
                "W3": rng.standard_normal((K, hidden)) * np.sqrt(1.0 / hidden), "b3": np.zeros(K),
            }
        self.target = {k: v.copy() for k, v in self.params.items()}
        self._moments = None
        self._t = 0

    def sync_target(self):
        self.target = {k: v.copy() for k, v in self.params.items()}

    def forward(self, X, use_target: bool = False, keep: bool = False):
        P = self.target if use_target else self.params
        X = np.atleast_2d(X)
        with np.errstate(over="ignore", invalid="ignore"):
            z1 = X @ P["W1"].T + P["b1"]
            a1 = _relu(z1)
            z2 = a1 @ P["W2"].T + P["b2"]
            a2 = _relu(z2)
            Q = a2 @ P["W3"].T + P["b3"]
        if not np.all(np.isfinite(Q)):
            raise DivergenceError("divergence: non-finite Q values")
        if keep:
            return Q, (X, z1, a1, z2, a2)
        return Q

    def backward(self, cache, dQ) -> dict:
        X, z1, a1, z2, a2 = cache
        P = self.params
        grads = {"W3": dQ.T @ a2, "b3": dQ.sum(axis=0)}
        d2 = (dQ @ P["W3"]) * (z2 > 0)
        grads["W2"] = d2.T @ a1
        grads["b2"] = d2.sum(axis=0)
        d1 = (d2 @ P["W2"]) * (z1 > 0)
        grads["W1"] = d1.T @ X
        grads["b1"] = d1.sum(axis=0)
        return grads

    def apply(self, grads: dict, lr: float, optimizer: str = "sgd"):
        if optimizer == "sgd":
            for k in self.names:
                self.params[k] -= lr * grads[k]
            return
        b1, b2, eps = 0.9, 0.999, 1e-8
        if self._moments is None:
            self._moments = {k: (np.zeros_like(v), np.zeros_like(v)) for k, v in self.params.items()}
        self._t += 1
        for k in self.names:
            m, v = self._moments[k]
            m *= b1
            m += (1 - b1) * grads[k]
            v *= b2
            v += (1 - b2) * grads[k] ** 2
            mhat = m / (1 - b1**self._t)
            vhat = v / (1 - b2**self._t)
            self.params[k] -= lr * mhat / (np.sqrt(vhat) + eps)


def q_forward(net: QNetwork, x, use_target: bool = False) -> np.ndarray:
    """Action values for one state (or a batch of states)."""
    Q = net.forward(x, use_target)
    return Q[0] if np.ndim(x) == 1 else Q


def td_loss_and_grads(net: QNetwork, X, actions, rewards, X_next, terminal, gamma: float):
    """Mean squared temporal-difference error and its gradient with respect to the online weights."""
    bootstrap = np.zeros(len(actions))
    live = ~np.asarray(terminal, dtype=bool)
    if np.any(live):
        bootstrap[live] = net.forward(X_next[live], use_target=True).max(axis=1)
    y = np.asarray(rewards) + gamma * bootstrap
    Q, cache = net.forward(X, keep=True)
    rows = np.arange(len(actions))
    err = Q[rows, actions] - y
    loss = float(np.mean(err**2))
    dQ = np.zeros_like(Q)
    dQ[rows, actions] = 2.0 * err / len(actions)
    return loss, net.backward(cache, dQ)


def train_step(net: QNetwork, batch, gamma: float, learn_rate: float, optimizer: str = "sgd") -> float:
    """One gradient step on a minibatch; returns the loss before the step.

    ``batch`` is a list of :class:`ReplayCue` or a tuple of arrays
    ``(X, actions, rewards, X_next, terminal)``.
    """
    if isinstance(batch, (list, tuple)) and batch and isinstance(batch[0], ReplayCue):
        X = np.array([c.x for c in batch])
        actions = np.array([c.action for c in batch], dtype=int)
        rewards = np.array([c.reward for c in batch])
        X_next = np.array([c.x_next for c in batch])
        terminal = np.array([c.terminal for c in batch], dtype=bool)
    else:
        X, actions, rewards, X_next, terminal = batch
    if len(actions) == 0:
        raise ValueError("minibatch is empty")
    loss, grads = td_loss_and_grads(net, X, actions, rewards, X_next, terminal, gamma)
    if not np.isfinite(loss) or loss > DIVERGENCE_LOSS:
        raise DivergenceError(f"divergence: loss {loss}")
    net.apply(grads, learn_rate, optimizer)
    return loss


def state_transition(x, d, h: float) -> np.ndarray:
    """One quantized step followed by radial retraction onto the sphere."""
    x = np.asarray(x, dtype=float)
    y = x + h * np.asarray(d, dtype=float)
    r = np.linalg.norm(y)
    if r == 0.0:
        return x.copy()
    return y / r


@dataclass
class DqnResult:
    direction: tuple
    pattern: tuple
    tie_set: list
    diagnostics: dict = field(default_factory=dict)


def dqn_select(
    cfg: EmulationConfig,
    x0,
    alphabet: list[AlphabetEntry],
    hyper: DqnHyper | None = None,
) -> DqnResult:
    """Select the output direction at ``x0`` by Q-learning with a tightening threshold.

    Each phase trains on episodes that start at ``x0`` and end as soon as an
    action with loss below ``kappa`` is taken.  After every episode the
    greedy path from ``x0`` is rolled out; the phase has converged once no
    new direction has joined the union of greedy paths for ``patience``
    environment steps (and at least ``min_phase_steps`` steps were taken).  A converged
    path made of one terminating direction tightens ``kappa`` to that
    direction's loss.  Any other converged set ends the search; its
    terminating members (if any) compete on their observed reward and those
    tied with the best are reported in ``tie_set``.
    """
    hyper = hyper or DqnHyper()
    entries = candidate_entries(alphabet, cfg.H)
    if not entries:
        raise ValueError("alphabet is empty")
    x0 = _unit(x0)
    D = directions_of(entries)
    K = len(entries)
    G = objective_matrix(cfg, x0, D)[0]
    scale = 1.0
    if hyper.reward_scale == "auto" and np.max(np.abs(G)) > 0:
        scale = float(np.max(np.abs(G)))
    rewards = -G / scale

    rng = np.random.default_rng(hyper.seed)
    net = QNetwork(cfg.n, K, hyper.hidden, rng)
    memory = ReplayMemory(hyper.capacity, cfg.n)
    h = cfg.h

    incumbent = int(rng.integers(K))
    kappa = G[incumbent]
    diag = {"kappa": [float(kappa)], "episode_reward": [], "loss": [], "phases": 0}
    step = 0
    episodes = 0

    def greedy_path():
        x, path = x0, []
        for _ in range(hyper.episode_steps):
            a = int(np.argmax(net.forward(x)[0]))
            path.append(a)
            if G[a] < kappa:
                break
            x = state_transition(x, D[a], h)
        return path

    if K == 1:
        e = entries[0]
        return DqnResult(e.direction, e.canonical_pattern, [e.direction], diag)

    while True:
        diag["phases"] += 1
        phase_steps = 0
        stable_since = 0
        last = None
        previous: set = set()
        while True:
            if episodes >= hyper.max_episodes:
                raise ConvergenceError("episode cap reached without convergence", diag)
            episodes += 1
            x, total = x0, 0.0
            for _ in range(hyper.episode_steps):
                if rng.random() < hyper.epsilon(step):
                    a = int(rng.integers(K))
                else:
                    a = int(np.argmax(net.forward(x)[0]))
                done = bool(G[a] < kappa)
                x_next = state_transition(x, D[a], h)
                memory.push(ReplayCue(x, a, rewards[a], x_next, done))
                total += rewards[a]
                step += 1
                phase_steps += 1
                if len(memory) >= hyper.batch_size:
                    idx = memory.sample_indices(hyper.batch_size, rng)
                    acts = memory.action[idx]
                    # terminality is judged against the current threshold
                    batch = (memory.x[idx], acts, memory.reward[idx], memory.x_next[idx], G[acts] < kappa)
                    diag["loss"].append(train_step(net, batch, hyper.gamma, hyper.learn_rate, hyper.optimizer))
                if step % hyper.target_period == 0:
                    net.sync_target()
                x = x_next
                if done:
                    break
            diag["episode_reward"].append(total)
            path = greedy_path()
            if last is None or not set(path) <= last:
                # a pair of alternating paths (tied optima) still counts as settled
                last = previous | set(path)
                stable_since = phase_steps
            previous = set(path)
            if phase_steps >= hyper.min_phase_steps and phase_steps - stable_since >= hyper.patience:
                # "nothing beats kappa" is only trusted once exploration has annealed
                if any(G[a] < kappa for a in last) or step >= hyper.eps_decay_steps:
                    break
                stable_since = phase_steps
        terminating = [a for a in sorted(last) if G[a] < kappa]
        if len(last) == 1 and terminating:
            incumbent = terminating[0]
            kappa = G[incumbent]
            diag["kappa"].append(float(kappa))
            continue
        if terminating:
            incumbent = min(terminating, key=lambda a: G[a])
        break

    tie = sorted(set(last) | {incumbent})
    tie_set = [entries[a].direction for a in tie if abs(G[a] - G[incumbent]) <= 1e-9]
    diag["episodes"] = episodes
    diag["steps"] = step
    e = entries[incumbent]
    return DqnResult(e.direction, e.canonical_pattern, tie_set, diag)
