"""Actor-critic networks, masked categorical policy, and the PPO update.

Two separate MLPs (two hidden layers of 64 tanh units) map the observation to
action logits and to a scalar value. Invalid actions receive an additive
logit penalty of -1e8 before normalization, so their probability mass is
numerically zero. Training maximizes the clipped surrogate with generalized
advantage estimation, a squared-error value loss, and an optional entropy
bonus, in the stable-baselines3 default configuration.

Checkpoints are a binary container: magic "QRLE", u32 version, u32 header
length, UTF-8 JSON header, then the parameter tensors as little-endian
float32 in the order declared by the header.
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass, asdict, field, replace

import numpy as np
import torch
from torch import nn

MASK_PENALTY = -1e8
CHECKPOINT_MAGIC = b"QRLE"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Corrupt or incompatible checkpoint file."""


@dataclass(frozen=True)
class Hyperparams:
    """PPO defaults mirroring the reference implementation's, pinned here."""

    lr: float = 3e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip: float = 0.2
    epochs: int = 10
    minibatch: int = 64
    horizon: int = 2048
    entropy_coef: float = 0.0
    vf_coef: float = 0.5
    grad_clip: float = 0.5
    adam_eps: float = 1e-5
    total_steps: int = 1_000_000
    seed: int = 0


def _orthogonal_(weight: torch.Tensor, gain: float, generator: torch.Generator) -> None:
    rows, cols = weight.shape
    flat = torch.randn(rows, cols, generator=generator, dtype=torch.float64)
    q, r = torch.linalg.qr(flat.T if rows < cols else flat)
    q = q * torch.sign(torch.diagonal(r))
    if rows < cols:
        q = q.T
    with torch.no_grad():
        weight.copy_((gain * q[:rows, :cols]).to(weight.dtype))


class MLP(nn.Module):
    def __init__(self, in_dim: int, out_dim: int, head_gain: float,
                 generator: torch.Generator, hidden: int = 64, dtype=torch.float32):
        super().__init__()
        self.fc1 = nn.Linear(in_dim, hidden, dtype=dtype)
        self.fc2 = nn.Linear(hidden, hidden, dtype=dtype)
        self.head = nn.Linear(hidden, out_dim, dtype=dtype)
        for layer, gain in ((self.fc1, math.sqrt(2)), (self.fc2, math.sqrt(2)), (self.head, head_gain)):
            _orthogonal_(layer.weight, gain, generator)
            nn.init.zeros_(layer.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = torch.tanh(self.fc1(x))
        x = torch.tanh(self.fc2(x))
        return self.head(x)


class PolicyNet(MLP):
    def __init__(self, obs_dim: int, action_dim: int, generator: torch.Generator, dtype=torch.float32):
        super().__init__(obs_dim, action_dim, 0.01, generator, dtype=dtype)
        self.obs_dim = obs_dim
        self.action_dim = action_dim


class ValueNet(MLP):
    def __init__(self, obs_dim: int, generator: torch.Generator, dtype=torch.float32):
        super().__init__(obs_dim, 1, 1.0, generator, dtype=dtype)
        self.obs_dim = obs_dim


def masked_log_probs(logits: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Log-probabilities with masked entries pushed to effectively zero mass."""
    penalized = logits + (mask - 1.0) * -MASK_PENALTY
    return torch.log_softmax(penalized, dim=-1)


def forward_policy(policy: PolicyNet, obs: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Probability vector over hardware nodes; requires at least one valid action."""
    if not mask.any():
        raise ValueError("all actions are masked; the episode must terminate instead")
    dtype = policy.head.weight.dtype
    with torch.no_grad():
        logits = policy(torch.as_tensor(obs, dtype=dtype))
        logp = masked_log_probs(logits, torch.as_tensor(mask, dtype=dtype))
    return logp.exp().numpy()


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(probs)
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right").clip(0, len(probs) - 1))


class RolloutBuffer:
    """Fixed-horizon transition store with GAE post-processing."""

    def __init__(self, horizon: int, obs_dim: int, action_dim: int):
        self.horizon = horizon
        self.obs = np.zeros((horizon, obs_dim), dtype=np.float32)
        self.masks = np.zeros((horizon, action_dim), dtype=np.float32)
        self.actions = np.zeros(horizon, dtype=np.int64)
        self.log_probs = np.zeros(horizon, dtype=np.float32)
        self.rewards = np.zeros(horizon, dtype=np.float32)
        self.values = np.zeros(horizon, dtype=np.float32)
        self.dones = np.zeros(horizon, dtype=np.float32)
        self.pos = 0

    def add(self, obs, mask, action, log_prob, reward, value, done) -> None:
        i = self.pos
        self.obs[i] = obs
        self.masks[i] = mask
        self.actions[i] = action
        self.log_probs[i] = log_prob
        self.rewards[i] = reward
        self.values[i] = value
        self.dones[i] = float(done)
        self.pos += 1

    @property
    def full(self) -> bool:
        return self.pos == self.horizon

    def reset(self) -> None:
        self.pos = 0


def compute_returns_advantages(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap_value: float,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation; terminal steps stop bootstrapping.

    Returns (advantages, returns) with returns = advantages + values.
    """
    n = len(rewards)
    adv = np.zeros(n, dtype=np.float64)
    last = 0.0
    for t in range(n - 1, -1, -1):
        nonterminal = 1.0 - dones[t]
        next_value = bootstrap_value if t == n - 1 else values[t + 1]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        last = delta + gamma * lam * nonterminal * last
        adv[t] = last
    returns = adv + values
    return adv, returns


def ppo_update(
    buffer: RolloutBuffer,
    policy: PolicyNet,
    value: ValueNet,
    optimizer: torch.optim.Optimizer,
    hp: Hyperparams,
    advantages: np.ndarray,
    returns: np.ndarray,
    rng: np.random.Generator,
) -> dict:
    """Clipped-surrogate update over epochs x minibatches; returns loss diagnostics."""
    n = buffer.pos
    adv = (advantages[:n] - advantages[:n].mean()) / (advantages[:n].std() + 1e-8)

    obs_t = torch.as_tensor(buffer.obs[:n])
    mask_t = torch.as_tensor(buffer.masks[:n])
    act_t = torch.as_tensor(buffer.actions[:n])
    old_logp_t = torch.as_tensor(buffer.log_probs[:n])
    adv_t = torch.as_tensor(adv.astype(np.float32))
    ret_t = torch.as_tensor(returns[:n].astype(np.float32))

    pol_losses, val_losses, entropies, clip_fracs = [], [], [], []
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hp.minibatch):
            mb = torch.as_tensor(order[start : start + hp.minibatch])
            logits = policy(obs_t[mb])
            logp_all = masked_log_probs(logits, mask_t[mb])
            logp = logp_all.gather(1, act_t[mb].unsqueeze(1)).squeeze(1)
            probs = logp_all.exp()
            entropy = -(probs * logp_all.clamp(min=MASK_PENALTY)).sum(dim=-1).mean()

            ratio = torch.exp(logp - old_logp_t[mb])
            mb_adv = adv_t[mb]
            surrogate = torch.min(
                ratio * mb_adv,
                torch.clamp(ratio, 1.0 - hp.clip, 1.0 + hp.clip) * mb_adv,
            ).mean()
            value_loss = ((value(obs_t[mb]).squeeze(-1) - ret_t[mb]) ** 2).mean()
            loss = -surrogate + hp.vf_coef * value_loss - hp.entropy_coef * entropy
            if not torch.isfinite(loss):
                raise FloatingPointError("non-finite PPO loss; update aborted")

            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(
                list(policy.parameters()) + list(value.parameters()), hp.grad_clip
            )
            optimizer.step()

            pol_losses.append(-float(surrogate.detach()))
            val_losses.append(float(value_loss.detach()))
            entropies.append(float(entropy.detach()))
            clip_fracs.append(float(((ratio.detach() - 1.0).abs() > hp.clip).float().mean()))
    return {
        "policy_loss": float(np.mean(pol_losses)),
        "value_loss": float(np.mean(val_losses)),
        "entropy": float(np.mean(entropies)),
        "clip_fraction": float(np.mean(clip_fracs)),
    }


def ppo_loss(
    policy: PolicyNet,
    value: ValueNet,
    obs: torch.Tensor,
    mask: torch.Tensor,
    actions: torch.Tensor,
    old_log_probs: torch.Tensor,
    advantages: torch.Tensor,
    returns: torch.Tensor,
    hp: Hyperparams,
) -> torch.Tensor:
    """Total PPO loss on one batch (exposed for gradient verification)."""
    logp_all = masked_log_probs(policy(obs), mask)
    logp = logp_all.gather(1, actions.unsqueeze(1)).squeeze(1)
    probs = logp_all.exp()
    entropy = -(probs * logp_all.clamp(min=MASK_PENALTY)).sum(dim=-1).mean()
    ratio = torch.exp(logp - old_log_probs)
    surrogate = torch.min(
        ratio * advantages,
        torch.clamp(ratio, 1.0 - hp.clip, 1.0 + hp.clip) * advantages,
    ).mean()
    value_loss = ((value(obs).squeeze(-1) - returns) ** 2).mean()
    return -surrogate + hp.vf_coef * value_loss - hp.entropy_coef * entropy


# -- checkpoint container --------------------------------------------------


def _tensor_order(policy: PolicyNet, value: ValueNet) -> list[tuple[str, torch.Tensor]]:
    out = []
    for prefix, net in (("policy", policy), ("value", value)):
        for name, param in net.named_parameters():
            out.append((f"{prefix}.{name}", param))
    return out


def save_checkpoint(
    path,
    policy: PolicyNet,
    value: ValueNet,
    hp: Hyperparams,
    steps_trained: int,
    extra: dict | None = None,
) -> None:
    tensors = _tensor_order(policy, value)
    header = {
        "obs_dim": policy.obs_dim,
        "action_dim": policy.action_dim,
        "hidden": policy.fc1.out_features,
        "hyperparams": asdict(hp),
        "seed": hp.seed,
        "steps_trained": steps_trained,
        "tensors": [[name, list(t.shape)] for name, t in tensors],
    }
    if extra:
        header.update(extra)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<II", CHECKPOINT_VERSION, len(header_bytes)))
    buf.write(header_bytes)
    for _, t in tensors:
        buf.write(t.detach().numpy().astype("<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> tuple[PolicyNet, ValueNet, dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError("bad magic; not a checkpoint file")
    if len(blob) < 12:
        raise CheckpointError("truncated checkpoint header")
    version, header_len = struct.unpack("<II", blob[4:12])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if len(blob) < 12 + header_len:
        raise CheckpointError("truncated checkpoint header")
    header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
    payload = blob[12 + header_len :]

    expected = sum(int(np.prod(shape)) for _, shape in header["tensors"]) * 4
    if len(payload) != expected:
        raise CheckpointError(f"payload is {len(payload)} bytes, expected {expected}")

    gen = torch.Generator().manual_seed(0)
    policy = PolicyNet(header["obs_dim"], header["action_dim"], gen)
    value = ValueNet(header["obs_dim"], gen)
    params = dict(_tensor_order(policy, value))
    offset = 0
    with torch.no_grad():
        for name, shape in header["tensors"]:
            count = int(np.prod(shape))
            arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset).reshape(shape)
            params[name].copy_(torch.from_numpy(arr.copy()))
            offset += count * 4
    return policy, value, header


# -- training loop -----------------------------------------------------------


@dataclass
class TraceRow:
    batch_index: int
    mean_len: float
    std_len: float


@dataclass
class TrainResult:
    policy: PolicyNet
    value: ValueNet
    hp: Hyperparams
    steps_trained: int
    trace: list[TraceRow] = field(default_factory=list)
    episodes: int = 0
    successes: int = 0


def write_trace_csv(rows: list[TraceRow], path) -> None:
    with open(path, "w") as fh:
        fh.write("batch_index,mean_len,std_len\n")
        for r in rows:
            fh.write(f"{r.batch_index},{r.mean_len},{r.std_len}\n")


def train(
    graph_source,
    env,
    hp: Hyperparams,
    augment_sampler=None,
    log_every: int | None = None,
) -> TrainResult:
    """Collect-horizon / update loop until total_steps environment steps.

    `graph_source` yields the problem graph for each new episode; `env` is a
    fresh EmbeddingEnv on the target hardware. When an augmentation sampler is
    given, each step draws a fresh composed transform: the agent sees the
    permuted observation and its action is mapped back before stepping.
    """
    from .augmentation import apply_to_mask, apply_to_observation

    torch.set_num_threads(1)
    gen = torch.Generator().manual_seed(hp.seed)
    rng = np.random.default_rng(hp.seed)

    obs = env.reset(next(graph_source))
    layout = env.layout
    policy = PolicyNet(layout.dim, layout.hw_nodes, gen)
    value = ValueNet(layout.dim, gen)
    optimizer = torch.optim.Adam(
        list(policy.parameters()) + list(value.parameters()), lr=hp.lr, eps=hp.adam_eps
    )
    buffer = RolloutBuffer(hp.horizon, layout.dim, layout.hw_nodes)

    iterations = math.ceil(hp.total_steps / hp.horizon)
    result = TrainResult(policy=policy, value=value, hp=hp, steps_trained=iterations * hp.horizon)
    ep_len = 0

    def view(raw_obs, raw_mask):
        if augment_sampler is None:
            return raw_obs, raw_mask.astype(np.float32), None
        perm, inv = augment_sampler.sample()
        return (
            apply_to_observation(raw_obs, perm, layout),
            apply_to_mask(raw_mask, perm).astype(np.float32),
            inv,
        )

    for iteration in range(iterations):
        buffer.reset()
        batch_lens: list[int] = []
        last_done = False
        while not buffer.full:
            v_obs, v_mask, inv = view(obs, env.action_mask())
            with torch.no_grad():
                logits = policy(torch.as_tensor(v_obs))
                logp_all = masked_log_probs(logits, torch.as_tensor(v_mask))
                val = float(value(torch.as_tensor(v_obs)))
            action = sample_action(logp_all.exp().numpy(), rng)
            env_action = action if inv is None else int(inv[action])
            outcome = env.step(env_action)
            buffer.add(v_obs, v_mask, action, float(logp_all[action]), outcome.reward, val, outcome.terminated)
            ep_len += 1
            last_done = outcome.terminated
            if outcome.terminated:
                batch_lens.append(ep_len)
                result.episodes += 1
                result.successes += int(outcome.success)
                ep_len = 0
                obs = env.reset(next(graph_source))
            else:
                obs = outcome.observation

        if last_done:
            bootstrap = 0.0
        else:
            v_obs, _, _ = view(obs, env.action_mask())
            with torch.no_grad():
                bootstrap = float(value(torch.as_tensor(v_obs)))
        advantages, returns = compute_returns_advantages(
            buffer.rewards, buffer.values, buffer.dones, bootstrap, hp.gamma, hp.gae_lambda
        )
        ppo_update(buffer, policy, value, optimizer, hp, advantages, returns, rng)

        if batch_lens:
            mean_len, std_len = float(np.mean(batch_lens)), float(np.std(batch_lens))
        else:
            mean_len = result.trace[-1].mean_len if result.trace else float("nan")
            std_len = 0.0
        result.trace.append(TraceRow(iteration, mean_len, std_len))
        if log_every and (iteration + 1) % log_every == 0:
            print(f"[train] batch {iteration + 1}/{iterations} mean_len={mean_len:.1f}")
    return result


def constant_graph_source(g):
    while True:
        yield g


def dataset_graph_source(graphs_by_n: dict[int, list], rng: np.random.Generator, episodes_per_size: int = 1000):
    """Cycle problem sizes in ascending order, `episodes_per_size` episodes each,
    resampling uniformly within a size (small sizes repeat graphs as needed)."""
    sizes = sorted(graphs_by_n)
    while True:
        for n in sizes:
            pool = graphs_by_n[n]
            for _ in range(episodes_per_size):
                yield pool[int(rng.integers(len(pool)))]
