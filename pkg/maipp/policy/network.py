# maipp/policy/network.py

"""
Attention encoder, LSTM-enhanced decoder and pointer layer.

The encoder lets every node of the augmented waypoint graph attend to all
others. The decoder enriches the current node's embedding with the
high-interest threshold and remaining budget, runs it through an LSTM cell
carried along the executed trajectory, and points at one of the reachable
neighbors. The normalized pointer weights are the policy itself.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from maipp.core.config import PolicyConfig
from maipp.core.errors import BudgetExhausted, DomainError

# Set up logging
logger = logging.getLogger(__name__)

DTYPE = torch.float64


def attention_layer(
    h_q: torch.Tensor,
    h_kv: torch.Tensor,
    w_q: torch.Tensor,
    w_k: torch.Tensor,
    w_v: torch.Tensor,
    mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    Single-head scaled dot-product attention.

    Args:
        h_q: Query source, shape ``(..., n_q, d)``
        h_kv: Key-and-value source, shape ``(..., n_kv, d)``
        w_q, w_k, w_v: Projection matrices of shape ``(d, d)``
        mask: Optional boolean ``(..., n_q, n_kv)``; False entries are ignored

    Returns:
        Tensor of shape ``(..., n_q, d)``: per query, the softmax-weighted sum
        of projected values
    """
    d = h_q.shape[-1]
    if h_kv.shape[-1] != d or w_q.shape[-1] != d:
        raise DomainError(f"feature dimension mismatch: query {d}, key/value {h_kv.shape[-1]}, weights {w_q.shape[-1]}")
    q = h_q @ w_q.transpose(-1, -2)
    k = h_kv @ w_k.transpose(-1, -2)
    v = h_kv @ w_v.transpose(-1, -2)
    u = q @ k.transpose(-1, -2) / math.sqrt(q.shape[-1])
    if mask is not None:
        u = u.masked_fill(~mask, float("-inf"))
    a = torch.softmax(u, dim=-1)
    return a @ v


class AttentionLayer(nn.Module):
    def __init__(self, d_model: int):
        super().__init__()
        self.w_q = nn.Linear(d_model, d_model, bias=False)
        self.w_k = nn.Linear(d_model, d_model, bias=False)
        self.w_v = nn.Linear(d_model, d_model, bias=False)

    def forward(self, h_q: torch.Tensor, h_kv: torch.Tensor, mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        return attention_layer(h_q, h_kv, self.w_q.weight, self.w_k.weight, self.w_v.weight, mask)


class EncoderLayer(nn.Module):
    """Self-attention plus feed-forward, each with a residual and layer norm."""

    def __init__(self, d_model: int, ff_hidden: int):
        super().__init__()
        self.attention = AttentionLayer(d_model)
        self.norm1 = nn.LayerNorm(d_model)
        self.ff = nn.Sequential(nn.Linear(d_model, ff_hidden), nn.ReLU(), nn.Linear(ff_hidden, d_model))
        self.norm2 = nn.LayerNorm(d_model)

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        h = self.norm1(h + self.attention(h, h))
        return self.norm2(h + self.ff(h))


@dataclass
class RecurrentState:
    """LSTM hidden and cell state carried along an agent's executed trajectory."""
    hidden: torch.Tensor
    cell: torch.Tensor

    @classmethod
    def zeros(cls, d_model: int, batch: Optional[int] = None) -> "RecurrentState":
        shape = (d_model,) if batch is None else (batch, d_model)
        return cls(torch.zeros(shape, dtype=DTYPE), torch.zeros(shape, dtype=DTYPE))

    def detach(self) -> "RecurrentState":
        return RecurrentState(self.hidden.detach().clone(), self.cell.detach().clone())


@dataclass
class PolicyOutput:
    """Action distribution over the current node's neighbor list plus the critic's value."""
    probs: torch.Tensor
    log_probs: torch.Tensor
    value: torch.Tensor
    state: RecurrentState


class PolicyNet(nn.Module):
    """
    Actor-critic network shared by all agents.

    Inputs are batched: node features ``(B, n, 5)``, positional embeddings
    ``(B, n, k_eig)``, and per-sample current node, padded neighbor indices
    with a validity mask, remaining budget and threshold.
    """

    def __init__(self, cfg: PolicyConfig = PolicyConfig()):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_model
        self.node_proj = nn.Linear(cfg.feature_dim, d)
        self.pe_proj = nn.Linear(cfg.k_eig, d)
        self.layers = nn.ModuleList([EncoderLayer(d, cfg.ff_hidden) for _ in range(cfg.n_layers)])
        self.budget_proj = nn.Linear(d + 2, d)
        self.lstm = nn.LSTMCell(d, d)
        self.pointer_q = nn.Linear(d, d, bias=False)
        self.pointer_k = nn.Linear(d, d, bias=False)
        self.value_head = nn.Sequential(nn.Linear(d, d), nn.ReLU(), nn.Linear(d, 1))
        self.to(DTYPE)

    @property
    def d_model(self) -> int:
        return self.cfg.d_model

    def encode(self, features: torch.Tensor, pe: torch.Tensor) -> torch.Tensor:
        """Node embeddings ``(..., n, d_model)``."""
        h = self.node_proj(features) + self.pe_proj(pe)
        for layer in self.layers:
            h = layer(h)
        return h

    def decode(
        self,
        embeddings: torch.Tensor,
        current: torch.Tensor,
        neighbors: torch.Tensor,
        mask: torch.Tensor,
        remaining_budget: torch.Tensor,
        mu_th: torch.Tensor,
        state: RecurrentState,
    ) -> PolicyOutput:
        """
        Pointer distribution over neighbors for a batch of decisions.

        Raises:
            BudgetExhausted: if some sample has no unmasked neighbor
        """
        if not bool(mask.any(dim=-1).all()):
            raise BudgetExhausted("no neighbor is reachable with the remaining budget")
        batch = torch.arange(embeddings.shape[0])
        current_feature = embeddings[batch, current]
        enhanced = self.budget_proj(
            torch.cat([current_feature, mu_th.unsqueeze(-1), remaining_budget.unsqueeze(-1)], dim=-1)
        )
        hidden, cell = self.lstm(enhanced, (state.hidden, state.cell))
        neighbor_features = torch.gather(
            embeddings, 1, neighbors.unsqueeze(-1).expand(-1, -1, embeddings.shape[-1])
        )
        q = self.pointer_q(hidden)
        k = self.pointer_k(neighbor_features)
        logits = (k @ q.unsqueeze(-1)).squeeze(-1) / math.sqrt(self.d_model)
        logits = logits.masked_fill(~mask, float("-inf"))
        log_probs = F.log_softmax(logits, dim=-1)
        probs = torch.softmax(logits, dim=-1)
        value = self.value_head(hidden).squeeze(-1)
        return PolicyOutput(probs=probs, log_probs=log_probs, value=value, state=RecurrentState(hidden, cell))

    def forward(self, batch: Dict[str, torch.Tensor], state: RecurrentState) -> PolicyOutput:
        embeddings = self.encode(batch["features"], batch["pe"])
        return self.decode(
            embeddings, batch["current"], batch["neighbors"], batch["mask"],
            batch["remaining_budget"], batch["mu_th"], state,
        )


def masked_entropy(output: PolicyOutput, mask: torch.Tensor) -> torch.Tensor:
    """Per-sample entropy, ignoring masked (zero-probability) entries."""
    safe_log = output.log_probs.masked_fill(~mask, 0.0)
    return -(output.probs * safe_log).sum(dim=-1)
