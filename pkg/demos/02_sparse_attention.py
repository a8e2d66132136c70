"""Top-M graphs and the risk prior inside attention.

Twenty agents surround the ego. When the agent tokens carry little
distinguishing content, plain softmax attention spreads roughly 1/20 of the
weight over each of them. Restricting each plan to its M riskiest agents
and adding the scaled, normalised risk to the logits concentrates attention
on the agents that matter.

Run: python3 demos/02_sparse_attention.py
"""

import numpy as np

from riskgame.attention import TokenSet, risk_biased_attention
from riskgame.fixtures import attention_weights
from riskgame.geometry import Trajectory
from riskgame.risk import AgentPrediction, risk_matrix
from riskgame.sparse_game import build_graph

rng = np.random.default_rng(7)
dt, T, K = 0.5, 6, 20
steps = dt * np.arange(1, T + 1)[:, None]

plan = Trajectory(dt, np.column_stack([5.0 * steps[:, 0], np.zeros(T)]), np.zeros(T), np.tile([5.0, 0.0], (T, 1)))
agents = []
for _ in range(K):
    start = rng.uniform([-10, -25], [40, 25])
    vel = rng.uniform(-4, 4, 2)
    agents.append(AgentPrediction((Trajectory(dt, start + steps * vel, np.zeros(T), np.tile(vel, (T, 1))),)))

risk = risk_matrix([plan], agents)
riskiest = int(np.argmax(risk.values[0]))
print(f"riskiest agent: #{riskiest} with risk {risk.values[0, riskiest]:.3f} (mean {risk.values.mean():.3f})")

# small, uninformative tokens: content alone cannot single out the dangerous agent
weights, _ = attention_weights(0)
tokens = TokenSet(0.1 * rng.normal(size=(1, weights.d_in)), 0.1 * rng.normal(size=(K, weights.d_in)))

# %% Dense vs sparse, with and without the risk prior
for m, beta in ((K, 0.0), (K, 2.0), (K, 6.0), (4, 2.0), (1, 2.0)):
    graph = build_graph(risk, m)
    _, attn = risk_biased_attention(tokens, graph, weights.with_beta(beta), return_attention=True)
    print(f"M={m:>2} beta={beta}: weight on riskiest {attn[0, riskiest]:.3f}, "
          f"agents with weight > 0: {(attn[0] > 0).sum()}")
