"""Learning-rate-free stochastic optimizer based on continuous coin betting.

Each scalar parameter is a gambler betting on the negative gradient. The bet
size derives from accumulated gradient evidence and winnings, so no step-size
hyper-parameter exists anywhere in the interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Params = dict[str, np.ndarray]


@dataclass
class OptimizerState:
    """Per-parameter betting state, keyed by parameter block name.

    max_grad tracks the largest gradient magnitude seen (never below `eps`),
    grad_abs_sum and grad_sum accumulate |g| and -g, reward holds the
    clipped-at-zero winnings, and initial keeps the starting parameter values
    that every bet is placed relative to.
    """

    alpha: float = 100.0
    eps: float = 1e-8
    initial: Params = field(default_factory=dict)
    max_grad: Params = field(default_factory=dict)
    grad_abs_sum: Params = field(default_factory=dict)
    grad_sum: Params = field(default_factory=dict)
    reward: Params = field(default_factory=dict)


def init_state(params: Params, alpha: float = 100.0, eps: float = 1e-8) -> OptimizerState:
    state = OptimizerState(alpha=alpha, eps=eps)
    for name, p in params.items():
        state.initial[name] = p.copy()
        state.max_grad[name] = np.full_like(p, eps)
        state.grad_abs_sum[name] = np.zeros_like(p)
        state.grad_sum[name] = np.zeros_like(p)
        state.reward[name] = np.zeros_like(p)
    return state


def optimizer_step(
    state: OptimizerState, params: Params, gradients: Params
) -> tuple[OptimizerState, Params]:
    """Advance every parameter by one betting round.

    With L the running max |g|, G the running sum of |g|, theta the running
    sum of -g and R the clipped reward, the new value is

        initial + theta / (L * max(G + L, alpha * L)) * (L + R)

    Updates happen in place; the pair is returned for call-site chaining.
    """
    for name, p in params.items():
        g = gradients[name]
        init = state.initial[name]
        # the outstanding bet is the current offset from the initial value
        bet = p - init
        L = state.max_grad[name]
        np.maximum(L, np.abs(g), out=L)
        state.grad_abs_sum[name] += np.abs(g)
        state.grad_sum[name] -= g
        reward = state.reward[name]
        np.maximum(reward + bet * (-g), 0.0, out=reward)
        fraction = state.grad_sum[name] / (
            L * np.maximum(state.grad_abs_sum[name] + L, state.alpha * L)
        )
        p[...] = init + fraction * (L + reward)
    return state, params
