"""Adam optimizer, functional core plus a thin stateful wrapper."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import Tensor


@dataclass
class AdamState:
    """Moment estimates for one flat parameter vector."""

    step: int
    m: np.ndarray
    v: np.ndarray
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def init(cls, size: int, alpha: float = 1e-3, beta1: float = 0.9,
             beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(step=0, m=np.zeros(size), v=np.zeros(size),
                   alpha=alpha, beta1=beta1, beta2=beta2, epsilon=epsilon)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update. Returns new params and new state."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.size != state.m.size:
        raise ValueError(
            f"adam_step length mismatch: params {params.size}, grads {grads.size}, state {state.m.size}")
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - state.alpha * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return new_params, replace(state, step=t, m=m, v=v)


class Adam:
    """Applies :func:`adam_step` to a list of parameter tensors in place."""

    def __init__(self, params: list[Tensor], alpha: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = list(params)
        self.states = [AdamState.init(p.data.size, alpha, beta1, beta2, epsilon)
                       for p in self.params]

    def step(self) -> None:
        for i, p in enumerate(self.params):
            grad = p.grad if p.grad is not None else np.zeros_like(p.data)
            new_flat, self.states[i] = adam_step(
                p.data.reshape(-1), grad.reshape(-1), self.states[i])
            p.data = new_flat.reshape(p.data.shape)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
