"""Adagrad with row-sparse updates."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NumericError


@dataclass
class AdagradState:
    learning_rate: float = 0.1
    epsilon: float = 1e-10
    accumulators: dict = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params, learning_rate=0.1, epsilon=1e-10):
        acc = {name: np.zeros_like(t) for name, t in params.tables().items()}
        return cls(learning_rate, epsilon, acc)

    def copy(self):
        return AdagradState(self.learning_rate, self.epsilon, {k: v.copy() for k, v in self.accumulators.items()})


def step(params, state, grads, backend=None):
    """One in-place Adagrad update over the rows present in ``grads``.

    ``acc += g**2; param -= lr * g / (sqrt(acc) + eps)`` per touched entry.
    Rows absent from ``grads`` are neither read nor written.
    """
    k = backend or kernels
    tables = params.tables()
    updates = []
    for name in grads.tables():
        rows, vals = grads.rows(name)
        if len(rows) and not np.isfinite(vals).all():
            raise NumericError(f"non-finite gradient in {name} table")
        updates.append((name, rows, vals))
    for name, rows, vals in updates:
        if len(rows):
            k.adagrad_rows(tables[name], state.accumulators[name], rows, vals, state.learning_rate, state.epsilon)
    return params, state
