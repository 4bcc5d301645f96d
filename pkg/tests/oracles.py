"""Reference computations that share no code with the package.

Each oracle is written the slow, obvious way so a disagreement points at the
package rather than at the check.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

DATA = Path(__file__).parent / "data"


def brute_force_gaussian(axis_i, axis_n, center, sigma):
    """Normalised exp(-d^2 / 2 sigma^2) over the product grid, row-major in irrigation."""
    weights = []
    for i in axis_i:
        for n in axis_n:
            d2 = (i - center[0]) ** 2 / sigma[0] ** 2 + (n - center[1]) ** 2 / sigma[1] ** 2
            weights.append(math.exp(-0.5 * d2))
    total = math.fsum(weights)
    return [w / total for w in weights]


def load_toy_mdp(path: Path | None = None) -> dict:
    raw = json.loads((path or DATA / "toy_mdp.json").read_text(encoding="utf-8"))
    trans = {
        s: {int(a): (nxt, float(r)) for a, (nxt, r) in row.items()}
        for s, row in raw["transitions"].items()
    }
    return {"gamma": raw["gamma"], "states": raw["states"], "actions": raw["actions"], "T": trans}


def value_iteration_q(mdp: dict, tol: float = 1e-13, max_iter: int = 100_000) -> dict:
    """Optimal action values by synchronous Bellman optimality backups."""
    states, actions, gamma, T = mdp["states"], mdp["actions"], mdp["gamma"], mdp["T"]
    q = {(s, a): 0.0 for s in states for a in actions}
    for _ in range(max_iter):
        v = {s: max(q[(s, a)] for a in actions) for s in states}
        new = {(s, a): T[s][a][1] + gamma * v[T[s][a][0]] for s in states for a in actions}
        delta = max(abs(new[k] - q[k]) for k in q)
        q = new
        if delta < tol:
            break
    return q


def central_difference(loss_fn, params, h=1e-5):
    """Gradient of ``loss_fn()`` w.r.t. each array in ``params`` (perturbed in place)."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + h
            up = loss_fn()
            p[idx] = old - h
            down = loss_fn()
            p[idx] = old
            g[idx] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-8)))
