"""Tabular Q-learning over macro-cycle states and 4-slot macro actions."""

from __future__ import annotations

import ast
from pathlib import Path
from typing import Hashable, Iterable, Sequence


class QTable:
    """Sparse action-value table; absent entries read as 0."""

    def __init__(self, lr: float = 0.1, gamma: float = 0.95):
        if not 0.0 <= lr <= 1.0:
            raise ValueError("lr must lie in [0, 1]")
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        self.lr = lr
        self.gamma = gamma
        self.entries: dict[tuple[Hashable, Hashable], float] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, state: Hashable, action: Hashable) -> float:
        return self.entries.get((state, action), 0.0)

    def set(self, state: Hashable, action: Hashable, value: float) -> None:
        self.entries[(state, action)] = float(value)

    def row(self, state: Hashable, actions: Iterable[Hashable]) -> list[float]:
        get = self.entries.get
        return [get((state, a), 0.0) for a in actions]

    def max_value(self, state: Hashable, actions: Sequence[Hashable]) -> float:
        return max(self.row(state, actions))

    def update(
        self,
        s: Hashable,
        a: Hashable,
        reward: float,
        s_next: Hashable | None,
        next_actions: Sequence[Hashable] = (),
    ) -> float:
        """One Q-learning backup; ``s_next=None`` marks a terminal transition."""
        if s_next is None:
            bootstrap = 0.0
        else:
            if not next_actions:
                raise ValueError("next_actions must be non-empty for a non-terminal state")
            bootstrap = self.max_value(s_next, next_actions)
        q = self.lookup(s, a)
        q += self.lr * (reward + self.gamma * bootstrap - q)
        self.entries[(s, a)] = q
        return q

    # plain text so tables can be diffed and used as fixtures
    def save(self, path: str | Path) -> None:
        lines = [f"# lr={self.lr!r} gamma={self.gamma!r}"]
        for (s, a), v in sorted(self.entries.items(), key=lambda kv: repr(kv[0])):
            lines.append(f"{s!r}\t{a!r}\t{v!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "QTable":
        text = Path(path).read_text(encoding="utf-8").splitlines()
        meta = dict(kv.split("=") for kv in text[0].lstrip("# ").split())
        table = cls(lr=float(meta["lr"]), gamma=float(meta["gamma"]))
        for line in text[1:]:
            if not line.strip():
                continue
            s, a, v = line.split("\t")
            table.entries[(ast.literal_eval(s), ast.literal_eval(a))] = float(v)
        return table


def q_lookup(table: QTable, state, action) -> float:
    return table.lookup(state, action)


def q_update(table: QTable, s, a, reward: float, s_next, next_actions=()) -> float:
    return table.update(s, a, reward, s_next, next_actions)
