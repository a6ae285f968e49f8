"""One-hidden-layer policy network with forward, backward and log Z heads.

Text format (version 1), one record per line, numbers in Python ``repr``
form so that a save/load round trip is exact::

    nurseflow-policy 1
    sizes <input> <hidden> <actions>
    W1 <input> <hidden>
    <hidden values>            # one line per input row
    b1 1 <hidden>
    ...                        # then Wf, bf, Wb, bb, wz, bz in that order
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMAT = "nurseflow-policy"
VERSION = 1
PARAM_ORDER = ("W1", "b1", "Wf", "bf", "Wb", "bb", "wz", "bz")


@dataclass
class PolicyParams:
    W1: np.ndarray  # (input, hidden)
    b1: np.ndarray  # (hidden,)
    Wf: np.ndarray  # (hidden, actions)
    bf: np.ndarray
    Wb: np.ndarray
    bb: np.ndarray
    wz: np.ndarray  # (hidden,)
    bz: np.ndarray  # (1,)

    @classmethod
    def init(cls, input_size: int, hidden: int, actions: int, rng: np.random.Generator) -> "PolicyParams":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
        def u(fan_in, shape):
            a = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-a, a, size=shape)
        return cls(u(input_size, (input_size, hidden)), u(input_size, hidden),
                   u(hidden, (hidden, actions)), u(hidden, actions),
                   u(hidden, (hidden, actions)), u(hidden, actions),
                   u(hidden, hidden), u(hidden, 1))

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.W1.shape[0], self.W1.shape[1], self.Wf.shape[1]

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, k) for k in PARAM_ORDER]

    def flat(self) -> np.ndarray:
        return np.concatenate([a.reshape(-1) for a in self.arrays()])

    def with_flat(self, v: np.ndarray) -> "PolicyParams":
        out, k = [], 0
        for a in self.arrays():
            out.append(np.asarray(v[k:k + a.size], float).reshape(a.shape).copy())
            k += a.size
        return PolicyParams(*out)

    def copy(self) -> "PolicyParams":
        return PolicyParams(*(a.copy() for a in self.arrays()))

    @property
    def num_params(self) -> int:
        return sum(a.size for a in self.arrays())

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    # -- evaluation -------------------------------------------------------
    def forward(self, X: np.ndarray):
        """Hidden activations and the three heads for a batch of encodings."""
        H = np.tanh(X @ self.W1 + self.b1)
        return H, H @ self.Wf + self.bf, H @ self.Wb + self.bb, H @ self.wz + self.bz[0]

    def backward(self, X, H, gF, gB, gZ) -> "PolicyParams":
        """Parameter gradient given output gradients of the three heads."""
        dH = gF @ self.Wf.T + gB @ self.Wb.T + np.outer(gZ, self.wz)
        dA = dH * (1.0 - H * H)
        return PolicyParams(X.T @ dA, dA.sum(axis=0), H.T @ gF, gF.sum(axis=0),
                            H.T @ gB, gB.sum(axis=0), H.T @ gZ, np.array([gZ.sum()]))

    # -- text format ----------------------------------------------------------
    def dumps(self) -> str:
        lines = [f"{FORMAT} {VERSION}", "sizes " + " ".join(map(str, self.sizes))]
        for name in PARAM_ORDER:
            a = np.atleast_2d(getattr(self, name))
            lines.append(f"{name} {a.shape[0]} {a.shape[1]}")
            lines.extend(" ".join(repr(float(v)) for v in row) for row in a)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "PolicyParams":
        lines = text.splitlines()
        head = lines[0].split()
        if len(head) != 2 or head[0] != FORMAT:
            raise ValueError("not a policy file")
        if int(head[1]) != VERSION:
            raise ValueError(f"unsupported policy format version {head[1]}")
        pos = 2
        arrays = {}
        for name in PARAM_ORDER:
            tag, r, c = lines[pos].split()
            if tag != name:
                raise ValueError(f"expected block {name}, found {tag}")
            r, c = int(r), int(c)
            rows = [[float(v) for v in lines[pos + 1 + k].split()] for k in range(r)]
            a = np.array(rows, dtype=float).reshape(r, c)
            arrays[name] = a if name.startswith("W") else a.reshape(-1)
            pos += 1 + r
        return cls(**arrays)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "PolicyParams":
        return cls.loads(Path(path).read_text())


def masked_log_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Log-probabilities over masked-in entries; masked-out entries get -inf."""
    z = np.where(mask, logits, -np.inf)
    m = z.max(axis=-1, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=-1, keepdims=True))
    return z - lse
