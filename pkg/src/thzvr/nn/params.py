"""Named parameter collection with parallel gradients, plus a flat binary
checkpoint format (little-endian float64 payload with a text manifest)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class ParameterTree:
    def __init__(self):
        self._values: dict[str, np.ndarray] = {}
        self._grads: dict[str, np.ndarray] = {}

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self._values:
            raise KeyError(f"parameter {name!r} already registered")
        arr = np.asarray(value, dtype=np.float64)
        self._values[name] = arr
        self._grads[name] = np.zeros_like(arr)
        return arr

    def names(self) -> list[str]:
        return list(self._values)

    def value(self, name: str) -> np.ndarray:
        return self._values[name]

    def grad(self, name: str) -> np.ndarray:
        return self._grads[name]

    def set_value(self, name: str, value: np.ndarray) -> None:
        if self._values[name].shape != np.shape(value):
            raise ValueError(f"shape mismatch for {name!r}")
        self._values[name] = np.asarray(value, dtype=np.float64)

    def accumulate_grad(self, name: str, grad: np.ndarray) -> None:
        if self._grads[name].shape != np.shape(grad):
            raise ValueError(f"gradient shape mismatch for {name!r}")
        self._grads[name] += grad

    def zero_grads(self) -> None:
        for g in self._grads.values():
            g.fill(0.0)

    def items(self):
        for name in self._values:
            yield name, self._values[name], self._grads[name]

    def num_params(self) -> int:
        return int(sum(v.size for v in self._values.values()))

    def copy(self) -> "ParameterTree":
        clone = ParameterTree()
        for name, value in self._values.items():
            clone.add(name, value.copy())
        return clone

    def copy_from(self, other: "ParameterTree") -> None:
        if self.names() != other.names():
            raise ValueError("parameter trees have different layouts")
        for name in self._values:
            self.set_value(name, other.value(name).copy())

    def save(self, path: str | Path) -> None:
        """Write values as concatenated little-endian float64 plus a manifest
        file listing name and shape per line, in order."""
        path = Path(path)
        with open(path, "wb") as fh:
            for value in self._values.values():
                fh.write(value.astype("<f8").tobytes())
        lines = [f"{name} {','.join(str(d) for d in value.shape) or 'scalar'}"
                 for name, value in self._values.items()]
        Path(str(path) + ".manifest").write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ParameterTree":
        path = Path(path)
        manifest = Path(str(path) + ".manifest").read_text().strip().splitlines()
        raw = path.read_bytes()
        tree = cls()
        offset = 0
        for line in manifest:
            name, shape_txt = line.split(" ", 1)
            shape = () if shape_txt == "scalar" else tuple(
                int(d) for d in shape_txt.split(","))
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(raw, dtype="<f8", count=count,
                                offset=offset).reshape(shape)
            tree.add(name, arr.copy())
            offset += count * 8
        return tree

    def payload_bits(self, bits_per_param: int = 32) -> int:
        """Over-the-air size of the model when exchanged for aggregation."""
        return self.num_params() * bits_per_param
