"""Step functions and interval-indexed coefficient sequences.

A :class:`StepFunction` is a real-valued function on the base domain of a
lattice, constant on each leaf.  Values are IEEE doubles; geometry stays
rational on the lattice side, so all floating-point tolerance questions live
in function values only.

A :class:`CoefSequence` attaches one real number to some lattice intervals
(missing entries are zero).  These carry the stopping-interval weights of the
constructive decompositions and the sequences whose Carleson constants the
harness measures.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from .lattice import Interval, Lattice

__all__ = ["StepFunction", "CoefSequence"]


class StepFunction:
    """Leaf-constant function on a lattice; immutable value object.

    ``values[j]`` is the constant on the j-th leaf in left-to-right order.
    All values must be finite.  Weighted prefix sums and per-interval
    averages are cached lazily; both are pure functions of the values, so
    sharing a StepFunction across threads is safe.
    """

    __slots__ = ("lattice", "_values", "_wprefix", "_avg")

    def __init__(self, lattice: Lattice, values) -> None:
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (lattice.n_leaves,):
            raise ValueError(
                f"expected {lattice.n_leaves} leaf values, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("leaf values must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        self.lattice = lattice
        self._values = arr
        self._wprefix = None
        self._avg = None

    @property
    def values(self) -> np.ndarray:
        return self._values

    def value_on(self, interval: Interval) -> np.ndarray:
        """The slice of leaf values under `interval` (read-only view)."""
        lat = self.lattice
        return self._values[lat._leaf_start[interval.index]: lat._leaf_stop[interval.index]]

    # -- cached internals used by the operator layer -------------------------

    def weighted_prefix(self) -> np.ndarray:
        """prefix[j] = sum of value*length over the first j leaves."""
        if self._wprefix is None:
            lat = self.lattice
            p = np.empty(lat.n_leaves + 1, dtype=np.float64)
            p[0] = 0.0
            np.cumsum(self._values * lat._leaf_len_f, out=p[1:])
            p.setflags(write=False)
            self._wprefix = p
        return self._wprefix

    def averages(self) -> np.ndarray:
        """Per-interval averages <f>_I over every lattice interval."""
        if self._avg is None:
            lat = self.lattice
            p = self.weighted_prefix()
            a = (p[lat._leaf_stop] - p[lat._leaf_start]) / lat._len_f
            a.setflags(write=False)
            self._avg = a
        return self._avg

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StepFunction)
            and self.lattice == other.lattice
            and np.array_equal(self._values, other._values)
        )

    def __repr__(self) -> str:
        return f"StepFunction(n_leaves={self.lattice.n_leaves})"


class CoefSequence:
    """Sparse map from lattice intervals to real coefficients.

    Entries may be keyed by :class:`Interval` or by interval index; exact
    zeros are dropped so the stored support matches the semantic support.
    """

    __slots__ = ("lattice", "_data")

    def __init__(
        self,
        lattice: Lattice,
        entries: Mapping | Iterable[tuple] | None = None,
    ) -> None:
        data: dict[int, float] = {}
        items = entries.items() if isinstance(entries, Mapping) else (entries or ())
        for key, val in items:
            if isinstance(key, Interval):
                if not lattice.owns(key):
                    raise ValueError(f"interval {key} is not in the lattice")
                idx = key.index
            else:
                idx = int(key)
                if not 0 <= idx < lattice.n_intervals:
                    raise ValueError(f"interval index {idx} out of range")
            v = float(val)
            if not np.isfinite(v):
                raise ValueError(f"coefficient for interval {idx} is not finite")
            if v != 0.0:
                data[idx] = data.get(idx, 0.0) + v
                if data[idx] == 0.0:
                    del data[idx]
        self.lattice = lattice
        self._data = data

    def value(self, key) -> float:
        idx = key.index if isinstance(key, Interval) else int(key)
        return self._data.get(idx, 0.0)

    def items(self) -> list[tuple[int, float]]:
        """(interval index, value) pairs in index order."""
        return sorted(self._data.items())

    def support(self) -> tuple[Interval, ...]:
        return tuple(self.lattice.intervals[i] for i, _ in self.items())

    def dense(self) -> np.ndarray:
        """Values as a full array over all lattice intervals."""
        out = np.zeros(self.lattice.n_intervals, dtype=np.float64)
        for i, v in self._data.items():
            out[i] = v
        return out

    def absolute(self) -> "CoefSequence":
        return CoefSequence(self.lattice, {i: abs(v) for i, v in self._data.items()})

    def __len__(self) -> int:
        return len(self._data)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CoefSequence)
            and self.lattice == other.lattice
            and self._data == other._data
        )

    def __repr__(self) -> str:
        return f"CoefSequence(support={len(self._data)})"
