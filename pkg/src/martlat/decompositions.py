"""Constructive decompositions built from stopping-time selections.

Four constructions:

* :func:`cz_decompose` — the Calderon-Zygmund stopping time: the maximal
  lattice intervals strictly inside a start interval on which the average of
  a nonnegative function exceeds a height.
* :func:`bmo_decompose` — iterate the stopping time at the frozen height
  2 * BMO on each root, restarting from every selected interval, to split a
  function into (root-wise constants) + (bounded part) + (balayage of a
  Carleson sequence).  The selected measure halves at every stage, the
  bounded part stays below 2 * BMO, and the coefficient sequence is Carleson
  with constant at most 3 * BMO.
* :func:`maximal_dual` — the coefficient sequence dual to the maximal
  function: each leaf contributes its length, signed by the average of the
  coarsest interval attaining Mf there, so the pairing sum over intervals of
  <f>_I a_I recovers the integral of Mf while Carl(|a|) <= 1.
* :func:`duality_witness` — the unit-size recombination g of the normalized
  pieces D_I f / Sf whose pairing with f integrates the square function:
  int f g = int Sf, with every |D_I g| <= 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functions import CoefSequence, StepFunction
from .lattice import Interval, Lattice
from .operators import (
    _check_member,
    _path_sum,
    balayage,
    bmo_norm,
    maximal,
    remove_root_means,
    square,
)

__all__ = [
    "NegativeInputError",
    "BadLambdaError",
    "BmoDecomposition",
    "MaximalDual",
    "cz_decompose",
    "bmo_decompose",
    "maximal_dual",
    "duality_witness",
]


class NegativeInputError(ValueError):
    """The stopping time requires a nonnegative function."""


class BadLambdaError(ValueError):
    """The stopping height must be positive."""


def cz_decompose(
    h: StepFunction, interval: Interval, lam: float
) -> list[Interval]:
    """Maximal lattice intervals J strictly inside `interval` with
    <h>_J > lam.

    The search descends from the children of `interval` and does not enter a
    selected interval, so the output is pairwise disjoint and each selected
    J is the first along its chain to exceed the height (every ancestor of J
    strictly inside `interval` has average at most lam).  Ties <h>_J == lam
    are not selected.  Returns the selection in left-to-right order.
    """
    if not lam > 0:
        raise BadLambdaError(f"stopping height must be > 0, got {lam}")
    if float(np.min(h.values)) < 0.0:
        raise NegativeInputError("stopping-time input must be nonnegative")
    _check_member(h.lattice, interval)
    lat = h.lattice
    avg = h.averages()
    selected: list[Interval] = []
    stack = list(reversed(interval.child_indices))
    while stack:
        j = stack.pop()
        if avg[j] > lam:
            selected.append(lat.intervals[j])
        else:
            stack.extend(reversed(lat.intervals[j].child_indices))
    return selected


@dataclass(frozen=True)
class BmoDecomposition:
    """g = (root-wise constants) + phi + balayage(coeffs).

    ``root_means`` lists the constants removed per root (in root order);
    ``stages[n]`` lists the intervals selected at stage n+1 of the iterated
    stopping time; ``height`` is the frozen stopping height 2 * ``bmo_value``.
    """

    lattice: Lattice
    root_means: tuple[float, ...]
    phi: StepFunction
    coeffs: CoefSequence
    stages: tuple[tuple[Interval, ...], ...]
    height: float
    bmo_value: float

    def mean_part(self) -> StepFunction:
        lat = self.lattice
        out = np.zeros(lat.n_leaves, dtype=np.float64)
        for r, m in zip(lat.roots, self.root_means):
            out[lat._leaf_start[r.index]: lat._leaf_stop[r.index]] = m
        return StepFunction(lat, out)

    def reconstruct(self) -> StepFunction:
        """Re-sum the three parts; equals the decomposed function."""
        vals = (
            self.mean_part().values
            + self.phi.values
            + balayage(self.coeffs).values
        )
        return StepFunction(self.lattice, vals)


def bmo_decompose(g: StepFunction) -> BmoDecomposition:
    """Split g into root-wise constants, a bounded part, and a balayage.

    After removing root means, the stopping time runs at the frozen height
    2 * BMO(g): stage 1 selects inside each root where the average of
    |g - <g>_root| exceeds the height, stage n+1 re-runs inside every stage-n
    interval against that interval's own mean.  Each selected interval I with
    stage parent P contributes the coefficient a_I = |I| (<g>_I - <g>_P); the
    bounded part is what balayage of those coefficients leaves over.  A
    function with BMO = 0 (constant on each root) decomposes into its means
    with zero bounded part and zero coefficients.
    """
    lat = g.lattice
    normalized, means = remove_root_means(g)
    norm = bmo_norm(normalized)
    if norm.value == 0.0:
        return BmoDecomposition(
            lattice=lat,
            root_means=means,
            phi=StepFunction(lat, np.zeros(lat.n_leaves)),
            coeffs=CoefSequence(lat),
            stages=(),
            height=0.0,
            bmo_value=0.0,
        )
    lam = 2.0 * norm.value
    avg = normalized.averages()
    coeffs: dict[int, float] = {}
    stages: list[tuple[Interval, ...]] = []
    frontier = [r.index for r in lat.roots]
    while frontier:
        stage_selection: list[Interval] = []
        next_frontier: list[int] = []
        for stop in frontier:
            center = float(avg[stop])
            h = StepFunction(lat, np.abs(normalized.values - center))
            for sel in cz_decompose(h, lat.intervals[stop], lam):
                coeffs[sel.index] = float(lat._len_f[sel.index]) * (
                    float(avg[sel.index]) - center
                )
                stage_selection.append(sel)
                next_frontier.append(sel.index)
        if stage_selection:
            stages.append(tuple(stage_selection))
        frontier = next_frontier
    seq = CoefSequence(lat, coeffs)
    phi = StepFunction(lat, normalized.values - balayage(seq).values)
    return BmoDecomposition(
        lattice=lat,
        root_means=means,
        phi=phi,
        coeffs=seq,
        stages=tuple(stages),
        height=lam,
        bmo_value=norm.value,
    )


@dataclass(frozen=True)
class MaximalDual:
    """Coefficient sequence pairing f against its maximal function.

    ``leaf_assignments[j]`` is the coarsest interval attaining Mf on leaf j
    (None where Mf vanishes); ``pairing`` is sum over intervals of
    <f>_I a_I, which equals the integral of Mf.
    """

    lattice: Lattice
    coeffs: CoefSequence
    pairing: float
    leaf_assignments: tuple[Interval | None, ...]


def maximal_dual(f: StepFunction) -> MaximalDual:
    """Build the dual sequence of the maximal function.

    Each leaf J with Mf > 0 contributes |J| * sign(<f>_{I(J)}) to its
    attaining interval I(J), so the contribution times <f>_{I(J)} is exactly
    the integral of Mf over J.  All contributions to one interval share the
    sign of that interval's average, hence |a_I| is a sum of disjoint leaf
    lengths inside I and Carl(|a|) <= 1.
    """
    lat = f.lattice
    mf, witnesses = maximal(f)
    avg = f.averages()
    acc: dict[int, float] = {}
    assignments: list[Interval | None] = []
    for j in range(lat.n_leaves):
        if mf.values[j] > 0.0:
            w = witnesses[j]
            sign = 1.0 if avg[w.index] > 0 else -1.0
            acc[w.index] = acc.get(w.index, 0.0) + sign * float(lat._leaf_len_f[j])
            assignments.append(w)
        else:
            assignments.append(None)
    coeffs = CoefSequence(lat, acc)
    pairing = math.fsum(float(avg[i]) * v for i, v in coeffs.items())
    return MaximalDual(
        lattice=lat,
        coeffs=coeffs,
        pairing=pairing,
        leaf_assignments=tuple(assignments),
    )


def duality_witness(f: StepFunction) -> StepFunction:
    """The recombination g with int f g = int Sf and every |D_I g| <= 2.

    For each non-leaf I the normalized piece is g_I = D_I f / Sf (zero where
    Sf vanishes, which forces D_I f to vanish there too), and for each root
    g_I = E_I f / Sf; the witness is the sum of D_I(g_I) over non-leaf I plus
    E_I(g_I) over roots.  Every |g_I| is at most 1 pointwise, so each
    difference piece of the witness is bounded by 2.
    """
    lat = f.lattice
    avg = f.averages()
    s = square(f).values
    recip = np.where(s > 0.0, np.divide(1.0, s, where=s > 0.0), 0.0)
    # T[i] = integral of 1/Sf over interval i (with the 0/0 convention).
    p = np.empty(lat.n_leaves + 1, dtype=np.float64)
    p[0] = 0.0
    np.cumsum(recip * lat._leaf_len_f, out=p[1:])
    T = p[lat._leaf_stop] - p[lat._leaf_start]

    n = lat.n_intervals
    nonroot = np.nonzero(lat._parent >= 0)[0]
    child_weight = np.zeros(n, dtype=np.float64)
    if nonroot.size:
        np.add.at(child_weight, lat._parent[nonroot], avg[nonroot] * T[nonroot])
    # <g_I>_I for every non-leaf I, as (sum over children of <f>_J T_J  -
    # <f>_I T_I) / |I|.
    own_mean = (child_weight - avg * T) / lat._len_f

    term = np.empty(n, dtype=np.float64)
    roots = lat._by_birth[0]
    term[roots] = avg[roots] * T[roots] / lat._len_f[roots]
    if nonroot.size:
        par = lat._parent[nonroot]
        term[nonroot] = (
            (avg[nonroot] - avg[par]) * T[nonroot] / lat._len_f[nonroot]
            - own_mean[par]
        )
    run = _path_sum(lat, term)
    return StepFunction(lat, run[lat._leaf_indices])
