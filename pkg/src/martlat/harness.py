"""Randomized verification of the operator and decomposition guarantees.

:func:`check_instance` evaluates, on one (lattice, f, g, a) instance, every
inequality the package's constructions promise, each with its exact constant:

* integral of Mf at most 4 times the integral of Sf;
* the pairing bound |int f g| <= 2 ||Sf||_1 ||g||_BMO for root-normalized g;
* |sum <f>_I a_I| <= ||Mf||_1 Carl(|a|)  (constant 1);
* BMO(balayage(|a|)) <= 2 Carl(|a|);
* the bounded-plus-balayage decomposition certificates (identity, sup bound
  2 BMO, Carleson bound 3 BMO, stage measure decay (1/2)^n);
* the duality witness identities (int Sf = int f g, |D_I g| <= 2) and the
  five-constant pairing route through the decomposition pieces;
* the maximal-dual certificates (pairing = int Mf, Carl <= 1, balayage BMO
  <= 2);
* the reconstruction identity and the agreement of the two C1 evaluation
  routes.

Checks are recorded as (name, lhs, rhs, constant, margin, pass); a failure
within ten times its slack is flagged "numerical", anything worse "logical".
:func:`fuzz` streams seeded random instances through the checks, keeps
worst margins and extreme ratios, and re-emits any failure as a standalone
reproducible artifact that :func:`replay_artifact` re-runs bit-identically.
:func:`sharpness_search` hill-climbs leaf values (or coefficients) to push a
chosen ratio toward its constant; it reports the best instance found and
never claims a supremum.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .decompositions import bmo_decompose, duality_witness, maximal_dual
from .functions import CoefSequence, StepFunction
from .lattice import Lattice, random_lattice
from .operators import (
    balayage,
    bmo_c1_by_oscillation,
    bmo_norm,
    carleson_constant,
    integral,
    martingale_decompose,
    maximal,
    remove_root_means,
    square,
)
from .serialize import (
    coefs_from_doc,
    coefs_to_doc,
    lattice_from_doc,
    lattice_to_doc,
)

__all__ = [
    "UnknownDistributionError",
    "LatticeMismatchError",
    "UnknownObjectiveError",
    "DISTRIBUTIONS",
    "OBJECTIVES",
    "FuzzConfig",
    "CheckRecord",
    "VerificationReport",
    "FuzzResult",
    "SharpnessResult",
    "random_function",
    "random_coefficients",
    "instance_for_trial",
    "check_instance",
    "summarize",
    "fuzz",
    "replay_artifact",
    "sharpness_search",
]


class UnknownDistributionError(ValueError):
    """Not one of the supported leaf-value distributions."""


class LatticeMismatchError(ValueError):
    """Instance parts live on different lattices."""


class UnknownObjectiveError(ValueError):
    """Not one of the supported sharpness ratios."""


DISTRIBUTIONS = ("uniform", "spiky", "sparse")

OBJECTIVES = ("Mf/Sf", "Sf/Mf", "BMO/Carl", "pairing/(Mf*Carl)")


# -- random instances ------------------------------------------------------------

def random_function(lattice: Lattice, seed: int, dist: str) -> StepFunction:
    """Deterministic random leaf values.

    "uniform" draws i.i.d. values in [-1, 1]; "sparse" zeroes each leaf with
    probability 0.9; "spiky" puts a handful of unit-mass spikes (value scaled
    by 1/length) on otherwise zero leaves, which stresses the gap between the
    maximal and square functions.
    """
    if dist not in DISTRIBUTIONS:
        raise UnknownDistributionError(
            f"unknown distribution {dist!r}; expected one of {DISTRIBUTIONS}"
        )
    rng = random.Random(f"function:{seed}:{dist}")
    n = lattice.n_leaves
    if dist == "uniform":
        values = [rng.uniform(-1.0, 1.0) for _ in range(n)]
    elif dist == "sparse":
        values = [
            rng.uniform(-1.0, 1.0) if rng.random() >= 0.9 else 0.0
            for _ in range(n)
        ]
    else:
        values = [0.0] * n
        spikes = min(n, 1 + rng.randrange(3))
        for j in rng.sample(range(n), spikes):
            mass = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
            values[j] = mass / float(lattice._leaf_len_f[j])
    return StepFunction(lattice, values)


def random_coefficients(
    lattice: Lattice, seed: int, nonnegative: bool = False
) -> CoefSequence:
    """Sparse random coefficient sequence, deterministic in the seed."""
    rng = random.Random(f"coeffs:{seed}")
    data: dict[int, float] = {}
    for i in range(lattice.n_intervals):
        if rng.random() < 0.35:
            v = rng.uniform(-1.0, 1.0)
            if rng.random() < 0.5:
                v *= float(lattice._len_f[i])
            data[i] = abs(v) if nonnegative else v
    return CoefSequence(lattice, data)


# -- configuration -----------------------------------------------------------------

@dataclass(frozen=True)
class FuzzConfig:
    """Instance distribution for a fuzz run.

    ``dist`` may be one of the concrete distributions or "mixed", which
    rotates through all of them trial by trial.
    """

    seed: int
    trials: int
    max_depth: int = 6
    max_children: int = 4
    max_roots: int = 3
    dist: str = "mixed"
    tol: float = 1e-9

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.dist != "mixed" and self.dist not in DISTRIBUTIONS:
            raise UnknownDistributionError(f"unknown distribution {self.dist!r}")
        if self.max_depth < 0 or self.max_children < 1 or self.max_roots < 1:
            raise ValueError("lattice caps out of range")
        if not self.tol > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tol}")

    def to_doc(self) -> dict:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "max_depth": self.max_depth,
            "max_children": self.max_children,
            "max_roots": self.max_roots,
            "dist": self.dist,
            "tol": self.tol,
        }


def instance_for_trial(
    config: FuzzConfig, trial: int
) -> tuple[Lattice, StepFunction, StepFunction, CoefSequence, dict]:
    """The deterministic instance of one fuzz trial.

    Per-trial seeds are derived independently of every other trial, so trials
    can be generated in any order (or in parallel) and still match a
    sequential run.
    """
    rng = random.Random(f"trial:{config.seed}:{trial}")
    lattice_seed = rng.getrandbits(48)
    f_seed = rng.getrandbits(48)
    g_seed = rng.getrandbits(48)
    a_seed = rng.getrandbits(48)
    dist = config.dist if config.dist != "mixed" else DISTRIBUTIONS[trial % 3]
    lattice = random_lattice(
        lattice_seed, config.max_depth, config.max_children, config.max_roots
    )
    f = random_function(lattice, f_seed, dist)
    g = random_function(lattice, g_seed, dist)
    a = random_coefficients(lattice, a_seed)
    descriptor = {
        "trial": trial,
        "dist": dist,
        "lattice_seed": lattice_seed,
        "f_seed": f_seed,
        "g_seed": g_seed,
        "a_seed": a_seed,
    }
    return lattice, f, g, a, descriptor


# -- per-instance verification -------------------------------------------------------

@dataclass(frozen=True)
class CheckRecord:
    """One inequality evaluation.  ``passed`` iff lhs <= rhs + slack, where
    slack = mult * tol * (1 + scale); ``flag`` grades failures as numerical
    (within 10x the slack) or logical."""

    name: str
    lhs: float
    rhs: float
    constant: float | None
    margin: float
    passed: bool
    flag: str

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "constant": self.constant,
            "margin": self.margin,
            "pass": self.passed,
            "flag": self.flag,
        }


def _check(
    name: str,
    lhs: float,
    rhs: float,
    constant: float | None,
    tol: float,
    scale: float | None = None,
    mult: float = 1.0,
) -> CheckRecord:
    if scale is None:
        scale = max(abs(lhs), abs(rhs))
    slack = mult * tol * (1.0 + scale)
    passed = lhs <= rhs + slack
    if passed:
        flag = "ok"
    elif lhs <= rhs + 10.0 * slack:
        flag = "numerical"
    else:
        flag = "logical"
    return CheckRecord(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        constant=constant,
        margin=float(rhs - lhs),
        passed=passed,
        flag=flag,
    )


@dataclass(frozen=True)
class VerificationReport:
    """All checks of one instance plus per-instance extreme ratios."""

    instance: dict
    checks: tuple[CheckRecord, ...]
    ratios: dict

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> tuple[CheckRecord, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def to_doc(self) -> dict:
        return {
            "instance": self.instance,
            "checks": [c.to_doc() for c in self.checks],
            "ratios": self.ratios,
            "summary": {
                "all_passed": self.all_passed,
                "worst_margin": min((c.margin for c in self.checks), default=0.0),
            },
        }


def _dot_integral(lat: Lattice, u: np.ndarray, v: np.ndarray) -> float:
    return float(np.dot(u * lat._leaf_len_f, v))


def check_instance(
    lattice: Lattice,
    f: StepFunction,
    g: StepFunction,
    a: CoefSequence,
    tol: float = 1e-9,
    descriptor: Mapping | None = None,
) -> VerificationReport:
    """Evaluate every promised inequality on one instance."""
    for part in (f, g):
        if part.lattice != lattice:
            raise LatticeMismatchError("functions must live on the given lattice")
    if a.lattice != lattice:
        raise LatticeMismatchError("coefficients must live on the given lattice")

    avg_f = f.averages()
    mf, _ = maximal(f)
    int_mf = integral(mf)
    sf = square(f)
    int_sf = integral(sf)
    f_sup = float(np.max(np.abs(f.values)))
    g_sup = float(np.max(np.abs(g.values)))

    checks: list[CheckRecord] = []

    # Reconstruction of f from its pieces.
    rec = martingale_decompose(f).reconstruct()
    rec_err = float(np.max(np.abs(f.values - rec.values)))
    checks.append(_check("reconstruction", rec_err, 0.0, None, tol, scale=f_sup))

    # Both C1 evaluation routes on g.
    nb_g = bmo_norm(g)
    c1_alt = bmo_c1_by_oscillation(g)
    checks.append(
        _check(
            "bmo_c1_route_agreement",
            abs(nb_g.c1 - c1_alt),
            0.0,
            None,
            tol,
            scale=nb_g.c1,
            mult=10.0,
        )
    )

    # Maximal vs square function in L^1.
    checks.append(
        _check("maximal_le_4_square", int_mf, 4.0 * int_sf, 4.0, tol)
    )

    # Pairing bound against a root-normalized g.
    g0, _ = remove_root_means(g)
    d_g = bmo_decompose(g)
    bmo_g0 = d_g.bmo_value
    int_fg0 = _dot_integral(lattice, f.values, g0.values)
    checks.append(
        _check(
            "fefferman_pairing",
            abs(int_fg0),
            2.0 * int_sf * bmo_g0,
            2.0,
            tol,
        )
    )

    # Carleson pairing bound, constant 1.
    carl_a, _ = carleson_constant(a)
    pairing_fa = math.fsum(float(avg_f[i]) * v for i, v in a.items())
    checks.append(
        _check(
            "pairing_le_maximal_carleson",
            abs(pairing_fa),
            int_mf * carl_a,
            1.0,
            tol,
        )
    )

    # Balayage of |a| lands in BMO with constant 2.
    bmo_bal_a = bmo_norm(balayage(a.absolute())).value
    checks.append(
        _check(
            "balayage_bmo_le_2_carleson",
            bmo_bal_a,
            2.0 * carl_a,
            2.0,
            tol,
        )
    )

    # Bounded-plus-balayage decomposition certificates.
    rec_g = d_g.reconstruct()
    ident_err = float(np.max(np.abs(g.values - rec_g.values)))
    checks.append(
        _check(
            "bmo_decomposition_identity", ident_err, 0.0, None, tol,
            scale=g_sup, mult=10.0,
        )
    )
    phi_sup = float(np.max(np.abs(d_g.phi.values)))
    checks.append(
        _check(
            "bmo_decomposition_phi_bound", phi_sup, 2.0 * bmo_g0, 2.0, tol
        )
    )
    carl_dg, _ = carleson_constant(d_g.coeffs)
    checks.append(
        _check(
            "bmo_decomposition_carleson", carl_dg, 3.0 * bmo_g0, 3.0, tol
        )
    )
    checks.append(
        _check(
            "bmo_decomposition_stage_decay",
            _stage_decay_ratio(lattice, d_g.stages),
            1.0,
            0.5,
            tol,
        )
    )

    # Duality witness: pairing identity and difference bound.
    w = duality_witness(f)
    int_fw = _dot_integral(lattice, f.values, w.values)
    checks.append(
        _check(
            "duality_pairing",
            abs(int_sf - int_fw),
            0.0,
            None,
            tol,
            scale=int_sf,
            mult=10.0,
        )
    )
    checks.append(
        _check("duality_diff_bound", bmo_norm(w).c2, 2.0, 2.0, tol)
    )

    # Five-constant pairing route through the decomposition pieces of g.
    recomb = d_g.phi.values + balayage(d_g.coeffs).values
    int_f_recomb = _dot_integral(lattice, f.values, recomb)
    checks.append(
        _check(
            "five_constant_pairing",
            abs(int_f_recomb),
            5.0 * int_mf * bmo_g0,
            5.0,
            tol,
        )
    )

    # Maximal-dual certificates.
    md = maximal_dual(f)
    checks.append(
        _check(
            "maximal_dual_pairing",
            abs(md.pairing - int_mf),
            0.0,
            None,
            tol,
            scale=int_mf,
            mult=10.0,
        )
    )
    carl_md, _ = carleson_constant(md.coeffs)
    checks.append(
        _check("maximal_dual_carleson", carl_md, 1.0, 1.0, tol)
    )
    bmo_bal_md = bmo_norm(balayage(md.coeffs)).value
    checks.append(
        _check("maximal_dual_balayage_bmo", bmo_bal_md, 2.0, 2.0, tol)
    )

    ratios: dict[str, float] = {}
    if int_sf > 0:
        ratios["maximal_over_square"] = int_mf / int_sf
    if int_mf > 0:
        ratios["square_over_maximal"] = int_sf / int_mf
    if carl_a > 0:
        ratios["balayage_bmo_over_carleson"] = bmo_bal_a / carl_a
        if int_mf > 0:
            ratios["pairing_over_maximal_carleson"] = abs(pairing_fa) / (
                int_mf * carl_a
            )
    if int_sf > 0 and bmo_g0 > 0:
        ratios["fefferman_ratio"] = abs(int_fg0) / (int_sf * bmo_g0)

    return VerificationReport(
        instance=dict(descriptor) if descriptor else {},
        checks=tuple(checks),
        ratios=ratios,
    )


def _stage_decay_ratio(lattice: Lattice, stages) -> float:
    """max over stages n and roots of (selected measure in the root) divided
    by (1/2)^n times the root length; <= 1 certifies the decay."""
    if not stages:
        return 0.0
    root_index = {r.index: k for k, r in enumerate(lattice.roots)}
    root_starts = sorted(root_index)
    root_lens = [float(lattice._len_f[i]) for i in root_starts]
    worst = 0.0
    for n, stage in enumerate(stages, start=1):
        per_root = [0.0] * len(root_starts)
        for iv in stage:
            # Preorder layout: the owning root is the last root index <= iv.
            k = 0
            for k2, start in enumerate(root_starts):
                if start <= iv.index:
                    k = k2
            per_root[k] += float(lattice._len_f[iv.index])
        for k, total in enumerate(per_root):
            worst = max(worst, total / (0.5**n * root_lens[k]))
    return worst


# -- fuzzing ---------------------------------------------------------------------------

_RATIO_KEYS = (
    "maximal_over_square",
    "square_over_maximal",
    "balayage_bmo_over_carleson",
    "pairing_over_maximal_carleson",
    "fefferman_ratio",
)


def _fold(acc: dict, report: VerificationReport) -> dict:
    for c in report.checks:
        slot = acc["checks"].setdefault(
            c.name, {"count": 0, "failures": 0, "numerical": 0, "worst_margin": math.inf}
        )
        slot["count"] += 1
        if not c.passed:
            slot["failures"] += 1
            if c.flag == "numerical":
                slot["numerical"] += 1
        slot["worst_margin"] = min(slot["worst_margin"], c.margin)
    for key, val in report.ratios.items():
        prev = acc["max_ratios"].get(key)
        acc["max_ratios"][key] = val if prev is None else max(prev, val)
    return acc


def summarize(reports: Iterable[VerificationReport]) -> dict:
    """Order-insensitive aggregation of reports (min margins, max ratios)."""
    acc: dict = {"checks": {}, "max_ratios": {}}
    n = 0
    for rep in reports:
        _fold(acc, rep)
        n += 1
    acc["trials"] = n
    return acc


@dataclass(frozen=True)
class FuzzResult:
    config: FuzzConfig
    summary: dict
    failures: tuple[dict, ...] = field(default_factory=tuple)

    @property
    def all_passed(self) -> bool:
        return not self.failures

    @property
    def logical_failures(self) -> int:
        return sum(
            1
            for art in self.failures
            for c in art["report"]["checks"]
            if c["flag"] == "logical"
        )

    def to_doc(self) -> dict:
        return {
            "config": self.config.to_doc(),
            "summary": self.summary,
            "failures": list(self.failures),
            "all_passed": self.all_passed,
        }


def fuzz(config: FuzzConfig, on_report: Callable | None = None) -> FuzzResult:
    """Stream seeded instances through every check.

    A theorem violation indicates an implementation bug, so failures should
    be empty; any that occur are re-emitted as standalone artifacts carrying
    the full instance, which replay to the identical report.  ``on_report``
    (called as ``on_report(trial, report)``) lets callers stream per-trial
    records, e.g. for CSV export, without the run retaining them all.
    """
    acc: dict = {"checks": {}, "max_ratios": {}}
    failures: list[dict] = []
    for t in range(config.trials):
        lattice, f, g, a, descriptor = instance_for_trial(config, t)
        report = check_instance(lattice, f, g, a, tol=config.tol, descriptor=descriptor)
        if on_report is not None:
            on_report(t, report)
        _fold(acc, report)
        if not report.all_passed:
            failures.append(
                {
                    "kind": "fuzz-failure",
                    "trial": t,
                    "config": config.to_doc(),
                    "instance": {
                        "descriptor": descriptor,
                        "lattice": lattice_to_doc(lattice),
                        "f": [float(v) for v in f.values],
                        "g": [float(v) for v in g.values],
                        "coeffs": coefs_to_doc(a),
                    },
                    "report": report.to_doc(),
                }
            )
    acc["trials"] = config.trials
    return FuzzResult(config=config, summary=acc, failures=tuple(failures))


def replay_artifact(artifact: Mapping) -> VerificationReport:
    """Re-run the checks on a failure artifact's embedded instance."""
    lattice = lattice_from_doc(artifact["instance"]["lattice"])
    f = StepFunction(lattice, artifact["instance"]["f"])
    g = StepFunction(lattice, artifact["instance"]["g"])
    a = coefs_from_doc(artifact["instance"]["coeffs"], lattice)
    tol = artifact["config"]["tol"]
    return check_instance(
        lattice, f, g, a, tol=tol, descriptor=artifact["instance"]["descriptor"]
    )


# -- sharpness search --------------------------------------------------------------------

@dataclass(frozen=True)
class SharpnessResult:
    """Best instance found by hill climbing one ratio on a fixed lattice.

    Best-effort only: the trace documents observed ratios, with no claim
    about the true extremal constants.
    """

    objective: str
    lattice: Lattice
    kind: str
    best_values: tuple[float, ...]
    best_ratio: float
    trace: tuple[tuple[int, float], ...]
    evaluations: int

    def to_doc(self) -> dict:
        best: dict
        if self.kind == "function":
            best = {"leaf_values": list(self.best_values)}
        else:
            lat = self.lattice
            seq = CoefSequence(
                lat, {i: v for i, v in enumerate(self.best_values) if v != 0.0}
            )
            best = coefs_to_doc(seq)
        return {
            "objective": self.objective,
            "lattice": lattice_to_doc(self.lattice),
            "kind": self.kind,
            "best": best,
            "best_ratio": self.best_ratio,
            "trace": [[t, r] for t, r in self.trace],
            "evaluations": self.evaluations,
        }


def _normalize_objective(objective: str) -> str:
    tag = objective.replace("·", "*").replace(" ", "")
    if tag not in OBJECTIVES:
        raise UnknownObjectiveError(
            f"unknown objective {objective!r}; expected one of {OBJECTIVES}"
        )
    return tag


def _ratio_evaluator(tag: str, lattice: Lattice) -> Callable:
    def mf_sf(values) -> float | None:
        f = StepFunction(lattice, values)
        denom = integral(square(f))
        if denom <= 0:
            return None
        return integral(maximal(f)[0]) / denom

    def sf_mf(values) -> float | None:
        f = StepFunction(lattice, values)
        denom = integral(maximal(f)[0])
        if denom <= 0:
            return None
        return integral(square(f)) / denom

    def pairing(values) -> float | None:
        f = StepFunction(lattice, values)
        int_mf = integral(maximal(f)[0])
        md = maximal_dual(f)
        carl, _ = carleson_constant(md.coeffs)
        denom = int_mf * carl
        if denom <= 0:
            return None
        return abs(md.pairing) / denom

    def bmo_carl(values) -> float | None:
        seq = CoefSequence(
            lattice, {i: v for i, v in enumerate(values) if v != 0.0}
        )
        carl, _ = carleson_constant(seq)
        if carl <= 0:
            return None
        return bmo_norm(balayage(seq)).value / carl

    return {
        "Mf/Sf": mf_sf,
        "Sf/Mf": sf_mf,
        "pairing/(Mf*Carl)": pairing,
        "BMO/Carl": bmo_carl,
    }[tag]


def sharpness_search(
    objective: str,
    budget: int,
    seed: int,
    lattice: Lattice | None = None,
    start: StepFunction | CoefSequence | None = None,
) -> SharpnessResult:
    """Coordinate hill climbing: perturb one entry at a time, keep strict
    improvements, stop after `budget` evaluations (the start counts as one).
    """
    tag = _normalize_objective(objective)
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if lattice is None:
        lattice = start.lattice if start is not None else None
    if lattice is None:
        from .lattice import dyadic_lattice

        lattice = dyadic_lattice(2)
    kind = "coefficients" if tag == "BMO/Carl" else "function"

    if start is not None:
        if kind == "function":
            if not isinstance(start, StepFunction):
                raise TypeError(f"objective {tag} climbs leaf values")
            state = [float(v) for v in start.values]
        else:
            if not isinstance(start, CoefSequence):
                raise TypeError(f"objective {tag} climbs coefficients")
            state = [float(v) for v in start.dense()]
    elif kind == "function":
        state = [float(v) for v in random_function(lattice, seed, "uniform").values]
    else:
        state = [float(v) for v in random_coefficients(lattice, seed, nonnegative=True).dense()]
        if not any(state):
            state[0] = 1.0

    evaluate = _ratio_evaluator(tag, lattice)
    rng = random.Random(f"sharpness:{seed}:{tag}")
    best = evaluate(state)
    trace: list[tuple[int, float]] = []
    if best is not None:
        trace.append((1, best))
    for t in range(2, budget + 1):
        idx = rng.randrange(len(state))
        old = state[idx]
        delta = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 1.0) * (1.0 + abs(old))
        cand = old + delta
        if kind == "coefficients":
            cand = abs(cand)
        state[idx] = cand
        ratio = evaluate(state)
        if ratio is not None and (best is None or ratio > best):
            best = ratio
            trace.append((t, best))
        else:
            state[idx] = old
    return SharpnessResult(
        objective=tag,
        lattice=lattice,
        kind=kind,
        best_values=tuple(state),
        best_ratio=0.0 if best is None else float(best),
        trace=tuple(trace),
        evaluations=budget,
    )
