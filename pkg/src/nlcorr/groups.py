"""Correlation spectra of nested sums and group systems over iid variables.

Machinery for symmetric functions of variable groups G_1, ..., G_p drawn from
one iid sequence:

- the nested-sum correlation matrix R_jk = (m_j ^ m_k) / sqrt(m_j m_k),
- the order-l interaction matrices
      R^(l)_jk = C(|G_j n G_k|, l) / sqrt(C(|G_j|, l) C(|G_k|, l))
  restricted to the active sets J^(l) = {j : |G_j| >= l}, with 0/0 = 0,
- extreme symmetric nonlinear correlations: the maximum is always the largest
  eigenvalue of R o W; the minimum is the smallest eigenvalue of
  (R^(l) o W)_{J^(l)} minimized over l, collapsing to l = 1 whenever a shadow
  system per the combinatorial feasibility condition exists,
- the Hoeffding decomposition of a symmetric tabulated function into pure
  interaction orders, with its reconstruction, conditional-mean-zero, and
  variance identities,
- the normalized elementary-symmetric product functions that attain R^(l),
- the sin-transform construction sin(t S - m c_t) whose correlations converge
  to R as t -> 0+ even without second moments; c_t in (-pi/2, pi/2) solves
  E[sin(tY - c_t)] = 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BudgetExceededError,
    DegenerateInputError,
    DimensionMismatchError,
    ValidationError,
)
from .maxcorr import DiscreteJoint
from .spectra import as_corr_matrix, as_weight_matrix, full_spectrum

ATOM_BUDGET = 10 ** 6
EXACT_TOL = 1e-12


def _atom_grid(size: int, width: int) -> np.ndarray:
    """All index tuples of support^width as an (size^width, width) array."""
    flat = np.arange(size ** width)
    return np.stack(np.unravel_index(flat, (size,) * width), axis=1)


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteLaw:
    """A finite-support law with positive-mass atoms; must be non-degenerate."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        q = np.asarray(self.probs, dtype=float)
        if v.ndim != 1 or v.shape != q.shape or v.size < 1:
            raise ValidationError("law needs matching 1-d value/probability vectors")
        if np.unique(v).size != v.size:
            raise ValidationError("law support values must be distinct")
        if np.any(q < 0) or abs(float(q.sum()) - 1.0) > EXACT_TOL:
            raise ValidationError("law probabilities must be nonnegative and sum to 1")
        keep = q > 0
        v, q = v[keep], q[keep]
        if v.size < 2:
            raise DegenerateInputError("law is concentrated at a single point")
        order = np.argsort(v)
        object.__setattr__(self, "values", v[order])
        object.__setattr__(self, "probs", q[order])

    @property
    def size(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(self.probs @ self.values)

    def var(self) -> float:
        mu = self.mean()
        return float(self.probs @ (self.values - mu) ** 2)

    def trig_moments(self, t: float) -> tuple[float, float]:
        """(E cos(tY), E sin(tY)) by direct summation."""
        return (
            float(self.probs @ np.cos(t * self.values)),
            float(self.probs @ np.sin(t * self.values)),
        )

    @classmethod
    def rademacher(cls) -> "DiscreteLaw":
        return cls(values=np.array([-1.0, 1.0]), probs=np.array([0.5, 0.5]))

    @classmethod
    def bernoulli(cls, p: float) -> "DiscreteLaw":
        if not 0.0 < p < 1.0:
            raise ValidationError("bernoulli parameter must lie in (0, 1)")
        return cls(values=np.array([0.0, 1.0]), probs=np.array([1.0 - p, p]))


@dataclass(frozen=True)
class CauchyLaw:
    """Standard Cauchy; closed-form trig moments from the characteristic function."""

    def trig_moments(self, t: float) -> tuple[float, float]:
        return (math.exp(-abs(t)), 0.0)


def named_law(name: str):
    """Resolve 'rademacher', 'bernoulli(p)', or 'cauchy' to a law object."""
    key = name.strip().lower()
    if key == "rademacher":
        return DiscreteLaw.rademacher()
    if key == "cauchy":
        return CauchyLaw()
    if key.startswith("bernoulli(") and key.endswith(")"):
        return DiscreteLaw.bernoulli(float(key[len("bernoulli("):-1]))
    raise ValidationError(f"unknown law {name!r}")


# ---------------------------------------------------------------------------
# group systems and their matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupSystem:
    """Index groups G_1..G_p of positive-integer labels over one iid sequence."""

    groups: tuple[frozenset[int], ...]

    def __post_init__(self):
        gs = tuple(frozenset(int(i) for i in g) for g in self.groups)
        if len(gs) < 1:
            raise ValidationError("need at least one group")
        for j, g in enumerate(gs):
            if not g:
                raise ValidationError(f"group {j} is empty")
            if any(i < 1 for i in g):
                raise ValidationError(f"group {j} has non-positive labels")
        object.__setattr__(self, "groups", gs)

    @classmethod
    def from_lists(cls, lists: Sequence[Sequence[int]]) -> "GroupSystem":
        return cls(groups=tuple(frozenset(g) for g in lists))

    @property
    def nvars(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    @property
    def ell_star(self) -> int:
        return max(self.sizes)

    @property
    def universe(self) -> tuple[int, ...]:
        return tuple(sorted(set().union(*self.groups)))

    def intersection_sizes(self) -> np.ndarray:
        p = self.nvars
        out = np.zeros((p, p), dtype=np.int64)
        for j in range(p):
            for k in range(p):
                out[j, k] = len(self.groups[j] & self.groups[k])
        return out


def nested_sum_matrix(m) -> np.ndarray:
    """Correlation matrix of nested partial sums: (m_j ^ m_k) / sqrt(m_j m_k)."""
    mv = np.asarray(m, dtype=np.int64)
    if mv.ndim != 1 or mv.size < 1:
        raise ValidationError("need a 1-d vector of sum lengths")
    if np.any(mv < 1):
        raise ValidationError("sum lengths must be positive integers")
    mf = mv.astype(float)
    r = np.minimum(mf[:, None], mf[None, :]) / np.sqrt(np.outer(mf, mf))
    return as_corr_matrix(r)


@dataclass(frozen=True)
class EllMatrix:
    """Order-l interaction matrix with its active set J^(l).

    ``matrix`` is p x p with rows/columns of inactive variables zeroed;
    ``active`` lists the indices of J^(l) = {j : |G_j| >= l}.
    """

    order: int
    matrix: np.ndarray
    active: tuple[int, ...]

    def restricted(self) -> np.ndarray:
        ix = np.asarray(self.active, dtype=np.int64)
        return self.matrix[np.ix_(ix, ix)]


def group_matrix(system: GroupSystem, ell: int) -> EllMatrix:
    """The order-l matrix R^(l) of a group system, with the convention 0/0 = 0."""
    if not 1 <= ell <= system.ell_star:
        raise ValidationError(
            f"order must satisfy 1 <= l <= {system.ell_star}, got {ell}"
        )
    p = system.nvars
    sizes = system.sizes
    inter = system.intersection_sizes()
    active = tuple(j for j in range(p) if sizes[j] >= ell)
    mat = np.zeros((p, p))
    for j in active:
        for k in active:
            num = math.comb(int(inter[j, k]), ell)
            den = math.sqrt(math.comb(sizes[j], ell) * math.comb(sizes[k], ell))
            mat[j, k] = num / den
    return EllMatrix(order=ell, matrix=mat, active=active)


@dataclass(frozen=True)
class SymmExtremes:
    """Extreme symmetric nonlinear correlations of a group system."""

    rho_max: float
    rho_min: float
    argmin_ell: int
    min_by_ell: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "rho_max": self.rho_max,
            "rho_min": self.rho_min,
            "argmin_ell": self.argmin_ell,
            "min_by_ell": list(self.min_by_ell),
        }


def extreme_symm(system: GroupSystem, w) -> SymmExtremes:
    """Extremes over symmetric transforms of the groups, weighted by W.

    The maximum is the largest eigenvalue of R^(1) o W. The minimum scans the
    smallest eigenvalue of (R^(l) o W) restricted to the active set over all
    orders l = 1..max_j |G_j| and reports the attaining order.
    """
    ww = as_weight_matrix(w)
    if ww.shape[0] != system.nvars:
        raise DimensionMismatchError("weight matrix dimension differs from group count")
    r1 = group_matrix(system, 1)
    rho_max = float(full_spectrum(r1.matrix * ww)[-1])
    mins = []
    for ell in range(1, system.ell_star + 1):
        rl = group_matrix(system, ell)
        ix = np.asarray(rl.active, dtype=np.int64)
        sub = (rl.matrix * ww)[np.ix_(ix, ix)]
        mins.append(float(np.linalg.eigvalsh(sub)[0]))
    argmin = int(np.argmin(mins))
    return SymmExtremes(
        rho_max=rho_max,
        rho_min=mins[argmin],
        argmin_ell=argmin + 1,
        min_by_ell=tuple(mins),
    )


# ---------------------------------------------------------------------------
# shadow-system feasibility (the combinatorial condition behind argmin l = 1)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShadowSystemResult:
    """Outcome of the shadow-system search.

    ``status`` is "feasible" (witness attached), "infeasible" (search space
    exhausted), or "unknown" (node budget hit before exhaustion).
    """

    status: str
    witness: tuple[frozenset[int], ...] | None = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _verify_shadow(system: GroupSystem, shadow) -> bool:
    inter = system.intersection_sizes()
    p = system.nvars
    for j in range(p):
        if len(shadow[j]) > len(system.groups[j]) - 1:
            return False
        for k in range(j + 1, p):
            target = max(int(inter[j, k]) - 1, 0)
            if len(shadow[j] & shadow[k]) != target:
                return False
    return True


def assumption_c_check(system: GroupSystem, *, node_budget: int = 200_000) -> ShadowSystemResult:
    """Search for shadow groups with intersections (|G_j n G_k| - 1)_+ and sizes <= |G_j| - 1.

    A common element i0 of all groups yields the immediate witness
    G_j \\ {i0}. Otherwise a bounded backtracking search assigns multiplicities
    to the co-membership atoms of a fresh label universe; exhaustion proves
    infeasibility while hitting the node budget is reported as "unknown".
    """
    p = system.nvars
    common = frozenset.intersection(*system.groups)
    if common:
        i0 = min(common)
        witness = tuple(g - {i0} for g in system.groups)
        if not _verify_shadow(system, witness):
            raise AssertionError("common-element shortcut produced an invalid witness")
        return ShadowSystemResult(status="feasible", witness=witness)

    inter = system.intersection_sizes()
    targets = {
        (j, k): max(int(inter[j, k]) - 1, 0)
        for j in range(p)
        for k in range(j + 1, p)
    }
    caps = [len(g) - 1 for g in system.groups]

    # atoms: for each subset S of groups (|S| >= 2), the number of fresh labels
    # shared by exactly the shadows in S; singleton labels never affect targets
    subsets = [
        s
        for r in range(p, 1, -1)
        for s in itertools.combinations(range(p), r)
    ]
    last_cover = {}
    for pos, s in enumerate(subsets):
        for j, k in itertools.combinations(s, 2):
            last_cover[(j, k)] = pos
    counts = {}
    nodes = 0
    budget_hit = False

    def remaining_possible(pos: int, j: int, k: int) -> bool:
        return last_cover.get((j, k), -1) >= pos

    def search(pos: int, residual: dict, used: list) -> bool:
        nonlocal nodes, budget_hit
        nodes += 1
        if nodes > node_budget:
            budget_hit = True
            return False
        if all(v == 0 for v in residual.values()):
            return True
        if pos == len(subsets):
            return False
        # prune: a still-positive pair must be coverable by a later subset
        for (j, k), v in residual.items():
            if v > 0 and not remaining_possible(pos, j, k):
                return False
        s = subsets[pos]
        pair_cap = min(
            (residual[(j, k)] for j, k in itertools.combinations(sorted(s), 2)),
            default=0,
        )
        size_cap = min(caps[j] - used[j] for j in s)
        upper = min(pair_cap, size_cap)
        for x in range(upper, -1, -1):
            if x:
                for j, k in itertools.combinations(sorted(s), 2):
                    residual[(j, k)] -= x
                for j in s:
                    used[j] += x
            counts[s] = x
            if search(pos + 1, residual, used):
                return True
            if budget_hit:
                break
            if x:
                for j, k in itertools.combinations(sorted(s), 2):
                    residual[(j, k)] += x
                for j in s:
                    used[j] -= x
        counts.pop(s, None)
        return False

    found = search(0, dict(targets), [0] * p)
    if not found:
        return ShadowSystemResult(status="unknown" if budget_hit else "infeasible")

    # materialize fresh labels per atom, then verify exactly
    shadow = [set() for _ in range(p)]
    label = max(system.universe) + 1
    for s, x in counts.items():
        for _ in range(x):
            for j in s:
                shadow[j].add(label)
            label += 1
    witness = tuple(frozenset(s) for s in shadow)
    if not _verify_shadow(system, witness):
        raise AssertionError("backtracking produced an invalid witness")
    return ShadowSystemResult(status="feasible", witness=witness)


# ---------------------------------------------------------------------------
# Hoeffding decomposition of symmetric tabulated functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HoeffdingDecomposition:
    """Interaction components of a centered symmetric tabulated function.

    ``components[l - 1]`` tabulates the order-l component on support^l. The
    decomposition satisfies, atom by atom,

    - reconstruction: f_0 = sum_l sum_{i_1 < ... < i_l} f_{0,l}(y_{i_1..i_l}),
    - conditional-mean-zero: integrating any single argument of f_{0,l}
      against the law gives 0,
    - the variance identity E f_0^2 = sum_l C(m, l) E f_{0,l}^2.
    """

    law: DiscreteLaw
    order: int
    centered: np.ndarray
    components: tuple[np.ndarray, ...]

    def variance_components(self) -> tuple[float, ...]:
        """C(m, l) E[f_{0,l}^2] per order l."""
        out = []
        for ell, comp in enumerate(self.components, start=1):
            mass = _product_weights(self.law.probs, ell)
            out.append(math.comb(self.order, ell) * float(np.sum(mass * comp ** 2)))
        return tuple(out)

    def reconstruct(self) -> np.ndarray:
        m = self.order
        total = np.zeros_like(self.centered)
        for ell, comp in enumerate(self.components, start=1):
            for axes in itertools.combinations(range(m), ell):
                total = total + _embed(comp, axes, m, self.law.size)
        return total


def _product_weights(probs: np.ndarray, ell: int) -> np.ndarray:
    w = probs
    for _ in range(ell - 1):
        w = np.multiply.outer(w, probs)
    return w


def _embed(comp: np.ndarray, axes, m: int, s: int) -> np.ndarray:
    shape = [1] * m
    for pos, ax in enumerate(axes):
        shape[ax] = s
    # symmetric components make the axis order within `axes` irrelevant
    return comp.reshape(shape)


def _conditional_mean(arr: np.ndarray, probs: np.ndarray, keep: int) -> np.ndarray:
    """Average out all axes beyond the first ``keep`` against the law."""
    out = arr
    while out.ndim > keep:
        out = np.tensordot(out, probs, axes=([out.ndim - 1], [0]))
    return out


def _check_symmetric(arr: np.ndarray, m: int, tol: float) -> None:
    # adjacent transpositions generate the full symmetric group
    for i in range(m - 1):
        perm = list(range(m))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        if np.max(np.abs(arr - np.transpose(arr, perm))) > tol:
            raise ValidationError("function table is not permutation symmetric")


def hoeffding_decompose(
    f0, law: DiscreteLaw, *, budget: int = ATOM_BUDGET, tol: float = EXACT_TOL
) -> HoeffdingDecomposition:
    """Decompose a symmetric tabulated function into pure interaction orders.

    ``f0`` is an array of shape (s, ..., s) with one axis per argument. The
    function is centered first if its mean is not already zero. Components are
    built by the recursive conditional-expectation construction: the order-k
    component is the conditional mean, given the first k coordinates, of f_0
    minus all embedded lower-order components.
    """
    arr = np.asarray(f0, dtype=float)
    m = arr.ndim
    s = law.size
    if arr.shape != (s,) * m:
        raise ValidationError(
            f"function table shape {arr.shape} does not match support size {s}"
        )
    if s ** m > budget:
        raise BudgetExceededError(f"enumeration budget exceeded: {s}^{m} atoms")
    _check_symmetric(arr, m, tol)
    mass = _product_weights(law.probs, m)
    mean = float(np.sum(mass * arr))
    centered = arr - mean

    components: list[np.ndarray] = []
    remainder = centered
    for k in range(1, m + 1):
        comp = _conditional_mean(remainder, law.probs, k)
        components.append(comp)
        embedded = np.zeros_like(centered)
        for axes in itertools.combinations(range(m), k):
            embedded = embedded + _embed(comp, axes, m, s)
        remainder = remainder - embedded
    return HoeffdingDecomposition(
        law=law, order=m, centered=centered, components=tuple(components)
    )


# ---------------------------------------------------------------------------
# attainment: elementary symmetric products
# ---------------------------------------------------------------------------


def standardize_h0(h0_values, law: DiscreteLaw) -> np.ndarray:
    """Center and scale a tabulated seed function to mean 0, variance 1."""
    h = np.asarray(h0_values, dtype=float)
    if h.shape != law.values.shape:
        raise ValidationError("h0 must be tabulated on the law support")
    h = h - float(law.probs @ h)
    var = float(law.probs @ h ** 2)
    if var <= 0.0:
        raise DegenerateInputError("h0 has zero variance under the law")
    return h / math.sqrt(var)


def elementary_symmetric(values: np.ndarray, ell: int, axis: int = -1) -> np.ndarray:
    """Elementary symmetric polynomial e_l across one axis of an array."""
    vals = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    e = np.zeros((ell + 1,) + vals.shape[1:])
    e[0] = 1.0
    for v in vals:
        for k in range(ell, 0, -1):
            e[k] = e[k] + e[k - 1] * v
    return e[ell]


def product_basis(
    system: GroupSystem, j: int, ell: int, h0_values, law: DiscreteLaw
) -> np.ndarray:
    """The normalized order-l product function of block j, tabulated on support^m_j.

    C(m_j, l)^{-1/2} sum_{|S| = l} prod_{i in S} h0(Y_i), with h0 standardized
    to mean 0 and variance 1; the result has unit variance and its
    cross-covariances across blocks reproduce R^(l).
    """
    if not 0 <= j < system.nvars:
        raise ValidationError(f"block index {j} out of range")
    mj = system.sizes[j]
    if not 1 <= ell <= mj:
        raise ValidationError(f"order {ell} exceeds block size {mj}")
    h = standardize_h0(h0_values, law)
    s = law.size
    if s ** mj > ATOM_BUDGET:
        raise BudgetExceededError(f"enumeration budget exceeded: {s}^{mj} atoms")
    grids = np.indices((s,) * mj)
    hvals = h[grids]  # shape (mj, s, ..., s)
    e = elementary_symmetric(hvals, ell, axis=0)
    return e / math.sqrt(math.comb(mj, ell))


def group_cross_cov(
    system: GroupSystem, ell: int, h0_values, law: DiscreteLaw
) -> np.ndarray:
    """Exact covariance matrix of the order-l product functions across blocks.

    Enumerates the label universe; entries for inactive blocks are zero. Used
    as the attainment cross-check against the R^(l) formula.
    """
    universe = system.universe
    u = len(universe)
    s = law.size
    if s ** u > ATOM_BUDGET:
        raise BudgetExceededError(f"enumeration budget exceeded: {s}^{u} atoms")
    h = standardize_h0(h0_values, law)
    pos = {lab: i for i, lab in enumerate(universe)}
    idx = _atom_grid(s, u)
    weight = np.prod(law.probs[idx], axis=1)
    hvals = h[idx]  # (atoms, u)
    p = system.nvars
    feats = np.zeros((idx.shape[0], p))
    for j, g in enumerate(system.groups):
        if system.sizes[j] < ell:
            continue
        cols = [pos[lab] for lab in sorted(g)]
        e = elementary_symmetric(hvals[:, cols], ell, axis=1)
        feats[:, j] = e / math.sqrt(math.comb(len(cols), ell))
    mu = weight @ feats
    centered = feats - mu
    return (centered * weight[:, None]).T @ centered


# ---------------------------------------------------------------------------
# iid-sum joints for the exact oracle
# ---------------------------------------------------------------------------


def group_sums_joint(system: GroupSystem, law: DiscreteLaw, *, budget: int = ATOM_BUDGET) -> DiscreteJoint:
    """Exact joint law of the block sums sum_{i in G_j} Y_i by enumeration."""
    universe = system.universe
    u = len(universe)
    s = law.size
    if s ** u > budget:
        raise BudgetExceededError(f"enumeration budget exceeded: {s}^{u} atoms")
    pos = {lab: i for i, lab in enumerate(universe)}
    idx = _atom_grid(s, u)
    weight = np.prod(law.probs[idx], axis=1)
    yvals = law.values[idx]
    sums = np.zeros((idx.shape[0], system.nvars))
    for j, g in enumerate(system.groups):
        cols = [pos[lab] for lab in sorted(g)]
        sums[:, j] = yvals[:, cols].sum(axis=1)
    supports, atom_idx = [], []
    for j in range(system.nvars):
        vals, inv = np.unique(sums[:, j], return_inverse=True)
        supports.append(vals.tolist())
        atom_idx.append(inv)
    return DiscreteJoint.from_atoms(supports, np.stack(atom_idx, axis=1), weight)


def nested_sums_joint(m, law: DiscreteLaw, *, budget: int = ATOM_BUDGET) -> DiscreteJoint:
    """Exact joint law of the nested partial sums S_{m_1}, ..., S_{m_p}."""
    mv = [int(x) for x in m]
    if any(x < 1 for x in mv):
        raise ValidationError("sum lengths must be positive")
    system = GroupSystem.from_lists([range(1, x + 1) for x in mv])
    return group_sums_joint(system, law, budget=budget)


# ---------------------------------------------------------------------------
# the sin construction (heavy-tail attainment)
# ---------------------------------------------------------------------------


def solve_ct(t: float, law) -> float:
    """The phase c_t in (-pi/2, pi/2) with E[sin(tY - c_t)] = 0.

    Requires E[cos(tY)] != 0 at this t and a non-degenerate sin transform
    (P{sin(t(Y1 - Y2)) = 0} < 1 for discrete laws); invalid t are rejected.
    """
    if t <= 0:
        raise ValidationError("t must be positive")
    ec, es = law.trig_moments(t)
    if abs(ec) < 1e-14:
        raise ValidationError(f"E cos(tY) vanishes at t={t}; pick another t")
    if isinstance(law, DiscreteLaw):
        diffs = law.values[:, None] - law.values[None, :]
        if np.all(np.abs(np.sin(t * diffs)) < 1e-14):
            raise DegenerateInputError(
                f"sin(t(Y1 - Y2)) vanishes almost surely at t={t}"
            )
    ct = math.atan(es / ec)
    residual = abs(math.cos(ct) * es - math.sin(ct) * ec)  # E sin(tY - c_t)
    if residual > EXACT_TOL:
        raise ValidationError(f"phase solve residual {residual} exceeds tolerance")
    return ct


@dataclass(frozen=True)
class SinConstructionResult:
    """Correlation matrix of the sin-transformed nested sums at parameter t."""

    corr: np.ndarray
    c_t: float
    t: float
    method: str
    std_error: np.ndarray | None = None


def _sin_corr_analytic(t: float, m: Sequence[int], law) -> tuple[np.ndarray, float]:
    """Exact correlations of sin(t S_m - m c_t) from trig moments.

    With Y' = tY - c_t: E sin(sum Y') = 0, E cos(sum over k terms) = alpha^k
    for alpha = E cos(Y'), and E sin^2(S'_k) = (1 - Re(z^k))/2 where z is the
    characteristic value of 2Y'. Independence of increments gives
    corr(j, k) = alpha^{m_k - m_j} sqrt(E sin^2 S'_{m_j} / E sin^2 S'_{m_k}).
    """
    ct = solve_ct(t, law)
    ec, es = law.trig_moments(t)
    alpha = math.cos(ct) * ec + math.sin(ct) * es
    ec2, es2 = law.trig_moments(2.0 * t)
    z = complex(ec2, es2) * complex(math.cos(2 * ct), -math.sin(2 * ct))
    sin2 = np.array([(1.0 - (z ** k).real) / 2.0 for k in m])
    if np.any(sin2 <= 0):
        raise DegenerateInputError("sin transform is degenerate at this t")
    p = len(m)
    corr = np.eye(p)
    for j in range(p):
        for k in range(p):
            lo, hi = min(m[j], m[k]), max(m[j], m[k])
            slo = (1.0 - (z ** lo).real) / 2.0
            shi = (1.0 - (z ** hi).real) / 2.0
            corr[j, k] = alpha ** (hi - lo) * math.sqrt(slo / shi)
    return corr, ct


def _sin_corr_enumerate(t: float, m: Sequence[int], law: DiscreteLaw) -> tuple[np.ndarray, float]:
    ct = solve_ct(t, law)
    mp = max(m)
    s = law.size
    idx = _atom_grid(s, mp)
    weight = np.prod(law.probs[idx], axis=1)
    sums = np.cumsum(law.values[idx], axis=1)
    cols = np.array([mi - 1 for mi in m])
    feats = np.sin(t * sums[:, cols] - np.asarray(m, dtype=float) * ct)
    mu = weight @ feats
    centered = feats - mu
    cov = (centered * weight[:, None]).T @ centered
    d = np.sqrt(np.diag(cov))
    if np.any(d <= 0):
        raise DegenerateInputError("sin transform is degenerate at this t")
    return cov / np.outer(d, d), ct


def _sin_corr_mc(
    t: float, m: Sequence[int], law: DiscreteLaw, *, n_samples: int, seed: int
) -> tuple[np.ndarray, float, np.ndarray]:
    ct = solve_ct(t, law)
    rng = np.random.default_rng(seed)
    mp = max(m)
    batches = 10
    per = n_samples // batches
    cols = np.array([mi - 1 for mi in m])
    ms = np.asarray(m, dtype=float)
    corrs = []
    for _ in range(batches):
        draws = rng.choice(law.values, p=law.probs, size=(per, mp))
        feats = np.sin(t * np.cumsum(draws, axis=1)[:, cols] - ms * ct)
        corrs.append(np.corrcoef(feats, rowvar=False))
    stack = np.stack(corrs)
    return stack.mean(axis=0), ct, stack.std(axis=0, ddof=1) / math.sqrt(batches)


def sin_construction_corr(
    t: float,
    m,
    law,
    *,
    method: str = "auto",
    budget: int = ATOM_BUDGET,
    n_samples: int = 10 ** 6,
    seed: int = 0,
) -> SinConstructionResult:
    """Correlation matrix of sin(t S_{m_j} - m_j c_t) for nested sums of the law.

    Entries converge to the nested-sum matrix entrywise as t -> 0+, which
    realizes the extreme correlations without any moment condition. Discrete
    laws are enumerated exactly within the atom budget (falling back to Monte
    Carlo with reported standard errors beyond it); laws with closed-form
    characteristic functions take the analytic path, which is also exact.
    """
    mv = [int(x) for x in m]
    if any(x < 1 for x in mv):
        raise ValidationError("sum lengths must be positive")
    if method not in ("auto", "enumerate", "analytic", "mc"):
        raise ValidationError(f"unknown method {method!r}")
    if method == "auto":
        if isinstance(law, DiscreteLaw):
            method = "enumerate" if law.size ** max(mv) <= budget else "mc"
        else:
            method = "analytic"
    if method == "enumerate":
        if not isinstance(law, DiscreteLaw):
            raise ValidationError("enumeration requires a discrete law")
        if law.size ** max(mv) > budget:
            raise BudgetExceededError(
                f"enumeration budget exceeded: {law.size}^{max(mv)} atoms"
            )
        corr, ct = _sin_corr_enumerate(t, mv, law)
        return SinConstructionResult(corr=corr, c_t=ct, t=t, method=method)
    if method == "analytic":
        corr, ct = _sin_corr_analytic(t, mv, law)
        return SinConstructionResult(corr=corr, c_t=ct, t=t, method=method)
    if not isinstance(law, DiscreteLaw):
        raise ValidationError("Monte Carlo sampling requires a discrete law")
    corr, ct, se = _sin_corr_mc(t, mv, law, n_samples=n_samples, seed=seed)
    return SinConstructionResult(corr=corr, c_t=ct, t=t, method="mc", std_error=se)


def cauchy_sin_corr_closed_form(t: float, m_small: int, m_large: int) -> float:
    """Reference value for the standard Cauchy sin construction.

    e^{-(n - m) t} sqrt((1 - e^{-2 m t}) / (1 - e^{-2 n t})) for m <= n, from
    the product expansion of the characteristic function.
    """
    if m_small > m_large:
        m_small, m_large = m_large, m_small
    return math.exp(-(m_large - m_small) * t) * math.sqrt(
        (1.0 - math.exp(-2.0 * m_small * t)) / (1.0 - math.exp(-2.0 * m_large * t))
    )
