"""Exact extreme nonlinear correlation for finite-support joint distributions.

For variables with finite supports, the supremum (infimum) over centered
marginal transforms of the weighted-correlation Rayleigh ratio

    sum_jk W_jk E[f_j(X_j) f_k(X_k)]  /  sum_j E[f_j(X_j)^2]

is an ordinary symmetric eigenproblem in whitened per-variable coordinates.
Writing D_j for the diagonal marginal pmf, P_jk for the bivariate pmf matrix
(P_jj = D_j), and V_j for an orthonormal basis of the complement of sqrt(p_j),
the substitution f_j = D_j^{-1/2} V_j c_j turns the ratio into c' H c / c' c
with blocks

    H_jk = W_jk V_j' D_j^{-1/2} P_jk D_k^{-1/2} V_k ,

so the extreme values are the extreme eigenvalues of H and the achieving
transforms are read off the eigenvectors. The centering constraint
E[f_j] = 0 is exactly the orthogonality to sqrt(p_j).

The classical two-variable maximal correlation is the second-largest singular
value of D_1^{-1/2} P_12 D_2^{-1/2} (the largest is the trivial value 1).

A sample-based estimator discretizes columns to their empirical supports
(quantile bins for continuous data), builds the empirical joint, and runs
shifted power iteration on H.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    ValidationError,
)
from .spectra import as_weight_matrix

PROB_TOL = 1e-12


# ---------------------------------------------------------------------------
# joint distributions over finite product supports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteJoint:
    """A joint pmf over a product of finite supports, stored as sparse atoms.

    Zero-mass support points are pruned at construction and every variable
    must keep at least two support points; probabilities are validated to be
    nonnegative and to sum to one.
    """

    supports: tuple[tuple[Any, ...], ...]
    atom_idx: np.ndarray
    atom_prob: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.atom_idx, dtype=np.int64)
        prob = np.asarray(self.atom_prob, dtype=float)
        if idx.ndim != 2 or idx.shape[0] != prob.size:
            raise ValidationError("atom indices and probabilities are inconsistent")
        object.__setattr__(self, "atom_idx", idx)
        object.__setattr__(self, "atom_prob", prob)

    @property
    def nvars(self) -> int:
        return len(self.supports)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.supports)

    @classmethod
    def from_atoms(cls, supports, idx, prob) -> "DiscreteJoint":
        """Build and validate a joint from (index tuple, probability) atoms."""
        supports = [list(s) for s in supports]
        idx = np.asarray(idx, dtype=np.int64)
        prob = np.asarray(prob, dtype=float)
        if idx.ndim != 2 or idx.shape[1] != len(supports):
            raise ValidationError("atom index array must be (n_atoms, p)")
        if prob.ndim != 1 or prob.size != idx.shape[0]:
            raise ValidationError("need one probability per atom")
        if np.any(prob < -PROB_TOL) or not np.all(np.isfinite(prob)):
            raise ValidationError("probabilities must be nonnegative and finite")
        if abs(float(prob.sum()) - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {prob.sum()!r}, not 1")
        for j, s in enumerate(supports):
            if len(set(map(repr, s))) != len(s):
                raise ValidationError(f"support {j} has duplicate labels")
            if np.any(idx[:, j] < 0) or np.any(idx[:, j] >= len(s)):
                raise ValidationError(f"atom index out of range for variable {j}")
        # merge duplicated atoms
        uniq, inverse = np.unique(idx, axis=0, return_inverse=True)
        mass = np.bincount(inverse, weights=prob, minlength=uniq.shape[0])
        keep = mass > 0.0
        uniq, mass = uniq[keep], mass[keep]
        # prune zero-mass support points, re-index
        new_supports = []
        for j, s in enumerate(supports):
            used = np.zeros(len(s), dtype=bool)
            used[uniq[:, j]] = True
            if int(used.sum()) < 2:
                raise DegenerateInputError(
                    f"variable {j} is degenerate after pruning (support size "
                    f"{int(used.sum())})"
                )
            remap = -np.ones(len(s), dtype=np.int64)
            remap[np.flatnonzero(used)] = np.arange(int(used.sum()))
            uniq[:, j] = remap[uniq[:, j]]
            new_supports.append(tuple(v for v, u in zip(s, used) if u))
        return cls(
            supports=tuple(new_supports),
            atom_idx=uniq,
            atom_prob=mass,
        )

    def marginal(self, j: int) -> np.ndarray:
        return np.bincount(
            self.atom_idx[:, j], weights=self.atom_prob, minlength=self.sizes[j]
        )

    def bivariate(self, j: int, k: int) -> np.ndarray:
        """Bivariate pmf matrix P_jk on the pruned supports."""
        sj, sk = self.sizes[j], self.sizes[k]
        flat = self.atom_idx[:, j] * sk + self.atom_idx[:, k]
        return np.bincount(flat, weights=self.atom_prob, minlength=sj * sk).reshape(sj, sk)

    def support_values(self, j: int) -> np.ndarray:
        return np.asarray(self.supports[j], dtype=float)

    @classmethod
    def from_samples(cls, columns: Sequence[np.ndarray]) -> "DiscreteJoint":
        """Empirical joint of already-discrete columns of equal length."""
        cols = [np.asarray(c) for c in columns]
        n = cols[0].size
        if any(c.ndim != 1 or c.size != n for c in cols):
            raise ValidationError("columns must be 1-d and of equal length")
        supports, idx = [], []
        for c in cols:
            vals, inv = np.unique(c, return_inverse=True)
            supports.append(vals.tolist())
            idx.append(inv)
        return cls.from_atoms(
            supports, np.stack(idx, axis=1), np.full(n, 1.0 / n)
        )

    def to_json_dict(self) -> dict:
        return {
            "supports": [list(s) for s in self.supports],
            "atoms": [
                {"idx": [int(i) for i in row], "p": float(p)}
                for row, p in zip(self.atom_idx, self.atom_prob)
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DiscreteJoint":
        try:
            supports = obj["supports"]
            atoms = obj["atoms"]
        except (KeyError, TypeError) as exc:
            raise ValidationError("joint JSON must carry 'supports' and 'atoms'") from exc
        idx = np.array([a["idx"] for a in atoms], dtype=np.int64)
        prob = np.array([a["p"] for a in atoms], dtype=float)
        return cls.from_atoms(supports, idx, prob)

    @classmethod
    def load(cls, path) -> "DiscreteJoint":
        with Path(path).open() as fh:
            return cls.from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# the whitened block eigenproblem
# ---------------------------------------------------------------------------


def _complement_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of unit vector v (Householder columns)."""
    u = v.copy()
    u[0] += 1.0 if v[0] >= 0 else -1.0
    h = np.eye(v.size) - 2.0 * np.outer(u, u) / (u @ u)
    return h[:, 1:]


def _assemble_blocks(joint: DiscreteJoint, w: np.ndarray):
    """The symmetric matrix H plus the per-variable whitening data."""
    p = joint.nvars
    margs = [joint.marginal(j) for j in range(p)]
    inv_sqrt = [1.0 / np.sqrt(m) for m in margs]
    bases = [_complement_basis(np.sqrt(m)) for m in margs]
    sizes = [m.size - 1 for m in margs]
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    h = np.zeros((offsets[-1], offsets[-1]))
    for j in range(p):
        for k in range(j, p):
            if j == k:
                block = w[j, j] * np.eye(sizes[j])
            else:
                q = inv_sqrt[j][:, None] * joint.bivariate(j, k) * inv_sqrt[k][None, :]
                block = w[j, k] * (bases[j].T @ q @ bases[k])
            h[offsets[j]:offsets[j + 1], offsets[k]:offsets[k + 1]] = block
            if j != k:
                h[offsets[k]:offsets[k + 1], offsets[j]:offsets[j + 1]] = block.T
    return h, margs, inv_sqrt, bases, offsets


@dataclass(frozen=True)
class ExtremeResult:
    """Extreme Rayleigh values with achieving per-variable functions.

    The achiever functions are tabulated on the pruned supports, centered
    under the marginals, with the stacked whitened coordinates normalized to
    unit length; ``variances`` holds the per-variable second moments E f_j^2.
    ``zero_blocks`` flags variables whose optimizer component vanishes.
    """

    rho_max: float
    rho_min: float
    f_max: tuple[np.ndarray, ...]
    f_min: tuple[np.ndarray, ...]
    variances_max: tuple[float, ...]
    variances_min: tuple[float, ...]
    zero_blocks_max: tuple[int, ...]
    zero_blocks_min: tuple[int, ...]
    converged: bool = True
    iterations: tuple[int, int] = (0, 0)
    residuals: tuple[float, float] = (0.0, 0.0)

    def as_dict(self) -> dict:
        return {
            "rho_max": self.rho_max,
            "rho_min": self.rho_min,
            "f_max": [list(map(float, f)) for f in self.f_max],
            "f_min": [list(map(float, f)) for f in self.f_min],
            "variances_max": list(self.variances_max),
            "variances_min": list(self.variances_min),
            "zero_blocks_max": list(self.zero_blocks_max),
            "zero_blocks_min": list(self.zero_blocks_min),
            "converged": self.converged,
            "residuals": list(self.residuals),
        }


def _unstack(vec, margs, inv_sqrt, bases, offsets, zero_tol=1e-12):
    funcs, variances, zero_blocks = [], [], []
    for j, m in enumerate(margs):
        c = vec[offsets[j]:offsets[j + 1]]
        f = inv_sqrt[j] * (bases[j] @ c)
        var = float(c @ c)
        funcs.append(f)
        variances.append(var)
        if var <= zero_tol:
            zero_blocks.append(j)
    return tuple(funcs), tuple(variances), tuple(zero_blocks)


def exact_extremes(joint: DiscreteJoint, w) -> ExtremeResult:
    """Exact extreme nonlinear correlations of a finite-support joint law.

    Returns the extreme eigenvalues of the whitened block matrix together with
    the back-transformed achieving functions. Plugging the achievers into the
    defining Rayleigh ratio reproduces the returned values.
    """
    ww = as_weight_matrix(w)
    if ww.shape[0] != joint.nvars:
        raise DimensionMismatchError(
            f"weight matrix is {ww.shape[0]}x{ww.shape[0]} but the joint has "
            f"{joint.nvars} variables"
        )
    h, margs, inv_sqrt, bases, offsets = _assemble_blocks(joint, ww)
    eigvals, eigvecs = np.linalg.eigh(h)
    f_min, var_min, zero_min = _unstack(eigvecs[:, 0], margs, inv_sqrt, bases, offsets)
    f_max, var_max, zero_max = _unstack(eigvecs[:, -1], margs, inv_sqrt, bases, offsets)
    return ExtremeResult(
        rho_max=float(eigvals[-1]),
        rho_min=float(eigvals[0]),
        f_max=f_max,
        f_min=f_min,
        variances_max=var_max,
        variances_min=var_min,
        zero_blocks_max=zero_max,
        zero_blocks_min=zero_min,
    )


def rayleigh_quotient(joint: DiscreteJoint, w, funcs) -> float:
    """The weighted-correlation ratio for given per-variable function tables.

    Functions are centered under their marginals before evaluation, so any
    finite tables are admissible; the total variance must be positive.
    """
    ww = as_weight_matrix(w)
    p = joint.nvars
    fs = []
    for j in range(p):
        f = np.asarray(funcs[j], dtype=float)
        if f.shape != (joint.sizes[j],):
            raise ValidationError(f"function {j} must be tabulated on support {j}")
        m = joint.marginal(j)
        fs.append(f - float(m @ f))
    num = 0.0
    den = 0.0
    for j in range(p):
        m = joint.marginal(j)
        den += float(m @ fs[j] ** 2)
        num += ww[j, j] * float(m @ fs[j] ** 2)
        for k in range(j + 1, p):
            cross = float(fs[j] @ joint.bivariate(j, k) @ fs[k])
            num += 2.0 * ww[j, k] * cross
    if den <= 0.0:
        raise DegenerateInputError("all candidate functions are constants")
    return num / den


def pair_max_corr(joint: DiscreteJoint) -> float:
    """Classical maximal correlation of a two-variable finite joint law.

    Second-largest singular value of D_1^{-1/2} P_12 D_2^{-1/2}; the largest
    singular value is the trivial 1 carried by the constant direction.
    """
    if joint.nvars != 2:
        raise ValidationError(f"pair_max_corr needs exactly 2 variables, got {joint.nvars}")
    p1, p2 = joint.marginal(0), joint.marginal(1)
    q = joint.bivariate(0, 1) / np.sqrt(np.outer(p1, p2))
    sv = np.linalg.svd(q, compute_uv=False)
    if abs(sv[0] - 1.0) > 1e-8:
        raise ValidationError(f"leading singular value {sv[0]} deviates from 1")
    if sv.size < 2:
        return 0.0
    return float(np.clip(sv[1], 0.0, 1.0))


# ---------------------------------------------------------------------------
# sample-based estimator
# ---------------------------------------------------------------------------


def quantile_bin_column(col: np.ndarray, bins: int) -> np.ndarray:
    """Reduce a continuous column to at most ``bins`` quantile bins."""
    col = np.asarray(col, dtype=float)
    distinct = np.unique(col)
    if distinct.size <= bins:
        return col
    edges = np.quantile(col, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    return np.searchsorted(edges, col, side="right").astype(float)


def _power_extreme(h: np.ndarray, shift: float, sign: float, x0: np.ndarray,
                   max_iter: int, tol: float):
    """Extreme eigenpair of h via shifted power iteration.

    ``sign=+1`` targets the largest eigenvalue (iterates h + shift I),
    ``sign=-1`` the smallest (iterates shift I - h). Stops when successive
    Rayleigh quotients differ by less than ``tol``; the returned residual
    norm ||h x - mu x|| bounds the eigenvalue error of the last iterate.
    """
    b = sign * h + shift * np.eye(h.shape[0])
    x = x0 / np.linalg.norm(x0)
    hx = h @ x
    mu = float(x @ hx)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = sign * hx + shift * x  # b @ x without re-multiplying
        norm = np.linalg.norm(y)
        if norm == 0.0:
            converged = True
            break
        x = y / norm
        hx = h @ x
        mu_new = float(x @ hx)
        if abs(mu_new - mu) < tol:
            mu = mu_new
            converged = True
            break
        mu = mu_new
    residual = float(np.linalg.norm(hx - mu * x))
    return mu, x, it, converged, residual


@dataclass(frozen=True)
class AceOptions:
    max_iter: int = 2000
    tol: float = 1e-12
    seed: int = 0
    bins: int = 16


def ace_estimate(samples, w, opts: AceOptions | None = None) -> ExtremeResult:
    """Alternating-projection (power iteration) estimate from raw samples.

    Columns are reduced to their empirical supports (quantile bins beyond
    ``opts.bins`` distinct values), the empirical joint is assembled, and the
    extreme Rayleigh values of the whitened block matrix are found by shifted
    power iteration. Deterministic for a fixed seed. Non-convergence within
    ``max_iter`` is reported through the ``converged`` flag of the result,
    which then carries the last iterate.
    """
    opts = opts or AceOptions()
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValidationError("samples must be an n x p table with n >= 2")
    cols = [quantile_bin_column(data[:, j], opts.bins) for j in range(data.shape[1])]
    for j, c in enumerate(cols):
        if np.unique(c).size < 2:
            raise DegenerateInputError(f"column {j} has fewer than 2 distinct values")
    joint = DiscreteJoint.from_samples(cols)
    ww = as_weight_matrix(w)
    if ww.shape[0] != joint.nvars:
        raise DimensionMismatchError("weight matrix dimension differs from sample width")
    h, margs, inv_sqrt, bases, offsets = _assemble_blocks(joint, ww)
    shift = float(np.max(np.sum(np.abs(h), axis=1)))  # infinity norm bounds the spectrum
    rng = np.random.default_rng(opts.seed)
    x_hi = rng.standard_normal(h.shape[0])
    x_lo = rng.standard_normal(h.shape[0])
    hi, v_hi, it_hi, ok_hi, r_hi = _power_extreme(
        h, shift, +1.0, x_hi, opts.max_iter, opts.tol
    )
    lo, v_lo, it_lo, ok_lo, r_lo = _power_extreme(
        h, shift, -1.0, x_lo, opts.max_iter, opts.tol
    )
    f_max, var_max, zero_max = _unstack(v_hi, margs, inv_sqrt, bases, offsets)
    f_min, var_min, zero_min = _unstack(v_lo, margs, inv_sqrt, bases, offsets)
    return ExtremeResult(
        rho_max=hi,
        rho_min=lo,
        f_max=f_max,
        f_min=f_min,
        variances_max=var_max,
        variances_min=var_min,
        zero_blocks_max=zero_max,
        zero_blocks_min=zero_min,
        converged=bool(ok_hi and ok_lo),
        iterations=(it_hi, it_lo),
        residuals=(r_hi, r_lo),
    )
