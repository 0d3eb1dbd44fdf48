"""Shared random-instance generators for the property sweeps."""

import itertools

import numpy as np

from nlcorr import DiscreteJoint, DiscreteLaw, GroupSystem


def random_joint(rng, sizes) -> DiscreteJoint:
    """A dense random joint pmf over the given support sizes."""
    sizes = list(sizes)
    n_atoms = int(np.prod(sizes))
    prob = rng.gamma(1.0, size=n_atoms)
    prob /= prob.sum()
    idx = np.array(list(itertools.product(*[range(s) for s in sizes])), dtype=np.int64)
    supports = [list(range(s)) for s in sizes]
    return DiscreteJoint.from_atoms(supports, idx, prob)


def random_symmetric_table(rng, law: DiscreteLaw, m: int) -> np.ndarray:
    """A random permutation-symmetric tabulated function on support^m."""
    raw = rng.standard_normal((law.size,) * m)
    out = np.zeros_like(raw)
    for perm in itertools.permutations(range(m)):
        out += np.transpose(raw, perm)
    return out


def random_group_system(rng, *, p: int, universe: int, common: bool) -> GroupSystem:
    """Random groups over labels 1..universe, optionally sharing label 1."""
    groups = []
    for _ in range(p):
        size = int(rng.integers(1, universe))
        labels = set(rng.choice(np.arange(1, universe + 1), size=size, replace=False).tolist())
        if common:
            labels.add(1)
        groups.append(sorted(labels))
    return GroupSystem.from_lists(groups)


def random_sorted_m(rng, *, p: int, universe: int) -> list[int]:
    m = np.sort(rng.integers(1, universe + 1, size=p))
    return [int(x) for x in m]
