"""Tensor-network sums over vertex maps.

Both finite graphs and step kernels reduce density computations to

    sum over c: [q] -> [t] of  prod_v w[c_v] * prod_e T_e[c(e)]

which is a single einsum.  Object arrays (Python ints / Fractions) keep the
sum exact; float arrays go through the optimized contraction path.
"""
from __future__ import annotations

import itertools
import math
import string

import numpy as np

_LETTERS = string.ascii_letters


def _as_operand(a, exact):
    a = np.asarray(a)
    if exact and a.dtype != object:
        return a.astype(object)
    return a


def hom_sum(q, edges, tensors, weights=None):
    """Contract the edge tensors over all maps ``[q] -> [t]``.

    ``tensors`` is either one tensor shared by every edge or a sequence with
    one tensor per edge.  ``weights`` (length t) multiplies each vertex; when
    omitted every vertex carries weight 1.
    """
    if q > len(_LETTERS):
        raise ValueError("too many vertices for a single contraction")
    edges = [tuple(e) for e in edges]
    if not isinstance(tensors, (list, tuple)):
        tensors = [tensors] * len(edges)
    if len(tensors) != len(edges):
        raise ValueError("one tensor per edge expected")
    if edges:
        t = np.asarray(tensors[0]).shape[0]
    elif weights is not None:
        t = len(weights)
    else:
        raise ValueError("cannot infer the class count")
    exact = any(np.asarray(x).dtype == object for x in tensors)
    if weights is not None:
        wvec = np.asarray(list(weights), dtype=object if _is_exact_seq(weights) else float)
        exact = exact or wvec.dtype == object
    else:
        wvec = None

    covered = set(itertools.chain.from_iterable(edges))
    subs, ops = [], []
    for e, T in zip(edges, tensors):
        subs.append("".join(_LETTERS[v] for v in e))
        ops.append(_as_operand(T, exact))
    for v in range(q):
        if wvec is not None:
            subs.append(_LETTERS[v])
            ops.append(_as_operand(wvec, exact))
        elif v not in covered:
            subs.append(_LETTERS[v])
            ops.append(np.ones(t, dtype=object if exact else np.int64))
    if not ops:
        return 1
    expr = ",".join(subs) + "->"
    out = np.einsum(expr, *ops, optimize="greedy")
    return out.item() if isinstance(out, np.ndarray) else out


def _is_exact_seq(seq):
    from fractions import Fraction

    return all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for x in seq)


def set_partitions(items):
    """Yield every set partition of ``items`` as a list of blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        yield [[first]] + smaller
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1:]


def restricted_growth(t, max_blocks):
    """Yield label tuples of all partitions of range(t) into <= max_blocks blocks."""
    labels = [0] * t

    def rec(i, used):
        if i == t:
            yield tuple(labels)
            return
        for b in range(min(used + 1, max_blocks)):
            labels[i] = b
            yield from rec(i + 1, max(used, b + 1))

    if t == 0:
        yield ()
        return
    yield from rec(1, 1)


def injective_hom_sum(q, edges, tensors, t=None):
    """Sum over injective maps ``[q] -> [t]`` by Moebius inversion.

    The tensors must vanish whenever an edge is mapped onto repeated
    indices (loop slots), which holds for graph indicator tensors and for
    weighted samples with zeroed diagonals.
    """
    edges = [tuple(e) for e in edges]
    if not isinstance(tensors, (list, tuple)):
        tensors = [tensors] * len(edges)
    if t is None:
        if not edges:
            raise ValueError("edgeless pattern needs an explicit class count")
        t = np.asarray(tensors[0]).shape[0]
    total = 0
    for blocks in set_partitions(range(q)):
        where = {v: b for b, block in enumerate(blocks) for v in block}
        qe = [tuple(where[v] for v in e) for e in edges]
        if any(len(set(e)) < len(e) for e in qe):
            continue
        coef = 1
        for block in blocks:
            coef *= (-1) ** (len(block) - 1) * math.factorial(len(block) - 1)
        if qe:
            term = hom_sum(len(blocks), qe, list(tensors))
        else:
            term = t ** len(blocks)
        total += coef * term
    return total
