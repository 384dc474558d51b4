"""Text formats for hypergraphs, kernels, real arrays and density tensors.

Vertex ids are 1-based in files.  Numbers are written as integers,
rationals ``p/q`` or decimals; writers are canonical so that equal objects
give byte-identical files.

hypergraph::

    r n m k
    v1 .. vr c        (m lines, sorted; slots not listed take color k)

kernel (k = 0 for an uncolored real kernel)::

    r t k
    w1 .. wt
    a_1 .. a_{t^r}    (one line per color, lexicographic cell order)
    iota a_1 ..       (optional loop channel)

real array::

    r s
    a_1 .. a_{s^r}

density tensor::

    tensor r k
    rho s v_1 .. v_k  (one line per level)
    mu i_1 .. i_p v   (nonzero entries, classes 0-based)
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import ColoredHypergraph, Hypergraph, slots
from .energy import DensityTensor, RealArray, proper_subsets
from .errors import FormatError
from .kernels import ColoredStepKernel, StepKernel


def parse_number(tok: str, line=None, path=None):
    try:
        if "/" in tok:
            p, q = tok.split("/")
            return Fraction(int(p), int(q))
        if any(c in tok for c in ".eE"):
            v = float(tok)
            if not np.isfinite(v):
                raise ValueError(tok)
            return v
        return int(tok)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"bad number {tok!r}", line, path) from None


def fmt_number(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _lines(text: str):
    """(line number, tokens) for non-empty, non-comment lines."""
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            yield i, s.split()


def _ints(toks, ln, path, what):
    try:
        return [int(x) for x in toks]
    except ValueError:
        raise FormatError(f"expected integers in {what}", ln, path) from None


# -- hypergraphs -----------------------------------------------------------------------

def parse_hypergraph(text: str, path=None):
    """Hypergraph when k <= 2 and only color 1 is listed, else ColoredHypergraph."""
    it = _lines(text)
    try:
        ln, head = next(it)
    except StopIteration:
        raise FormatError("empty file", 1, path) from None
    if len(head) != 4:
        raise FormatError("header must be 'r n m k'", ln, path)
    r, n, m, k = _ints(head, ln, path, "header")
    if r < 1 or n < 0 or m < 0 or k < 1:
        raise FormatError("header values out of range", ln, path)
    mapping = {}
    last = None
    for ln, toks in it:
        if len(toks) != r + 1:
            raise FormatError(f"expected {r} vertices and a color", ln, path)
        vals = _ints(toks, ln, path, "edge line")
        e, c = tuple(vals[:r]), vals[r]
        if len(set(e)) != r:
            raise FormatError("repeated vertex (loop lines are not allowed)", ln, path)
        if list(e) != sorted(e):
            raise FormatError("vertex ids must be sorted", ln, path)
        if e[0] < 1 or e[-1] > n:
            raise FormatError(f"vertex id out of range 1..{n}", ln, path)
        if not 1 <= c <= k:
            raise FormatError(f"color {c} out of range 1..{k}", ln, path)
        e = tuple(v - 1 for v in e)
        if e in mapping:
            raise FormatError("duplicate edge", ln, path)
        if last is not None and e < last:
            raise FormatError("edges must be listed in sorted order", ln, path)
        last = e
        mapping[e] = c
    if len(mapping) != m:
        raise FormatError(f"header announces {m} edges, found {len(mapping)}", ln if mapping else 1, path)
    if k == 2 and all(c == 1 for c in mapping.values()):
        return Hypergraph(r, n, frozenset(mapping))
    return ColoredHypergraph.from_map(r, n, k, mapping, default=k)


def format_hypergraph(G) -> str:
    if isinstance(G, Hypergraph):
        rows = sorted(G.edges)
        out = [f"{G.r} {G.n} {len(rows)} 2"]
        out += [" ".join(str(v + 1) for v in e) + " 1" for e in rows]
        return "\n".join(out) + "\n"
    rows = [(s, c) for s, c in zip(slots(G.n, G.r), G.colors) if c != G.k]
    out = [f"{G.r} {G.n} {len(rows)} {G.k}"]
    out += [" ".join(str(v + 1) for v in s) + f" {c}" for s, c in rows]
    return "\n".join(out) + "\n"


# -- kernels -----------------------------------------------------------------------------

def _array_line(toks, t, r, ln, path):
    if len(toks) != t**r:
        raise FormatError(f"expected {t**r} values, found {len(toks)}", ln, path)
    vals = [parse_number(x, ln, path) for x in toks]
    exact = all(isinstance(v, (int, Fraction)) for v in vals)
    a = np.empty(len(vals), dtype=object if exact else float)
    for i, v in enumerate(vals):
        a[i] = v if exact else float(v)
    return a.reshape((t,) * r)


def parse_kernel(text: str, path=None):
    it = list(_lines(text))
    if not it:
        raise FormatError("empty file", 1, path)
    ln, head = it[0]
    if len(head) != 3:
        raise FormatError("header must be 'r t k'", ln, path)
    r, t, k = _ints(head, ln, path, "header")
    if r < 1 or t < 1 or k < 0:
        raise FormatError("header values out of range", ln, path)
    if len(it) < 2:
        raise FormatError("missing weights line", ln + 1, path)
    ln, wt = it[1]
    if len(wt) != t:
        raise FormatError(f"expected {t} weights", ln, path)
    w = [parse_number(x, ln, path) for x in wt]
    w = tuple(Fraction(x) if isinstance(x, int) else x for x in w)
    rows = it[2:]
    want = max(k, 1)
    loop = None
    if len(rows) == want + 1 and rows[-1][1][0] == "iota":
        ln, toks = rows[-1]
        loop = _array_line(toks[1:], t, r, ln, path)
        rows = rows[:-1]
    if len(rows) != want:
        at = rows[want][0] if len(rows) > want else (rows[-1][0] + 1 if rows else it[1][0] + 1)
        raise FormatError(f"expected {want} array lines, found {len(rows)}", at, path)
    arrs = [_array_line(toks, t, r, ln, path) for ln, toks in rows]
    try:
        if k == 0:
            return StepKernel(w, arrs[0])
        vals = np.stack(arrs)
        if vals.dtype == object and (loop is None or loop.dtype == object):
            pass
        else:
            vals = vals.astype(float)
            loop = None if loop is None else loop.astype(float)
        return ColoredStepKernel(w, vals, loop)
    except ValueError as exc:
        raise FormatError(str(exc), rows[0][0], path) from None


def format_kernel(W) -> str:
    r, t = W.r, W.t
    if isinstance(W, StepKernel):
        out = [f"{r} {t} 0", " ".join(fmt_number(x) for x in W.weights)]
        out.append(" ".join(fmt_number(x) for x in np.asarray(W.values).ravel()))
        return "\n".join(out) + "\n"
    out = [f"{r} {t} {W.k}", " ".join(fmt_number(x) for x in W.weights)]
    for a in range(W.k):
        out.append(" ".join(fmt_number(x) for x in np.asarray(W.values[a]).ravel()))
    if W.loop is not None:
        out.append("iota " + " ".join(fmt_number(x) for x in np.asarray(W.loop).ravel()))
    return "\n".join(out) + "\n"


# -- real arrays and tensors --------------------------------------------------------------

def parse_array(text: str, path=None) -> RealArray:
    it = list(_lines(text))
    if not it:
        raise FormatError("empty file", 1, path)
    ln, head = it[0]
    if len(head) != 2:
        raise FormatError("header must be 'r s'", ln, path)
    r, s = _ints(head, ln, path, "header")
    if len(it) != 2:
        raise FormatError("expected exactly one value line", it[-1][0] if len(it) > 2 else ln + 1, path)
    ln, toks = it[1]
    return RealArray(_array_line(toks, s, r, ln, path))


def format_array(J: RealArray) -> str:
    a = np.asarray(J.entries)
    return f"{J.r} {J.s}\n" + " ".join(fmt_number(x) for x in a.ravel()) + "\n"


def parse_tensor(text: str, path=None) -> DensityTensor:
    it = list(_lines(text))
    if not it:
        raise FormatError("empty file", 1, path)
    ln, head = it[0]
    if len(head) != 3 or head[0] != "tensor":
        raise FormatError("header must be 'tensor r k'", ln, path)
    r, k = _ints(head[1:], ln, path, "header")
    p = len(proper_subsets(r))
    rho = {}
    mu = {phi: Fraction(0) for phi in itertools.product(range(k), repeat=p)}
    for ln, toks in it[1:]:
        if toks[0] == "rho":
            if len(toks) != k + 2:
                raise FormatError(f"rho line needs a level and {k} values", ln, path)
            s = _ints(toks[1:2], ln, path, "rho level")[0]
            if not 1 <= s < r or s in rho:
                raise FormatError(f"bad or repeated level {s}", ln, path)
            rho[s] = tuple(Fraction(parse_number(x, ln, path)) for x in toks[2:])
        elif toks[0] == "mu":
            if len(toks) != p + 2:
                raise FormatError(f"mu line needs {p} classes and a value", ln, path)
            phi = tuple(_ints(toks[1:-1], ln, path, "mu classes"))
            if any(not 0 <= c < k for c in phi):
                raise FormatError("class out of range", ln, path)
            mu[phi] = Fraction(parse_number(toks[-1], ln, path))
        else:
            raise FormatError(f"unknown line type {toks[0]!r}", ln, path)
    if sorted(rho) != list(range(1, r)):
        raise FormatError(f"need rho lines for levels 1..{r - 1}", it[-1][0], path)
    return DensityTensor(r, k, tuple(rho[s] for s in range(1, r)), mu)


def format_tensor(psi: DensityTensor) -> str:
    out = [f"tensor {psi.r} {psi.k}"]
    for s, row in enumerate(psi.rho, start=1):
        out.append(f"rho {s} " + " ".join(fmt_number(x) for x in row))
    for phi in sorted(psi.mu):
        if psi.mu[phi]:
            out.append("mu " + " ".join(str(c) for c in phi) + " " + fmt_number(psi.mu[phi]))
    return "\n".join(out) + "\n"


# -- files --------------------------------------------------------------------------------

_READERS = {"hypergraph": parse_hypergraph, "kernel": parse_kernel, "array": parse_array,
            "tensor": parse_tensor}


def read(kind: str, path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", None, str(path)) from None
    return _READERS[kind](text, str(path))


def write(obj, path) -> Path:
    path = Path(path)
    if isinstance(obj, (Hypergraph, ColoredHypergraph)):
        text = format_hypergraph(obj)
    elif isinstance(obj, (StepKernel, ColoredStepKernel)):
        text = format_kernel(obj)
    elif isinstance(obj, RealArray):
        text = format_array(obj)
    elif isinstance(obj, DensityTensor):
        text = format_tensor(obj)
    else:
        raise TypeError(f"no text format for {type(obj).__name__}")
    path.write_text(text)
    return path
