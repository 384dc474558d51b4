"""Tower numbers exp^(h)(x) and the explicit sample-complexity bounds.

A ``Tower`` stores a positive value as ``exp`` iterated ``height`` times on
an mpmath float.  The canonical form keeps the argument in (LIMIT, e^LIMIT]
whenever height >= 1, so towers compare lexicographically by
(height, argument).  Values below 1 are kept at height 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from . import limits

mpmath.mp.dps = 30
LIMIT = mpmath.mpf(10) ** 4
TOP = mpmath.exp(LIMIT)


@dataclass(frozen=True)
class Tower:
    height: int
    arg: mpmath.mpf

    def __post_init__(self):
        h, x = int(self.height), mpmath.mpf(self.arg)
        if h < 0:
            raise ValueError("negative tower height")
        while h > 0 and x <= LIMIT:
            x = mpmath.exp(x)
            h -= 1
        while x > TOP:
            x = mpmath.log(x)
            h += 1
        object.__setattr__(self, "height", h)
        object.__setattr__(self, "arg", x)

    @classmethod
    def of(cls, x) -> "Tower":
        if isinstance(x, Tower):
            return x
        if isinstance(x, Fraction):
            x = mpmath.mpf(x.numerator) / x.denominator
        return cls(0, mpmath.mpf(x))

    def key(self):
        return (self.height, self.arg)

    def __lt__(self, other):
        return self.key() < Tower.of(other).key()

    def __le__(self, other):
        return self.key() <= Tower.of(other).key()

    def __gt__(self, other):
        return Tower.of(other) < self

    def __ge__(self, other):
        return Tower.of(other) <= self

    def __eq__(self, other):
        try:
            return self.key() == Tower.of(other).key()
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash(self.key())

    def ln(self) -> "Tower":
        if self.height == 0:
            if self.arg <= 0:
                raise ValueError("log of a non-positive value")
            return Tower(0, mpmath.log(self.arg))
        return Tower(self.height - 1, self.arg)

    def exp(self, times: int = 1) -> "Tower":
        return Tower(self.height + times, self.arg)

    def __mul__(self, other):
        other = Tower.of(other)
        if self.height == 0 and other.height == 0:
            return Tower(0, self.arg * other.arg)
        return (self.ln() + other.ln()).exp()

    __rmul__ = __mul__

    def __add__(self, other):
        other = Tower.of(other)
        a, b = (self, other) if self >= other else (other, self)
        if a.height == 0:
            return Tower(0, a.arg + b.arg)
        if a.height == 1 and b.height <= 1:
            la = a.arg
            lb = b.ln().arg if b.height == 1 else (mpmath.log(b.arg) if b.arg > 0 else None)
            if lb is None:
                return Tower(1, la + mpmath.log1p(b.arg / mpmath.exp(la)) if b.arg else la)
            return Tower(1, la + mpmath.log1p(mpmath.exp(lb - la)))
        # the smaller summand changes the value by a relative amount below exp(-e^LIMIT)
        return a

    __radd__ = __add__

    def __pow__(self, p):
        p = mpmath.mpf(p) if not isinstance(p, Tower) else p
        if isinstance(p, Tower):
            return (p * self.ln()).exp()
        if self.height == 0:
            return Tower(0, self.arg**p)
        return (self.ln() * Tower.of(p)).exp()

    def exact_int(self, max_digits: int = 400):
        """ceil of the value when it is printable, else None."""
        if self.height == 0 and self.arg < mpmath.mpf(10) ** max_digits:
            with mpmath.workdps(max_digits + 20):
                return int(mpmath.ceil(self.arg))
        return None

    def log10(self):
        """log10 of the value as a Tower (useful for display)."""
        return self.ln() * Tower.of(1 / mpmath.log(10))

    def describe(self) -> str:
        if self.height == 0:
            return mpmath.nstr(self.arg, 12)
        return f"exp^({self.height})({mpmath.nstr(self.arg, 12)})"

    def __float__(self):
        if self.height == 0:
            return float(self.arg)
        return math.inf

    def __repr__(self):
        return f"Tower({self.describe()})"


def tower(height: int, x) -> Tower:
    """exp^(height)(x); height 0 is the identity."""
    return Tower.of(x).exp(height) if height else Tower.of(x)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def pi_bound(r, delta, q0, t, k) -> Fraction:
    """delta / (4k (kt)^(q0^r) q0^r), exact for rational or decimal input."""
    d = _frac(delta)
    q0, t, k, r = int(q0), int(t), int(k), int(r)
    return d / (4 * k * (k * t) ** (q0**r) * q0**r)


def _inv(x) -> Tower:
    """1/x for a positive value (Fraction, float or Tower assumed small)."""
    if isinstance(x, Fraction):
        return Tower.of(Fraction(x.denominator, x.numerator))
    return Tower.of(1 / mpmath.mpf(x))


def t_reg(r, k, eps, t) -> Tower:
    """(2t)^((rk+1)^(4k^2/eps^2)); eps may be given by its reciprocal as a Tower."""
    inv_eps = eps if isinstance(eps, _Reciprocal) else _Reciprocal(_inv(_frac(eps)))
    T = Tower.of(t)
    expo = inv_eps.value * inv_eps.value * Tower.of(4 * k * k)  # 4k^2/eps^2
    inner = expo * Tower.of(mpmath.log(r * k + 1))  # ln of (rk+1)^(...)
    ln2t = (T * 2).ln()
    # (2t)^X = exp(X ln(2t)) and X = exp(inner)
    return (inner.exp() * ln2t).exp()


@dataclass(frozen=True)
class _Reciprocal:
    """A small positive quantity represented by its reciprocal."""

    value: Tower


def q_cut(r, k, eps, t, c=None) -> Tower:
    """c (1/eps)^(2^(2r)) t^(2^(2r)) k^3 r^2."""
    c = limits.current().c_cut if c is None else c
    inv = eps.value if isinstance(eps, _Reciprocal) else _inv(_frac(eps))
    e = 2 ** (2 * r)
    return (inv * Tower.of(t)) ** e * Tower.of(mpmath.mpf(c) * k**3 * r**2)


def q_tv(r, delta, q0, t, k, c=None) -> Tower:
    """exp^(4(r-1))(c_r (q0^r/delta)^3 (kt)^(6 q0^r))."""
    c = limits.current().c_tv if c is None else c
    d = _frac(delta)
    base = Tower.of(mpmath.mpf(c)) * Tower.of(Fraction(q0**r) / d) ** 3 * Tower.of(k * t) ** (6 * q0**r)
    return base.exp(4 * (r - 1)) if r > 1 else base


def q_tv_r1(delta, q0, t, k) -> Tower:
    """Explicit r = 1 value (t + ln 2 - ln delta) 3 q0^(2k+2) / (4 delta^2)."""
    d = mpmath.mpf(_frac(delta).numerator) / _frac(delta).denominator
    return Tower.of((t + mpmath.log(2) - mpmath.log(d)) * 3 * mpmath.mpf(q0) ** (2 * k + 2) / (4 * d * d))


def q_f(r, eps, q_g, c=None) -> Tower:
    """exp^(4(r-1)+1)(c q_g / eps)."""
    c = limits.current().c_main if c is None else c
    return (Tower.of(mpmath.mpf(c) * q_g) * _inv(_frac(eps))).exp(4 * (r - 1) + 1)


def q_linear(q_g_half, c=None) -> Tower:
    """exp^(3)(c q_g(eps/2)^2)."""
    c = limits.current().c_linear if c is None else c
    return Tower.of(mpmath.mpf(c) * mpmath.mpf(q_g_half) ** 2).exp(3)


@dataclass
class Bound:
    name: str
    height: int  # number of exponentials in the defining expression
    value: object  # Tower or Fraction
    note: str = ""

    def as_dict(self):
        v = self.value
        if isinstance(v, Fraction):
            return {"name": self.name, "height": self.height, "exact": str(v), "float": float(v),
                    "note": self.note}
        ex = v.exact_int()
        return {"name": self.name, "height": self.height, "exact": None if ex is None else str(ex),
                "tower_height": v.height, "tower_arg": mpmath.nstr(v.arg, 15),
                "descriptor": v.describe(), "note": self.note}


def bound_calculator(r, k, t, eps, delta, q0, q_g=None, c_cut=None, c_tv=None, c_main=None, c_linear=None):
    """All explicit bounds for the given parameters.

    ``q_g`` defaults to q0.  Constants left unspecified by the source bounds
    default to the configured values (1) and are labelled in each note.
    """
    q_g = q0 if q_g is None else q_g
    lab = "unspecified constant, set to c={}"
    lim = limits.current()
    D = pi_bound(r, delta, q0, t, k)
    t2 = t_reg(r, t * k, D, 1)
    # (D / (t2^r t))^(2^r) 2^(-r-1), carried as its reciprocal
    inv_small = (Tower.of(Fraction(t) / D) * t2 ** r) ** (2**r) * Tower.of(2 ** (r + 1))
    t1 = t_reg(r, t, _Reciprocal(inv_small), t2)
    out = [
        Bound("t_reg", 2, t_reg(r, k, eps, t), "(2t)^((rk+1)^(4k^2/eps^2))"),
        Bound("q_cut", 0, q_cut(r, k, eps, t, c_cut), lab.format(c_cut if c_cut is not None else lim.c_cut)),
        Bound("Delta", 0, D, "delta / (4k (kt)^(q0^r) q0^r)"),
        Bound("t2", 2, t2, "t_reg(r, tk, Delta, 1)"),
        Bound("t1", 2, t1, "t_reg(r, t, (Delta/(t2^r t))^(2^r) 2^(-r-1), t2)"),
        Bound("q_tv", 4 * (r - 1), q_tv(r, delta, q0, t, k, c_tv),
              lab.format(c_tv if c_tv is not None else lim.c_tv)),
        Bound("q_f", 4 * (r - 1) + 1, q_f(r, eps, q_g, c_main),
              lab.format(c_main if c_main is not None else lim.c_main)),
        Bound("q_linear", 3, q_linear(q_g, c_linear),
              lab.format(c_linear if c_linear is not None else lim.c_linear)),
    ]
    if r == 1:
        out.append(Bound("q_tv_r1", 0, q_tv_r1(delta, q0, t, k), "explicit base case"))
    return {b.name: b for b in out}
