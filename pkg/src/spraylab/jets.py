"""Truncated multivariate Taylor (jet) arithmetic.

A `Jet` holds the Taylor coefficients of a scalar function of m chart variables
at a fixed center, truncated at total degree `order`. Coefficients are stored
densely in graded-lex order (degree first, then lexicographic on the exponent
tuple), so the space of order k-1 is literally a prefix of the space of order k
and truncation is a slice.

Throughout the package the m = 2n variables of a chart on the tangent bundle
are ordered x1..xn, y1..yn.

The finite-difference oracle `fd_partial` lives here as well. It never touches
jet coefficients: it evaluates the callable over plain floats with nested
central differences, one step per derivative level, and is kept deliberately
naive so it can serve as an independent cross-check of the jet pipeline.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, OrderError

# Value parts closer to zero than this cannot be divided by, square-rooted, etc.
VALUE_FLOOR = 1e-12


def _alphas(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    out: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        block = set()
        for combo in combinations_with_replacement(range(nvars), deg):
            a = [0] * nvars
            for v in combo:
                a[v] += 1
            block.add(tuple(a))
        out.extend(sorted(block))
    return tuple(out)


class JetSpace:
    """Coefficient bookkeeping for jets in `nvars` variables at a given order."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        self.nvars = nvars
        self.order = order
        self.alphas = _alphas(nvars, order)
        self.T = len(self.alphas)
        self.index = {a: i for i, a in enumerate(self.alphas)}
        arr = np.array(self.alphas, dtype=np.int64)
        self._deg = arr.sum(axis=1)
        # integer encoding of exponent tuples, unique for entries <= order
        base = order + 1
        self._enc = arr @ (base ** np.arange(nvars, dtype=np.int64))
        self._enc_sorted = np.sort(self._enc)
        self._enc_perm = np.argsort(self._enc)
        self._fact = np.array(
            [math.prod(math.factorial(e) for e in a) for a in self.alphas], dtype=float
        )
        self._mul_table = self._build_mul_table(arr)
        self._dmaps: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _locate(self, enc: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self._enc_sorted, enc)
        return self._enc_perm[pos]

    def _build_mul_table(self, arr: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ia, ib = np.nonzero(self._deg[:, None] + self._deg[None, :] <= self.order)
        ic = self._locate(self._enc[ia] + self._enc[ib])
        return ia, ib, ic

    def _dmap(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Maps coefficients of this space onto d/dv coefficients in the space
        one order down: (source indices, scale factors)."""
        try:
            return self._dmaps[v]
        except KeyError:
            lower = space(self.nvars, self.order - 1)
            step = (self.order + 1) ** v
            src = self._locate(lower._enc_unclipped(self) + step)
            scale = np.array([self.alphas[s][v] for s in src], dtype=float)
            self._dmaps[v] = (src, scale)
            return src, scale

    def _enc_unclipped(self, parent: "JetSpace") -> np.ndarray:
        # encodings of this (lower-order) space in the parent's base
        arr = np.array(self.alphas, dtype=np.int64)
        base = parent.order + 1
        return arr @ (base ** np.arange(self.nvars, dtype=np.int64))

    # -- constructors -------------------------------------------------------

    def constant(self, value: float, center: Sequence[float]) -> "Jet":
        coeffs = np.zeros(self.T)
        coeffs[0] = float(value)
        return Jet(self, tuple(center), coeffs)

    def variable(self, v: int, center: Sequence[float]) -> "Jet":
        if not 0 <= v < self.nvars:
            raise ValueError(f"variable index {v} out of range")
        coeffs = np.zeros(self.T)
        coeffs[0] = float(center[v])
        if self.order >= 1:
            e = tuple(1 if k == v else 0 for k in range(self.nvars))
            coeffs[self.index[e]] = 1.0
        return Jet(self, tuple(center), coeffs)

    def from_partials(self, center: Sequence[float], partials: dict) -> "Jet":
        """Assemble a jet from {multi-index: partial derivative value}."""
        coeffs = np.zeros(self.T)
        for a, val in partials.items():
            i = self.index[tuple(a)]
            coeffs[i] = val / self._fact[i]
        return Jet(self, tuple(center), coeffs)


@lru_cache(maxsize=None)
def space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


def _mul_coeffs(sp: JetSpace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ia, ib, ic = sp._mul_table
    return np.bincount(ic, weights=a[ia] * b[ib], minlength=sp.T)


class Jet:
    __slots__ = ("space", "center", "coeffs")

    def __init__(self, sp: JetSpace, center: tuple, coeffs: np.ndarray):
        self.space = sp
        self.center = center
        self.coeffs = coeffs

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, value={self.value:.6g})"

    # -- plumbing -----------------------------------------------------------

    def truncated(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise OrderError(f"cannot extend a jet of order {self.order} to {order}")
        lower = space(self.space.nvars, order)
        return Jet(lower, self.center, self.coeffs[: lower.T].copy())

    def _pair(self, other: "Jet") -> tuple["Jet", "Jet"]:
        if self.space.nvars != other.space.nvars:
            raise ValueError("jets live over different variable sets")
        if self.center != other.center:
            raise ValueError("jets have different centers")
        k = min(self.order, other.order)
        return self.truncated(k), other.truncated(k)

    def _const(self, value: float) -> "Jet":
        return self.space.constant(value, self.center)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._pair(other)
            return Jet(a.space, a.center, a.coeffs + b.coeffs)
        c = self.coeffs.copy()
        c[0] += float(other)
        return Jet(self.space, self.center, c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, self.center, -self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._pair(other)
            return Jet(a.space, a.center, _mul_coeffs(a.space, a.coeffs, b.coeffs))
        return Jet(self.space, self.center, self.coeffs * float(other))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        v = self.value
        if abs(v) <= VALUE_FLOOR:
            raise DomainError(f"division by jet with value part {v!r}")
        # 1/u = (1/v) * sum_k (-e)^k with e = u/v - 1 nilpotent; Horner form.
        e = Jet(self.space, self.center, self.coeffs / v)
        e.coeffs[0] -= 1.0
        s = self._const(1.0)
        for _ in range(self.order):
            s = 1.0 - e * s
        return s * (1.0 / v)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            a, b = self._pair(other)
            return a * b.reciprocal()
        return self * (1.0 / float(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, k):
        if isinstance(k, int) or (isinstance(k, float) and k.is_integer()):
            return powi(self, int(k))
        return pow_real(self, float(k))

    # -- composition with scalar series --------------------------------------

    def _compose(self, c: Sequence[float]) -> "Jet":
        """Evaluate sum_k c[k] * (u - u0)^k by Horner; c[k] = f^(k)(u0)/k!."""
        h = Jet(self.space, self.center, self.coeffs.copy())
        h.coeffs[0] = 0.0
        out = self._const(c[self.order])
        for k in range(self.order - 1, -1, -1):
            out = out * h + c[k]
        return out

    def exp(self) -> "Jet":
        e0 = math.exp(self.value)
        c = [e0]
        for k in range(1, self.order + 1):
            c.append(c[-1] / k)
        return self._compose(c)

    def ln(self) -> "Jet":
        v = self.value
        if v <= VALUE_FLOOR:
            raise DomainError(f"ln of jet with value part {v!r}")
        c = [math.log(v)]
        for k in range(1, self.order + 1):
            c.append((-1.0) ** (k - 1) / (k * v**k))
        return self._compose(c)

    def sqrt(self) -> "Jet":
        v = self.value
        if v <= VALUE_FLOOR:
            raise DomainError(f"sqrt of jet with value part {v!r}")
        c = [math.sqrt(v)]
        for k in range(1, self.order + 1):
            c.append(c[-1] * (0.5 - (k - 1)) / (k * v))
        return self._compose(c)

    def sin(self) -> "Jet":
        v = self.value
        c = [math.sin(v + 0.5 * math.pi * k) / math.factorial(k) for k in range(self.order + 1)]
        return self._compose(c)

    def cos(self) -> "Jet":
        v = self.value
        c = [math.cos(v + 0.5 * math.pi * k) / math.factorial(k) for k in range(self.order + 1)]
        return self._compose(c)

    def atan(self) -> "Jet":
        v = self.value
        # Taylor coefficients of atan at v: integrate the reciprocal of the
        # quadratic (1+v^2) + 2v t + t^2 term by term.
        q0, q1, q2 = 1.0 + v * v, 2.0 * v, 1.0
        r = [1.0 / q0]
        for k in range(1, self.order):
            acc = q1 * r[k - 1] + (q2 * r[k - 2] if k >= 2 else 0.0)
            r.append(-acc / q0)
        c = [math.atan(v)] + [r[k - 1] / k for k in range(1, self.order + 1)]
        return self._compose(c)

    def absolute(self) -> "Jet":
        v = self.value
        if abs(v) <= VALUE_FLOOR:
            raise DomainError("abs of jet with value part at 0 is not differentiable")
        return self if v > 0 else -self

    # -- derivatives ---------------------------------------------------------

    def diff(self, v: int) -> "Jet":
        if self.order == 0:
            raise OrderError("jet order exhausted: cannot differentiate an order-0 jet")
        src, scale = self.space._dmap(v)
        lower = space(self.space.nvars, self.order - 1)
        return Jet(lower, self.center, self.coeffs[src] * scale)

    def dx(self, i: int) -> "Jet":
        """d/dx^i, with variables ordered x1..xn, y1..yn."""
        return self.diff(i)

    def dy(self, i: int) -> "Jet":
        """d/dy^i, with variables ordered x1..xn, y1..yn."""
        return self.diff(self.space.nvars // 2 + i)

    def partial(self, alpha: Sequence[int]) -> float:
        a = tuple(alpha)
        if sum(a) > self.order:
            raise OrderError(f"partial {a} exceeds jet order {self.order}")
        i = self.space.index[a]
        return float(self.coeffs[i] * self.space._fact[i])


# -- generic numeric dispatchers ----------------------------------------------
#
# Expression evaluation is written once against these; they route floats
# through math, numpy arrays through numpy, and any object with the matching
# method (Jet, the oracle's Taylor2) through that method.


def exp(u):
    if isinstance(u, np.ndarray):
        return np.exp(u)
    if hasattr(u, "exp"):
        return u.exp()
    return math.exp(u)


def ln(u):
    if isinstance(u, np.ndarray):
        return np.log(u)
    if hasattr(u, "ln"):
        return u.ln()
    if u <= 0:
        raise DomainError(f"ln({u!r})")
    return math.log(u)


def sqrt(u):
    if isinstance(u, np.ndarray):
        return np.sqrt(u)
    if hasattr(u, "sqrt"):
        return u.sqrt()
    if u <= 0:
        raise DomainError(f"sqrt({u!r})")
    return math.sqrt(u)


def sin(u):
    if isinstance(u, np.ndarray):
        return np.sin(u)
    if hasattr(u, "sin"):
        return u.sin()
    return math.sin(u)


def cos(u):
    if isinstance(u, np.ndarray):
        return np.cos(u)
    if hasattr(u, "cos"):
        return u.cos()
    return math.cos(u)


def atan(u):
    if isinstance(u, np.ndarray):
        return np.arctan(u)
    if hasattr(u, "atan"):
        return u.atan()
    return math.atan(u)


def absval(u):
    if isinstance(u, np.ndarray):
        return np.abs(u)
    if hasattr(u, "absolute"):
        return u.absolute()
    return abs(u)


def powi(u, k: int):
    """Integer power by repeated squaring; works at zero value parts for k >= 0."""
    if isinstance(u, (int, float)):
        return float(u) ** k
    if isinstance(u, np.ndarray):
        return u**k
    if k < 0:
        return powi(u.reciprocal(), -k)
    if k == 0:
        return u * 0.0 + 1.0
    acc = None
    base = u
    while k:
        if k & 1:
            acc = base if acc is None else acc * base
        k >>= 1
        if k:
            base = base * base
    return acc


def pow_real(u, p: float):
    """Real power u**p for positive value parts (binomial series)."""
    if isinstance(u, (int, float)):
        if u <= 0:
            raise DomainError(f"{u!r} ** {p}")
        return u**p
    if isinstance(u, np.ndarray):
        return u**p
    if isinstance(u, Jet):
        v = u.value
        if v <= VALUE_FLOOR:
            raise DomainError(f"power {p} of jet with value part {v!r}")
        c = [v**p]
        for k in range(1, u.order + 1):
            c.append(c[-1] * (p - (k - 1)) / (k * v))
        return u._compose(c)
    return exp(p * ln(u))


# -- the public operations -----------------------------------------------------


def lift(fn: Callable, p: Sequence[float], order: int) -> Jet:
    """Evaluate `fn` over variable jets centered at p; returns the jet of fn."""
    sp = space(len(p), order)
    env = [sp.variable(v, p) for v in range(len(p))]
    out = fn(env)
    if not isinstance(out, Jet):  # constant expressions
        out = sp.constant(float(out), p)
    return out


def partial(fn: Callable, p: Sequence[float], alpha: Sequence[int]) -> float:
    """Exact partial derivative d^alpha fn at p via a lift of order |alpha|."""
    return lift(fn, p, sum(alpha)).partial(alpha)


def _eval_float(fn: Callable, p: Sequence[float]) -> float:
    try:
        out = fn(list(map(float, p)))
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise DomainError(f"float evaluation failed at {tuple(p)}: {exc}") from exc
    out = float(out)
    if not math.isfinite(out):
        raise DomainError(f"non-finite value at {tuple(p)}")
    return out


def fd_partial(fn: Callable, p: Sequence[float], alpha: Sequence[int], h: float = 1e-3) -> float:
    """Nested central-difference estimate of d^alpha fn at p.

    One central difference per derivative level with a fixed step, no
    extrapolation: the error is O(h^2) per level. |alpha| <= 4 is the
    supported range.
    """
    a = list(alpha)
    total = sum(a)
    if total > 4:
        raise ValueError("fd_partial supports |alpha| <= 4")
    if total == 0:
        return _eval_float(fn, p)
    v = next(i for i, e in enumerate(a) if e > 0)
    a[v] -= 1
    pp = list(p)
    pm = list(p)
    pp[v] += h
    pm[v] -= h
    return (fd_partial(fn, pp, a, h) - fd_partial(fn, pm, a, h)) / (2.0 * h)


def euler_check(fn: Callable, p: Sequence[float], degree: int, group: str = "y") -> float:
    """Residual |sum_v v * d fn/dv - degree * fn| at p, over the x- or y-block.

    Zero (to roundoff) exactly when fn is positively homogeneous of the stated
    degree in the chosen variable group.
    """
    m = len(p)
    n = m // 2
    if group == "x":
        idx = range(0, n)
    elif group == "y":
        idx = range(n, m)
    else:
        idx = group  # explicit variable indices
    jet = lift(fn, p, 1)
    acc = 0.0
    for v in idx:
        a = tuple(1 if k == v else 0 for k in range(m))
        acc += p[v] * jet.partial(a)
    return abs(acc - degree * jet.value)


def jet_matrix_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of a square matrix of jets.

    The value part is inverted by LAPACK (partial pivoting); derivative parts
    follow from (M^-1)' = -M^-1 M' M^-1, applied order by order in Horner form:
    W <- W0 - W0 dM W gains one valid order per pass.
    """
    n = m.shape[0]
    one = m[0, 0]
    order = min(int(m[i, j].order) for i in range(n) for j in range(n))
    jm = np.empty((n, n), dtype=object)
    vals = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            jm[i, j] = m[i, j].truncated(order)
            vals[i, j] = jm[i, j].value
    try:
        w0 = np.linalg.inv(vals)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"matrix value part is singular: {exc}") from exc

    sp = jm[0, 0].space
    center = jm[0, 0].center

    def const_mat(a: np.ndarray) -> np.ndarray:
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                out[i, j] = sp.constant(a[i, j], center)
        return out

    dm = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            d = Jet(sp, center, jm[i, j].coeffs.copy())
            d.coeffs[0] -= vals[i, j]
            dm[i, j] = d

    w0j = const_mat(w0)
    w = const_mat(w0)
    for _ in range(order):
        w = w0j - (w0j @ dm) @ w
    return w
