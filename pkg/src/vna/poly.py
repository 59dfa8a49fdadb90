"""Sparse multivariate complex (Laurent) polynomials.

A :class:`Poly` is an immutable map from integer exponent vectors to complex
coefficients.  Evaluation is vectorized over batches of points, which is what
the fiber solver and the path tracker need.  :class:`PolyMap` bundles a tuple
of polynomials in the same variables and caches the Jacobian entries.
"""

from __future__ import annotations

import math
import re
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Poly",
    "PolyMap",
    "PolySyntaxError",
    "parse_poly",
    "parse_polymap",
    "format_poly",
    "add",
    "sub",
    "mul",
    "scale",
    "power",
    "differentiate",
    "compose",
    "jacobian_det",
    "variable",
    "constant",
]

PRUNE_REL = 1e-14


class PolySyntaxError(ValueError):
    """Raised on malformed polynomial text; ``pos`` is the offending offset."""

    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}" + (f" in {text!r}" if text else ""))


class Poly:
    """Immutable sparse polynomial in ``dim`` complex variables.

    Terms are stored in lexicographic order of the exponent vectors.  Zero
    coefficients are never stored.
    """

    __slots__ = ("dim", "laurent", "_terms", "_exps", "_coeffs")

    def __init__(self, dim: int, terms: Mapping[tuple, complex] | Iterable = (), laurent: bool = False):
        if dim < 1:
            raise ValueError("dim must be positive")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple, complex] = {}
        for e, c in items:
            e = tuple(int(x) for x in e)
            if len(e) != dim:
                raise ValueError(f"exponent {e} has length {len(e)}, expected {dim}")
            if not laurent and min(e) < 0:
                raise ValueError(f"negative exponent {e} requires the laurent flag")
            acc[e] = acc.get(e, 0j) + complex(c)
        self.dim = dim
        self.laurent = bool(laurent)
        self._terms = {e: acc[e] for e in sorted(acc) if acc[e] != 0}
        if self._terms:
            self._exps = np.array(list(self._terms), dtype=np.int64).reshape(-1, dim)
            self._coeffs = np.array(list(self._terms.values()), dtype=complex)
        else:
            self._exps = np.zeros((0, dim), dtype=np.int64)
            self._coeffs = np.zeros(0, dtype=complex)

    @property
    def terms(self) -> dict[tuple, complex]:
        return dict(self._terms)

    @property
    def exps(self) -> np.ndarray:
        return self._exps

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Largest total degree of a term (``-1`` for the zero polynomial)."""
        if self.is_zero():
            return -1
        return int(self._exps.sum(axis=1).max())

    def min_degree(self) -> int:
        if self.is_zero():
            return 0
        return int(self._exps.sum(axis=1).min())

    def degree_in(self, var: int) -> int:
        if self.is_zero():
            return -1
        return int(self._exps[:, var].max())

    def variables(self) -> set[int]:
        """Indices of variables that actually occur."""
        return {k for k in range(self.dim) if np.any(self._exps[:, k] != 0)}

    def __call__(self, z):
        return evaluate(self, z)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.dim, tuple(self._terms.items())))

    def __add__(self, other):
        return add(self, _coerce(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other, self))

    def __rsub__(self, other):
        return sub(_coerce(other, self), self)

    def __mul__(self, other):
        if isinstance(other, Poly):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1)

    def __pow__(self, k: int):
        return power(self, k)

    def __repr__(self):
        return f"Poly({format_poly(self)!r}, dim={self.dim})"

    def __str__(self):
        return format_poly(self)


def _coerce(x, like: Poly) -> Poly:
    if isinstance(x, Poly):
        return x
    return constant(like.dim, x, laurent=like.laurent)


def constant(dim: int, c: complex, laurent: bool = False) -> Poly:
    return Poly(dim, {(0,) * dim: c}, laurent=laurent)


def variable(dim: int, k: int, laurent: bool = False) -> Poly:
    e = [0] * dim
    e[k] = 1
    return Poly(dim, {tuple(e): 1.0}, laurent=laurent)


# ----------------------------------------------------------------------------
# evaluation

def evaluate(p: Poly, z) -> complex | np.ndarray:
    """Evaluate ``p`` at one point (shape ``(dim,)``) or a batch ``(n, dim)``."""
    Z = np.asarray(z, dtype=complex)
    single = Z.ndim == 1
    Z = np.atleast_2d(Z)
    if Z.shape[1] != p.dim:
        raise ValueError(f"point has {Z.shape[1]} coordinates, polynomial has {p.dim} variables")
    if p.is_zero():
        out = np.zeros(Z.shape[0], dtype=complex)
        return complex(out[0]) if single else out
    if p.laurent and np.any(p._exps < 0):
        neg = np.any(p._exps < 0, axis=0)
        if np.any(Z[:, neg] == 0):
            raise ZeroDivisionError("zero coordinate with a negative exponent")
    out = _monomials(Z, p._exps) @ p._coeffs
    return complex(out[0]) if single else out


def _monomials(Z: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """Matrix of monomial values, shape ``(n_points, n_terms)``."""
    n, d = Z.shape
    M = np.ones((n, exps.shape[0]), dtype=complex)
    for k in range(d):
        col = exps[:, k]
        if not np.any(col):
            continue
        zk = Z[:, k]
        powers = {int(e): zk ** int(e) if e > 0 else (1.0 / zk) ** int(-e) for e in np.unique(col) if e}
        for j, e in enumerate(col):
            if e:
                M[:, j] *= powers[int(e)]
    return M


# ----------------------------------------------------------------------------
# arithmetic

def _prune(dim: int, acc: dict, laurent: bool) -> Poly:
    if not acc:
        return Poly(dim, {}, laurent=laurent)
    big = max(abs(c) for c in acc.values())
    keep = {e: c for e, c in acc.items() if abs(c) >= PRUNE_REL * big}
    return Poly(dim, keep, laurent=laurent)


def _check_dims(p: Poly, q: Poly):
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")


def add(p: Poly, q: Poly) -> Poly:
    _check_dims(p, q)
    acc = dict(p._terms)
    for e, c in q._terms.items():
        acc[e] = acc.get(e, 0j) + c
    return Poly(p.dim, {e: c for e, c in acc.items() if c != 0}, laurent=p.laurent or q.laurent)


def sub(p: Poly, q: Poly) -> Poly:
    return add(p, scale(q, -1))


def scale(p: Poly, c: complex) -> Poly:
    c = complex(c)
    return Poly(p.dim, {e: c * v for e, v in p._terms.items()}, laurent=p.laurent)


def mul(p: Poly, q: Poly) -> Poly:
    _check_dims(p, q)
    acc: dict[tuple, complex] = {}
    for e1, c1 in p._terms.items():
        for e2, c2 in q._terms.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            acc[e] = acc.get(e, 0j) + c1 * c2
    return _prune(p.dim, acc, p.laurent or q.laurent)


def power(p: Poly, k: int) -> Poly:
    if k < 0:
        if len(p._terms) != 1:
            raise ValueError("negative powers are only defined for monomials")
        (e, c), = p._terms.items()
        return Poly(p.dim, {tuple(k * x for x in e): c ** k}, laurent=True)
    out = constant(p.dim, 1.0, laurent=p.laurent)
    base = p
    while k:
        if k & 1:
            out = mul(out, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return out


def differentiate(p: Poly, var: int) -> Poly:
    if not 0 <= var < p.dim:
        raise ValueError(f"variable index {var} out of range for dim {p.dim}")
    acc = {}
    for e, c in p._terms.items():
        if e[var] != 0:
            f = list(e)
            f[var] -= 1
            acc[tuple(f)] = c * e[var]
    return Poly(p.dim, acc, laurent=p.laurent)


def compose(p: Poly, maps: Sequence[Poly]) -> Poly:
    """Substitute ``maps[k]`` for variable ``k`` of ``p``."""
    if len(maps) != p.dim:
        raise ValueError(f"need {p.dim} substitutions, got {len(maps)}")
    dim = maps[0].dim
    for q in maps:
        if q.dim != dim:
            raise ValueError("substituted polynomials must share a dimension")
    laurent = any(q.laurent for q in maps) or p.laurent
    acc: dict[tuple, complex] = {}
    cache: dict[tuple[int, int], Poly] = {}
    for e, c in p._terms.items():
        term = constant(dim, c, laurent=laurent)
        for k, ek in enumerate(e):
            if ek == 0:
                continue
            if (k, ek) not in cache:
                cache[(k, ek)] = power(maps[k], ek)
            term = mul(term, cache[(k, ek)])
        for f, v in term._terms.items():
            acc[f] = acc.get(f, 0j) + v
    return _prune(dim, acc, laurent)


# ----------------------------------------------------------------------------
# maps

class PolyMap:
    """Ordered tuple of polynomials sharing ``dim_in`` variables."""

    __slots__ = ("components", "dim_in", "_jac")

    def __init__(self, components: Sequence[Poly]):
        comps = tuple(components)
        if not comps:
            raise ValueError("a PolyMap needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError(f"components have different dimensions: {sorted(dims)}")
        self.components = comps
        self.dim_in = comps[0].dim
        self._jac = None

    @property
    def dim_out(self) -> int:
        return len(self.components)

    @property
    def is_square(self) -> bool:
        return self.dim_out == self.dim_in

    @property
    def laurent(self) -> bool:
        return any(c.laurent for c in self.components)

    def degree(self) -> int:
        return max(c.degree() for c in self.components)

    def __call__(self, z):
        Z = np.asarray(z, dtype=complex)
        vals = [evaluate(c, Z) for c in self.components]
        if Z.ndim == 1:
            return np.array(vals, dtype=complex)
        return np.stack(vals, axis=-1)

    def jacobian_polys(self) -> list[list[Poly]]:
        if self._jac is None:
            self._jac = [[differentiate(c, k) for k in range(self.dim_in)] for c in self.components]
        return self._jac

    def jacobian(self, z) -> np.ndarray:
        """Jacobian matrix at one point ``(dout, din)`` or batch ``(n, dout, din)``."""
        Z = np.asarray(z, dtype=complex)
        single = Z.ndim == 1
        Z = np.atleast_2d(Z)
        J = np.empty((Z.shape[0], self.dim_out, self.dim_in), dtype=complex)
        for i, row in enumerate(self.jacobian_polys()):
            for k, q in enumerate(row):
                J[:, i, k] = evaluate(q, Z)
        return J[0] if single else J

    def __eq__(self, other):
        return isinstance(other, PolyMap) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return "PolyMap([" + ", ".join(repr(format_poly(c)) for c in self.components) + "])"


def jacobian_det(F: PolyMap) -> Poly:
    """Symbolic determinant of the Jacobian matrix (Laplace expansion)."""
    if not F.is_square:
        raise ValueError(f"Jacobian determinant needs a square map, got {F.dim_out}x{F.dim_in}")
    return _det([row[:] for row in F.jacobian_polys()], F.dim_in)


def _det(rows: list[list[Poly]], dim: int) -> Poly:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = Poly(dim, {}, laurent=any(p.laurent for r in rows for p in r))
    for j in range(n):
        if rows[0][j].is_zero():
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = mul(rows[0][j], _det(minor, dim))
        total = add(total, term) if j % 2 == 0 else sub(total, term)
    return total


# ----------------------------------------------------------------------------
# text format

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i)?"
    r"|(?P<var>z[1-9]?)"
    r"|(?P<i>i)"
    r"|(?P<op>[-+*^()]))"
)


def _tokenize(text: str):
    pos = 0
    toks = []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolySyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start() + (len(m.group(0)) - len(m.group(0).lstrip()))
        if m.group("num") is not None:
            val = float(m.group("num"))
            toks.append(("num", val * 1j if m.group("imag") else complex(val), start))
        elif m.group("var") is not None:
            toks.append(("var", m.group("var"), start))
        elif m.group("i") is not None:
            toks.append(("num", 1j, start))
        else:
            toks.append(("op", m.group("op"), start))
        pos = m.end()
    toks.append(("end", None, len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, dim: int, laurent: bool):
        self.text = text
        self.dim = dim
        self.laurent = laurent
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise PolySyntaxError(msg, tok[2], self.text)

    def parse(self) -> Poly:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            tok = self.peek()
            if tok[0] in ("num", "var") or tok[1] == "(":
                self.fail("implicit multiplication is not allowed; use '*'")
            self.fail(f"unexpected token {tok[1]!r}")
        return p

    def expr(self) -> Poly:
        p = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            q = self.term()
            p = add(p, q) if op == "+" else sub(p, q)
        return p

    def term(self) -> Poly:
        p = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            p = mul(p, self.unary())
        return p

    def unary(self) -> Poly:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            p = self.unary()
            return scale(p, -1) if tok[1] == "-" else p
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            sign = 1
            tok = self.peek()
            if tok[0] == "op" and tok[1] in "+-":
                self.take()
                sign = -1 if tok[1] == "-" else 1
            tok = self.take()
            if tok[0] != "num" or tok[1].imag != 0 or tok[1].real != int(tok[1].real) or "." in self._lexeme(tok):
                self.fail("exponent must be an integer", tok)
            k = sign * int(tok[1].real)
            if k < 0:
                if not self.laurent:
                    self.fail("negative exponent requires the laurent flag", tok)
                if len(base.terms) != 1:
                    self.fail("negative exponent applies only to a monomial", tok)
            return power(base, k)
        return base

    def _lexeme(self, tok):
        start = tok[2]
        nxt = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
        return self.text[start:nxt].strip()

    def atom(self) -> Poly:
        tok = self.take()
        kind, val, pos = tok
        if kind == "num":
            return constant(self.dim, val, laurent=self.laurent)
        if kind == "var":
            if val == "z":
                if self.dim != 1:
                    raise PolySyntaxError("bare 'z' is only allowed when dim=1", pos, self.text)
                k = 1
            else:
                k = int(val[1:])
            if k > self.dim:
                raise PolySyntaxError(f"variable {val} exceeds dim {self.dim}", pos, self.text)
            return variable(self.dim, k - 1, laurent=self.laurent)
        if kind == "op" and val == "(":
            p = self.expr()
            close = self.take()
            if close[1] != ")":
                self.fail("expected ')'", close)
            return p
        self.fail(f"unexpected token {val!r}" if kind != "end" else "unexpected end of input", tok)


def parse_poly(text: str, dim: int, laurent: bool = False) -> Poly:
    """Parse polynomial text such as ``"z1^2 + (1+2i)*z2"``.

    Variables are ``z1``..``z9`` (``z`` alone when ``dim == 1``), ``*`` is
    mandatory between factors, ``^`` takes an integer exponent.
    """
    if not 1 <= dim <= 9:
        raise ValueError("dim must be between 1 and 9")
    p = _Parser(text, dim, laurent).parse()
    return Poly(dim, p.terms, laurent=laurent)


def parse_polymap(texts: Sequence[str], dim: int | None = None, laurent: bool | None = None) -> PolyMap:
    """Parse a list of component strings.

    ``dim`` defaults to the larger of the component count and the highest
    variable index used.
    """
    if dim is None:
        used = [int(k) for t in texts for k in re.findall(r"z([1-9])", t)]
        dim = max([len(texts)] + used)
    if laurent is None:
        laurent = any("^-" in t.replace(" ", "") for t in texts)
    return PolyMap([parse_poly(t, dim, laurent) for t in texts])


def _fmt_real(x: float) -> str:
    return repr(float(x))


def _fmt_coeff(c: complex) -> str:
    if c.imag == 0:
        return _fmt_real(c.real)
    if c.real == 0:
        return f"{_fmt_real(c.imag)}i"
    sign = "-" if math.copysign(1.0, c.imag) < 0 else "+"
    return f"({_fmt_real(c.real)}{sign}{_fmt_real(abs(c.imag))}i)"


def format_poly(p: Poly) -> str:
    """Text form accepted by :func:`parse_poly` (exact float round trip)."""
    if p.is_zero():
        return "0.0"
    parts = []
    for e, c in p._terms.items():
        factors = [_fmt_coeff(c)]
        for k, ek in enumerate(e):
            if ek == 1:
                factors.append(f"z{k + 1}")
            elif ek:
                factors.append(f"z{k + 1}^{ek}")
        parts.append("*".join(factors))
    return " + ".join(parts)
