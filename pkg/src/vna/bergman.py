"""Truncated Bergman-space models on the polydisk, ball and annulus.

Monomials are orthogonal on all three domains, so operators are stored as
dense matrices on the span of ``z**alpha`` with ``|alpha| <= N`` (``|n| <= N``
on the annulus).  Matrices are in the plain monomial basis; adjoints carry
the norm weights explicitly.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from . import domain as dm
from .forms import MonomialForm
from .poly import Poly

__all__ = [
    "BergmanModel",
    "OperatorMatrix",
    "CommutantResult",
    "ProjectionResult",
    "AmbiguousRank",
    "CommutantTooLarge",
    "UnsupportedClassAction",
    "monomial_norm_sq",
    "mult_matrix",
    "adjoint_matrix",
    "adjoint",
    "class_operator_matrix",
    "commutant_dimension",
    "reducing_projections",
    "check_adjoint_identity",
    "commutator_residual",
    "grading",
    "dump_matrix",
]

NULL_REL = 1e-8
GAP_MIN = 1e3
MAX_BLOCK = 4000


class AmbiguousRank(RuntimeError):
    def __init__(self, gap: float, N: int):
        super().__init__(f"singular gap {gap:.3g} below {GAP_MIN:g} at N={N}; raise N")
        self.gap = gap
        self.N = N


class CommutantTooLarge(RuntimeError):
    pass


class UnsupportedClassAction(ValueError):
    pass


def monomial_norm_sq(d, alpha) -> float:
    """Squared Bergman norm of ``z**alpha`` for Lebesgue area/volume measure."""
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if isinstance(d, dm.Polydisk):
        if len(alpha) != d.dim or min(alpha) < 0:
            raise ValueError(f"exponent {alpha} invalid for {d}")
        return float(np.prod([math.pi / (a + 1) for a in alpha]))
    if isinstance(d, dm.Ball):
        if len(alpha) != d.dim or min(alpha) < 0:
            raise ValueError(f"exponent {alpha} invalid for {d}")
        k = d.dim
        num = math.prod(math.factorial(a) for a in alpha)
        return math.pi ** k * num / math.factorial(k + sum(alpha))
    if isinstance(d, dm.Annulus):
        if len(alpha) != 1:
            raise ValueError("annulus exponents are one-dimensional")
        n = alpha[0]
        r = d.r
        if n == -1:
            return 4 * math.pi * math.log(1 / r)
        m = 2 * n + 2
        return 2 * math.pi * ((1 / r) ** m - r ** m) / m
    raise ValueError(f"no orthogonal monomial basis for {type(d).__name__}")


class BergmanModel:
    """Monomials of degree <= N in graded order, with their squared norms."""

    def __init__(self, domain, N: int):
        if not isinstance(domain, (dm.Polydisk, dm.Ball, dm.Annulus)):
            raise ValueError(f"no Bergman model for {type(domain).__name__}")
        self.domain = domain
        self.N = int(N)
        if isinstance(domain, dm.Annulus):
            idx = [(0,)] + [(s * n,) for n in range(1, N + 1) for s in (-1, 1)]
        else:
            k = domain.dim
            idx = []
            for deg in range(N + 1):
                idx += sorted((a for a in itertools.product(range(deg + 1), repeat=k) if sum(a) == deg),
                              reverse=True)
        self.index_set: list[tuple[int, ...]] = idx
        self.position = {a: i for i, a in enumerate(idx)}
        self.norms_sq = np.array([monomial_norm_sq(domain, a) for a in idx])
        self.degrees = np.array([self.degree_of(a) for a in idx])

    @property
    def annulus(self) -> bool:
        return isinstance(self.domain, dm.Annulus)

    def degree_of(self, alpha) -> int:
        return abs(alpha[0]) if self.annulus else sum(alpha)

    @property
    def size(self) -> int:
        return len(self.index_set)

    def indices_up_to(self, degree: int) -> np.ndarray:
        return np.nonzero(self.degrees <= degree)[0]

    def __repr__(self):
        return f"BergmanModel({self.domain}, N={self.N}, size={self.size})"


@dataclass
class OperatorMatrix:
    model: BergmanModel
    entries: np.ndarray
    label: str = "Generic"
    symbol: Poly | None = None

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.model, self.entries @ other.entries)


def symbol_degree(model: BergmanModel, p: Poly) -> int:
    return int(max(model.degree_of(tuple(e)) for e in p.exps)) if len(p.exps) else 0


def mult_matrix(model: BergmanModel, p: Poly) -> OperatorMatrix:
    """Matrix of ``M_p``; images above degree N are cut off."""
    if p.dim != (1 if model.annulus else model.domain.dim):
        raise ValueError("symbol dimension does not match the model")
    if not model.annulus and np.any(p.exps < 0):
        raise ValueError("negative exponents need the annulus model")
    g = symbol_degree(model, p)
    if g > model.N:
        raise ValueError(f"symbol degree {g} exceeds model degree {model.N}")
    n = model.size
    A = np.zeros((n, n), dtype=complex)
    for j, alpha in enumerate(model.index_set):
        for e, c in zip(p.exps, p.coeffs):
            beta = tuple(int(x) for x in np.add(alpha, e))
            i = model.position.get(beta)
            if i is not None:
                A[i, j] += c
    return OperatorMatrix(model, A, f"Mult({p})", symbol=p)


def adjoint(model: BergmanModel, X: np.ndarray) -> np.ndarray:
    """Bergman adjoint of a matrix in the monomial basis."""
    w = model.norms_sq
    return (X.conj().T * w[None, :]) / w[:, None]


def adjoint_matrix(model: BergmanModel, m: OperatorMatrix) -> OperatorMatrix:
    """``(alpha, beta)`` entry ``conj(m[beta, alpha]) * |z^beta|^2 / |z^alpha|^2``.

    The adjoint of a multiplication lowers degree, so the truncation is exact.
    """
    if not m.label.startswith("Mult("):
        raise ValueError(f"adjoint_matrix expects a Mult matrix, got {m.label}")
    return OperatorMatrix(model, adjoint(model, m.entries), "MultAdjoint" + m.label[4:], symbol=m.symbol)


def class_operator_matrix(model: BergmanModel, forms: list[MonomialForm], label: str = "ClassOperator") -> OperatorMatrix:
    """Matrix of ``h -> sum over the class of (h o sigma) J sigma``."""
    n = model.size
    E = np.zeros((n, n), dtype=complex)
    for j, alpha in enumerate(model.index_set):
        acc: dict[tuple, complex] = {}
        for f in forms:
            c, e = f.monomial_action(alpha)
            acc[e] = acc.get(e, 0) + c
        big = max((abs(v) for v in acc.values()), default=0.0)
        for e, c in acc.items():
            if abs(c) <= 1e-10 * max(big, 1.0):
                continue
            if any(x.denominator != 1 for x in e):
                raise UnsupportedClassAction(f"fractional exponent {e} survives on z^{alpha}")
            beta = tuple(int(x) for x in e)
            if not model.annulus and min(beta) < 0:
                raise UnsupportedClassAction(f"z^{alpha} is sent to the non-holomorphic z^{beta}")
            i = model.position.get(beta)
            if i is not None:
                E[i, j] += c
    return OperatorMatrix(model, E, label)


def check_adjoint_identity(model: BergmanModel, forms, inverse_forms, g: int = 0) -> float:
    """Max-entry residual of ``E_rho* - E_rho_inverse`` on degrees <= N - g."""
    E = class_operator_matrix(model, forms).entries
    Einv = class_operator_matrix(model, inverse_forms).entries
    idx = model.indices_up_to(model.N - g)
    R = adjoint(model, E)[np.ix_(idx, idx)] - Einv[np.ix_(idx, idx)]
    return float(np.abs(R).max()) if R.size else 0.0


def commutator_residual(model: BergmanModel, X: np.ndarray, A: OperatorMatrix, g: int) -> float:
    """Residual of ``[X, A]`` and ``[X, A*]`` on degrees <= N - 2g, relative to |X|."""
    idx = model.indices_up_to(model.N - 2 * g)
    As = adjoint(model, A.entries)
    r = 0.0
    for B in (A.entries, As):
        C = (X @ B - B @ X)[np.ix_(idx, idx)]
        r = max(r, float(np.abs(C).max()) if C.size else 0.0)
    return r / max(1.0, float(np.abs(X).max()))


# ----------------------------------------------------------------------------
# commutant

def grading(symbols: list[Poly], dim: int):
    """Integer weights making every symbol homogeneous, as ``(W, w_pos)``.

    ``W`` has one row per weight; ``w_pos`` is a positive weight used to
    define degree bands.  Returns None when no positive grading exists.
    """
    diffs = []
    for p in symbols:
        if np.any(p.exps < 0):
            if len(p.exps) > 1:
                return None
        for e in p.exps[1:]:
            diffs.append(e - p.exps[0])
    if not diffs:
        return np.eye(dim, dtype=int), np.ones(dim, dtype=int)
    D = np.array(diffs)
    if dim > 4:
        return None
    best = None
    for w in itertools.product(range(1, 9), repeat=dim):
        if not np.any(D @ np.array(w)):
            if best is None or sum(w) < sum(best):
                best = w
    if best is None:
        return None
    w = np.array(best, dtype=int)
    return w[None, :], w


@dataclass
class CommutantResult:
    dim: int
    singular_gap: float
    N: int
    g: int
    low_indices: np.ndarray
    basis: list[np.ndarray] = field(default_factory=list)  # low-block compressions, Frobenius-orthonormal
    null_gap: float = math.inf
    blocks: int = 1
    largest_block: int = 0
    kept: list[float] = field(default_factory=list)


def _low_block(model: BergmanModel, g: int, weights) -> np.ndarray:
    L = model.N - 2 * g
    if L < 0:
        raise ValueError(f"N={model.N} leaves no margin-exact band for symbol degree {g}")
    if weights is None or model.annulus:
        return model.indices_up_to(L)
    _, wpos = weights
    band = np.array([int(np.dot(wpos, a)) for a in model.index_set])
    return np.nonzero(band <= L)[0]


def commutant_dimension(model: BergmanModel, generators: list[OperatorMatrix], include_adjoints: bool = True,
                        margin: int | None = None, max_block: int = MAX_BLOCK) -> CommutantResult:
    """Dimension of the commutant seen on the margin-exact low block.

    Unknown ``X`` lives on the whole model; ``[X, A]`` is imposed on rows and
    columns of degree <= N - g where both products are exact.  Entries near
    the top are only partly constrained, so the nullspace is projected onto
    the low block (degree <= N - 2g) and the rank of that projection is the
    dimension.  When all symbols are homogeneous for some grading the
    unknowns split into independent blocks by degree shift.
    """
    n = model.size
    symbols = [G.symbol for G in generators if G.symbol is not None]
    if margin is None:
        margin = max((symbol_degree(model, p) for p in symbols), default=0)
    g = int(margin)
    weights = grading(symbols, 1 if model.annulus else model.domain.dim) if len(symbols) == len(generators) else None
    exact = model.indices_up_to(model.N - g)
    low = _low_block(model, g, weights)

    mats = []
    for G in generators:
        mats.append(G.entries)
        if include_adjoints:
            mats.append(adjoint(model, G.entries))
    I = sp.identity(n, format="csr")
    rows_sel = (exact[:, None] * n + exact[None, :]).ravel()
    pieces = []
    for A in mats:
        As = sp.csr_matrix(A)
        K = sp.kron(I, As.T, format="csr") - sp.kron(As, I, format="csr")
        pieces.append(K[rows_sel])
    K = sp.vstack(pieces, format="csc")

    # block structure of the unknowns X[beta, alpha]
    idx = np.array(model.index_set)
    if weights is None:
        keys = np.zeros((n, n, 1), dtype=int)
    else:
        W = weights[0]
        wdeg = idx @ W.T  # (n, r)
        keys = wdeg[:, None, :] - wdeg[None, :, :]
    keys = keys.reshape(n * n, -1)
    low_mask = np.zeros((n, n), dtype=bool)
    low_mask[np.ix_(low, low)] = True
    low_mask = low_mask.ravel()
    wanted = {tuple(k) for k in keys[low_mask]}
    groups: dict[tuple, list[int]] = {}
    for u, k in enumerate(map(tuple, keys)):
        if k in wanted:
            groups.setdefault(k, []).append(u)

    largest = max(len(v) for v in groups.values())
    if largest > max_block:
        raise CommutantTooLarge(f"block of {largest} unknowns exceeds limit {max_block} at N={model.N}")

    svals = []
    solved = []
    for key in sorted(groups):
        cols = np.array(groups[key])
        Kb = K[:, cols]
        Kb = Kb[np.unique(Kb.nonzero()[0])].toarray()
        if Kb.shape[0]:
            full = Kb.shape[0] < Kb.shape[1]
            _, s, Vh = np.linalg.svd(Kb, full_matrices=full)
        else:
            s, Vh = np.zeros(0), np.eye(len(cols), dtype=complex)
        svals.append(s)
        solved.append((cols, s, Vh))
    smax = max((s.max() for s in svals if s.size), default=1.0)
    thresh = NULL_REL * smax

    null_gap = math.inf
    proj_s = []
    basis_vecs = []
    for cols, s, Vh in solved:
        rank = int(np.sum(s > thresh))
        small = s[s <= thresh]
        if rank and small.size:
            null_gap = min(null_gap, s[rank - 1] / max(small.max(), 1e-300))
        Nb = Vh[rank:].conj().T  # (cols, nullity)
        lm = low_mask[cols]
        if not lm.any() or Nb.shape[1] == 0:
            continue
        P = Nb[lm]
        U, ps, _ = np.linalg.svd(P, full_matrices=False)
        proj_s.append(ps)
        basis_vecs.append((cols[lm], U, ps))
    allp = np.sort(np.concatenate(proj_s))[::-1] if proj_s else np.zeros(0)
    if allp.size == 0:
        raise ValueError("empty low block")
    pthresh = NULL_REL * allp[0]
    kept = allp[allp > pthresh]
    dropped = allp[allp <= pthresh]
    gap = math.inf if dropped.size == 0 else float(kept.min() / max(dropped.max(), 1e-300))

    # low-block compressions of a commutant basis
    pos = {int(i): k for k, i in enumerate(low)}
    basis = []
    for ucols, U, ps in basis_vecs:
        for j in np.nonzero(ps > pthresh)[0]:
            B = np.zeros((len(low), len(low)), dtype=complex)
            for u, v in zip(ucols, U[:, j]):
                B[pos[int(u // n)], pos[int(u % n)]] = v
            basis.append(B)
    res = CommutantResult(
        dim=len(kept), singular_gap=gap, N=model.N, g=g, low_indices=low, basis=basis,
        null_gap=null_gap, blocks=len(groups), largest_block=largest, kept=[float(x) for x in kept])
    if gap < GAP_MIN:
        raise AmbiguousRank(gap, model.N)
    return res


# ----------------------------------------------------------------------------
# reducing subspaces

@dataclass
class ProjectionResult:
    projections: list[np.ndarray]  # on the low block, monomial basis
    eigenvalues: list[float]
    verdict: str  # "Clean" or "Inconclusive"
    residual: float = 0.0
    reason: str = ""


def _span_residual(basis: list[np.ndarray], X: np.ndarray, scale: float = 0.0) -> float:
    """Relative distance of ``X`` from the span; ``scale`` floors the denominator
    so that products vanishing up to rounding count as closed."""
    M = np.stack([b.ravel() for b in basis], axis=1)
    coef, *_ = np.linalg.lstsq(M, X.ravel(), rcond=None)
    return float(np.linalg.norm(M @ coef - X.ravel()) / max(np.linalg.norm(X), scale, 1e-300))


def reducing_projections(model: BergmanModel, result: CommutantResult, generators: list[OperatorMatrix],
                         rng: np.random.Generator, tol: float = 1e-6, retries: int = 3) -> ProjectionResult:
    """Spectral projections of a random self-adjoint element of the commutant.

    Works on the low-block compressions, which form a *-algebra when the low
    block is a union of degree bands invariant under the commutant; this is
    checked (closure of the span) before anything is returned.
    """
    low = result.low_indices
    basis = result.basis
    if not basis:
        return ProjectionResult([], [], "Inconclusive", reason="empty commutant basis")
    w = model.norms_sq[low]
    for a in basis:
        for b in basis:
            if _span_residual(basis, a @ b, np.linalg.norm(a) * np.linalg.norm(b)) > 1e-8:
                return ProjectionResult([], [], "Inconclusive", reason="low block not closed under products")
    half = np.sqrt(w)
    for _ in range(retries):
        c = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        H = sum(ci * b for ci, b in zip(c, basis))
        H = H + (H.conj().T * w[None, :]) / w[:, None]
        S = half[:, None] * H / half[None, :]
        S = 0.5 * (S + S.conj().T)
        lam, Q = np.linalg.eigh(S)
        scale = max(abs(lam).max(), 1.0)
        cuts = np.nonzero(np.diff(lam) > tol * scale)[0]
        groups = np.split(np.arange(len(lam)), cuts + 1)
        spreads = [lam[gi].max() - lam[gi].min() for gi in groups]
        gaps = np.diff(lam)[cuts] if len(cuts) else np.array([np.inf])
        if max(spreads) > tol * scale or gaps.min() < 100 * tol * scale:
            continue
        projs = []
        for gi in groups:
            Qg = Q[:, gi]
            projs.append((Qg @ Qg.conj().T) * half[None, :] / half[:, None])
        resid = _projection_residual(model, projs, low, generators, result.g)
        if resid > 1e-8:
            return ProjectionResult(projs, [float(lam[gi].mean()) for gi in groups], "Inconclusive", resid,
                                    reason="projections fail to commute with generators")
        return ProjectionResult(projs, [float(lam[gi].mean()) for gi in groups], "Clean", resid)
    return ProjectionResult([], [], "Inconclusive", reason="eigenvalue clustering ambiguous")


def _projection_residual(model, projs, low, generators, g) -> float:
    """Commutator residual with the generators on columns where both products stay in the low block."""
    inside = np.zeros(model.size, dtype=bool)
    inside[low] = True
    r = 0.0
    for G in generators:
        for full in (G.entries, adjoint(model, G.entries)):
            closed = ~np.any((np.abs(full) > 0) & ~inside[:, None], axis=0)[low]  # A z^beta stays low
            A = full[np.ix_(low, low)]
            for P in projs:
                support_ok = ~np.any((np.abs(P) > 1e-12) & ~closed[:, None], axis=0)
                cols = np.nonzero(closed & support_ok)[0]
                if len(cols):
                    r = max(r, float(np.abs((A @ P - P @ A)[:, cols]).max()))
    return r


def dump_matrix(op: OperatorMatrix, path: str) -> None:
    """Column-major little-endian complex128 entries plus a JSON sidecar with the index set."""
    np.asarray(op.entries, dtype="<c16").ravel(order="F").tofile(path)
    with open(path + ".json", "w") as fh:
        json.dump({"label": op.label, "shape": list(op.entries.shape),
                   "index_set": [list(a) for a in op.model.index_set],
                   "domain": dm.domain_to_json(op.model.domain), "N": op.model.N}, fh, indent=1)
