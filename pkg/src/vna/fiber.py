"""Solving fiber equations ``F(w) = c`` for polynomial maps.

One variable: companion-matrix roots with Newton polishing.  Two variables:
Sylvester resultant (evaluated on a circle and interpolated by FFT), roots in
the kept variable, back substitution, 2-D Newton.  Three or more variables:
closed forms for coordinate-decoupled, monomial and elementary-symmetric maps.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .domain import Region, classify_point, sample_boundary, sample_interior, signed_distance
from .poly import Poly, PolyMap, evaluate, jacobian_det, parse_poly

__all__ = [
    "Verdict",
    "UnivariateRoots",
    "FiberSolveResult",
    "FiberCount",
    "Properness",
    "PositiveDimensionalFiber",
    "UnsupportedSystemError",
    "univariate_roots",
    "resultant",
    "solve_fiber",
    "structured_fiber",
    "structured_family",
    "newton_polish",
    "generic_fiber_count",
    "is_proper_numeric",
    "default_box",
]

DEDUP_TOL = 1e-8
SEPARATION_TOL = 1e-6
CONDITION_TOL = 1e-8


class Verdict(enum.Enum):
    CLEAN = "Clean"
    NEAR_DEGENERATE = "NearDegenerate"


class PositiveDimensionalFiber(ValueError):
    pass


class UnsupportedSystemError(ValueError):
    pass


@dataclass
class UnivariateRoots:
    roots: np.ndarray
    verdict: Verdict
    deflated: int = 0  # number of negligible leading coefficients dropped


@dataclass
class FiberSolveResult:
    target: np.ndarray
    points: np.ndarray  # (m, dim)
    residuals: np.ndarray
    conditioning: np.ndarray  # smallest singular value of the Jacobian per point
    verdict: Verdict
    touched_box: bool = False

    def __len__(self):
        return len(self.points)


def default_box(domain) -> float:
    return 4.0 * domain.circumradius


def _residual_tol(c) -> float:
    return 1e-10 * (1.0 + float(np.linalg.norm(c)))


# ----------------------------------------------------------------------------
# one variable

def _ascending_coeffs(p: Poly) -> tuple[np.ndarray, int]:
    """Ascending coefficient vector of ``p * z**shift`` with ``shift`` clearing negative powers."""
    if p.dim != 1:
        raise ValueError("expected a polynomial in one variable")
    exps = p.exps[:, 0]
    shift = max(0, -int(exps.min())) if len(exps) else 0
    out = np.zeros(int(exps.max()) + shift + 1 if len(exps) else 1, dtype=complex)
    for e, c in zip(exps, p.coeffs):
        out[int(e) + shift] += c
    return out, shift


def _roots_ascending(coeffs: np.ndarray) -> tuple[np.ndarray, int]:
    coeffs = np.asarray(coeffs, dtype=complex)
    big = np.abs(coeffs).max() if coeffs.size else 0.0
    if big == 0:
        raise ValueError("zero polynomial has no isolated roots")
    deflated = 0
    while coeffs.size > 1 and abs(coeffs[-1]) <= 1e-12 * big:
        coeffs = coeffs[:-1]
        deflated += 1
    if coeffs.size < 2:
        return np.zeros(0, dtype=complex), deflated
    roots = np.roots(coeffs[::-1])
    return _polish_1d(coeffs, roots), deflated


def _polish_1d(coeffs: np.ndarray, roots: np.ndarray, steps: int = 5) -> np.ndarray:
    p = np.polynomial.polynomial
    dcoef = p.polyder(coeffs)
    roots = roots.astype(complex).copy()
    for i, r in enumerate(roots):
        best = abs(p.polyval(r, coeffs))
        for _ in range(steps):
            dv = p.polyval(r, dcoef)
            if dv == 0 or best == 0:
                break
            cand = r - p.polyval(r, coeffs) / dv
            val = abs(p.polyval(cand, coeffs))
            if not val < best:
                break
            r, best = cand, val
        roots[i] = r
    return roots


def _min_pairwise(points: np.ndarray) -> float:
    if len(points) < 2:
        return math.inf
    P = points.reshape(len(points), -1)
    D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    D[np.diag_indices_from(D)] = np.inf
    return float(D.min())


def univariate_roots(p: Poly) -> UnivariateRoots:
    """All complex roots of a one-variable (Laurent) polynomial, with multiplicity.

    Laurent input is multiplied by the power of z clearing its poles; the
    shifted constant term is nonzero, so no spurious roots at 0 appear.
    """
    coeffs, _ = _ascending_coeffs(p)
    if not np.any(coeffs):
        raise ValueError("zero polynomial has no isolated roots")
    if len(np.trim_zeros(coeffs, "b")) < 2:
        raise ValueError("polynomial has degree < 1")
    roots, deflated = _roots_ascending(coeffs)
    verdict = Verdict.NEAR_DEGENERATE if _min_pairwise(roots[:, None]) < SEPARATION_TOL else Verdict.CLEAN
    return UnivariateRoots(roots=roots, verdict=verdict, deflated=deflated)


# ----------------------------------------------------------------------------
# two variables

def _coeff_table(p: Poly, eliminate: int) -> dict[int, np.ndarray]:
    """Map power of the eliminated variable -> ascending coefficients in the kept one."""
    keep = 1 - eliminate
    kmax = int(p.exps[:, keep].max())
    table: dict[int, np.ndarray] = {}
    for e, c in zip(p.exps, p.coeffs):
        arr = table.setdefault(int(e[eliminate]), np.zeros(kmax + 1, dtype=complex))
        arr[int(e[keep])] += c
    return table


def resultant(f: Poly, g: Poly, eliminate: int) -> np.ndarray:
    """Sylvester resultant of ``f, g`` w.r.t. variable ``eliminate`` (0 or 1).

    Returned as ascending coefficients in the other variable.  Computed by
    evaluating the Sylvester determinant at roots of unity and inverting
    with an FFT; exact up to rounding because the degree bound is exact.
    """
    if f.dim != 2 or g.dim != 2:
        raise ValueError("resultant expects polynomials in two variables")
    if np.any(f.exps < 0) or np.any(g.exps < 0):
        raise ValueError("clear negative exponents before eliminating")
    keep = 1 - eliminate
    ft, gt = _coeff_table(f, eliminate), _coeff_table(g, eliminate)
    m, n = max(ft), max(gt)
    if m + n == 0:
        raise ValueError("neither polynomial involves the eliminated variable")
    df, dg = f.degree_in(keep), g.degree_in(keep)
    bound = n * df + m * dg
    npts = bound + 1
    xs = np.exp(2j * np.pi * np.arange(npts) / npts)
    p = np.polynomial.polynomial
    fa = np.array([[p.polyval(x, ft[k]) if k in ft else 0 for k in range(m + 1)] for x in xs])
    ga = np.array([[p.polyval(x, gt[k]) if k in gt else 0 for k in range(n + 1)] for x in xs])
    vals = np.empty(npts, dtype=complex)
    size = m + n
    for i in range(npts):
        S = np.zeros((size, size), dtype=complex)
        for r in range(n):
            S[r, r:r + m + 1] = fa[i, ::-1]
        for r in range(m):
            S[n + r, r:r + n + 1] = ga[i, ::-1]
        vals[i] = np.linalg.det(S)
    return np.fft.fft(vals) / npts


def _clear_negative(p: Poly) -> Poly:
    shift = np.minimum(p.exps.min(axis=0), 0) if len(p.exps) else np.zeros(p.dim, int)
    if not np.any(shift):
        return Poly(p.dim, p.terms, laurent=False)
    return Poly(p.dim, {tuple(int(x) for x in e - shift): c for e, c in zip(p.exps, p.coeffs)})


def _cluster_means(xs: np.ndarray, tol: float = 1e-3) -> np.ndarray:
    """Means of clusters of nearby roots; a k-fold root is perturbed by about eps**(1/k)
    in each copy but their mean is accurate to near machine precision."""
    out = []
    used = np.zeros(len(xs), dtype=bool)
    for i in range(len(xs)):
        if used[i]:
            continue
        near = (~used) & (np.abs(xs - xs[i]) <= tol * (1 + abs(xs[i])))
        used |= near
        if near.sum() > 1:
            out.append(xs[near].mean())
    return np.array(out, dtype=complex)


def _candidates_2d(F: PolyMap, c, eliminate: int) -> tuple[np.ndarray, int] | None:
    """Candidate solutions and the resultant degree (expected solution count)."""
    f = _clear_negative(F.components[0] - c[0])
    g = _clear_negative(F.components[1] - c[1])
    keep = 1 - eliminate
    res = resultant(f, g, eliminate)
    big = np.abs(res).max()
    scale = max(np.abs(f.coeffs).max(), 1.0) ** g.degree_in(eliminate) * max(np.abs(g.coeffs).max(), 1.0) ** f.degree_in(eliminate)
    if big <= 1e-10 * scale:
        return None
    xs, _ = _roots_ascending(res)
    # roots where both leading coefficients vanish come from solutions at infinity
    pp = np.polynomial.polynomial
    ft, gt = _coeff_table(f, eliminate), _coeff_table(g, eliminate)
    lf, lg = ft[max(ft)], gt[max(gt)]
    at_inf = [abs(pp.polyval(x, lf)) <= 1e-6 * np.abs(lf).max() * (1 + abs(x)) ** len(lf)
              and abs(pp.polyval(x, lg)) <= 1e-6 * np.abs(lg).max() * (1 + abs(x)) ** len(lg) for x in xs]
    expected = len(xs) - int(sum(at_inf))
    xs = np.concatenate([xs, _cluster_means(xs)])
    cands = []
    tables = [_coeff_table(h, eliminate) for h in (f, g) if h.degree_in(eliminate) > 0]
    for x in xs:
        for table in tables:
            top = max(table)
            coeffs = np.array([pp.polyval(x, table[k]) if k in table else 0 for k in range(top + 1)])
            if not np.any(np.abs(coeffs) > 0):
                continue
            try:
                ws, _ = _roots_ascending(coeffs)
            except ValueError:
                continue
            for w in ws:
                pt = np.empty(2, dtype=complex)
                pt[keep] = x
                pt[eliminate] = w
                cands.append(pt)
    return np.array(cands, dtype=complex).reshape(-1, 2), expected


def newton_polish(F: PolyMap, c, W: np.ndarray, iters: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Newton iteration on ``F(w) - c``; returns points and residual norms."""
    W = np.array(W, dtype=complex).reshape(-1, F.dim_in)
    c = np.asarray(c, dtype=complex)
    if len(W) == 0:
        return W, np.zeros(0)
    res = np.linalg.norm(F(W) - c, axis=1)
    active = np.ones(len(W), dtype=bool)
    for _ in range(iters):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        J = F.jacobian(W[idx])
        r = F(W[idx]) - c
        try:
            step = np.linalg.solve(J, r[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.stack([np.linalg.lstsq(Ji, ri, rcond=None)[0] for Ji, ri in zip(J, r)])
        cand = W[idx] - step
        ok = np.all(np.isfinite(cand), axis=1)
        new_res = np.full(len(idx), np.inf)
        if ok.any():
            new_res[ok] = np.linalg.norm(F(cand[ok]) - c, axis=1)
        improved = new_res < res[idx]
        W[idx[improved]] = cand[improved]
        res[idx[improved]] = new_res[improved]
        small = np.linalg.norm(step, axis=1) <= 1e-15 * (1 + np.linalg.norm(W[idx], axis=1))
        active[idx[~improved | small]] = False
    return W, res


def _dedup(W: np.ndarray, res: np.ndarray, tol: float = DEDUP_TOL):
    order = np.argsort(res, kind="stable")
    kept: list[int] = []
    for i in order:
        if all(np.linalg.norm(W[i] - W[j]) > tol for j in kept):
            kept.append(i)
    return W[kept], res[kept]


def _sort_points(W: np.ndarray) -> np.ndarray:
    if len(W) == 0:
        return W
    keys = [tuple(v for z in w for v in (round(z.real, 7), round(z.imag, 7))) for w in W]
    order = sorted(range(len(W)), key=lambda i: keys[i])
    return W[order]


def _conditioning(F: PolyMap, W: np.ndarray) -> np.ndarray:
    if len(W) == 0:
        return np.zeros(0)
    return np.linalg.svd(F.jacobian(W), compute_uv=False)[:, -1]


# ----------------------------------------------------------------------------
# structured families

def _elementary_symmetric(d: int) -> list[Poly]:
    out = []
    for k in range(1, d + 1):
        terms = {}
        for combo in itertools.combinations(range(d), k):
            e = [0] * d
            for i in combo:
                e[i] = 1
            terms[tuple(e)] = 1.0
        out.append(Poly(d, terms))
    return out


def structured_family(F: PolyMap) -> str | None:
    """Name of the closed-form family ``F`` belongs to, if any."""
    if not F.is_square:
        return None
    d = F.dim_in
    if all(len(c.terms) == 1 for c in F.components):
        return "monomial"
    used = [c.variables() for c in F.components]
    if all(len(u) == 1 for u in used) and len(set().union(*used)) == d:
        return "decoupled"
    if d >= 2 and list(F.components) == _elementary_symmetric(d):
        return "symmetric"
    return None


def structured_fiber(F: PolyMap, c) -> np.ndarray | None:
    """Closed-form fiber for registered families; ``None`` when not applicable."""
    fam = structured_family(F)
    c = np.asarray(c, dtype=complex)
    d = F.dim_in
    if fam == "symmetric":
        # x^d - c1 x^(d-1) + c2 x^(d-2) - ...
        desc = [1.0] + [(-1) ** (k + 1) * c[k] for k in range(d)]
        roots = np.roots(np.array(desc, dtype=complex))
        pts = {tuple(p) for p in itertools.permutations(range(d))}
        return np.array([[roots[i] for i in perm] for perm in sorted(pts)], dtype=complex)
    if fam == "decoupled":
        per_var: list[np.ndarray] = [None] * d
        for comp, ck in zip(F.components, c):
            (var,) = comp.variables()
            uni = Poly(1, {(int(e[var]),): v for e, v in zip(comp.exps, comp.coeffs)}, laurent=comp.laurent)
            per_var[var] = univariate_roots(uni - ck).roots
        return np.array(list(itertools.product(*per_var)), dtype=complex).reshape(-1, d)
    if fam == "monomial":
        return _monomial_fiber(F, c)
    return None


def _monomial_fiber(F: PolyMap, c) -> np.ndarray:
    E = np.array([comp.exps[0] for comp in F.components], dtype=float)
    a = np.array([comp.coeffs[0] for comp in F.components])
    det = round(abs(np.linalg.det(E)))
    if det == 0:
        raise PositiveDimensionalFiber("monomial exponent matrix is singular")
    rhs = np.asarray(c, dtype=complex) / a
    if np.any(rhs == 0):
        raise PositiveDimensionalFiber("target has a zero coordinate")
    L = np.log(rhs)
    Einv = np.linalg.inv(E)
    d = F.dim_in
    cands = []
    for k in itertools.product(range(det), repeat=d):
        cands.append(np.exp(Einv @ (L + 2j * np.pi * np.array(k))))
    W = np.array(cands)
    res = np.linalg.norm(F(W) - c, axis=1)
    W, _ = _dedup(W, res)
    return W


# ----------------------------------------------------------------------------
# fiber solve

def solve_fiber(F: PolyMap, c, box: float | None = None) -> FiberSolveResult:
    """All solutions of ``F(w) = c`` with ``max |w_k| <= box``."""
    if not F.is_square:
        raise UnsupportedSystemError("fiber solving needs a square map")
    c = np.asarray(c, dtype=complex).reshape(F.dim_out)
    d = F.dim_in
    near_deg = False
    if d == 1:
        uni = univariate_roots(F.components[0] - c[0])
        W = uni.roots[:, None]
        near_deg = uni.verdict is Verdict.NEAR_DEGENERATE
        W, res = newton_polish(F, c, W, iters=5)
    elif d == 2:
        found = [r for r in (_candidates_2d(F, c, 1), _candidates_2d(F, c, 0)) if r is not None]
        if not found:
            raise PositiveDimensionalFiber(f"resultant vanishes identically for target {c}")
        W = np.concatenate([r[0] for r in found])
        expected = min(r[1] for r in found)
        W, res = newton_polish(F, c, W)
    else:
        W = structured_fiber(F, c)
        if W is None:
            raise UnsupportedSystemError(
                f"no closed-form solver for this {d}-variable map (coordinate-decoupled, "
                "monomial or elementary-symmetric maps only)")
        W, res = newton_polish(F, c, W)
    tol = _residual_tol(c)
    finite = np.all(np.isfinite(W), axis=1)
    W, res = W[finite], res[finite]
    if F.laurent:
        nz = np.all(np.abs(W) > 1e-12, axis=1)
        W, res = W[nz], res[nz]
    loose = (res > tol) & (res <= 1e-6 * (1 + np.linalg.norm(c)))
    if loose.any():
        near_deg = True
    W, res = W[res <= tol], res[res <= tol]
    if d > 1:
        W, res = _dedup(W, res)
    if d == 2 and not F.laurent and len(W) < expected:
        # a lost solution: the resultant promised more roots than Newton confirmed
        near_deg = True
    touched = False
    if box is not None and len(W):
        inf_norm = np.abs(W).max(axis=1)
        touched = bool(np.any(np.abs(inf_norm - box) < 1e-6 * box))
        W, res = W[inf_norm <= box], res[inf_norm <= box]
    order_src = _sort_points(W)
    if len(W):
        idx = [int(np.argmin(np.linalg.norm(W - p, axis=1))) for p in order_src]
        W, res = W[idx], res[idx]
    cond = _conditioning(F, W)
    if _min_pairwise(W) < SEPARATION_TOL or (len(cond) and cond.min() < CONDITION_TOL):
        near_deg = True
    return FiberSolveResult(
        target=c,
        points=W,
        residuals=res,
        conditioning=cond,
        verdict=Verdict.NEAR_DEGENERATE if near_deg else Verdict.CLEAN,
        touched_box=touched,
    )


# ----------------------------------------------------------------------------
# fiber counts and properness

@dataclass
class FiberCount:
    m: int | None
    constant: bool
    counts: list[int] = field(default_factory=list)
    skipped: int = 0
    touched_box: bool = False  # some solution sat on the search box boundary

    @property
    def inconclusive(self) -> bool:
        return self.m is None


def generic_fiber_count(F: PolyMap, d, samples: int, rng: np.random.Generator,
                        box: float | None = None, margin: float = 1e-3) -> FiberCount:
    """Number of fiber points inside ``d`` over regular values.

    ``constant`` is True when every clean sample gave the same count; ``m``
    is then that count, otherwise the most frequent one.
    """
    if jacobian_det(F).is_zero():
        raise ValueError("Jacobian determinant vanishes identically")
    box = default_box(d) if box is None else box
    counts: list[int] = []
    skipped = 0
    budget = 10 * samples
    tries = 0
    touched = False
    while len(counts) < samples and tries < budget:
        tries += 1
        z = sample_interior(d, 1, margin, rng)[0]
        if abs(np.linalg.det(F.jacobian(z))) <= 1e-8:
            skipped += 1
            continue
        fib = solve_fiber(F, F(z), box)
        touched |= fib.touched_box
        if fib.verdict is not Verdict.CLEAN:
            skipped += 1
            continue
        regions = classify_point(d, fib.points, 0.0)
        counts.append(sum(r is Region.INSIDE for r in regions))
    if len(counts) < samples:
        return FiberCount(m=None, constant=False, counts=counts, skipped=skipped, touched_box=touched)
    common = Counter(counts).most_common(1)[0][0]
    return FiberCount(m=common, constant=len(set(counts)) == 1, counts=counts, skipped=skipped,
                      touched_box=touched)


class ProperVerdict(enum.Enum):
    PROPER = "Proper"
    NOT_PROPER = "NotProper"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class Properness:
    verdict: ProperVerdict
    witness: tuple | None = None  # (boundary point, interior fiber point)
    samples: int = 0
    degenerate: int = 0


def is_proper_numeric(F: PolyMap, d, boundary_samples: int, rng: np.random.Generator,
                      box: float | None = None, margin: float = 1e-4) -> Properness:
    """Test whether ``F`` maps the boundary of ``d`` away from ``F(d)``.

    A boundary point whose fiber meets the interior (at ``margin``) is a
    witness of non-properness.
    """
    box = default_box(d) if box is None else box
    degenerate = 0
    for zeta in sample_boundary(d, boundary_samples, rng):
        try:
            fib = solve_fiber(F, F(zeta), box)
        except PositiveDimensionalFiber:
            degenerate += 1
            continue
        if len(fib.points):
            s = signed_distance(d, fib.points)
            inside = np.nonzero(s > margin)[0]
            if len(inside):
                w = fib.points[inside[np.argmax(s[inside])]]
                return Properness(ProperVerdict.NOT_PROPER, (zeta, w), boundary_samples, degenerate)
        if fib.verdict is not Verdict.CLEAN:
            degenerate += 1
    verdict = ProperVerdict.INCONCLUSIVE if degenerate else ProperVerdict.PROPER
    return Properness(verdict, None, boundary_samples, degenerate)
