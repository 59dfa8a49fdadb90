"""Monodromy of fibers over loops, classes of local inverses and their admissibility.

All fiber points over a moving base point are tracked together with an
Euler predictor and a Newton corrector.  Loops at the base point permute the
fiber; orbits of the generated group are the classes of local inverses.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import domain as dm
from .fiber import Verdict, default_box, solve_fiber
from .forms import MonomialForm, fit_coordinate
from .poly import PolyMap, jacobian_det

__all__ = [
    "PathNearBranchLocus",
    "IntegrityError",
    "Admissibility",
    "MonodromyConfig",
    "AdmissibilityConfig",
    "MonodromyAction",
    "LocalInverseClass",
    "GroupTable",
    "track_path",
    "compute_monodromy",
    "decide_admissibility",
    "detect_deck_group",
    "invariant_factors",
    "class_values",
]

RESIDUAL_TOL = 1e-12
SEPARATION_MIN = 1e-5
DET_MIN = 1e-10
H_INIT = 0.02
H_MAX = 0.05
H_MIN = 1e-8


class PathNearBranchLocus(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t:.6g}")
        self.t = t


class IntegrityError(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# path tracking

def _min_separation(W: np.ndarray) -> float:
    if len(W) < 2:
        return math.inf
    D = np.linalg.norm(W[:, None, :] - W[None, :, :], axis=2)
    D[np.diag_indices_from(D)] = np.inf
    return float(D.min())


def _track_segment(F: PolyMap, d, a, b, W: np.ndarray, stats: dict) -> np.ndarray:
    W = W.copy()
    t, h = 0.0, H_INIT
    scale = 1.0 + float(np.abs(F(dm.segment_point(d, a, b, 0.0))).max())
    tol = RESIDUAL_TOL * scale
    while t < 1.0:
        h = min(h, 1.0 - t)
        J = F.jacobian(W)
        dets = np.abs(np.linalg.det(J))
        stats["min_jacobian"] = min(stats["min_jacobian"], float(dets.min()))
        if dets.min() < DET_MIN:
            raise PathNearBranchLocus("Jacobian nearly singular", t)
        g = dm.segment_point(d, a, b, t)
        dg = F.jacobian(g) @ dm.segment_velocity(d, a, b, t)
        sep = _min_separation(W)
        t1 = t + h
        target = F(dm.segment_point(d, a, b, t1))
        P = W + h * np.linalg.solve(J, np.broadcast_to(dg, W.shape)[..., None])[..., 0]
        ok = False
        V = P
        for _ in range(8):
            r = F(V) - target
            if np.abs(r).max() <= tol:
                ok = True
                break
            V = V - np.linalg.solve(F.jacobian(V), r[..., None])[..., 0]
            if not np.all(np.isfinite(V)):
                break
        if ok:
            moved = np.linalg.norm(V - P, axis=1).max()
            new_sep = _min_separation(V)
            ok = moved <= 0.1 * min(sep, 1.0 + np.abs(W).max()) and new_sep >= SEPARATION_MIN
        if ok:
            W, t = V, t1
            stats["steps"] += 1
            h = min(H_MAX, 1.5 * h)
        else:
            h *= 0.5
            stats["rejections"] += 1
            if h < H_MIN:
                raise PathNearBranchLocus("step size underflow", t)
    return W


def track_path(F: PolyMap, path, start, domain=None, stats: dict | None = None) -> np.ndarray:
    """Continue fiber points along the polyline ``path`` of base points.

    ``start`` is one fiber point over ``path[0]`` or an (m, d) array of them;
    tracking several at once also guards against path jumping.  ``domain``
    selects the segment geometry (log-polar on the annulus).
    """
    path = [np.asarray(p, dtype=complex) for p in path]
    W = np.array(start, dtype=complex)
    single = W.ndim == 1
    W = W.reshape(-1, F.dim_in)
    c0 = F(path[0])
    if np.abs(F(W) - c0).max() > 1e-10 * (1 + np.abs(c0).max()):
        raise ValueError("start is not in the fiber over the first path point")
    stats = {"min_jacobian": math.inf, "steps": 0, "rejections": 0} if stats is None else stats
    d = domain if domain is not None else dm.Polydisk(F.dim_in)
    for a, b in zip(path[:-1], path[1:]):
        W = _track_segment(F, d, a, b, W, stats)
    return W[0] if single else W


# ----------------------------------------------------------------------------
# loops and orbits

@dataclass
class MonodromyConfig:
    max_loops: int = 200
    stall: int = 30
    seed: int = 0
    loop_margin: float = 1e-2
    base_margin: float = 5e-2
    retries: int = 5


@dataclass
class MonodromyAction:
    base_point: np.ndarray
    base_index: int
    fiber: np.ndarray  # (m, d)
    loops_used: int
    permutations: list[tuple[int, ...]]
    orbits: list[list[int]]
    min_jacobian: float
    discarded_loops: int = 0
    rebases: int = 0
    box: float = math.inf

    @property
    def m(self) -> int:
        return len(self.fiber)

    def orbit_of(self, i: int) -> int:
        for k, orb in enumerate(self.orbits):
            if i in orb:
                return k
        raise KeyError(i)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        self.parent[max(ri, rj)] = min(ri, rj)
        return True

    def groups(self):
        out: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            out.setdefault(self.find(i), []).append(i)
        return sorted(out.values())


def _match(end: np.ndarray, fiber: np.ndarray, tol: float = 1e-6) -> tuple[int, ...] | None:
    D = np.linalg.norm(end[:, None, :] - fiber[None, :, :], axis=2)
    perm = tuple(int(j) for j in D.argmin(axis=1))
    if len(set(perm)) != len(perm) or D.min(axis=1).max() > tol * (1 + np.abs(fiber).max()):
        return None
    return perm


def _choose_base(F: PolyMap, d, rng, cfg: MonodromyConfig, box: float):
    for attempt in range(50):
        z0 = dm.sample_interior(d, 1, cfg.base_margin, rng)[0]
        fib = solve_fiber(F, F(z0), box)
        if fib.verdict is not Verdict.CLEAN or len(fib) == 0:
            continue
        dets = np.abs(np.linalg.det(F.jacobian(fib.points)))
        if dets.min() <= 1e-6 or _min_separation(fib.points) <= 1e-3:
            continue
        idx = int(np.argmin(np.linalg.norm(fib.points - z0, axis=1)))
        order = [idx] + [i for i in range(len(fib)) if i != idx]
        return z0, fib.points[order], attempt
    raise IntegrityError("no regular base point found after 50 attempts")


def _circle_loop(z0, k: int, n: int = 8):
    verts = []
    for j in range(n + 1):
        z = z0.copy()
        z[k] = z0[k] * np.exp(2j * np.pi * j / n)
        verts.append(z)
    verts[-1] = z0.copy()
    return verts


def _path_clear(d, path, margin) -> bool:
    return all(dm.segment_clear(d, a, b, margin) for a, b in zip(path[:-1], path[1:]))


def _random_loop(d, z0, rng, margin):
    for _ in range(50):
        p1, p2 = dm.sample_interior(d, 2, margin, rng)
        path = [z0, p1, p2, z0.copy()]
        if _path_clear(d, path, margin):
            return path
    return None


def compute_monodromy(F: PolyMap, d, cfg: MonodromyConfig | None = None,
                      box: float | None = None) -> MonodromyAction:
    """Permutation action of loops at a random regular base point."""
    cfg = cfg or MonodromyConfig()
    if not F.is_square or jacobian_det(F).is_zero():
        raise ValueError("monodromy needs a square map with nonvanishing Jacobian determinant")
    box = default_box(d) if box is None else box
    ss = np.random.SeedSequence(cfg.seed)
    base_rng = np.random.default_rng(ss.spawn(1)[0])
    z0, fiber, rebases = _choose_base(F, d, base_rng, cfg, box)
    m = len(fiber)
    uf = _UnionFind(m)
    perms: set[tuple[int, ...]] = set()
    stats = {"min_jacobian": math.inf, "steps": 0, "rejections": 0}
    loop_seeds = ss.spawn(cfg.max_loops + 1)[1:]
    stall = used = discarded = 0
    for n in range(cfg.max_loops):
        if m == 1 or stall >= cfg.stall:
            break
        rng = np.random.default_rng(loop_seeds[n])
        perm = None
        for attempt in range(cfg.retries):
            if n < F.dim_in and attempt == 0:
                path = _circle_loop(z0, n)
                if not _path_clear(d, path, cfg.loop_margin):
                    continue
            else:
                path = _random_loop(d, z0, rng, cfg.loop_margin)
                if path is None:
                    continue
            try:
                end = track_path(F, path, fiber, d, stats)
            except PathNearBranchLocus:
                discarded += 1
                continue
            perm = _match(end, fiber)
            if perm is None:
                discarded += 1
                continue
            break
        used += 1
        if perm is None:
            stall += 1
            continue
        merged = False
        for i, j in enumerate(perm):
            merged |= uf.union(i, j)
        perms.add(perm)
        stall = 0 if merged else stall + 1
    action = MonodromyAction(
        base_point=z0,
        base_index=0,
        fiber=fiber,
        loops_used=used,
        permutations=sorted(perms),
        orbits=uf.groups(),
        min_jacobian=stats["min_jacobian"],
        discarded_loops=discarded,
        rebases=rebases,
        box=box,
    )
    _check_action(F, action)
    return action


def _check_action(F: PolyMap, action: MonodromyAction):
    c = F(action.base_point)
    if np.abs(F(action.fiber) - c).max() > 1e-10 * (1 + np.abs(c).max()):
        raise IntegrityError("fiber points do not solve the fiber equation")
    for perm in action.permutations:
        if sorted(perm) != list(range(action.m)):
            raise IntegrityError(f"not a permutation: {perm}")
        for orb in action.orbits:
            if {perm[i] for i in orb} != set(orb):
                raise IntegrityError("orbit partition not stable under a loop permutation")


# ----------------------------------------------------------------------------
# classes and admissibility

class Admissibility(enum.Enum):
    ADMISSIBLE = "Admissible"
    NOT_ADMISSIBLE = "NotAdmissible"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class AdmissibilityConfig:
    samples: int = 64
    margin: float = dm.DEFAULT_MARGIN
    seed: int = 0
    sample_margin: float = 1e-3


@dataclass
class Witness:
    path: list  # base-point polyline from z0
    point: np.ndarray  # base point z
    partner: np.ndarray  # value of a member at z
    exit_distance: float
    method: str

    def to_json(self) -> dict:
        return {
            "point": [_cjson(v) for v in self.point],
            "partner": [_cjson(v) for v in self.partner],
            "exit_distance": float(self.exit_distance),
            "method": self.method,
        }


def _cjson(v) -> list[float]:
    v = complex(v)
    return [round(v.real, 12) + 0.0, round(v.imag, 12) + 0.0]


@dataclass
class LocalInverseClass:
    index: int
    member_indices: list[int]
    admissibility: Admissibility
    witness: Witness | None = None
    forms: list[MonomialForm] | None = None
    is_identity_class: bool = False
    method: str = "sampling"
    inverse_index: int | None = None

    @property
    def size(self) -> int:
        return len(self.member_indices)

    @property
    def admissible(self) -> bool:
        return self.admissibility is Admissibility.ADMISSIBLE

    def describe(self) -> str:
        if self.forms:
            return "{" + ", ".join(f.describe() for f in self.forms) + "}"
        return "{" + ", ".join(f"#{i}" for i in self.member_indices) + "}"

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "members": self.member_indices,
            "size": self.size,
            "admissibility": self.admissibility.value,
            "method": self.method,
            "identity": self.is_identity_class,
            "forms": [f.to_json() for f in self.forms] if self.forms else None,
            "text": self.describe(),
            "inverse_class": self.inverse_index,
            "witness": self.witness.to_json() if self.witness else None,
        }


def _log_increment(d, a, b) -> np.ndarray:
    if isinstance(dm._base_of(d), dm.Annulus):
        la, lb = dm._log_pair(a, b)
        return lb - la
    return np.log(b / a)


@dataclass
class _Transport:
    z: np.ndarray
    path: list
    values: np.ndarray  # (m, d) label values at z
    logs: np.ndarray  # continuous logarithm of z along the path


def _transport(F, d, action, z, rng, margin) -> _Transport | None:
    z0 = action.base_point
    paths = []
    if dm.segment_clear(d, z0, z, margin):
        paths.append([z0, z])
    for _ in range(8):
        mid = dm.sample_interior(d, 1, margin, rng)[0]
        if dm.segment_clear(d, z0, mid, margin) and dm.segment_clear(d, mid, z, margin):
            paths.append([z0, mid, z])
        if len(paths) >= 4:
            break
    for path in paths:
        try:
            vals = track_path(F, path, action.fiber, d)
            # tracking back must return every label to itself, else a jump happened
            back = track_path(F, path[::-1], vals, d)
        except PathNearBranchLocus:
            continue
        if np.abs(back - action.fiber).max() > 1e-8 * (1 + np.abs(action.fiber).max()):
            continue
        logs = np.log(z0.astype(complex))
        for a, b in zip(path[:-1], path[1:]):
            logs = logs + _log_increment(d, a, b)
        return _Transport(z=np.asarray(z, dtype=complex), path=path, values=vals, logs=logs)
    return None


def _targeted_points(F, d, margin):
    """Points whose fiber meets a removed ball center: partners there leave the domain."""
    out = []
    for ball in dm.removed_balls(d):
        c = np.array(ball.center, dtype=complex)
        fib = solve_fiber(F, F(c), default_box(d))
        for w in fib.points:
            if dm.signed_distance(d, w) > margin and np.linalg.norm(w - c) > 1e-9:
                out.append(w)
    return out


def _fit_class_forms(members, transports, action) -> list[MonomialForm] | None:
    """Recognize ``w_i = eps_i z_{perm(i)}^{p_i}`` for every member, validated on all samples."""
    z0 = action.base_point
    logs0 = np.log(z0)
    forms = []
    for j in members:
        per_coord = []
        for i in range(len(z0)):
            cands = fit_coordinate(action.fiber[j, i], z0, logs0)
            cands = [c for c in cands if all(
                abs(tr.values[j, i] - _coord_value(c, tr.logs)) <= 1e-7 * (1 + abs(tr.values[j, i]))
                for tr in transports)]
            if not cands:
                return None
            per_coord.append(cands[0])
        perm = tuple(c[0] for c in per_coord)
        if sorted(perm) != list(range(len(z0))):
            return None
        forms.append(MonomialForm(perm, tuple(c[1] for c in per_coord), tuple(c[2] for c in per_coord)))
    return forms


def _coord_value(cand, logs) -> complex:
    k, p, e = cand
    return np.exp(2j * np.pi * float(e)) * np.exp(float(p) * logs[k])


def class_values(forms: list[MonomialForm], z) -> np.ndarray:
    """All values of the class's branches at ``z`` (principal branches)."""
    return np.array([f(z) for f in forms])


def _exact_admissibility(d, forms: list[MonomialForm], rng) -> tuple[Admissibility | None, Witness | None]:
    """Exact verdict for monomial actions on polydisk, ball, annulus and their
    differences with unitary-linear actions; None when no rule applies."""
    base = dm._base_of(d)
    powers = [p for f in forms for p in f.powers]
    if isinstance(base, dm.Polydisk):
        ok = all(p > 0 for p in powers)
    elif isinstance(base, dm.Ball):
        ok = all(p > 0 for p in powers) if base.dim == 1 else all(p >= 1 for p in powers)
    elif isinstance(base, dm.Annulus):
        ok = all(abs(p) <= 1 for p in powers)
    else:
        return None, None
    if not ok:
        return Admissibility.NOT_ADMISSIBLE, _scan_witness(d, forms, rng)
    if isinstance(d, dm.Difference):
        if not all(f.unitary_linear for f in forms):
            return None, None
        balls = list(d.removed)
        for f in forms:
            inv = f.inverse()
            for ball in balls:
                c = np.array(ball.center, dtype=complex)
                pre = inv(c)
                if any(np.linalg.norm(pre - np.array(b2.center)) <= 1e-12 and abs(b2.radius - ball.radius) <= 1e-12
                       for b2 in balls):
                    continue
                return Admissibility.NOT_ADMISSIBLE, Witness(
                    path=[], point=pre, partner=f(pre),
                    exit_distance=float(-dm.signed_distance(d, f(pre))), method="symbolic")
    return Admissibility.ADMISSIBLE, None


def _scan_witness(d, forms, rng) -> Witness | None:
    """Search for an interior point sent outside by some branch."""
    best = None
    pts = dm.sample_interior(d, 4000, 1e-3, rng)
    dim = pts.shape[1]
    # concentrate mass on single coordinates: small modulus drives fractional
    # and negative powers outward
    extra = []
    for k in range(dim):
        for s in np.linspace(0.02, 0.98, 49):
            z = np.full(dim, 0.0, dtype=complex)
            rest = math.sqrt(max(0.0, (1 - 1e-3) ** 2 - s ** 2) / max(dim - 1, 1)) if dim > 1 else 0.0
            z[:] = rest * 0.999
            z[k] = s
            extra.append(z * np.exp(0.3j))
    cand = np.concatenate([pts, np.array(extra)])
    cand = cand[dm.signed_distance(d, cand) > 1e-3]
    for f in forms:
        vals = f(cand)
        s = dm.signed_distance(d, vals)
        i = int(np.argmin(s))
        if s[i] < 0 and (best is None or -s[i] > best.exit_distance):
            best = Witness(path=[], point=cand[i], partner=vals[i], exit_distance=float(-s[i]), method="symbolic")
    return best


def decide_admissibility(F: PolyMap, d, action: MonodromyAction,
                         cfg: AdmissibilityConfig | None = None) -> list[LocalInverseClass]:
    """Admissibility verdict and recognized symbolic form for every monodromy class."""
    cfg = cfg or AdmissibilityConfig()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    targets = list(dm.sample_interior(d, cfg.samples, cfg.sample_margin, rng)) + _targeted_points(F, d, cfg.margin)
    transports = []
    skipped = 0
    for z in targets:
        tr = _transport(F, d, action, z, rng, cfg.sample_margin / 10)
        if tr is None:
            skipped += 1
        else:
            transports.append(tr)
    overall_inconclusive = skipped > 0.5 * len(targets)

    classes = []
    for k, orb in enumerate(action.orbits):
        verdict = Admissibility.ADMISSIBLE
        witness = None
        band = False
        for tr in transports:
            s = dm.signed_distance(d, tr.values[orb])
            if s.min() < -cfg.margin:
                i = int(np.argmin(s))
                dist = float(-s[i])
                if witness is None or dist > witness.exit_distance:
                    witness = Witness(path=tr.path, point=tr.z, partner=tr.values[orb[i]],
                                      exit_distance=dist, method="sampling")
                verdict = Admissibility.NOT_ADMISSIBLE
            elif s.min() <= cfg.margin:
                band = True
        if verdict is Admissibility.ADMISSIBLE and (band or overall_inconclusive):
            verdict = Admissibility.INCONCLUSIVE
        forms = _fit_class_forms(orb, transports, action) if transports else None
        method = "sampling"
        if forms is not None:
            exact, exact_witness = _exact_admissibility(d, forms, rng)
            if exact is not None:
                if exact is Admissibility.NOT_ADMISSIBLE and exact_witness is None:
                    exact_witness = witness
                verdict, witness, method = exact, exact_witness if exact is Admissibility.NOT_ADMISSIBLE else None, "symbolic"
        identity = action.base_index in orb and all(p[action.base_index] == action.base_index for p in action.permutations)
        classes.append(LocalInverseClass(
            index=k, member_indices=list(orb), admissibility=verdict, witness=witness,
            forms=forms, is_identity_class=identity, method=method))
    _assign_inverses(F, d, action, classes)
    return classes


def _assign_inverses(F, d, action, classes):
    z0 = action.base_point
    for cls in classes:
        label = None
        if cls.forms:
            pre = cls.forms[0].inverse()(z0)
            D = np.linalg.norm(action.fiber - pre, axis=1)
            if D.min() <= 1e-7 * (1 + np.abs(pre).max()):
                label = int(D.argmin())
        if label is None:
            w = action.fiber[cls.member_indices[0]]
            if dm.signed_distance(d, w) > 1e-3 and dm.segment_clear(d, w, z0, 1e-4):
                try:
                    # over the base point w the fiber is the same set; follow z0 back
                    end = track_path(F, [w, z0], action.fiber, d)
                    D = np.linalg.norm(action.fiber - end[action.base_index], axis=1)
                    if D.min() <= 1e-6:
                        label = int(D.argmin())
                except PathNearBranchLocus:
                    pass
        if label is not None:
            cls.inverse_index = action.orbit_of(label)


# ----------------------------------------------------------------------------
# deck group

@dataclass
class GroupTable:
    elements: list[MonomialForm]
    table: list[list[int]]  # table[a][b] = index of elements[a] o elements[b]
    class_indices: list[int] = field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> int:
        return next(i for i, f in enumerate(self.elements) if f.is_identity)

    @property
    def abelian(self) -> bool:
        n = self.order
        return all(self.table[a][b] == self.table[b][a] for a in range(n) for b in range(n))

    def element_order(self, a: int) -> int:
        e, x, k = self.identity, a, 1
        while x != e:
            x = self.table[a][x]
            k += 1
        return k

    @property
    def order_profile(self) -> dict[int, int]:
        return dict(sorted(Counter(self.element_order(a) for a in range(self.order)).items()))

    @property
    def cyclic(self) -> bool:
        return any(self.element_order(a) == self.order for a in range(self.order))

    def noncommuting_pair(self):
        for a in range(self.order):
            for b in range(a + 1, self.order):
                if self.table[a][b] != self.table[b][a]:
                    return a, b
        return None

    def name(self) -> str:
        n = self.order
        if self.abelian:
            return "×".join(f"Z{q}" for q in invariant_factors(self.order_profile)) or "Z1"
        profile = self.order_profile
        if n == 6:
            return "S3"
        if n == 8:
            return "D4" if profile.get(2, 0) == 5 else "Q8"
        return f"G{n}"


def invariant_factors(profile: dict[int, int]) -> list[int]:
    """Invariant factors of a finite abelian group from its element-order counts."""
    n = sum(profile.values())
    if n == 1:
        return []
    factors: dict[int, list[int]] = {}
    rem = n
    p = 2
    primes = []
    while rem > 1:
        if rem % p == 0:
            primes.append(p)
            while rem % p == 0:
                rem //= p
        p += 1
    for p in primes:
        # |G[p^k]| = number of elements whose order divides p^k
        sizes = []
        k = 0
        while True:
            cnt = sum(c for o, c in profile.items() if (p ** k) % o == 0)
            sizes.append(round(math.log(cnt, p)))
            if k > 0 and sizes[-1] == sizes[-2]:
                break
            k += 1
        # number of cyclic factors of order >= p^k is sizes[k] - sizes[k-1]
        at_least = [sizes[k] - sizes[k - 1] for k in range(1, len(sizes))]
        exps = []
        for k, cnt in enumerate(at_least, start=1):
            nxt = at_least[k] if k < len(at_least) else 0
            exps += [k] * (cnt - nxt)
        factors[p] = sorted(exps, reverse=True)
    width = max(len(v) for v in factors.values())
    out = []
    for i in range(width):
        q = 1
        for p, exps in factors.items():
            if i < len(exps):
                q *= p ** exps[i]
        out.append(q)
    return sorted(out)


def detect_deck_group(F: PolyMap, d, classes: list[LocalInverseClass], action: MonodromyAction,
                      rng: np.random.Generator | None = None) -> GroupTable | None:
    """Composition table of the admissible classes when all are global single-valued maps."""
    adm = [c for c in classes if c.admissible]
    if not adm or any(c.size != 1 or not c.forms or not c.forms[0].integral for c in adm):
        return None
    rng = rng or np.random.default_rng(0)
    elements = [c.forms[0] for c in adm]
    pts = dm.sample_interior(d, 6, 1e-2, rng)
    vals = [f(pts) for f in elements]
    n = len(elements)
    table = [[-1] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            comp = elements[a](vals[b])
            hits = [c for c in range(n) if np.abs(comp - vals[c]).max() <= 1e-9]
            if len(hits) != 1:
                raise IntegrityError(f"composition of elements {a}, {b} is not an element")
            table[a][b] = hits[0]
    g = GroupTable(elements=elements, table=table, class_indices=[c.index for c in adm])
    _check_group(g)
    return g


def _check_group(g: GroupTable):
    n = g.order
    try:
        e = g.identity
    except StopIteration:
        raise IntegrityError("no identity element")
    for a in range(n):
        if sorted(g.table[a]) != list(range(n)) or sorted(row[a] for row in g.table) != list(range(n)):
            raise IntegrityError("composition table is not a Latin square")
        if e not in g.table[a]:
            raise IntegrityError("missing inverse")
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if g.table[g.table[a][b]][c] != g.table[a][g.table[b][c]]:
                    raise IntegrityError("composition is not associative")


