"""End-to-end classification of V*(Phi, Omega) and deformation experiments."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bergman as bg
from . import domain as dm
from .fiber import (FiberCount, PositiveDimensionalFiber, ProperVerdict, Properness, default_box,
                    generic_fiber_count, is_proper_numeric)
from .monodromy import (Admissibility, AdmissibilityConfig, GroupTable, IntegrityError, LocalInverseClass,
                        MonodromyAction, MonodromyConfig, compute_monodromy, decide_admissibility,
                        detect_deck_group)
from .poly import PolyMap, format_poly, jacobian_det

__all__ = [
    "ImageHasNoInterior",
    "CrossCheckError",
    "BergmanConfig",
    "ClassifyConfig",
    "VNAReport",
    "classify_vna",
    "monomial_pair_classification",
    "deformation_experiment",
    "group_vna_structure",
    "commutation_check",
]

UNBOUNDED = "Unbounded"
INCONCLUSIVE = "Inconclusive"


class ImageHasNoInterior(ValueError):
    """The Jacobian determinant vanishes identically, so Phi(Omega) has no interior point."""


class CrossCheckError(IntegrityError):
    pass


@dataclass
class BergmanConfig:
    max_degree: int = 10
    step: int = 2
    count: int = 2
    max_block: int = bg.MAX_BLOCK


@dataclass
class ClassifyConfig:
    seed: int = 0
    bergman: BergmanConfig | None = field(default_factory=BergmanConfig)
    max_loops: int = 200
    stall: int = 30
    samples: int = 64
    margin: float = dm.DEFAULT_MARGIN
    boundary_samples: int = 32
    fiber_samples: int = 20
    threads: int | None = None


def _workers(cfg: ClassifyConfig) -> int:
    if cfg.threads:
        return cfg.threads
    env = os.environ.get("VNA_THREADS")
    return int(env) if env else (os.cpu_count() or 1)


# ----------------------------------------------------------------------------
# report

def _num(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return float(f"{x:.10g}")
    if isinstance(x, (complex, np.complexfloating)):
        return [_num(x.real), _num(x.imag)]
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    return _num(obj)


@dataclass
class VNAReport:
    problem: dict
    properness: dict
    fiber_count: dict | None
    classes: list[LocalInverseClass]
    admissible_count: int | None
    dim_vna: int | str
    trivial: bool | None
    abelian: dict
    group: dict | None
    commutant_dims_by_N: list[dict]
    diagnostics: dict
    meta: dict = field(default_factory=dict)
    group_table: GroupTable | None = None
    action: MonodromyAction | None = None

    def inconclusive_fields(self) -> list[str]:
        out = []
        if self.properness.get("verdict") == INCONCLUSIVE:
            out.append("properness")
        if self.dim_vna == INCONCLUSIVE:
            out.append("dim_vna")
        if any(c.admissibility is Admissibility.INCONCLUSIVE for c in self.classes):
            out.append("classes")
        if self.fiber_count is not None and self.fiber_count.get("m") is None:
            out.append("fiber_count")
        return out

    def to_json(self) -> dict:
        return _clean({
            "problem": self.problem,
            "properness": self.properness,
            "fiber_count": self.fiber_count,
            "classes": [c.to_json() for c in self.classes],
            "admissible_count": self.admissible_count,
            "dim_vna": self.dim_vna,
            "trivial": self.trivial,
            "abelian": self.abelian,
            "group": self.group,
            "commutant_dims_by_N": self.commutant_dims_by_N,
            "diagnostics": self.diagnostics,
            "meta": self.meta,
        })


# ----------------------------------------------------------------------------
# pieces

def group_vna_structure(g: GroupTable) -> str:
    """Descriptor of G and of L(G)."""
    n = g.order
    sup = str(n).translate(str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹"))
    name = g.name()
    if g.abelian:
        if g.cyclic:
            return f"{name}, L(G) ≅ C{sup}"
        return f"{name}, abelian, not cyclic, L(G) ≅ C{sup}"
    profile = " ".join(f"{o}:{c}" for o, c in g.order_profile.items())
    return f"{name}, nonabelian, order {n}, order profile {profile}"


def _multiset_equal(A: np.ndarray, B: np.ndarray, tol: float = 1e-8) -> bool:
    if A.shape != B.shape:
        return False
    used = np.zeros(len(B), dtype=bool)
    for a in A:
        D = np.linalg.norm(B - a, axis=1)
        D[used] = np.inf
        j = int(np.argmin(D))
        if D[j] > tol * (1 + np.linalg.norm(a)):
            return False
        used[j] = True
    return True


def commutation_check(d, classes: list[LocalInverseClass], rng) -> dict:
    """Compare the composition multisets of every pair of admissible classes.

    ``E_a E_b`` is the symmetrization over ``{sigma o rho : rho in a, sigma in b}``,
    so the operators commute exactly when these multisets agree.
    """
    adm = [c for c in classes if c.admissible]
    if len(adm) <= 1:
        return {"verdict": "Yes", "method": "trivial", "noncommuting_pairs": []}
    if any(not c.forms for c in adm):
        return {"verdict": "Unknown", "method": "no symbolic forms", "noncommuting_pairs": []}
    pts = dm.sample_interior(d, 3, 1e-2, rng)
    bad = []
    for i, a in enumerate(adm):
        for b in adm[i + 1:]:
            ok = True
            for z in pts:
                ab = np.array([s(r(z)) for r in a.forms for s in b.forms])
                ba = np.array([r(s(z)) for r in a.forms for s in b.forms])
                if not _multiset_equal(ab, ba):
                    ok = False
                    break
            if not ok:
                bad.append([a.index, b.index, a.describe(), b.describe()])
    if bad:
        return {"verdict": "No", "method": "symbolic", "witness": bad[0], "noncommuting_pairs": bad}
    return {"verdict": "Yes", "method": "symbolic", "noncommuting_pairs": []}


def _commutant_at(F: PolyMap, d, N: int, max_block: int):
    model = bg.BergmanModel(d, N)
    gens = [bg.mult_matrix(model, p) for p in F.components]
    try:
        res = bg.commutant_dimension(model, gens, include_adjoints=True, max_block=max_block)
        return model, gens, res, None
    except bg.AmbiguousRank as e:
        return model, gens, None, f"AmbiguousRank(gap={e.gap:.3g})"
    except bg.CommutantTooLarge as e:
        return model, gens, None, f"TooLarge({e})"


def _stable_dim(entries: list[dict]):
    dims = [e["dim"] for e in entries]
    if len(dims) >= 2 and dims[-1] is not None and dims[-1] == dims[-2]:
        return dims[-1]
    if len(dims) >= 3 and all(x is not None for x in dims) and all(b > a for a, b in zip(dims, dims[1:])):
        return UNBOUNDED
    return INCONCLUSIVE


def _generation_check(model, gens, res, classes, g) -> dict:
    """Class operators commute with the generators and span the computed commutant."""
    adm = [c for c in classes if c.admissible]
    if not adm or any(not c.forms for c in adm):
        return {"ran": False}
    try:
        mats = [bg.class_operator_matrix(model, c.forms).entries for c in adm]
    except bg.UnsupportedClassAction as e:
        return {"ran": False, "reason": str(e)}
    resid = max(bg.commutator_residual(model, E, G, g) for E in mats for G in gens)
    low = res.low_indices
    M = np.stack([E[np.ix_(low, low)].ravel() for E in mats], axis=1)
    B = np.stack([b.ravel() for b in res.basis], axis=1) if res.basis else np.zeros((M.shape[0], 0))
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > 1e-8 * s.max()))
    span = 0.0
    if B.shape[1]:
        coef, *_ = np.linalg.lstsq(M, B, rcond=None)
        span = float(np.linalg.norm(M @ coef - B) / max(np.linalg.norm(B), 1e-300))
    return {"ran": True, "N": model.N, "commutator_residual": resid, "class_operator_rank": rank,
            "basis_span_residual": span}


def _adjoint_identities(d, classes) -> list[dict]:
    if not isinstance(d, (dm.Polydisk, dm.Ball, dm.Annulus)):
        return []
    model = bg.BergmanModel(d, 8)
    by_index = {c.index: c for c in classes}
    out = []
    for c in classes:
        if not (c.admissible and c.forms) or c.inverse_index is None:
            continue
        inv = by_index[c.inverse_index]
        if not inv.forms:
            continue
        try:
            r = bg.check_adjoint_identity(model, c.forms, inv.forms)
        except bg.UnsupportedClassAction:
            continue
        out.append({"class": c.index, "inverse": inv.index, "residual": r})
    return out


# ----------------------------------------------------------------------------
# main entry

def classify_vna(F: PolyMap, d, cfg: ClassifyConfig | None = None, name: str | None = None) -> VNAReport:
    """Classify V*(Phi, Omega) from local inverses, cross-checked by the truncated commutant."""
    cfg = cfg or ClassifyConfig()
    if F.dim_in != d.dim:
        raise ValueError(f"map has {F.dim_in} variables but the domain has dimension {d.dim}")
    problem = {
        "name": name,
        "map": [format_poly(p) for p in F.components],
        "domain": dm.domain_to_json(d),
        "seed": int(cfg.seed),
        "config": {
            "bergman": None if cfg.bergman is None else vars(cfg.bergman),
            "monodromy": {"max_loops": cfg.max_loops, "stall": cfg.stall, "samples": cfg.samples,
                          "margin": cfg.margin},
        },
    }
    ss = np.random.SeedSequence(cfg.seed)
    rng_prop, rng_count, rng_group, rng_comm = (np.random.default_rng(s) for s in ss.spawn(4))
    diagnostics: dict = {"seed": int(cfg.seed)}

    if F.is_square and jacobian_det(F).is_zero():
        raise ImageHasNoInterior(
            "the Jacobian determinant of the map vanishes identically, so its image has no interior point; "
            "the local-inverse classification needs an open image")

    commutant_entries: list[dict] = []
    model_data = {}
    if cfg.bergman is not None and isinstance(d, (dm.Polydisk, dm.Ball, dm.Annulus)):
        Ns = [cfg.bergman.max_degree + k * cfg.bergman.step for k in range(cfg.bergman.count)]
        with ThreadPoolExecutor(max_workers=_workers(cfg)) as pool:
            results = list(pool.map(lambda N: _commutant_at(F, d, N, cfg.bergman.max_block), Ns))
        for N, (model, gens, res, err) in zip(Ns, results):
            entry = {"N": N, "dim": None if res is None else res.dim,
                     "singular_gap": None if res is None else res.singular_gap}
            if err:
                entry["error"] = err
            else:
                entry["nullspace_gap"] = res.null_gap
                entry["blocks"] = res.blocks
            commutant_entries.append(entry)
            model_data[N] = (model, gens, res)
    commutant_dim = _stable_dim(commutant_entries) if commutant_entries else None

    if not F.is_square:
        # a single symbol (or too few) on a higher-dimensional domain: no finite fibers,
        # only the truncated commutant speaks
        dim_vna = commutant_dim if commutant_dim is not None else INCONCLUSIVE
        diagnostics["dim_source"] = "commutant"
        return VNAReport(
            problem=problem,
            properness={"verdict": "NotApplicable", "reason": "map is not square"},
            fiber_count=None, classes=[], admissible_count=None, dim_vna=dim_vna,
            trivial=(dim_vna == 1) if isinstance(dim_vna, int) else (False if dim_vna == UNBOUNDED else None),
            abelian={"verdict": "Unknown", "method": "no local inverses"}, group=None,
            commutant_dims_by_N=commutant_entries, diagnostics=diagnostics)

    box = default_box(d)
    prop = is_proper_numeric(F, d, cfg.boundary_samples, rng_prop, box)
    properness = {"verdict": prop.verdict.value, "samples": prop.samples, "degenerate": prop.degenerate}
    if prop.witness is not None:
        properness["witness"] = {"boundary_point": prop.witness[0], "interior_point": prop.witness[1]}

    fc: FiberCount = generic_fiber_count(F, d, cfg.fiber_samples, rng_count, box)
    fiber_count = {"m": fc.m, "constant": fc.constant, "samples": len(fc.counts), "skipped": fc.skipped,
                   "touched_box": fc.touched_box}

    action = compute_monodromy(F, d, MonodromyConfig(max_loops=cfg.max_loops, stall=cfg.stall, seed=cfg.seed), box)
    classes = decide_admissibility(F, d, action, AdmissibilityConfig(samples=cfg.samples, margin=cfg.margin,
                                                                     seed=cfg.seed))
    fiber_count["m_box"] = action.m

    by_index = {c.index: c for c in classes}
    for c in classes:
        if c.admissible and c.inverse_index is not None:
            inv = by_index[c.inverse_index]
            if inv.admissibility is Admissibility.NOT_ADMISSIBLE:
                raise IntegrityError(f"class {c.index} is admissible but its inverse class {inv.index} is not")
    if prop.verdict is ProperVerdict.PROPER and any(
            c.admissibility is Admissibility.NOT_ADMISSIBLE for c in classes):
        raise IntegrityError("a proper map has a non-admissible class")

    admissible = [c for c in classes if c.admissible]
    undecided = any(c.admissibility is Admissibility.INCONCLUSIVE for c in classes)
    admissible_count = len(admissible)

    group_table = detect_deck_group(F, d, classes, action, rng_group)
    group = None
    if group_table is not None:
        group = {
            "order": group_table.order,
            "abelian": group_table.abelian,
            "cyclic": group_table.cyclic,
            "order_profile": {str(k): v for k, v in group_table.order_profile.items()},
            "descriptor": group_vna_structure(group_table),
            "elements": [f.describe() for f in group_table.elements],
            "table": group_table.table,
        }
    abelian = commutation_check(d, classes, rng_comm)

    if commutant_dim is None:
        dim_vna = INCONCLUSIVE if undecided else admissible_count
        diagnostics["dim_source"] = "admissible classes"
    else:
        dim_vna = commutant_dim
        diagnostics["dim_source"] = "commutant"
        if isinstance(commutant_dim, int) and not undecided and commutant_dim != admissible_count:
            raise CrossCheckError(
                f"commutant dimension {commutant_dim} disagrees with {admissible_count} admissible classes")
        last = commutant_entries[-1]["N"]
        model, gens, res = model_data[last]
        if res is not None:
            g = res.g
            diagnostics["generation_check"] = _generation_check(model, gens, res, classes, g)

    trivial = (dim_vna == 1) if isinstance(dim_vna, int) else (False if dim_vna == UNBOUNDED else None)
    diagnostics.update({
        "base_point": action.base_point,
        "loops_used": action.loops_used,
        "discarded_loops": action.discarded_loops,
        "permutations": len(action.permutations),
        "min_jacobian_tracked": action.min_jacobian,
        "box": box,
        "adjoint_identity": _adjoint_identities(d, classes),
    })
    return VNAReport(
        problem=problem, properness=properness, fiber_count=fiber_count, classes=classes,
        admissible_count=admissible_count, dim_vna=dim_vna, trivial=trivial, abelian=abelian, group=group,
        commutant_dims_by_N=commutant_entries, diagnostics=diagnostics, group_table=group_table, action=action)


# ----------------------------------------------------------------------------
# exact fast path and deformations

def monomial_pair_classification(k: int, l: int, k2: int, l2: int) -> dict:
    """Exact count of root-of-unity automorphisms of ``(z1^k z2^l, z1^k2 z2^l2)`` on the bidisk.

    Every such automorphism has the form ``(e1 z1, e2 z2)`` with both
    ``e1^D = e2^D = 1`` for ``D = k l2 - k2 l``, so a brute force over
    ``Z_|D| x Z_|D|`` is exhaustive.
    """
    D = k * l2 - k2 * l
    if D == 0:
        raise ImageHasNoInterior(f"exponent determinant of ({k},{l},{k2},{l2}) is zero")
    q = abs(D)
    pairs = [(a, b) for a in range(q) for b in range(q)
             if (k * a + l * b) % q == 0 and (k2 * a + l2 * b) % q == 0]
    return {"D": D, "trivial": q == 1, "dim": len(pairs), "automorphisms": pairs}


def deformation_experiment(F: PolyMap, base, removed, cfg: ClassifyConfig | None = None,
                           name: str | None = None) -> dict:
    """Classify on ``base`` and on ``base`` minus closed balls; report collapsed classes."""
    cfg = cfg or ClassifyConfig()
    balls = tuple(removed) if isinstance(removed, (list, tuple)) else (removed,)
    after_domain = dm.Difference(base, balls)
    with ThreadPoolExecutor(max_workers=min(2, _workers(cfg))) as pool:
        fb = pool.submit(classify_vna, F, base, cfg, name)
        fa = pool.submit(classify_vna, F, after_domain, cfg, name)
        before, after = fb.result(), fa.result()
    key = lambda c: c.describe() if c.forms else f"#{c.index}"
    after_adm = {key(c) for c in after.classes if c.admissible}
    collapsed = [key(c) for c in before.classes if c.admissible and key(c) not in after_adm]
    if isinstance(before.dim_vna, int) and isinstance(after.dim_vna, int) and after.dim_vna > before.dim_vna:
        raise IntegrityError(f"dimension grew under deformation: {before.dim_vna} -> {after.dim_vna}")
    if before.abelian.get("verdict") == "Yes" and not (after.abelian.get("verdict") == "Yes" or after.trivial):
        raise IntegrityError("abelian algebra became nonabelian under deformation")
    return {"before": before, "after": after, "collapsed_classes": collapsed,
            "monotone": not (isinstance(before.dim_vna, int) and isinstance(after.dim_vna, int))
            or after.dim_vna <= before.dim_vna}
