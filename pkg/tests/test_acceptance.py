"""End-to-end acceptance criteria, one PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed at the end of the session.  Every tolerance below is pinned.
"""

import itertools
import json
import re
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import mc_norm_sq
from vna import domain as dm
from vna.bergman import (
    BergmanModel, UnsupportedClassAction, check_adjoint_identity, commutant_dimension, commutator_residual,
    monomial_norm_sq, mult_matrix,
)
from vna.classify import monomial_pair_classification
from vna.cli import example_registry, main
from vna.fiber import generic_fiber_count
from vna.forms import MonomialForm
from vna.poly import parse_poly, parse_polymap

GAP_MIN = 1e3
ZHUKOVSKI_TOL = 1e-8
ADJOINT_TOL = 1e-10
NORM_REL_TOL = 0.01
FIBER_SAMPLES = 20
NORM_MONOMIALS = 50
ADJOINT_N = 8

BALL2 = {"type": "ball", "dim": 2}
TIMESTAMP = re.compile(rb'"timestamp": "[^"]*"')

pytestmark = pytest.mark.slow


class Runner:
    """Runs registry entries through the command line and caches the reports."""

    def __init__(self, root):
        self.root = root
        self.cache = {}

    def run(self, name, **overrides):
        key = (name, json.dumps(overrides, sort_keys=True))
        if key not in self.cache:
            cfg = example_registry()[name]
            cfg.update(overrides)
            tag = f"{name}_{len(self.cache)}"
            path = self.root / f"{tag}.json"
            out = self.root / f"{tag}.report.json"
            path.write_text(json.dumps(cfg))
            t0 = time.perf_counter()
            code = main(["run", "--config", str(path), "--out", str(out)])
            secs = time.perf_counter() - t0
            raw = out.read_bytes() if out.exists() else b"{}"
            self.cache[key] = (code, json.loads(raw), raw, secs, path)
        return self.cache[key]


@pytest.fixture(scope="module")
def runner(tmp_path_factory):
    return Runner(tmp_path_factory.mktemp("acceptance"))


def _forms(cls_json):
    if not cls_json["forms"]:
        return None
    return [MonomialForm(tuple(f["perm"]), tuple(Fraction(p) for p in f["powers"]),
                         tuple(Fraction(e) for e in f["eps_turns"])) for f in cls_json["forms"]]


def _commutant(rep, N):
    return next((e for e in rep["commutant_dims_by_N"] if e["N"] == N), None)


def _check_nonabelian_group(c, rep, where):
    c.check(rep["fiber_count"]["m"] == 8, f"{where}: m={rep['fiber_count']['m']}")
    adm = [k for k in rep["classes"] if k["admissibility"] == "Admissible"]
    c.check(len(adm) == 8 and all(k["size"] == 1 for k in adm), f"{where}: admissible classes {len(adm)}")
    c.check(rep["group"] is not None and rep["group"]["order"] == 8, f"{where}: group {rep['group']}")
    ab = rep["abelian"]
    c.check(ab["verdict"] == "No" and ab.get("witness"), f"{where}: abelian {ab['verdict']}")
    if ab.get("witness"):
        # the recorded pair really fails to commute
        i, j = ab["witness"][:2]
        f, g = _forms(rep["classes"][i])[0], _forms(rep["classes"][j])[0]
        z = np.array([0.21 + 0.13j, -0.32 + 0.41j])
        c.check(not np.allclose(f(g(z)), g(f(z))), f"{where}: witness pair commutes")


def test_criterion_1_dim3(runner, criterion):
    c = criterion("1 dim3: m=4, 3 admissible classes, commutant 3 at N=10,12 with gap>1e3, abelian")
    code, rep, _, secs, _ = runner.run("dim3")
    c.check(code == 0, f"exit {code}")
    c.check(rep["fiber_count"]["m"] == 4, f"m={rep['fiber_count']['m']}")
    c.check(len(rep["classes"]) == 3 and rep["admissible_count"] == 3, "class count")
    for N in (10, 12):
        e = _commutant(rep, N)
        c.check(e is not None and e["dim"] == 3 and e["singular_gap"] > GAP_MIN, f"commutant at N={N}: {e}")
    c.check(rep["abelian"]["verdict"] == "Yes", f"abelian {rep['abelian']['verdict']}")
    c.check(secs < 60, f"runtime {secs:.1f}s")
    c.note(f"{secs:.1f}s")
    c.finish()


def test_criterion_2_nonabel(runner, criterion):
    c = criterion("2 nonabel: D2 and B2, 8 singleton classes, order-8 nonabelian group, commutant 8 at N=12")
    code, rep, _, s1, _ = runner.run("nonabel")
    c.check(code == 0, f"exit {code}")
    _check_nonabelian_group(c, rep, "D2")
    e = _commutant(rep, 12)
    c.check(e is not None and e["dim"] == 8, f"commutant at N=12: {e}")
    code, rep_b, _, s2, _ = runner.run("nonabel", domain=BALL2, bergman=None)
    c.check(code == 0, f"B2 exit {code}")
    _check_nonabelian_group(c, rep_b, "B2")
    c.check(s1 + s2 < 90, f"runtime {s1 + s2:.1f}s")
    c.note(f"{s1 + s2:.1f}s")
    c.finish()


def test_criterion_3_twelve(runner, criterion):
    c = criterion("3 twelve: D2 12 classes (8+4) nonabelian; B2 NotProper, 8 classes, Z2xZ4")
    code, rep, _, s1, _ = runner.run("twelve")
    c.check(code == 0, f"exit {code}")
    c.check(rep["fiber_count"]["m"] == 16, f"m={rep['fiber_count']['m']}")
    adm = [k for k in rep["classes"] if k["admissibility"] == "Admissible"]
    sizes = sorted(k["size"] for k in adm)
    c.check(len(adm) == 12 and sizes == [1] * 8 + [2] * 4, f"admissible sizes {sizes}")
    c.check(rep["abelian"]["verdict"] == "No", f"abelian {rep['abelian']['verdict']}")
    code, rep_b, _, s2, _ = runner.run("twelve", domain=BALL2)
    c.check(code == 0, f"B2 exit {code}")
    c.check(rep_b["properness"]["verdict"] == "NotProper", f"B2 properness {rep_b['properness']['verdict']}")
    c.check(rep_b["admissible_count"] == 8, f"B2 admissible {rep_b['admissible_count']}")
    g = rep_b["group"] or {}
    c.check(g.get("abelian") is True and g.get("cyclic") is False and g.get("descriptor", "").startswith("Z2×Z4"),
            f"B2 group {g.get('descriptor')}")
    c.check(s1 + s2 < 120, f"runtime {s1 + s2:.1f}s")
    c.note(f"{s1 + s2:.1f}s")
    c.finish()


def test_criterion_4_monomial_grid(criterion):
    c = criterion("4 monomial grid: trivial iff |D|=1; (2,0,0,2)->4 and (1,2,2,1)->3 match commutant at N=10")
    t0 = time.perf_counter()
    checked = 0
    for k, l, k2, l2 in itertools.product(range(5), repeat=4):
        D = k * l2 - k2 * l
        if D == 0:
            continue
        out = monomial_pair_classification(k, l, k2, l2)
        c.check(out["trivial"] == (abs(D) == 1), f"({k},{l},{k2},{l2}) trivial={out['trivial']} D={D}")
        checked += 1
    for exps, want in (((2, 0, 0, 2), 4), ((1, 2, 2, 1), 3)):
        k, l, k2, l2 = exps
        brute = monomial_pair_classification(*exps)["dim"]
        m = BergmanModel(dm.Polydisk(2), 10)
        gens = [mult_matrix(m, parse_poly(f"z1^{k}*z2^{l}", 2)), mult_matrix(m, parse_poly(f"z1^{k2}*z2^{l2}", 2))]
        res = commutant_dimension(m, gens)
        c.check(brute == want == res.dim, f"{exps}: brute {brute}, commutant {res.dim}, expected {want}")
    secs = time.perf_counter() - t0
    c.check(secs < 120, f"runtime {secs:.1f}s")
    c.note(f"{checked} grid points, {secs:.1f}s")
    c.finish()


def _check_counter(c, rep, where):
    c.check(rep["admissible_count"] == 1, f"{where}: admissible {rep['admissible_count']}")
    c.check(rep["trivial"] is True, f"{where}: trivial {rep['trivial']}")
    for k in rep["classes"]:
        if k["identity"]:
            c.check(k["admissibility"] == "Admissible", f"{where}: identity not admissible")
        else:
            c.check(k["admissibility"] == "NotAdmissible" and k["witness"] is not None,
                    f"{where}: class {k['text']} lacks a NotAdmissible witness")
    dfm = rep["deformation"]
    c.check(dfm["dim_after"] == 1 and dfm["dim_before"] == 8 and dfm["dim_after"] <= dfm["dim_before"],
            f"{where}: dims {dfm['dim_before']} -> {dfm['dim_after']}")


def test_criterion_5_counter1(runner, criterion):
    c = criterion("5 counter1: removing a small ball leaves only the identity, dim 8 -> 1, on D2 and B2")
    code, rep, _, s1, _ = runner.run("counter1")
    c.check(code == 0, f"exit {code}")
    _check_counter(c, rep, "D2")
    code, rep_b, _, s2, _ = runner.run("counter1", domain=BALL2, bergman=None)
    c.check(code == 0, f"B2 exit {code}")
    _check_counter(c, rep_b, "B2")
    c.check(s1 + s2 < 90, f"runtime {s1 + s2:.1f}s")
    c.note(f"{s1 + s2:.1f}s")
    c.finish()


def test_criterion_6_zhukovski(runner, criterion):
    c = criterion("6 zhukovski: classes {z},{1/z}; z^n -> -z^(-n-2) commutes with M_f; commutant dim 2")
    code, rep, _, secs, _ = runner.run("zhukovski")
    c.check(code == 0, f"exit {code}")
    c.check(rep["fiber_count"]["m"] == 2, f"m={rep['fiber_count']['m']}")
    texts = sorted(k["text"] for k in rep["classes"] if k["admissibility"] == "Admissible")
    c.check(texts == ["{z^(-1)}", "{z}"], f"classes {texts}")
    # explicit operator, built without the class machinery
    model = BergmanModel(dm.Annulus(0.5), 10)
    S = np.zeros((model.size, model.size), dtype=complex)
    for j, (n,) in enumerate(model.index_set):
        i = model.position.get((-n - 2,))
        if i is not None:
            S[i, j] = -1
    A = mult_matrix(model, parse_poly("0.5*z + 0.5*z^-1", 1, laurent=True))
    r = commutator_residual(model, S, A, 1)
    c.check(r < ZHUKOVSKI_TOL, f"commutator residual {r:.2e}")
    dims = [e["dim"] for e in rep["commutant_dims_by_N"]]
    c.check(dims and all(d == 2 for d in dims) and rep["dim_vna"] == 2, f"commutant dims {dims}")
    c.check(secs < 30, f"runtime {secs:.1f}s")
    c.note(f"residual {r:.1e}, {secs:.1f}s")
    c.finish()


def test_criterion_7_interior(runner, criterion):
    c = criterion("7 interior: z1*z2 on B2, commutant dim strictly increasing over N=4..10, Unbounded")
    code, rep, _, secs, _ = runner.run("interior")
    c.check(code == 0, f"exit {code}")
    entries = {e["N"]: e["dim"] for e in rep["commutant_dims_by_N"]}
    dims = [entries.get(N) for N in (4, 6, 8, 10)]
    c.check(None not in dims and all(b > a for a, b in zip(dims, dims[1:])), f"dims {dims}")
    c.check(rep["dim_vna"] == "Unbounded", f"dim_vna {rep['dim_vna']}")
    c.check(secs < 60, f"runtime {secs:.1f}s")
    c.note(f"dims {dims}, {secs:.1f}s")
    c.finish()


def test_criterion_8_symmetric3(runner, criterion):
    c = criterion("8 symmetric3: m=6, 6 singleton classes, S3, nonabelian")
    code, rep, _, secs, _ = runner.run("symmetric3")
    c.check(code == 0, f"exit {code}")
    c.check(rep["fiber_count"]["m"] == 6, f"m={rep['fiber_count']['m']}")
    adm = [k for k in rep["classes"] if k["admissibility"] == "Admissible"]
    c.check(len(adm) == 6 and all(k["size"] == 1 for k in adm), f"admissible {len(adm)}")
    g = rep["group"] or {}
    c.check(g.get("descriptor", "").startswith("S3") and g.get("abelian") is False, f"group {g.get('descriptor')}")
    c.check(rep["abelian"]["verdict"] == "No", f"abelian {rep['abelian']['verdict']}")
    c.check(secs < 120, f"runtime {secs:.1f}s")
    c.note(f"{secs:.1f}s")
    c.finish()


def _registry_runs(runner):
    runs = [runner.run(name) for name in example_registry()]
    runs += [runner.run("nonabel", domain=BALL2, bergman=None), runner.run("twelve", domain=BALL2),
             runner.run("counter1", domain=BALL2, bergman=None)]
    return runs


def test_criterion_9_properties(runner, criterion):
    c = criterion("9 property suites: adjoint identity, fiber constancy, norm oracle, properness vs triviality")
    t0 = time.perf_counter()
    runs = _registry_runs(runner)
    t_runs = sum(r[3] for r in runs)

    # (a) E* = E of the inverse class, for every class whose operator assembles
    assembled = 0
    worst = 0.0
    for _, rep, _, _, _ in runs:
        d = dm.domain_from_json(rep["problem"]["domain"])
        reports = [(d, rep)]
        if "deformation" in rep:
            reports = [(d.base if isinstance(d, dm.Difference) else d, rep["deformation"]["before"])]
        for dom, r in reports:
            if isinstance(dom, dm.Difference):
                continue
            model = BergmanModel(dom, ADJOINT_N)
            for k in r["classes"]:
                # the class operator acts on the Bergman space only for admissible classes
                if k["admissibility"] != "Admissible":
                    continue
                inv = r["classes"][k["inverse_class"]] if k["inverse_class"] is not None else None
                fk, fi = _forms(k), _forms(inv) if inv else None
                if not fk or not fi:
                    continue
                try:
                    res = check_adjoint_identity(model, fk, fi)
                except UnsupportedClassAction:
                    continue
                assembled += 1
                worst = max(worst, res)
                c.check(res < ADJOINT_TOL, f"(a) {r['problem'].get('name')} class {k['text']}: {res:.2e}")
    c.check(assembled > 0, "(a) no class assembled")

    # (b) fiber-count constancy, which holds for proper maps
    rng = np.random.default_rng(20)
    seen = set()
    for _, rep, _, _, _ in runs:
        p = rep["problem"]
        if rep["properness"]["verdict"] != "Proper":
            continue
        key = (tuple(p["map"]), json.dumps(p["domain"], sort_keys=True))
        F = parse_polymap(p["map"])
        if key in seen or not F.is_square:
            continue
        seen.add(key)
        fc = generic_fiber_count(F, dm.domain_from_json(p["domain"]), FIBER_SAMPLES, rng)
        c.check(fc.constant and len(fc.counts) >= FIBER_SAMPLES, f"(b) {p.get('name')}: counts {set(fc.counts)}")

    # (c) quasi Monte-Carlo norms, 50 random monomials per domain type
    rng = np.random.default_rng(21)
    worst_norm = 0.0
    for d in (dm.Polydisk(2), dm.Ball(2), dm.Annulus(0.5)):
        if d.dim == 1:
            alphas = [(int(a),) for a in rng.integers(-4, 5, NORM_MONOMIALS)]
        else:
            alphas = [tuple(int(x) for x in rng.integers(0, 5, d.dim)) for _ in range(NORM_MONOMIALS)]
        mc = mc_norm_sq(d, alphas)
        exact = np.array([monomial_norm_sq(d, a) for a in alphas])
        rel = np.abs(mc / exact - 1)
        worst_norm = max(worst_norm, float(rel.max()))
        c.check(rel.max() < NORM_REL_TOL, f"(c) {d}: worst relative error {rel.max():.3%}")

    # (d) proper maps: m >= 2 gives a nontrivial algebra, m = 1 a trivial one
    extra = runner.run("power_n", map=["z2", "1i*z1"], domain={"type": "polydisk", "dim": 2}, bergman=None)
    proper = 0
    for _, rep, _, _, _ in runs + [extra]:
        if rep["properness"]["verdict"] != "Proper" or not rep["fiber_count"]:
            continue
        proper += 1
        m = rep["fiber_count"]["m"]
        want = m == 1
        c.check(rep["trivial"] is want, f"(d) {rep['problem'].get('name')}: m={m}, trivial={rep['trivial']}")
    c.check(proper >= 2, "(d) too few proper maps")

    secs = time.perf_counter() - t0 + t_runs
    c.check(secs < 600, f"runtime {secs:.1f}s")
    c.note(f"{assembled} admissible classes (worst {worst:.1e}), {len(seen)} proper maps, norms within {worst_norm:.2%}, "
           f"{proper} proper maps, {secs:.0f}s")
    c.finish()


def test_criterion_10_determinism(runner, criterion):
    c = criterion("10 determinism: repeated registry runs give byte-identical report.json up to the timestamp")
    for name in example_registry():
        code, _, first, _, path = runner.run(name)
        out = path.with_suffix(".again.json")
        code2 = main(["run", "--config", str(path), "--out", str(out)])
        c.check(code == code2 == 0, f"{name}: exit {code}/{code2}")
        c.check(TIMESTAMP.sub(b"", first) == TIMESTAMP.sub(b"", out.read_bytes()), f"{name}: reports differ")
    c.note(f"{len(example_registry())} registry entries")
    c.finish()
