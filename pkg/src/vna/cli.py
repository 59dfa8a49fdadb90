"""``vna`` command line: run JSON problems or named examples, write report.json / report.md."""

from __future__ import annotations

import argparse
import copy
import datetime as _dt
import json
import sys
from pathlib import Path

from . import __version__
from . import domain as dm
from .classify import BergmanConfig, ClassifyConfig, classify_vna, deformation_experiment
from .poly import parse_polymap

__all__ = ["example_registry", "load_config", "run_config", "render_markdown", "main", "ConfigError"]


class ConfigError(ValueError):
    pass


_NONABEL = ["z1^2+z2^2", "z1^2*z2^2"]
_SYM3 = ["z1+z2+z3", "z1*z2+z1*z3+z2*z3", "z1*z2*z3"]

_REGISTRY = {
    "nonabel": {
        "anchor": "symmetric-square pair; eight global local inverses, dihedral deck group",
        "map": _NONABEL, "domain": {"type": "polydisk", "dim": 2},
        "bergman": {"max_degree": 12, "step": 2, "count": 2},
    },
    "dim3": {
        "anchor": "three classes, one of them a square-root pair; algebra C+C+C",
        "map": ["z1*z2^2", "z1+z2^2"], "domain": {"type": "polydisk", "dim": 2},
        "bergman": {"max_degree": 10, "step": 2, "count": 2},
    },
    "twelve": {
        "anchor": "twelve classes on the bidisk, eight admissible on the ball (Z2xZ4)",
        "map": ["z1^2*z2^4", "z1^2+z2^4"], "domain": {"type": "polydisk", "dim": 2},
        "bergman": None,
    },
    "monomial_pair": {
        "anchor": "monomial pair (z1^k z2^l, z1^k' z2^l'); trivial iff |kl'-k'l| = 1",
        "map": ["z1*z2^2", "z1^2*z2"], "domain": {"type": "polydisk", "dim": 2},
        "bergman": {"max_degree": 10, "step": 2, "count": 2},
    },
    "symmetric3": {
        "anchor": "elementary symmetric functions in three variables; deck group S3",
        "map": _SYM3, "domain": {"type": "polydisk", "dim": 3},
        "bergman": None,
    },
    "zhukovski": {
        "anchor": "Zhukovski map on the annulus r<|z|<1/r; span of I and z^n -> -z^(-n-2)",
        "map": ["0.5*z+0.5*z^-1"], "domain": {"type": "annulus", "r": 0.5},
        "bergman": {"max_degree": 8, "step": 2, "count": 2},
    },
    "interior": {
        "anchor": "single symbol z1*z2 on the ball; infinitely many reducing subspaces",
        "map": ["z1*z2"], "domain": {"type": "ball", "dim": 2},
        "bergman": {"max_degree": 4, "step": 2, "count": 4},
        "expected": {"dim_vna": "Unbounded"},
    },
    "counter1": {
        "anchor": "bidisk minus the closed ball of radius 1/100 at (1/2, i/2); only the identity survives",
        "map": _NONABEL, "domain": {"type": "polydisk", "dim": 2},
        "bergman": {"max_degree": 12, "step": 2, "count": 2},
        "deformation": {"removed_balls": [{"center": ["0.5", "0.5i"], "radius": 0.01}]},
    },
    "power_n": {
        "anchor": "z -> z^n on the disk (n=4); cyclic deck group",
        "map": ["z^4"], "domain": {"type": "polydisk", "dim": 1},
        "bergman": {"max_degree": 12, "step": 2, "count": 2},
    },
}

_DEFAULTS = {
    "seed": 42,
    "monodromy": {"max_loops": 200, "stall": 30, "samples": 64, "margin": dm.DEFAULT_MARGIN},
}


def example_registry() -> dict[str, dict]:
    """Named problem configs (fresh copies)."""
    out = {}
    for name, entry in _REGISTRY.items():
        cfg = copy.deepcopy(_DEFAULTS)
        cfg.update(copy.deepcopy(entry))
        cfg["name"] = name
        out[name] = cfg
    return out


def load_config(obj: dict) -> dict:
    """Validate a problem config and return it with parsed map/domain attached under ``_parsed``."""
    cfg = copy.deepcopy(_DEFAULTS)
    for k, v in obj.items():
        if k == "monodromy" and isinstance(v, dict):
            cfg["monodromy"].update(v)
        else:
            cfg[k] = v
    for key in ("map", "domain"):
        if key not in cfg:
            raise ConfigError(f"missing required field '{key}'")
    if not isinstance(cfg["map"], list) or not cfg["map"]:
        raise ConfigError("'map' must be a non-empty list of polynomial strings")
    try:
        domain = dm.domain_from_json(cfg["domain"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad domain: {e}") from e
    try:
        F = parse_polymap(cfg["map"], dim=domain.dim)
    except ValueError as e:
        raise ConfigError(f"bad map: {e}") from e
    seed = cfg.get("seed", 42)
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    b = cfg.get("bergman")
    if b is not None:
        if "max_degree" not in b:
            raise ConfigError("bergman block needs max_degree")
        g = max(max(abs(int(x)) for x in e) if domain.dim == 1 else int(sum(e))
                for p in F.components for e in p.exps)
        if b["max_degree"] < 2 * g:
            raise ConfigError(f"bergman.max_degree {b['max_degree']} < 2 x symbol degree {g}")
    deform = cfg.get("deformation")
    removed = None
    if deform is not None:
        try:
            removed = tuple(dm.ClosedBall(tuple(dm.parse_complex(c) for c in rb["center"]), float(rb["radius"]))
                            for rb in deform["removed_balls"])
            dm.Difference(domain, removed)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad deformation block: {e}") from e
    cfg["_parsed"] = (F, domain, removed)
    return cfg


def _classify_config(cfg: dict) -> ClassifyConfig:
    mono = cfg["monodromy"]
    b = cfg.get("bergman")
    return ClassifyConfig(
        seed=int(cfg["seed"]),
        bergman=None if b is None else BergmanConfig(max_degree=b["max_degree"], step=b.get("step", 2),
                                                     count=b.get("count", 2)),
        max_loops=mono["max_loops"], stall=mono["stall"], samples=mono["samples"], margin=mono["margin"],
    )


def run_config(cfg: dict) -> tuple[dict, list[str]]:
    """Run a validated config; returns the report JSON and the list of inconclusive fields."""
    F, domain, removed = cfg["_parsed"]
    ccfg = _classify_config(cfg)
    name = cfg.get("name")
    if removed is None:
        report = classify_vna(F, domain, ccfg, name=name)
        out = report.to_json()
        flags = report.inconclusive_fields()
    else:
        exp = deformation_experiment(F, domain, removed, ccfg, name=name)
        after, before = exp["after"], exp["before"]
        out = after.to_json()
        b = before.to_json()
        b.pop("meta", None)
        out["deformation"] = {"before": b, "collapsed_classes": exp["collapsed_classes"],
                              "monotone": exp["monotone"],
                              "dim_before": b["dim_vna"], "dim_after": out["dim_vna"]}
        flags = sorted(set(after.inconclusive_fields()) | {"before." + f for f in before.inconclusive_fields()})
    out["meta"] = {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
    }
    return out, flags


def render_markdown(report: dict) -> str:
    p = report["problem"]
    lines = [f"# V*(Φ, Ω) report{': ' + p['name'] if p.get('name') else ''}", ""]
    lines.append(f"- map: `({', '.join(p['map'])})`")
    lines.append(f"- domain: `{json.dumps(p['domain'])}`")
    lines.append(f"- seed: {p['seed']}")
    lines.append(f"- properness: {report['properness']['verdict']}")
    if report["fiber_count"]:
        fc = report["fiber_count"]
        lines.append(f"- fiber count in Ω: {fc['m']} (constant: {fc['constant']}), fiber in box: {fc.get('m_box')}")
    lines.append(f"- admissible classes: {report['admissible_count']}")
    lines.append(f"- dim V*: {report['dim_vna']}  (trivial: {report['trivial']})")
    lines.append(f"- abelian: {report['abelian']['verdict']}")
    if report["group"]:
        lines.append(f"- deck group: {report['group']['descriptor']}")
    if report["classes"]:
        lines += ["", "| class | members | admissibility | action |", "|---|---|---|---|"]
        for c in report["classes"]:
            lines.append(f"| {c['index']} | {c['size']} | {c['admissibility']} | `{c['text']}` |")
    if report["commutant_dims_by_N"]:
        lines += ["", "| N | dim | gap |", "|---|---|---|"]
        for e in report["commutant_dims_by_N"]:
            lines.append(f"| {e['N']} | {e['dim']} | {e.get('singular_gap')} |")
    if "deformation" in report:
        dfm = report["deformation"]
        lines += ["", f"Deformation: dim {dfm['dim_before']} -> {dfm['dim_after']}; "
                      f"collapsed: {', '.join(dfm['collapsed_classes']) or 'none'}"]
    return "\n".join(lines) + "\n"


def _write(report: dict, out: str | None, md: str | None):
    text = json.dumps(report, indent=2, ensure_ascii=False)
    Path(out or "report.json").write_text(text + "\n")
    if md:
        Path(md).write_text(render_markdown(report))


def _fail(exc: Exception) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vna", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)
    pr = sub.add_parser("run", help="classify a problem given as JSON")
    pr.add_argument("--config", required=True)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--out")
    pr.add_argument("--md")
    pe = sub.add_parser("example", help="run a registered example")
    g = pe.add_mutually_exclusive_group(required=True)
    g.add_argument("--name")
    g.add_argument("--list", action="store_true")
    pe.add_argument("--seed", type=int)
    pe.add_argument("--out")
    pe.add_argument("--md")
    args = parser.parse_args(argv)

    try:
        if args.cmd == "example" and args.list:
            for name, cfg in example_registry().items():
                print(f"{name:14s} {cfg['anchor']}")
            return 0
        if args.cmd == "example":
            reg = example_registry()
            if args.name not in reg:
                raise ConfigError(f"unknown example '{args.name}'; try --list")
            raw = reg[args.name]
        else:
            raw = json.loads(Path(args.config).read_text())
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = load_config(raw)
        report, flags = run_config(cfg)
        outputs = raw.get("outputs") or {}
        _write(report, args.out or outputs.get("report"), args.md or outputs.get("markdown"))
    except Exception as exc:  # every failure becomes a machine-readable error object
        return _fail(exc)
    return 2 if flags else 0


if __name__ == "__main__":
    sys.exit(main())
