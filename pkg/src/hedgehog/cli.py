"""Command line entry point: ``hedgehog <command> [options]``.

Every command writes its artifacts to ``--out`` and embeds the config hash
and grid descriptor.  Exit status is 0 iff the command's checks passed.
"""

import argparse
import configparser
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateMode, HedgehogError
from .model import Params
from .profile import RadialGrid, default_grid, export_profile_csv, solve_profile, verify_profile_bounds

COMMANDS = ("profile", "verify-ode", "modes", "scan", "critical", "witness",
            "identities", "bounds", "report")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_ERROR = 0, 1, 2, 3


@dataclass
class RunConfig:
    a2: float = 0.05
    b2: float = 1.0
    c2: float = 1.0
    n: int = 8000
    rmax: float = None
    imax: int = 8
    qang: int = 64
    seed: int = 0
    out: str = "out"
    a2_list: list = field(default_factory=lambda: [0.05, 1.0, 10.0])
    bracket: list = field(default_factory=lambda: [0.05, 50.0])
    samples: int = 100
    fields: int = 20

    def validate(self):
        try:
            self.params()
            for a in self.a2_list:
                Params(a, self.b2, self.c2)
        except ConfigError as e:
            raise ConfigError(f"params: {e}") from None
        if self.n % 2:
            raise ConfigError("n: N must be even")
        if self.n < 4:
            raise ConfigError("n: N must be at least 4")
        if self.rmax is not None and not self.rmax > 0:
            raise ConfigError("rmax: must be positive")
        if self.imax < 4:
            raise ConfigError("imax: must be at least 4")
        if self.qang < 8:
            raise ConfigError("qang: must be at least 8")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed: must be an unsigned 64-bit integer")
        if len(self.bracket) != 2 or not 0 < self.bracket[0] < self.bracket[1]:
            raise ConfigError("bracket: need 0 < lo < hi")
        return self

    def params(self, a2=None):
        return Params(self.a2 if a2 is None else a2, self.b2, self.c2)

    def grid(self, p):
        if self.rmax is not None:
            return RadialGrid.uniform(self.rmax, self.n)
        return default_grid(p, self.n)

    def digest(self):
        # the output location does not affect any artifact
        blob = json.dumps({k: v for k, v in asdict(self).items() if k != "out"},
                          sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_FIELDS = {"a2": float, "b2": float, "c2": float, "n": int, "rmax": float, "imax": int,
           "qang": int, "seed": int, "out": str, "samples": int, "fields": int}


def _floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def load_config(path):
    """Flat key = value file; section names are ignored."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config {path}")
    cfg = RunConfig()
    for sec in cp.sections():
        for key, val in cp.items(sec):
            key = key.replace("-", "_")
            try:
                if key in ("a2_list", "bracket"):
                    setattr(cfg, key, _floats(val))
                elif key in _FIELDS:
                    setattr(cfg, key, _FIELDS[key](val))
                else:
                    raise ConfigError(f"{key}: unknown key")
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {val!r}") from None
    return cfg


# ---------------------------------------------------------------- artifacts

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class Artifacts:
    def __init__(self, cfg):
        self.cfg = cfg
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.hash = cfg.digest()

    def header(self, grid):
        return {"config_hash": self.hash, "grid": grid.descriptor() if grid else None}

    def json(self, name, payload, grid=None):
        body = dict(self.header(grid), **payload)
        text = json.dumps(_clean(body), sort_keys=True, indent=2) + "\n"
        (self.dir / name).write_text(text)

    def csv(self, name, columns, rows, grid=None, grids=()):
        with open(self.dir / name, "w") as fh:
            fh.write(f"# config_hash={self.hash}\n")
            for tag, g in ([("", grid)] if grid is not None else []) + list(grids):
                desc = " ".join(f"{k}={v}" for k, v in g.descriptor().items())
                fh.write(f"# grid {tag}{desc}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------- commands

def _profile(cfg, a2=None):
    p = cfg.params(a2)
    return solve_profile(p, cfg.grid(p))


def cmd_profile(cfg, art):
    prof = _profile(cfg)
    with open(art.dir / "profile.csv", "w") as fh:
        fh.write(f"# config_hash={art.hash}\n")
        export_profile_csv(prof, fh)
    art.json("profile.json", {"residual": prof.residual, "iterations": prof.iterations,
                              "u2pp0": prof.u2pp0, "s_plus": prof.s_plus}, prof.grid)
    return True


def cmd_verify_ode(cfg, art):
    prof = _profile(cfg)
    ref0 = solve_profile(cfg.params(0.0), prof.grid)
    rep = verify_profile_bounds(prof, ref0)
    art.json("verify_ode.json", rep.to_dict(), prof.grid)
    return rep.passed


def cmd_modes(cfg, art):
    from .angular import AngularGrid, apply_T, export_mode_csv, first_index, mode, rayleigh
    grid = AngularGrid(cfg.qang)
    rows = []
    ok = True
    for k in (0, 1, 2):
        for m in (0, 2, 4):
            for i in range(first_index(k, m), cfg.imax + 1):
                try:
                    md = mode(k, m, i, grid)
                except DegenerateMode:
                    rows.append((k, m, i, math.nan, math.nan, math.nan, math.nan, "zero"))
                    continue
                res = apply_T(k, m, md)
                ray = rayleigh(k, m, md)
                ok &= abs(ray - md.lam) < 1e-6
                rows.append((k, m, i, md.lam, ray, res, md.norm2(), "ok"))
                with open(art.dir / f"mode_k{k}_m{m}_i{i}.csv", "w") as fh:
                    fh.write(f"# config_hash={art.hash}\n")
                    export_mode_csv(md, fh)
    art.csv("mode_residuals.csv", ["k", "m", "i", "lambda", "rayleigh", "residual", "norm2",
                                   "status"], rows)
    return ok


def cmd_scan(cfg, art):
    from .stability import mode_spectrum
    rows, summaries, grids = [], [], []
    ok = True
    for a2 in cfg.a2_list:
        prof = _profile(cfg, a2)
        grids.append((f"a2={a2!r} ", prof.grid))
        rep = mode_spectrum(prof.params, prof, cfg.imax)
        rows += rep.csv_rows()
        summaries.append(dict(rep.summary(), grid=prof.grid.descriptor()))
        ok &= rep.verdict != "indeterminate"
    art.csv("scan.csv", ["a2", "i", "lambda", "mu_min", "residual"], rows, grids=grids)
    art.json("scan.json", {"spectra": summaries})
    return ok


def cmd_critical(cfg, art):
    from .stability import critical_a2
    res = critical_a2(cfg.b2, cfg.c2, tuple(cfg.bracket), cfg.n, cfg.imax)
    art.json("critical.json", {"critical_a2": res.a2, "bracket": list(res.bracket),
                               "evaluations": res.evaluations,
                               "lower": res.lower.summary(), "upper": res.upper.summary(),
                               "note": "sign change of the discretized spectrum"})
    return True


def cmd_witness(cfg, art):
    from .stability import instability_witness
    prof = _profile(cfg)
    res = instability_witness(prof.params, prof)
    art.json("witness.json", dict(res.to_dict(), gap=res.gap), prof.grid)
    art.csv("witness_candidates.csv", ["R", "n", "width", "Q3"],
            [(c["R"], c["n"], c["width"], c["Q3"]) for c in res.candidates])
    return res.gap <= 1e-9 * (1.0 + abs(res.q3))


def run_identities(prof, seed, fields=20, qang=32, radial_elements=400):
    """Seeded gaps of every reduction identity; returns (payload, passed)."""
    from .angular import AngularFunction, AngularGrid
    from .quadforms import hardy_decompose_check, pwh_check
    from .reduction import (field_quad, fourier_split, mode_domination_check,
                            qk_split_check, random_field, theta_project)
    rng = np.random.default_rng(seed)
    quad = field_quad(prof, radial_elements)
    agrid = AngularGrid(qang)
    worst = {"fourier_split": 0.0, "qk_split": 0.0, "theta_project": 0.0, "domination": math.inf}
    for _ in range(fields):
        fld, blocks = random_field(rng, 4, 6, agrid)
        sr = fourier_split(fld, quad, agrid)
        worst["fourier_split"] = max(worst["fourier_split"], sr.gap / (1.0 + abs(sr.q_total)))
        for k, bs in blocks.items():
            for b in bs:
                qk, _, gap = qk_split_check(b, quad, agrid)
                worst["qk_split"] = max(worst["qk_split"], abs(gap) / (1.0 + abs(qk)))
                if k <= 2:
                    v = b.fields
                    pr = theta_project(k, v[0], v[2], v[4], 8, quad, agrid)
                    worst["theta_project"] = max(worst["theta_project"],
                                                 abs(pr.gap) / (1.0 + abs(pr.phik)))
        for k in (3, 4):
            qk, _, margin = mode_domination_check(k, *fld.modes[k], quad, agrid)
            worst["domination"] = min(worst["domination"], margin / (1.0 + abs(qk)))
    lhs, rhs = pwh_check(2, AngularFunction(1.0, 1.0, np.ones(1)))
    pwh_gap = max(abs(lhs - 32.0 / 5.0), abs(rhs - 32.0 / 5.0))
    pwh_worst = math.inf
    for _ in range(100):
        c = rng.standard_normal(4) * 0.3
        c[0] += 1.0
        lhs_r, rhs_r = pwh_check(2, AngularFunction(1.0, 1.0, c))
        pwh_worst = min(pwh_worst, lhs_r - rhs_r)
    th = np.linspace(0.0, math.pi, 4001)[1:-1]
    bump = lambda x: np.where((x > 0.3) & (x < 2.8),
                              np.exp(-1.0 / np.clip((x - 0.3) * (2.8 - x), 1e-300, None)), 0.0)
    _, _, hardy_gap = hardy_decompose_check(np.sin, lambda x: 4.0 / np.sin(x),
                                            lambda x: np.sin(x) ** 2, bump, th)
    payload = {"fourier_split_rel": worst["fourier_split"], "qk_split_rel": worst["qk_split"],
               "theta_project_rel": worst["theta_project"],
               "domination_margin_rel": worst["domination"], "pwh_equality_gap": pwh_gap,
               "pwh_worst_margin": pwh_worst, "hardy_gap": hardy_gap, "fields": fields}
    passed = (worst["fourier_split"] < 1e-10 and worst["qk_split"] < 1e-8
              and worst["theta_project"] < 1e-6 and worst["domination"] >= -1e-9
              and pwh_gap < 1e-10 and pwh_worst >= -1e-10 and abs(hardy_gap) < 1e-6)
    return payload, passed


def cmd_identities(cfg, art):
    prof = _profile(cfg)
    payload, passed = run_identities(prof, cfg.seed, cfg.fields)
    art.json("identities.json", dict(payload, passed=passed), prof.grid)
    return passed


def cmd_bounds(cfg, art):
    from .stability import check_phi02_bounds, coercivity_polynomial
    prof = _profile(cfg)
    ref0 = solve_profile(cfg.params(0.0), prof.grid)
    rep = check_phi02_bounds(prof, cfg.samples, cfg.seed, ref0)
    pmin, parg = coercivity_polynomial(1e-3)
    art.json("bounds.json", {"checks": rep.to_dict(), "alpha": rep.alpha,
                             "delta0": rep.delta0, "samples": rep.samples,
                             "polynomial_min": pmin, "polynomial_argmin": parg,
                             "passed": rep.passed}, prof.grid)
    return rep.passed and pmin > 0


def cmd_report(cfg, art):
    from .stability import (check_phi02_bounds, coercivity_polynomial, instability_witness,
                            kernel_check, mode_spectrum)
    prof = _profile(cfg)
    ref0 = solve_profile(cfg.params(0.0), prof.grid)
    ode = verify_profile_bounds(prof, ref0)
    spec = mode_spectrum(prof.params, prof, cfg.imax)
    wit = instability_witness(prof.params, prof)
    ker = kernel_check(prof)
    bnd = check_phi02_bounds(prof, cfg.samples, cfg.seed, ref0)
    pmin, _ = coercivity_polynomial(1e-3)
    payload = {
        "profile_bounds": ode.to_dict(),
        "spectrum": dict(spec.summary(), rows=[asdict(r) for r in spec.rows]),
        "witness": wit.to_dict(),
        "kernel": {"ratios": ker.ratios, "pointwise_gap": ker.pointwise_gap,
                   "frame_gap": ker.frame_gap},
        "bounds": bnd.to_dict(),
        "polynomial_min": pmin,
    }
    art.json("report.json", payload, prof.grid)
    return ode.passed and ker.passed and pmin > 0 and wit.gap <= 1e-9 * (1.0 + abs(wit.q3))


HANDLERS = {"profile": cmd_profile, "verify-ode": cmd_verify_ode, "modes": cmd_modes,
            "scan": cmd_scan, "critical": cmd_critical, "witness": cmd_witness,
            "identities": cmd_identities, "bounds": cmd_bounds, "report": cmd_report}


def build_parser():
    ap = argparse.ArgumentParser(prog="hedgehog", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config")
    ap.add_argument("--out")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--a2", type=float)
    ap.add_argument("--b2", type=float)
    ap.add_argument("--c2", type=float)
    ap.add_argument("--n", type=int)
    ap.add_argument("--rmax", type=float)
    ap.add_argument("--imax", type=int)
    ap.add_argument("--qang", type=int)
    ap.add_argument("--a2-list", type=_floats, dest="a2_list")
    ap.add_argument("--samples", type=int)
    ap.add_argument("--fields", type=int)
    return ap


def make_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    for key in ("out", "seed", "a2", "b2", "c2", "n", "rmax", "imax", "qang", "a2_list",
                "samples", "fields"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    return cfg.validate()


def run(command, cfg):
    art = Artifacts(cfg)
    return HANDLERS[command](cfg, art)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
    except ConfigError as e:
        print(f"hedgehog: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        ok = run(args.command, cfg)
    except HedgehogError as e:
        print(f"hedgehog {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    print(f"hedgehog {args.command}: {'passed' if ok else 'FAILED'} (out={cfg.out})")
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
