"""Command line: ``heis-besov <subcommand> [--config FILE] [--threads N] [--out DIR]``.

Exit codes: 0 success, 1 invalid configuration or input, 2 a tolerance
failure in ``verify``.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import acceptance, heat_flow, littlewood_paley as lp, paraproduct as pp, parallel
from . import pam_solver as pam, stochastics as st
from .group_core import Weight
from .serialization import JSON_LIMIT, canonical_json, read_array, to_csv, to_hbsf, to_json_array
from .spectral import (FrequencyGrid, SpatialField, SpatialGrid, SpectralField, forward_transform,
                       inverse_transform, l2_norm_squared, plancherel_norm)

NUM = {"type": "number"}
POS = {"type": "number", "exclusiveMinimum": 0}
PROFILE = {
    "type": "object", "additionalProperties": False,
    "properties": {"a": POS, "b": POS, "omega": NUM, "phase": NUM,
                   "centre": {"type": "array", "items": NUM, "minItems": 3, "maxItems": 3}},
}
WEIGHT = {
    "type": "object", "additionalProperties": False, "required": ["kind"],
    "properties": {"kind": {"enum": ["exponential", "polynomial"]}, "nu": {"type": "number", "minimum": 0},
                   "eta": NUM, "b": {"type": "number", "minimum": 0}, "c": POS,
                   "form": {"enum": ["bernstein", "decay"]}},
}
POINTS = {"type": "array", "items": {"type": "array", "items": NUM, "minItems": 3, "maxItems": 3}}

SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "group": {"type": "object", "additionalProperties": False,
                  "properties": {"n": {"const": 1}}},
        "grids": {"type": "object", "additionalProperties": False,
                  "properties": {"L": POS, "Lz": POS, "N": {"type": "integer", "minimum": 4},
                                 "Nz": {"type": "integer", "minimum": 4}}},
        "spectral": {"type": "object", "additionalProperties": False,
                     "properties": {"M": {"type": "integer", "minimum": 0, "maximum": 64},
                                    "K_max": {"type": "integer", "minimum": 0, "maximum": 12},
                                    "lam_min": {"type": ["number", "null"], "exclusiveMinimum": 0},
                                    "nodes_per_panel": {"type": "integer", "minimum": 1}}},
        "field": PROFILE,
        "field2": PROFILE,
        "besov": {"type": "object", "additionalProperties": False,
                  "properties": {"gamma": NUM, "alpha": {"type": "number", "minimum": 1},
                                 "beta": {"oneOf": [{"type": "number", "minimum": 1}, {"const": "inf"}]},
                                 "weight": WEIGHT}},
        "heat": {"type": "object", "additionalProperties": False,
                 "properties": {"t": POS, "generator_scale": POS, "points": POINTS}},
        "green": {"type": "object", "additionalProperties": False,
                  "properties": {"alpha": POS, "generator_scale": POS, "points": POINTS}},
        "noise": {"type": "object", "additionalProperties": False,
                  "properties": {"zeta": NUM, "alpha": NUM, "c_gamma": POS, "horizon": POS,
                                 "level": {"type": "integer", "minimum": 0, "maximum": 11},
                                 "research_mode": {"type": "boolean"},
                                 "samples": {"type": "integer", "minimum": 2}}},
        "solver": {"type": "object"},
        "suite": {"type": "object", "additionalProperties": False,
                  "properties": {"mc_samples": {"type": "integer", "minimum": 10},
                                 "variance_samples": {"type": "integer", "minimum": 10},
                                 "holder_paths": {"type": "integer", "minimum": 1},
                                 "seed": {"type": "integer", "minimum": 0, "maximum": 2**63},
                                 "checks": {"type": "array", "items": {"type": "integer", "minimum": 1,
                                                                       "maximum": 12}}}},
        "output": {"type": "object", "additionalProperties": False, "properties": {"dir": {"type": "string"}}},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    },
}

DEFAULTS = {
    "group": {"n": 1},
    "grids": {"L": 4.0, "Lz": 4.0, "N": 32, "Nz": 32},
    "spectral": {"M": 16, "K_max": 4, "lam_min": None, "nodes_per_panel": 8},
    "field": {"a": 2.0, "b": 0.5, "omega": 3.0, "phase": 0.0, "centre": [0.0, 0.0, 0.0]},
    "field2": {"a": 1.5, "b": 0.5, "omega": 2.0, "phase": 0.5, "centre": [0.3, 0.0, 0.2]},
    "besov": {"gamma": 0.5, "alpha": 2.0, "beta": "inf", "weight": {"kind": "exponential", "nu": 0.1, "eta": 0.5}},
    "heat": {"t": 0.25, "generator_scale": heat_flow.PAM_SCALE,
             "points": [[0.0, 0.0, 0.0], [0.5, -0.3, 0.2], [1.0, 0.5, -0.8]]},
    "green": {"alpha": 0.75, "generator_scale": heat_flow.ANALYSIS_SCALE,
              "points": [[0.5, 0.0, 0.0], [0.3, 0.4, 0.5], [0.0, 1.0, -1.0]]},
    "noise": {"zeta": 0.5, "alpha": 0.75, "c_gamma": 1.0, "horizon": 1.0, "level": 4,
              "research_mode": False, "samples": 2000},
    "solver": {"horizon": 0.5, "n_max": 4, "product": "pointwise"},
    "suite": {"mc_samples": 10_000, "variance_samples": 1000, "holder_paths": 6,
              "seed": acceptance.SuiteConfig.seed},
    "output": {"dir": "heis_besov_out"},
    "seed": 0,
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "solver":
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | None) -> dict:
    """Read, validate and complete a run configuration; field-path messages on error."""
    user = {}
    if path:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(user, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {where}: {exc.message}") from exc
    cfg = _merge(DEFAULTS, user)
    if "solver" in user:
        cfg["solver"] = _merge(DEFAULTS["solver"], user["solver"])
    try:
        grids(cfg)
        _weight(cfg["besov"]["weight"])
        pam.SolverConfig.from_dict(cfg["solver"])
        nz = cfg["noise"]
        st.NoiseParams(nz["zeta"], nz["alpha"], nz["c_gamma"], cfg["seed"], (0.0, nz["horizon"]),
                       nz["research_mode"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config: {exc}") from exc
    return cfg


def grids(cfg: dict) -> tuple[SpatialGrid, FrequencyGrid]:
    g, s = cfg["grids"], cfg["spectral"]
    sg = SpatialGrid(1, float(g["L"]), float(g["Lz"]), int(g["N"]), int(g["Nz"]))
    fg = FrequencyGrid.for_spatial(sg, int(s["M"]), K_max=int(s["K_max"]), lam_min=s["lam_min"],
                                   nodes_per_panel=int(s["nodes_per_panel"]))
    return sg, fg


def _weight(d: dict) -> Weight:
    if d["kind"] == "exponential":
        return Weight.exponential(d.get("nu", 0.0), d.get("eta", 0.5))
    return Weight.polynomial(d.get("b", 1.0), d.get("c", 1.0), d.get("form", "bernstein"))


def _profile(sg: SpatialGrid, d: dict) -> SpatialField:
    return acceptance.gabor(sg, d["a"], d["b"], d["omega"], tuple(d["centre"]), d["phase"])


def _input_field(args, cfg, sg: SpatialGrid, key: str = "field") -> SpatialField:
    src = getattr(args, "input", None) if key == "field" else getattr(args, "input2", None)
    if src:
        arr, _ = read_array(src)
        if arr.shape != sg.shape:
            raise ConfigError(f"input field shape {arr.shape} does not match grid {sg.shape}")
        return SpatialField(sg, arr)
    return _profile(sg, cfg[key])


def _beta(v) -> float:
    return math.inf if v == "inf" else float(v)


class Out:
    def __init__(self, root: str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def bytes(self, name: str, data: bytes) -> None:
        (self.root / name).write_bytes(data)
        self.files.append(name)

    def text(self, name: str, s: str) -> None:
        self.bytes(name, s.encode())

    def json(self, name: str, obj) -> None:
        self.text(name, canonical_json(obj) + "\n")

    def array(self, name: str, array, metadata: dict) -> None:
        """name.hbsf, plus name.json for small arrays."""
        self.bytes(f"{name}.hbsf", to_hbsf(array, metadata))
        if np.size(array) <= JSON_LIMIT:
            self.json(f"{name}.json", to_json_array(array, metadata))


def cmd_transform(args, cfg, out: Out) -> int:
    sg, fg = grids(cfg)
    f = _input_field(args, cfg, sg)
    F = forward_transform(f, fg, warn=False)
    meta = {"kind": "spectral", "grid": fg.to_dict(), "spatial": sg.to_dict()}
    out.array("transform", F.coeff, meta)
    out.json("transform_summary.json", {"plancherel_norm_sq": plancherel_norm(F),
                                        "l2_norm_sq": l2_norm_squared(f),
                                        "shape": list(F.coeff.shape), "lambda_nodes": fg.n_lam})
    return 0


def cmd_inverse(args, cfg, out: Out) -> int:
    sg, fg = grids(cfg)
    if not args.input:
        raise ConfigError("inverse needs --input transform.hbsf")
    arr, meta = read_array(args.input)
    if "grid" in meta:
        fg = FrequencyGrid.from_dict(meta["grid"])
    if "spatial" in meta:
        sg = SpatialGrid.from_dict(meta["spatial"])
    if arr.shape != (fg.n_m, fg.n_m, fg.n_lam):
        raise ConfigError(f"coefficient shape {arr.shape} does not match the frequency grid")
    f = inverse_transform(SpectralField(fg, arr), sg)
    out.array("inverse", f.values, {"kind": "spatial", "spatial": sg.to_dict()})
    return 0


def cmd_plancherel(args, cfg, out: Out) -> int:
    sg, fg = grids(cfg)
    f = _input_field(args, cfg, sg)
    F = forward_transform(f, fg, warn=False)
    lhs, rhs = l2_norm_squared(f), plancherel_norm(F)
    rep = {"spatial_l2_sq": lhs, "spectral_l2_sq": rhs, "relative_error": abs(lhs - rhs) / lhs}
    out.json("plancherel.json", rep)
    print(canonical_json(rep))
    return 0


def _pou(cfg, sg, fg) -> lp.PartitionOfUnity:
    return lp.build_partition(fg, int(cfg["spectral"]["K_max"]), sg)


def cmd_blocks(args, cfg, out: Out) -> int:
    sg, fg = grids(cfg)
    f = _input_field(args, cfg, sg)
    pou = _pou(cfg, sg, fg)
    blocks = lp.decompose(f, pou)
    stack = np.stack([b.values for b in blocks.blocks])
    out.array("blocks", stack, {"ks": blocks.ks})
    rows = [(k, lp.weighted_lp(b, 2.0)) for k, b in zip(blocks.ks, blocks.blocks)]
    out.text("blocks.csv", to_csv(["k", "l2_norm"], rows))
    return 0


def cmd_besov(args, cfg, out: Out) -> int:
    sg, fg = grids(cfg)
    f = _input_field(args, cfg, sg)
    pou = _pou(cfg, sg, fg)
    b = cfg["besov"]
    params = lp.BesovParams(b["gamma"], b["alpha"], _beta(b["beta"]), _weight(b["weight"]))
    blocks = lp.decompose(f, pou)
    table = lp.besov_table(blocks, params)
    norm = lp.besov_norm(f, params, pou, blocks=blocks)
    out.text("besov.csv", to_csv(["k", "block_norm", "scaled"], table))
    out.json("besov.json", {"norm": norm, "params": {"gamma": params.gamma, "alpha": params.alpha,
                                                      "beta": params.beta, "weight": params.weight.to_dict()}})
    print(f"besov norm: {norm!r}")
    return 0


def cmd_heat(args, cfg, out: Out) -> int:
    sg, fg = grids(cfg)
    h = cfg["heat"]
    t, s = float(h["t"]), float(h["generator_scale"])
    f = _input_field(args, cfg, sg)
    u = heat_flow.semigroup_apply(f, t, "spectral", fg, s)
    out.array("heat", u.values, {"t": t, "generator_scale": s})
    pts = np.asarray(h["points"], dtype=float)
    closed = heat_flow.heat_kernel(t, pts, s)
    kgrid = FrequencyGrid.build(1, 8, 6, lam_min=2.0**-20, lam_max=128.0, nodes_per_panel=8)
    spec = heat_flow.spectral_heat_kernel(t, pts, kgrid, s)
    rows = [(*p, a, b, abs(a - b) / max(abs(a), 1e-300)) for p, a, b in zip(pts.tolist(), closed, spec)]
    out.text("heat_kernel.csv", to_csv(["x", "y", "z", "integral_form", "spectral", "rel_diff"], rows))
    return 0


def cmd_green(args, cfg, out: Out) -> int:
    g = cfg["green"]
    a, s = float(g["alpha"]), float(g["generator_scale"])
    if not 0 < a < 2:
        raise ConfigError("green.alpha must lie in (0, n + 1) = (0, 2)")
    pts = np.asarray(g["points"], dtype=float)
    e = np.zeros_like(pts)
    t_int = heat_flow.green_kernel(a, pts, e, generator_scale=s)
    lam_int = heat_flow.green_kernel_lambda(a, pts, e, generator_scale=s)
    rows = [(*p, x, y, abs(x - y) / abs(y)) for p, x, y in zip(pts.tolist(), np.ravel(t_int), np.ravel(lam_int))]
    out.text("green_kernel.csv", to_csv(["x", "y", "z", "time_integral", "lambda_integral", "rel_diff"], rows))
    return 0


def cmd_paraproduct(args, cfg, out: Out) -> int:
    sg, fg = grids(cfg)
    f = _input_field(args, cfg, sg)
    g = _input_field(args, cfg, sg, "field2")
    pou = _pou(cfg, sg, fg)
    r = pp.decompose(f, g, pou)
    stack = np.stack([r.low_high.values, r.resonant.values, r.high_low.values])
    out.array("paraproduct", stack, {"terms": ["low_high", "resonant", "high_low"]})
    ident = float(np.max(np.abs(r.total().values - f.values * g.values)))
    rows = pp.support_check(f, g, pou)
    out.text("paraproduct_support.csv",
             to_csv(["kind", "k", "outside_fraction", "ok"],
                    [(x["kind"], x["k"], x["outside_fraction"], x["ok"]) for x in rows]))
    out.json("paraproduct.json", {"identity_error": ident})
    return 0


def _noise_params(cfg: dict) -> st.NoiseParams:
    nz = cfg["noise"]
    return st.NoiseParams.dyadic(nz["zeta"], nz["alpha"], nz["horizon"], nz["level"], c_gamma=nz["c_gamma"],
                                 seed=cfg["seed"], research_mode=nz["research_mode"])


def cmd_noise_sample(args, cfg, out: Out) -> int:
    sg, fg = grids(cfg)
    prm = _noise_params(cfg)
    path = st.sample_noise(prm, fg)
    out.array("noise", path.values, {"grid": fg.to_dict(), "times": list(prm.times),
                                     "zeta": prm.zeta, "alpha": prm.alpha, "seed": prm.seed})
    rows = [(t, plancherel_norm(SpectralField(fg, v))) for t, v in zip(prm.times, path.values)]
    out.text("noise_summary.csv", to_csv(["t", "spectral_l2_sq"], rows))
    return 0


def cmd_noise_verify(args, cfg, out: Out) -> int:
    sg, fg = grids(cfg)
    nz = cfg["noise"]
    prm = st.NoiseParams(nz["zeta"], nz["alpha"], nz["c_gamma"], cfg["seed"], (0.0, 0.5 * nz["horizon"], nz["horizon"]),
                         nz["research_mode"])
    phi = forward_transform(_profile(sg, cfg["field"]), fg, warn=False)
    psi = forward_transform(_profile(sg, cfg["field2"]), fg, warn=False)
    N = int(nz["samples"])
    a, b = np.empty(N), np.empty(N)
    for i in range(N):
        p = st.sample_noise(st.NoiseParams(prm.zeta, prm.alpha, prm.c_gamma, prm.seed + i, prm.times,
                                           prm.research_mode), fg)
        a[i], b[i] = st.pairing(p.values[2], phi), st.pairing(p.values[1], psi)
    rows = []
    for name, x, y, t, s, P, Q in (("phi,phi", a, a, prm.times[2], prm.times[2], phi, phi),
                                    ("phi,psi", a, b, prm.times[2], prm.times[1], phi, psi)):
        prod = x * y
        mean, se = float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(N))
        orc = st.covariance_oracle(P, Q, prm.alpha, prm.zeta, prm.c_gamma, t, s)
        rows.append({"pair": name, "t": t, "s": s, "mc": mean, "se": se, "oracle": orc,
                     "within_3se": abs(mean - orc) <= 3 * se})
    x = a / a.std()
    rep = {"samples": N, "covariance": rows, "fourth_moment": float(np.mean(x**4)),
           "fourth_moment_tolerance": 3 * math.sqrt(24 / N)}
    out.json("noise_verify.json", rep)
    print(canonical_json(rep))
    return 0


def cmd_pam_solve(args, cfg, out: Out) -> int:
    nz = cfg["noise"]
    scfg = pam.SolverConfig.from_dict(cfg["solver"])
    rep = pam.hypothesis_check(scfg.vartheta, scfg.gamma, nz["zeta"], nz["alpha"], 1)
    if not rep.feasible:
        for v in rep.violated():
            print(f"refused: violated inequality {v}", file=sys.stderr)
        print(f"feasible gamma window: {rep.window}", file=sys.stderr)
        return 1
    sg, fg = grids(cfg)
    pou = _pou(cfg, sg, fg)
    u0 = _input_field(args, cfg, sg)
    prm = st.NoiseParams.dyadic(nz["zeta"], nz["alpha"], scfg.horizon, scfg.n_max, c_gamma=nz["c_gamma"],
                                seed=cfg["seed"])
    path = st.sample_noise(prm, fg)
    try:
        state = pam.picard_solve(u0, path, pou, scfg)
    except (pam.NonContractionError, pam.HorizonError) as exc:
        print(f"solver stopped: {exc}", file=sys.stderr)
        out.json("convergence.json", {"error": str(exc)})
        return 1
    rows = []
    for t, F, u in zip(state.times, state.fields, state.spatial):
        rows.append((t, lp.weighted_lp(u, 2.0), pam.weighted_besov(F, t, sg, pou, scfg)))
    out.text("norms.csv", to_csv(["t", "l2_norm", "besov_kappa_w_t"], rows))
    out.array("final", state.spatial[-1].values, {"t": float(state.times[-1])})
    log = state.log()
    log.update({"hypothesis": rep.to_dict(), "solver": scfg.to_dict(),
                "engineering_defaults": {"tau_C": scfg.tau_C, "epsilon": scfg.epsilon, "delta": scfg.delta}})
    out.json("convergence.json", log)
    return 0


def cmd_verify(args, cfg, out: Out) -> int:
    su = cfg["suite"]
    scfg = acceptance.SuiteConfig(seed=int(su["seed"]),
                                  mc_samples=su["mc_samples"], variance_samples=su["variance_samples"],
                                  holder_paths=su["holder_paths"])
    ids = args.only or su.get("checks")
    results = acceptance.run_suite(scfg, ids, log=print)
    rep = acceptance.report(results, scfg)
    out.json("verify_report.json", rep)
    for name, digest in sorted(acceptance.determinism_artifacts(parallel.get_threads(), scfg.seed).items()):
        out.text(f"probe_{name}.sha256", digest + "\n")
    print("ALL PASS" if rep["passed"] else "FAILURES PRESENT")
    return 0 if rep["passed"] else 2


COMMANDS = {
    "transform": cmd_transform, "inverse": cmd_inverse, "plancherel-check": cmd_plancherel,
    "blocks": cmd_blocks, "besov-norm": cmd_besov, "heat": cmd_heat, "green-kernel": cmd_green,
    "paraproduct": cmd_paraproduct, "noise-sample": cmd_noise_sample, "noise-verify": cmd_noise_verify,
    "pam-solve": cmd_pam_solve, "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    # usage errors are validation failures; exit code 2 is reserved for verify
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="heis-besov", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--threads", type=int, help=f"worker threads (fallback: ${parallel.ENV_VAR}, then all cores)")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--input", help="HBSF input (spatial field, or coefficients for inverse)")
    ap.add_argument("--input2", help="second HBSF spatial field for paraproduct")
    ap.add_argument("--only", type=int, nargs="+", help="verify: run only these criteria")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None:
            parallel.set_threads(args.threads)
        parallel.get_threads()
        cfg = load_config(args.config)
        out = Out(args.out or cfg["output"]["dir"])
        return COMMANDS[args.subcommand](args, cfg, out)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
