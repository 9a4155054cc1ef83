"""Command-line front end: classify, gsore-check, hbeta, simulate, frf-convert.

Configurations are JSON files; all angles are radians in JSON output and
degrees in plot-ready CSV output.  Exit codes: 0 certified/pass, 2 not
certified or inconclusive, 1 error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import elements
from .elements import ResetElement
from .errors import ConfigError, ResetCertError
from .frf import FrfTable, load_frf, save_frf
from .gsore import OptimizerSettings, certify, gsore_problem
from .hbeta import HbetaCandidate, loop_invariants, search_candidate_scalar, spr_check_scalar
from .lti import RationalTF, assemble_closed_loop, tf
from .nsv import certify_first_order, nsv_grid_samples
from .sim import InputSignal, SimConfig, default_dt, simulate


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_json(obj, out_path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out_path:
        _atomic_write(out_path, text)
    else:
        sys.stdout.write(text)


def cglp_pid_blocks(k_p: float, omega_c: float, omega_d: float, xi_d: float) -> RationalTF:
    """Linear part of the constant-gain lead-phase compensator plus PID.

    Second-order lead over a double pole at 10*omega_c, a weak PI with corner
    omega_c/10, and a 3x lead around the crossover; the resetting stage is
    supplied separately as the element.
    """
    lead2 = tf([omega_d**2, 2.0 * xi_d * omega_d, 1.0],
               [100.0 * omega_c**2, 20.0 * omega_c, 1.0])
    pi = tf([omega_c, 10.0], [0.0, 10.0])
    lead1 = tf([1.0, 3.0 / omega_c], [1.0, 1.0 / (3.0 * omega_c)])
    return k_p * lead2 * pi * lead1


def _block_from_cfg(cfg) -> RationalTF:
    if cfg is None:
        return tf([1.0])
    if isinstance(cfg, (int, float)):
        return tf([float(cfg)])
    if "template" in cfg:
        name = cfg["template"]
        params = cfg.get("params", {})
        if name == "cglp_pid":
            try:
                return cglp_pid_blocks(params["k_p"], params["omega_c"],
                                       params["omega_d"], params["xi_d"])
            except KeyError as exc:
                raise ConfigError(f"cglp_pid template missing parameter {exc}") from None
        raise ConfigError(f"unknown block template {name!r}")
    try:
        return tf(cfg["num"], cfg["den"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"block needs num/den coefficient lists: {exc}") from None


def _element_from_cfg(cfg) -> ResetElement:
    if not cfg or "kind" not in cfg:
        raise ConfigError("config needs an element section with a kind")
    kind = cfg["kind"].upper()
    wr = float(cfg.get("omega_r", 1.0))
    xi = float(cfg.get("xi", 1.0))
    form = cfg.get("realization", "controllable")
    if kind == "CI":
        return elements.clegg(float(cfg.get("gamma", 0.0)))
    if kind == "PCI":
        return elements.pci(wr, float(cfg.get("gamma", 0.0)))
    if kind == "GFORE":
        return elements.gfore(wr, float(cfg.get("gamma", 0.0)))
    if kind == "GSORE":
        return elements.gsore(wr, xi, float(cfg.get("gamma1", cfg.get("gamma", 0.0))),
                              float(cfg.get("gamma2", cfg.get("gamma", 0.0))),
                              realization_form=form)
    if kind == "SOSRE":
        return elements.sosre(wr, xi, float(cfg.get("gamma", 0.0)), realization_form=form)
    raise ConfigError(f"unknown element kind {kind!r}")


def _load_config(args):
    if not args.config:
        raise ConfigError("--config is required")
    if not os.path.exists(args.config):
        raise ConfigError(f"config file not found: {args.config}")
    with open(args.config, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {args.config}: {exc}") from None


def _plant_from(args, cfg):
    if args.frf:
        if not os.path.exists(args.frf):
            raise ConfigError(f"FRF file not found: {args.frf}")
        return load_frf(args.frf, args.frf_format)
    blocks = cfg.get("blocks", {})
    if "plant" not in blocks:
        raise ConfigError("config needs blocks.plant or an --frf file")
    return _block_from_cfg(blocks["plant"])


def _parse_asymptote(text):
    if text is None:
        return None
    try:
        lo, hi = (int(p) for p in text.split(","))
        return lo, hi
    except ValueError:
        raise ConfigError("--asymptote expects two integers, e.g. -1,-3") from None


def _write_nsv_csv(nsv, path):
    rows = ["omega_rad_s,theta_deg"]
    rows += [f"{s.omega:.17g},{np.degrees(s.theta):.17g}" for s in nsv]
    _atomic_write(path, "\n".join(rows) + "\n")


def cmd_classify(args) -> int:
    cfg = _load_config(args)
    element = _element_from_cfg(cfg.get("element"))
    blocks = cfg.get("blocks", {})
    plant = _plant_from(args, cfg)
    verdict = certify_first_order(
        element,
        _block_from_cfg(blocks.get("c_l1")),
        _block_from_cfg(blocks.get("c_l2")),
        plant,
        c_s=_block_from_cfg(blocks.get("c_s")),
        architecture=cfg.get("architecture", "standard"),
        points=args.grid_points,
        plant_rhp_poles=int(cfg.get("plant_rhp_poles", 0)),
        plant_origin_poles=int(cfg.get("plant_origin_poles", 0)),
        asymptote=_parse_asymptote(args.asymptote),
    )
    tv = verdict.type_verdict
    out = {
        "certified": verdict.certified,
        "conditional_on_well_posedness": verdict.conditional_on_well_posedness,
        "is_type1": tv.is_type1,
        "is_type2": tv.is_type2,
        "theta1": tv.theta1,
        "theta2": tv.theta2,
        "k_s0": verdict.k_s0,
        "k_n": verdict.k_n,
        "bullets": [{"name": n, "status": s, "detail": d} for n, s, d in verdict.bullets],
        "diagnostics": [{"condition": c, "outcome": o} for c, o in tv.diagnostics],
    }
    _emit_json(out, args.out)
    if args.nsv_out:
        variant = "sosre" if element.kind == "SOSRE" else (
            "modified" if cfg.get("architecture") == "modified" else "standard")
        _, nsv = nsv_grid_samples(plant, _block_from_cfg(blocks.get("c_l1")),
                                  _block_from_cfg(blocks.get("c_l2")),
                                  _block_from_cfg(blocks.get("c_s")), element,
                                  variant=variant, points=args.grid_points)
        _write_nsv_csv(nsv, args.nsv_out)
    return 0 if verdict.certified else 2


def cmd_gsore(args) -> int:
    cfg = _load_config(args)
    element = _element_from_cfg(cfg.get("element"))
    if element.kind != "GSORE":
        raise ConfigError("gsore-check needs a GSORE element")
    blocks = cfg.get("blocks", {})
    plant = _plant_from(args, cfg)
    extra = cfg.get("gsore", {})
    problem = gsore_problem(
        element,
        _block_from_cfg(blocks.get("c_l1")),
        _block_from_cfg(blocks.get("c_l2")),
        plant,
        c_s=_block_from_cfg(blocks.get("c_s")),
        points=args.grid_points,
        origin_pole=extra.get("origin_pole"),
        k_s0=extra.get("k_s0"),
        k_n=extra.get("k_n"),
        n_minus_m=extra.get("n_minus_m"),
    )
    opt = cfg.get("optimizer", {})
    settings = OptimizerSettings(
        population=int(opt.get("population", 200)),
        generations=int(opt.get("generations", 500)),
        restarts=int(opt.get("restarts", 8)),
        seed=args.seed,
    )
    result = certify(problem, settings)
    out = {
        "certified": result.certified,
        "problem_type": result.problem_type,
        "q": list(result.q),
        "m_value": result.m_value,
        "reconstructed": {k: v for k, v in zip(
            ("beta1", "beta2", "rho1", "rho2", "rho3"), result.reconstructed)},
        "constraint_report": result.constraint_report,
        "oracle_cross_check": result.oracle_cross_check,
        "rank_check": result.rank_check,
        "seed": result.seed,
        "ratio_windows": {k: list(v) for k, v in result.ratio_windows.items() if v},
    }
    _emit_json(out, args.out)
    return 0 if result.certified else 2


def cmd_hbeta(args) -> int:
    cfg = _load_config(args)
    element = _element_from_cfg(cfg.get("element"))
    blocks = cfg.get("blocks", {})
    plant = _plant_from(args, cfg)
    if isinstance(plant, FrfTable):
        raise ConfigError("hbeta needs rational blocks for the limit checks")
    c_l1 = _block_from_cfg(blocks.get("c_l1"))
    c_l2 = _block_from_cfg(blocks.get("c_l2"))
    c_s = _block_from_cfg(blocks.get("c_s"))
    variant = "sosre" if element.kind == "SOSRE" else (
        "modified" if cfg.get("architecture") == "modified" else "standard")
    samples, _ = nsv_grid_samples(plant, c_l1, c_l2, c_s, element,
                                  variant=variant, points=args.grid_points)
    p_lin, _, _, _, _, _ = loop_invariants(element, c_l1, c_l2, plant, c_s)
    cand_cfg = cfg.get("candidate")
    if cand_cfg:
        cand = HbetaCandidate(float(cand_cfg["beta_prime"]), float(cand_cfg["rho_prime"]))
    else:
        cand = search_candidate_scalar(samples, element, c_s, p_lin, variant)
        if cand is None:
            _emit_json({"passed": False, "candidate": None,
                        "note": "no direction passes the sweep"}, args.out)
            return 2
    rep = spr_check_scalar(cand, samples, element, c_s, p_lin, variant)
    out = {
        "passed": rep.passed,
        "candidate": {"beta_prime": float(np.asarray(cand.beta_prime).reshape(())),
                      "rho_prime": float(np.asarray(cand.rho_prime).reshape(()))},
        "rho_positive": rep.rho_positive,
        "min_margin": rep.min_margin,
        "worst_omega": rep.worst_omega,
        "limit_zero": None if rep.limit_zero is None else
            {"kind": rep.limit_zero.kind, "value": rep.limit_zero.value,
             "passed": rep.limit_zero.passed},
        "limit_inf": None if rep.limit_inf is None else
            {"kind": rep.limit_inf.kind, "value": rep.limit_inf.value,
             "passed": rep.limit_inf.passed},
    }
    _emit_json(out, args.out)
    return 0 if rep.passed else 2


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    element = _element_from_cfg(cfg.get("element"))
    blocks = cfg.get("blocks", {})
    plant = _plant_from(args, cfg)
    if isinstance(plant, FrfTable):
        raise ConfigError("simulation needs a rational plant model")
    sim_cfg = cfg.get("simulation", {})
    c_l1 = _block_from_cfg(blocks.get("c_l1"))
    c_l2 = _block_from_cfg(blocks.get("c_l2"))
    c_s = _block_from_cfg(blocks.get("c_s"))
    arch = cfg.get("architecture", "standard")

    inp_cfg = sim_cfg.get("input", {"kind": "step", "amplitude": 1.0})
    inp = InputSignal(inp_cfg.get("kind", "step"),
                      amplitude=float(inp_cfg.get("amplitude", 1.0)),
                      freq=float(inp_cfg.get("freq", 1.0)),
                      phase=float(inp_cfg.get("phase", 0.0)),
                      terms=tuple(tuple(t) for t in inp_cfg.get("terms", [])))

    gammas = sim_cfg.get("gamma_sweep")
    runs = []
    if gammas:
        for g in gammas:
            if element.n_r == 1:
                a_rho = [[float(g)]]
            elif element.kind == "SOSRE":
                a_rho = [[float(g), 0.0], [0.0, 1.0]]
            else:
                a_rho = [[float(g), 0.0], [0.0, float(g)]]
            runs.append((f"_gamma{g:g}", a_rho))
    else:
        runs.append(("", element.a_rho))

    if not args.out:
        raise ConfigError("simulate needs --out for the trace CSV")
    for suffix, a_rho in runs:
        cl = assemble_closed_loop(elements.realization(element), a_rho,
                                  c_l1, c_l2, plant, c_s, architecture=arch)
        dt = float(sim_cfg.get("dt", default_dt(cl)))
        t_end = float(sim_cfg.get("t_end", 2000 * dt))
        x0 = sim_cfg.get("x0")
        run_cfg = SimConfig(cl, dt=dt, t_end=t_end, lam=sim_cfg.get("lambda"),
                            input=inp, x0=None if x0 is None else np.asarray(x0, float))
        trace = simulate(run_cfg)
        base, ext = os.path.splitext(args.out)
        trace.save_csv(f"{base}{suffix}{ext}" if suffix else args.out)

    if args.nsv_out:
        variant = "sosre" if element.kind == "SOSRE" else (
            "modified" if arch == "modified" else "standard")
        _, nsv = nsv_grid_samples(plant, c_l1, c_l2, c_s, element,
                                  variant=variant, points=args.grid_points)
        _write_nsv_csv(nsv, args.nsv_out)
    return 0


def cmd_frf_convert(args) -> int:
    if not args.frf:
        raise ConfigError("frf-convert needs --frf")
    table = load_frf(args.frf, args.frf_format)
    if not args.out:
        raise ConfigError("frf-convert needs --out")
    save_frf(table, args.out, args.to)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resetcert",
                                description="Stability certification for reset control loops")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--frf", help="measured plant FRF file (CSV)")
    common.add_argument("--frf-format", choices=["complex", "magphase"], default="complex")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid-points", type=int, default=2000)
    common.add_argument("--asymptote", help="declared low,high loop slopes for FRF plants")
    common.add_argument("--out", help="output path (JSON or CSV per command)")
    common.add_argument("--nsv-out", help="write (omega, angle) CSV in degrees")

    sub.add_parser("classify", parents=[common]).set_defaults(fn=cmd_classify)
    sub.add_parser("gsore-check", parents=[common]).set_defaults(fn=cmd_gsore)
    sub.add_parser("hbeta", parents=[common]).set_defaults(fn=cmd_hbeta)
    sub.add_parser("simulate", parents=[common]).set_defaults(fn=cmd_simulate)
    conv = sub.add_parser("frf-convert", parents=[common])
    conv.add_argument("--to", choices=["complex", "magphase"], default="complex")
    conv.set_defaults(fn=cmd_frf_convert)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ResetCertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
