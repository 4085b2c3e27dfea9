"""Command-line entry point: ``compton-povm <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""
import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .bell import (
    BipartiteState,
    LHV_BOUND,
    TSIRELSON,
    bell_test_angles,
    chsh,
    max_chsh,
    r_ratio,
    standard_states,
)
from .chain import QUADRATURE_MAX_N, coplanar_beta, total_cross_section_estimate
from .montecarlo import empirical_chsh
from .optimize import ConvergenceError, OptimizationConfig, optimize_beta, optimum_table
from .povm import mub_witness_I2

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

TABLE_LIMIT = 10
R_RATIO_CLAIM = 1.63


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seeds: list = field(default_factory=list)
    version: str = __version__
    timestamp: str = ""
    output_digests: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _digest(text):
    return hashlib.sha256(text.encode()).hexdigest()


def _emit(args, text, manifest):
    manifest.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat()
    if args.out:
        tmp = args.out + ".partial"
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, args.out)
        manifest.output_digests[os.path.basename(args.out)] = _digest(text)
        with open(args.out + ".manifest.json", "w") as fh:
            fh.write(manifest.to_json() + "\n")
    else:
        sys.stdout.write(text)
        manifest.output_digests["stdout"] = _digest(text)
        if args.manifest:
            with open(args.manifest, "w") as fh:
                fh.write(manifest.to_json() + "\n")


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _angle_out(args, x):
    return float(np.degrees(x)) if args.degrees else float(x)


def _angle_in(args, x):
    return float(np.radians(x)) if args.degrees else float(x)


def _params(args):
    skip = {"func", "out", "manifest"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _chain_beta(n, e0, seed=0):
    if n is None or n < 1:
        raise UsageError("--n must be a positive integer")
    if n == 1:
        return optimize_beta(OptimizationConfig(1, e0, seed=seed))
    return optimum_table(n, e0, seed=seed)[-1]


def cmd_tables(args):
    if args.n < 1 or args.n > args.limit:
        raise UsageError(f"--n must lie in [1, {args.limit}]")
    rows = optimum_table(args.n, args.e0, restarts=args.restarts, seed=args.seed)
    theta_cols = [f"theta_{j}" for j in range(1, args.n + 1)]
    cols = ["N"] + theta_cols + ["beta", "max_abs_S", "F", "D", "E_N"]
    if args.format == "json":
        records = []
        for r in rows:
            row = r.as_row()
            row["thetas"] = [_angle_out(args, t) for t in r.thetas_opt]
            records.append(row)
        text = _json({"rows": records, "e0": args.e0, "angle_unit": "deg" if args.degrees else "rad"})
    else:
        out = []
        for r in rows:
            thetas = [_angle_out(args, t) for t in r.thetas_opt] + [""] * (args.n - r.n)
            out.append([r.n] + thetas + [r.beta_opt, r.max_abs_S, r.fidelity, r.trace_distance, r.e_final])
        text = _csv(cols, out)
    return text, RunManifest("tables", _params(args), [args.seed])


def cmd_optimize(args):
    if args.n < 1:
        raise UsageError("--n must be a positive integer")
    rec = _chain_beta(args.n, args.e0, args.seed)
    row = rec.as_row()
    row["thetas"] = [_angle_out(args, t) for t in rec.thetas_opt]
    row["gradient_norm"] = rec.gradient_norm
    if args.format == "csv":
        cols = ["N"] + [f"theta_{j}" for j in range(1, rec.n + 1)] + ["beta", "max_abs_S", "F", "D", "E_N"]
        text = _csv(cols, [[rec.n] + row["thetas"] + [rec.beta_opt, rec.max_abs_S, rec.fidelity,
                                                     rec.trace_distance, rec.e_final]])
    else:
        text = _json(row)
    return text, RunManifest("optimize", _params(args), [args.seed])


def cmd_chsh_scan(args):
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    lo, hi = _angle_in(args, args.phi_min), _angle_in(args, args.phi_max)
    if not hi > lo:
        raise UsageError("--phi-max must exceed --phi-min")
    beta = args.beta if args.beta is not None else _chain_beta(args.n, args.e0).beta_opt
    if not 0.0 <= beta <= 1.0:
        raise UsageError("--beta must lie in [0, 1]")
    grid = np.linspace(lo, hi, args.steps)
    state = standard_states()["phi_minus"]
    s = np.array([chsh(state, beta, bell_test_angles(p)) for p in grid])
    refs = {"lhv_bound": LHV_BOUND, "tsirelson_bound": TSIRELSON}
    if args.format == "json":
        text = _json({"beta": beta, "n": args.n, "references": refs,
                      "phi": [_angle_out(args, p) for p in grid], "S": s.tolist(),
                      "abs_S": np.abs(s).tolist()})
    else:
        text = _csv(["phi", "S", "abs_S"], [[_angle_out(args, p), v, abs(v)] for p, v in zip(grid, s)])
    params = _params(args)
    params["beta_used"] = beta
    params["references"] = refs
    return text, RunManifest("chsh-scan", params)


def cmd_xsec(args):
    if args.n < 1:
        raise UsageError("--n must be a positive integer")
    if args.n > QUADRATURE_MAX_N and not args.allow_mc:
        raise UsageError(f"--n above {QUADRATURE_MAX_N} needs --allow-mc")
    ests = [total_cross_section_estimate(n, args.e0, mc_samples=args.mc_samples, seed=args.seed)
            for n in range(1, args.n + 1)]
    if args.format == "json":
        text = _json({"e0": args.e0, "unit": "r_e^(2N)",
                      "rows": [{"N": e.n, "sigma_tot": e.value, "error": e.error, "method": e.method}
                               for e in ests]})
    else:
        text = _csv(["N", "sigma_tot", "error", "method"], [[e.n, e.value, e.error, e.method] for e in ests])
    return text, RunManifest("xsec", _params(args), [args.seed])


def load_state(name_or_path):
    states = standard_states()
    if name_or_path in states:
        return states[name_or_path]
    if not os.path.exists(name_or_path):
        raise UsageError(f"unknown state {name_or_path!r}; choose from {sorted(states)} or give a file")
    if name_or_path.endswith(".npy"):
        m = np.load(name_or_path)
    elif name_or_path.endswith(".json"):
        # either a real nested list or {"real": [[...]], "imag": [[...]]}
        with open(name_or_path) as fh:
            raw = json.load(fh)
        if isinstance(raw, dict):
            m = np.asarray(raw["real"], dtype=float) + 1j * np.asarray(raw.get("imag", 0.0), dtype=float)
        else:
            m = np.asarray(raw, dtype=float)
    else:
        m = np.loadtxt(name_or_path, dtype=complex)
    if m.shape != (4, 4):
        raise UsageError(f"state matrix must be 4x4, got {m.shape}")
    try:
        return BipartiteState(m, label=os.path.basename(name_or_path))
    except ValueError as exc:
        raise UsageError(f"invalid state matrix: {exc}") from exc


def cmd_witness(args):
    state = load_state(args.state)
    single = optimize_beta(OptimizationConfig(1, args.e0))
    chain_rec = _chain_beta(args.n, args.e0)
    rr = r_ratio(state, args.e0)
    i2 = mub_witness_I2(state, single.beta_opt)
    s_max = max_chsh(state, chain_rec.beta_opt)
    separable = bool(np.min(np.linalg.eigvalsh(state.partial_transpose())) >= -1e-12)
    report = {
        "state": state.label,
        "e0": args.e0,
        "separable_by_ppt": separable,
        "R": rr.ratio,
        "R_geometry": {"theta_a": rr.theta_a, "theta_b": rr.theta_b, "delta_phi": rr.delta_phi},
        "I2": i2,
        "I2_beta": single.beta_opt,
        "chsh_n": args.n,
        "chsh_beta": chain_rec.beta_opt,
        "chsh_max": s_max,
        "verdicts": {
            "R_claims_entanglement": rr.ratio > R_RATIO_CLAIM,
            "I2_outside_separable_band": not 0.5 <= i2 <= 1.5,
            "chsh_violates_lhv": s_max > LHV_BOUND + 1e-9,
        },
    }
    if args.format == "json":
        text = _json(report)
    else:
        v = report["verdicts"]
        lines = [
            f"state: {state.label} (E0 = {args.e0})",
            f"PPT separable: {'yes' if separable else 'no'}",
            f"R ratio: {rr.ratio:.4f} (theta_a = {rr.theta_a:.4f}, theta_b = {rr.theta_b:.4f})",
            f"I2 (beta = {single.beta_opt:.4f}): {i2:.5f}",
            f"max |CHSH| (N = {args.n}, beta = {chain_rec.beta_opt:.4f}): {s_max:.4f}",
            f"verdict R > {R_RATIO_CLAIM}: {'entangled claimed' if v['R_claims_entanglement'] else 'no claim'}",
            f"verdict I2 outside [0.5, 1.5]: {'entangled' if v['I2_outside_separable_band'] else 'no claim'}",
            f"verdict CHSH > 2: {'violation' if v['chsh_violates_lhv'] else 'no violation'}",
        ]
        if separable and v["R_claims_entanglement"]:
            lines.append("note: R flags a separable state (false positive); CHSH does not")
        text = "\n".join(lines) + "\n"
    params = _params(args)
    return text, RunManifest("witness", params)


def cmd_mc(args):
    if args.pairs < 1:
        raise UsageError("--pairs must be >= 1")
    phi = _angle_in(args, args.phi)
    beta = args.beta if args.beta is not None else _chain_beta(args.n, args.e0).beta_opt
    settings = bell_test_angles(phi)
    state = standard_states()["phi_minus"]
    est = empirical_chsh(state, beta, settings, args.pairs, args.seed)
    analytic = chsh(state, beta, settings)
    out = {
        "n": args.n,
        "beta": beta,
        "phi": args.phi,
        "pairs_per_setting": args.pairs,
        "seed": args.seed,
        "settings": {k: v for k, v in asdict(settings).items()},
        "counts": [c.as_dict() for c in est.counts],
        "expectations": list(est.expectations),
        "S_emp": est.value,
        "standard_error": est.standard_error,
        "S_analytic": analytic,
        "z_vs_lhv": est.z_score(LHV_BOUND),
    }
    text = _json(out)
    return text, RunManifest("mc", _params(args), [args.seed])


def build_parser():
    p = _Parser(prog="compton-povm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt="csv"):
        sp.add_argument("--e0", type=float, default=1.0, help="photon energy in electron masses")
        sp.add_argument("--out", help="output file (a <out>.manifest.json is written next to it)")
        sp.add_argument("--manifest", help="manifest path when writing to stdout")
        sp.add_argument("--format", choices=["csv", "json"] if fmt != "text" else ["text", "json"],
                        default=fmt)
        sp.add_argument("--degrees", action="store_true", help="angles in degrees instead of radians")

    sp = sub.add_parser("tables", help="optimal angles and metrics for N = 1..n")
    common(sp)
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--limit", type=int, default=TABLE_LIMIT)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--restarts", type=int, default=4)
    sp.set_defaults(func=cmd_tables)

    sp = sub.add_parser("optimize", help="optimal angles for one chain length")
    common(sp, "json")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("chsh-scan", help="CHSH along the Bell-test-angle family")
    common(sp)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--beta", type=float, help="use this analyzing power instead of optimizing")
    sp.add_argument("--phi-min", type=float, default=0.0)
    sp.add_argument("--phi-max", type=float, default=float(np.pi))
    sp.add_argument("--steps", type=int, default=721)
    sp.set_defaults(func=cmd_chsh_scan)

    sp = sub.add_parser("xsec", help="total N-fold cross sections")
    common(sp)
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--allow-mc", action="store_true", help="Monte Carlo for N above 5")
    sp.add_argument("--mc-samples", type=int, default=10_000_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_xsec)

    sp = sub.add_parser("witness", help="R ratio, I2 and CHSH for a two-photon state")
    common(sp, "text")
    sp.add_argument("state", help="phi_minus, omega_mix, omega_sep, product_HV, or a 4x4 matrix file")
    sp.add_argument("--n", type=int, default=2, help="chain length for the CHSH analyzing power")
    sp.set_defaults(func=cmd_witness)

    sp = sub.add_parser("mc", help="Monte Carlo CHSH estimate for |Phi->")
    common(sp, "json")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--phi", type=float, default=float(np.pi / 8))
    sp.add_argument("--pairs", type=int, default=10_000_000)
    sp.add_argument("--seed", type=int, default=42)
    sp.set_defaults(func=cmd_mc)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.e0 <= 0:
            raise UsageError("--e0 must be positive")
        text, manifest = args.func(args)
    except UsageError as exc:
        print(f"compton-povm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        # outputs are written atomically after success, so nothing partial is left
        print(f"compton-povm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(args, text, manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
