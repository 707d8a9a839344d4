"""Command-line driver: run, verify-kernel, check-lemmas, diagnose."""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

from . import io
from .diagnostics import energy_balance, hs0b_norm, pde_residual
from .errors import (
    ConfigError,
    ContractionFailure,
    HallBraidError,
    ParseError,
    QuadratureError,
)
from .kernel import LABELS, Truncation, WeightSpec, sup_scan
from .lemmas import check_lemmas
from .solver import Trajectory, solve
from .spectral import ModelParams, check_symmetry

log = logging.getLogger("hallbraid")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONTRACTION = 3
EXIT_VERIFY = 4

LEDGER_COLUMNS = ["t", "energy", "dissipation_cum", "balance_residual", "gronwall_margin"]


def _text_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# run


def _write_run_outputs(cfg: io.RunConfig, traj: Trajectory, out: Path, h: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(f"# config_sha256 {h}\n" + cfg.to_text())
    snaps = traj.snapshots
    keep = list(range(0, len(snaps), cfg.snapshot_stride))
    if keep[-1] != len(snaps) - 1:
        keep.append(len(snaps) - 1)
    for i in keep:
        io.write_snapshot(out / f"snap_{i:06d}.txt", snaps[i], cfg.model, h)
    if len(snaps) >= 2:
        ledger = energy_balance(traj)
        io.write_table(out / "ledger.tsv", LEDGER_COLUMNS, ledger.rows(), h)
    rows = []
    t = snaps[0].time
    for k, (delta, iters, resid, ratio) in enumerate(traj.contraction_log):
        t += delta
        rows.append((k, float(t), float(delta), iters, float(resid), float(ratio)))
    io.write_table(out / "picard.log", ["window", "t_end", "delta", "iterations", "residual",
                                        "contraction_ratio"], rows, h)


def run(cfg: io.RunConfig) -> int:
    h = cfg.config_hash()
    c0 = io.synthetic_initial(cfg)
    out = Path(cfg.output_dir)
    try:
        traj = solve(c0, cfg.t_end, cfg.model, cfg.solver)
    except ContractionFailure as exc:
        log.error("%s", exc)
        if exc.trajectory is not None:
            _write_run_outputs(cfg, exc.trajectory, out, h)
        return EXIT_CONTRACTION
    _write_run_outputs(cfg, traj, out, h)
    log.info("wrote %d snapshots to %s", len(traj.snapshots), out)
    return EXIT_OK


def _cmd_run(args) -> int:
    values = io.read_config_file(args.config) if args.config else {}
    for key in io.CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = io.RunConfig.from_mapping(values)
    return run(cfg)


# ---------------------------------------------------------------------------
# verify-kernel


def _cmd_verify_kernel(args) -> int:
    spec = WeightSpec(args.s, args.b, args.bprime, override=args.override_exponents)
    params = ModelParams(1.0, 0.0, args.gamma)
    ladder = [Truncation(args.mmax, args.nmax), Truncation(2 * args.mmax, 2 * args.nmax)]
    report = sup_scan(range(1, args.mmax + 1), range(1, args.nmax + 1), ladder, spec, params,
                      prune_rtol=args.prune_rtol, n_resonant=args.tau_probes)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    settings = (f"s={args.s!r} b={args.b!r} bprime={args.bprime!r} gamma={args.gamma!r} "
                f"mmax={args.mmax} nmax={args.nmax} tau_probes={args.tau_probes} "
                f"prune_rtol={args.prune_rtol!r} override={args.override_exponents}")
    h = _text_hash(settings)
    rows = []
    for rung, m, n, tau, total, br in report.rows:
        rows.append((f"{rung.mmax}x{rung.nmax}", m, n, float(tau), float(total),
                     *(float(br[lab]) for lab in LABELS)))
    io.write_table(out / "kernel_report.tsv",
                   ["trunc", "m", "n", "tau", "total", *LABELS], rows, h)
    summary = report.partition_summary()
    io.write_table(out / "partition_summary.tsv", ["label", "total", "max"],
                   [(lab, summary[lab]["total"], summary[lab]["max"]) for lab in LABELS], h)
    line = f"sup={report.sup:.17g} plateau={report.plateau:.6g}"
    (out / "summary.txt").write_text(f"# config_sha256 {h}\n# {settings}\n{line}\n")
    print(line)
    return EXIT_OK if report.plateau <= args.plateau_threshold else EXIT_VERIFY


# ---------------------------------------------------------------------------
# check-lemmas


def _cmd_check_lemmas(args) -> int:
    report = check_lemmas(args.b, args.bprime, args.grid_density, args.tolerance)
    settings = f"b={args.b!r} bprime={args.bprime!r} grid_density={args.grid_density}"
    h = _text_hash(settings)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_sha256 {h}", f"# {settings}"]
    changes = report.relative_changes()
    for sec in report.sections:
        lines.append(f"[{sec.name}] max_ratio={sec.max_ratio:.17g} "
                     f"refined={report.refined_max[sec.name]:.17g} change={changes[sec.name]:.3g}")
        lines.append("\t".join(sec.columns))
        for r in sec.rows:
            lines.append("\t".join("%.17g" % x if isinstance(x, float) else str(x) for x in r))
    (out / "lemma_report.tsv").write_text("\n".join(lines) + "\n")
    for sec in report.sections:
        print(f"{sec.name}: max={sec.max_ratio:.6g} change={changes[sec.name]:.3g}")
    return EXIT_OK if report.stable else EXIT_VERIFY


# ---------------------------------------------------------------------------
# diagnose


def _cmd_diagnose(args) -> int:
    d = Path(args.directory)
    files = sorted(d.glob("snap_*.txt"))
    if not files:
        raise ConfigError(f"no snapshot files in {d}")
    snaps, params = [], None
    for f in files:
        c, header = io.read_snapshot(f)
        snaps.append(c)
        params = params or header["params"]
    if params is None:
        raise ParseError("snapshots carry no model parameters")
    traj = Trajectory(snaps, params, None)
    rows = []
    ledger = energy_balance(traj) if len(snaps) >= 2 else None
    for k, c in enumerate(snaps):
        scale = c.max_abs()
        sym = check_symmetry(c.coeffs, rtol=1.0) / scale if scale else 0.0
        e = ledger.energy[k] if ledger else float("nan")
        g = ledger.gronwall_margin[k] if ledger else float("nan")
        rows.append((float(c.time), float(e), float(g), float(sym),
                     hs0b_norm(c, args.s, args.b)))
    header = ["t", "energy", "gronwall_margin", "symmetry_defect", "hs0b"]
    try:
        res = pde_residual(traj, params)
        resid = [float("nan")] + res + [float("nan")]
    except HallBraidError:
        resid = [float("nan")] * len(rows)
    rows = [r + (x,) for r, x in zip(rows, resid)]
    header.append("pde_residual")
    io.write_table(d / "diagnostics.tsv", header, rows)
    for r in rows:
        print("\t".join("%.6g" % x for x in r))
    worst = max(r[2] for r in rows)
    return EXIT_OK if not (worst > 1e-6) else EXIT_VERIFY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hallbraid", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a configuration and write snapshots")
    p.add_argument("--config", help="key = value configuration file")
    for key, (typ, _) in io.CONFIG_KEYS.items():
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=str, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify-kernel", help="scan the weighted kernel sum")
    p.add_argument("--s", type=float, default=2.6)
    p.add_argument("--b", type=float, default=0.55)
    p.add_argument("--bprime", type=float, default=0.6)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--mmax", type=int, default=32)
    p.add_argument("--nmax", type=int, default=32)
    p.add_argument("--tau-probes", type=int, default=8,
                   help="number of resonance-value probes per mode")
    p.add_argument("--override-exponents", action="store_true")
    p.add_argument("--plateau-threshold", type=float, default=0.05)
    p.add_argument("--prune-rtol", type=float, default=1e-6)
    p.add_argument("--output-dir", default="kernel_out")
    p.set_defaults(func=_cmd_verify_kernel)

    p = sub.add_parser("check-lemmas", help="ratio checks of the auxiliary inequalities")
    p.add_argument("--grid-density", type=int, default=6)
    p.add_argument("--b", type=float, default=0.55)
    p.add_argument("--bprime", type=float, default=0.6)
    p.add_argument("--tolerance", type=float, default=0.02)
    p.add_argument("--output-dir", default="lemma_out")
    p.set_defaults(func=_cmd_check_lemmas)

    p = sub.add_parser("diagnose", help="energy ledger and norms of a run directory")
    p.add_argument("directory")
    p.add_argument("--s", type=float, default=2.6)
    p.add_argument("--b", type=float, default=0.55)
    p.set_defaults(func=_cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractionFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACTION
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except HallBraidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
