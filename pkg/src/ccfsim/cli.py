"""``ccf-sim`` command-line front end.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .atwood import BINOMIAL, COEFFICIENT_FREE, gamma_ratio, solve_rates_analytic
from .campaign import run_campaign
from .config import CampaignConfig, ConfigError, load_config
from .estimators import estimate_params_pipeline, summarize
from .report import fmt, results_csv, rex_lines, simulate_summary, sweep_summary
from .shocks import CONTINUOUS, ROUNDED_HOURS

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("ccfsim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="campaign definition (TOML)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--histories", type=int, help="number of histories per setting")
    common.add_argument("--jobs", type=int, help="worker processes (0 = all cores)")
    common.add_argument("--rex", help="write the simulated REX log (JSON Lines) to this path")
    common.add_argument("--out", help="output directory")
    common.add_argument("--variant", choices=(COEFFICIENT_FREE, BINOMIAL), help="shock-sum variant")
    common.add_argument("--rounding", choices=(CONTINUOUS, ROUNDED_HOURS), help="shock-time rounding")
    common.add_argument("--rho", type=float, help="use a single rho instead of the configured list")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="ccf-sim", description="Common-cause failure simulation campaigns")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("params", parents=[common], help="analytic shock rates and gamma")
    p.add_argument("--monte-carlo", action="store_true", help="also run the shock-free estimation campaign")
    sub.add_parser("simulate", parents=[common], help="PFD campaign for each configured rho")
    sub.add_parser("orientation-sweep", parents=[common], help="stop-on-failure campaign per orientation pair")
    return parser


def apply_overrides(cfg: CampaignConfig, args) -> CampaignConfig:
    run, model = cfg.run, cfg.model
    if args.histories is not None:
        if args.histories < 1:
            raise ConfigError("--histories", args.histories, "must be >= 1")
        run = replace(run, histories=args.histories)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed", args.seed, "must be >= 0")
        run = replace(run, seed=args.seed)
    if args.jobs is not None:
        if args.jobs < 0:
            raise ConfigError("--jobs", args.jobs, "must be >= 0")
        run = replace(run, jobs=args.jobs)
    if args.variant is not None:
        model = replace(model, variant=args.variant)
    if args.rounding is not None:
        model = replace(model, rounding=args.rounding)
    if args.rho is not None:
        if not 0.0 <= args.rho <= 1.0:
            raise ConfigError("--rho", args.rho, "must lie in [0, 1]")
        model = replace(model, rho=(args.rho,))
    return replace(cfg, run=run, model=model)


class OutputSet:
    """Files written by one command; removed again if the command fails."""

    def __init__(self):
        self.written: list[Path] = []
        self.made_dirs: list[Path] = []

    def _mkdir(self, directory: Path) -> None:
        missing = []
        d = directory
        while not d.exists():
            missing.append(d)
            d = d.parent
        directory.mkdir(parents=True, exist_ok=True)
        self.made_dirs.extend(reversed(missing))

    def write(self, path: Path, chunks) -> None:
        self._mkdir(path.parent)
        with path.open("w", encoding="utf-8", newline="") as fh:
            self.written.append(path)
            if isinstance(chunks, str):
                fh.write(chunks)
            else:
                for c in chunks:
                    fh.write(c)

    def rollback(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)
        for d in reversed(self.made_dirs):
            try:
                d.rmdir()
            except OSError:
                pass


def _paths(cfg: CampaignConfig, args) -> tuple[Path, Path, Path | None]:
    out = Path(args.out if args.out is not None else cfg.output.dir)
    rex = None
    if args.rex is not None:
        rex = Path(args.rex)
    elif cfg.output.rex is not None:
        rex = out / cfg.output.rex
    return out / cfg.output.csv, out / cfg.output.summary, rex


def _header(cfg: CampaignConfig, command: str, elapsed: float) -> list[str]:
    arch = cfg.architecture
    topo = cfg.topology()
    return [
        f"ccf-sim {__version__} {command}",
        f"elements {topo.n_elements}, vote {arch.vote}, GAPU threshold {topo.threshold}, "
        f"C2 {arch.c2_granularity}",
        f"histories {cfg.run.histories}, seed {cfg.run.seed}, mission {fmt(cfg.run.mission_hours)} h, "
        f"jobs {cfg.run.jobs}",
        f"variant {cfg.model.variant}, rounding {cfg.model.rounding}, coverage {fmt(cfg.model.coverage)}",
        f"wall time {elapsed:.1f} s",
    ]


def cmd_params(cfg: CampaignConfig, args, outputs: OutputSet) -> str:
    m = cfg.model
    topo = cfg.topology()
    n = topo.n_elements
    cols = ["rho", "mu", "omega", "gamma_coefficient_free", "gamma_binomial"]
    if args.monte_carlo:
        cols += ["e_i", "lambda_ind_mc", "mu_mc", "omega_mc", "mu_rel_diff"]
    rows = []
    for rho in m.rho:
        row = {"rho": rho}
        row["mu"], row["omega"] = solve_rates_analytic(n, m.alpha_nonlethal, m.beta_lethal, rho, m.lambda_ind, m.variant)
        g = gamma_ratio(n, m.alpha_nonlethal, m.beta_lethal, rho, "both")
        row["gamma_coefficient_free"], row["gamma_binomial"] = g[COEFFICIENT_FREE], g[BINOMIAL]
        if args.monte_carlo:
            est = estimate_params_pipeline(
                topo, cfg.model_params(rho), cfg.run.histories, cfg.run.seed, cfg.policy(),
                m.variant, cfg.run.jobs,
            )
            row.update(e_i=est.e_i, lambda_ind_mc=est.lambda_ind, mu_mc=est.mu,
                       omega_mc=est.omega, mu_rel_diff=est.mu_rel_diff)
        rows.append(row)
    widths = [max(len(c), 12) for c in cols]
    text = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    for row in rows:
        text.append("  ".join(fmt(row[c]).rjust(w) for c, w in zip(cols, widths)))
    report = (
        f"alpha {fmt(m.alpha_nonlethal)}, beta {fmt(m.beta_lethal)}, lambda_ind {fmt(m.lambda_ind)} /h, "
        f"N {n}, variant {m.variant}\n" + "\n".join(text) + "\n"
    )
    if args.out is not None:
        csv_text = ",".join(cols) + "\n" + "".join(",".join(fmt(r[c]) for c in cols) + "\n" for r in rows)
        outputs.write(Path(args.out) / "params.csv", csv_text)
    return report


def _campaign(cfg, model, policy, record):
    return run_campaign(cfg.topology(), model, replace(policy, record_log=record),
                        cfg.run.histories, cfg.run.seed, cfg.run.jobs)


def cmd_simulate(cfg: CampaignConfig, args, outputs: OutputSet) -> str:
    csv_path, summary_path, rex_path = _paths(cfg, args)
    t0 = time.perf_counter()
    results, all_histories = [], []
    o = cfg.model.orientation
    for i, rho in enumerate(cfg.model.rho):
        model = cfg.model_params(rho)
        log.info("simulating rho = %s", rho)
        hist = _campaign(cfg, model, cfg.policy(), rex_path is not None)
        label = {"setting": f"rho{i}", "rho": rho, "mu": model.shock.mu, "omega": model.shock.omega}
        if o.enabled:
            label.update(p_a=o.p_a, p_b=1.0 - o.p_a)
        results.append(summarize(hist, label=label))
        if rex_path is not None:
            all_histories.append(hist)
    summary = simulate_summary(results, _header(cfg, "simulate", time.perf_counter() - t0))
    outputs.write(csv_path, results_csv(results))
    outputs.write(summary_path, summary)
    if rex_path is not None:
        outputs.write(rex_path, (line for hist in all_histories for line in rex_lines(hist)))
    return summary


def cmd_orientation_sweep(cfg: CampaignConfig, args, outputs: OutputSet) -> str:
    csv_path, summary_path, rex_path = _paths(cfg, args)
    pairs = cfg.model.orientation.pairs
    # validate every pair before spending time on campaigns
    models = {(rho, p): cfg.model_params(rho, p[0]) for rho in cfg.model.rho for p in pairs}
    t0 = time.perf_counter()
    policy = cfg.policy(stop_on_first_failure=True)
    results, all_histories = [], []
    for i, rho in enumerate(cfg.model.rho):
        baseline = None
        for j, pair in enumerate(pairs):
            model = models[(rho, pair)]
            log.info("sweep rho = %s, pair = %s", rho, pair)
            hist = _campaign(cfg, model, policy, rex_path is not None)
            label = {"setting": f"rho{i}_pair{j}", "rho": rho, "p_a": pair[0], "p_b": pair[1],
                     "mu": model.shock.mu, "omega": model.shock.omega}
            res = summarize(hist, baseline, label)
            if j == 0:
                baseline = res.mttff.mean_hours
            results.append(res)
            if rex_path is not None:
                all_histories.append(hist)
    header = _header(cfg, "orientation-sweep", time.perf_counter() - t0)
    header.append(f"subset A = {cfg.model.orientation.subset_a}, baseline = first pair")
    parts = []
    for i, rho in enumerate(cfg.model.rho):
        block = [r for r in results if r.label["rho"] == rho]
        parts.append(sweep_summary(block, ["", f"rho = {fmt(rho)}"]))
    summary = "\n".join(header) + "\n" + "".join(parts)
    outputs.write(csv_path, results_csv(results))
    outputs.write(summary_path, summary)
    if rex_path is not None:
        outputs.write(rex_path, (line for hist in all_histories for line in rex_lines(hist)))
    return summary


COMMANDS = {
    "params": cmd_params,
    "simulate": cmd_simulate,
    "orientation-sweep": cmd_orientation_sweep,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"ccf-sim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    outputs = OutputSet()
    try:
        cfg = apply_overrides(load_config(args.config), args)
        text = COMMANDS[args.command](cfg, args, outputs)
    except ConfigError as exc:
        outputs.rollback()
        print(f"ccf-sim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        outputs.rollback()
        where = f" ({exc.filename})" if exc.filename else ""
        print(f"ccf-sim: I/O error{where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - every other failure is a runtime error
        outputs.rollback()
        print(f"ccf-sim: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
