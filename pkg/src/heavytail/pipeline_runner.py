import argparse
import logging
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from heavytail import __version__
from heavytail.config import (ExperimentConfig, GarchAlphaConfig, HillConfig,
                              SimulateConfig, build_config, flatten,
                              resolve_threads)
from heavytail.lab.errors import ConfigError
from heavytail.pipeline.command_result import (CONFIG_ERROR, OK, RUNTIME_ERROR,
                                               TOLERANCE_FAILURE)
from heavytail.pipeline.metadata import ManifestRepository, RunManifest
# Import workflow definitions
from heavytail.workflows import (b_estimate, eigen, garch_alpha, hill,
                                 simulate, verify)

EXIT_PASS = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_TOLERANCE = 3

# Workflow registry mapping subcommands to get_pipeline functions
WORKFLOW_REGISTRY = {
    "simulate": simulate.get_pipeline,
    "eigen": eigen.get_pipeline,
    "verify": verify.get_pipeline,
    "garch-alpha": garch_alpha.get_pipeline,
    "b-estimate": b_estimate.get_pipeline,
    "hill": hill.get_pipeline,
}

CONFIG_MODELS = {
    "simulate": SimulateConfig,
    "eigen": ExperimentConfig,
    "verify": ExperimentConfig,
    "garch-alpha": GarchAlphaConfig,
    "b-estimate": ExperimentConfig,
    "hill": HillConfig,
}

# subcommands that only write a manifest when --out-dir is given
STDOUT_COMMANDS = {"garch-alpha", "hill"}

PROCESS_FLAGS = {
    "process": "process.kind",
    "alpha": "process.tail.alpha",
    "q": "process.tail.q",
    "scale": "process.tail.scale",
    "vol": "process.vol.kind",
    "psi": "process.vol.psi",
    "xi_std": "process.vol.xi_std",
    "vol_m": "process.vol.m",
    "vol_mu": "process.vol.mu",
    "vol_tau": "process.vol.tau",
    "a0": "process.garch.a0",
    "a1": "process.garch.a1",
    "b1": "process.garch.b1",
    "burn_in": "process.burn_in",
}

EXPERIMENT_FLAGS = {
    "limit_alpha": "alpha",
    "n": "n",
    "k": "k",
    "reps": "reps",
    "b_reps": "b_reps",
    "x_grid": "x_grid",
    "calibration_draws": "calibration_draws",
    "ks_tol": "tolerances.ks",
    "diag_gap": "tolerances.diag_gap",
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None, help="Flat key = value config file (dotted keys)")
    sub.add_argument("--out-dir", default=None, help="Directory for output files and manifest.json")
    sub.add_argument("--seed", type=int, default=None, help="Master seed (unsigned 64-bit)")
    sub.add_argument("--log-level", default="INFO", help="Logging level (e.g., DEBUG, INFO, WARNING)")


def _add_process(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--process", choices=["iid", "sv", "garch"], default=None)
    sub.add_argument("--alpha", type=float, default=None, help="Tail index of the iid/SV noise")
    sub.add_argument("--q", type=float, default=None, help="Tail balance (probability of a positive sign)")
    sub.add_argument("--scale", type=float, default=None)
    sub.add_argument("--vol", choices=["exp_gaussian_linear", "m_dependent"], default=None)
    sub.add_argument("--psi", type=float, nargs="+", default=None)
    sub.add_argument("--xi-std", type=float, default=None)
    sub.add_argument("--vol-m", type=int, default=None)
    sub.add_argument("--vol-mu", type=float, default=None)
    sub.add_argument("--vol-tau", type=float, default=None)
    sub.add_argument("--a0", type=float, default=None)
    sub.add_argument("--a1", type=float, default=None)
    sub.add_argument("--b1", type=float, default=None)
    sub.add_argument("--burn-in", type=int, default=None)


def _add_experiment(sub: argparse.ArgumentParser) -> None:
    _add_process(sub)
    sub.add_argument("--limit-alpha", type=float, default=None, help="Tail index used for the limit law")
    sub.add_argument("--n", type=int, default=None)
    growth = sub.add_mutually_exclusive_group()
    growth.add_argument("--p", type=int, default=None, help="Explicit dimension p")
    growth.add_argument("--beta", type=float, default=None, help="p = n^beta")
    growth.add_argument("--kappa", type=float, default=None, help="p = n^kappa (kappa >= 1)")
    sub.add_argument("--k", type=int, default=None)
    sub.add_argument("--reps", type=int, default=None)
    sub.add_argument("--b-reps", type=int, default=None)
    sub.add_argument("--x-grid", type=float, nargs="+", default=None)
    sub.add_argument("--calibration-draws", type=int, default=None)
    sub.add_argument("--ks-tol", type=float, default=None)
    sub.add_argument("--diag-gap", type=float, default=None)
    sub.add_argument("--own-marginal", action="store_true", default=None)
    sub.add_argument("--threads", type=int, default=None, help="Worker threads (env HEAVYTAIL_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heavytail", description="Heavy-tailed sample covariance eigenvalue lab.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    sim = subparsers.add_parser("simulate", help="Write p simulated paths to paths.csv")
    _add_common(sim)
    _add_process(sim)
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--p", type=int, default=None)

    for name, text in (
        ("eigen", "Write top-k eigenvalues of replicated matrices to eigen.csv"),
        ("verify", "Check the limit theorems; writes report.json and ecdf.csv"),
        ("b-estimate", "Monte Carlo cluster constant b; writes b_estimate.csv"),
    ):
        sub = subparsers.add_parser(name, help=text)
        _add_common(sub)
        _add_experiment(sub)

    garch = subparsers.add_parser("garch-alpha", help="GARCH(1,1) tail index as JSON on stdout")
    _add_common(garch)
    garch.add_argument("--a1", type=float, default=None)
    garch.add_argument("--b1", type=float, default=None)
    garch.add_argument("--nodes", type=int, default=None)
    garch.add_argument("--tol", type=float, default=None)
    garch.add_argument("--alpha-max", type=float, default=None)

    hill_cmd = subparsers.add_parser("hill", help="Hill estimate of the tail index as JSON on stdout")
    _add_common(hill_cmd)
    _add_process(hill_cmd)
    hill_cmd.add_argument("--input", default=None, help="CSV file, e.g. paths.csv")
    hill_cmd.add_argument("--column", default=None)
    hill_cmd.add_argument("--n", type=int, default=None)
    hill_cmd.add_argument("--k", type=int, default=None)
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted config keys for every flag the user actually passed."""
    values = vars(args)
    overrides: Dict[str, Any] = {"seed": values.get("seed")}
    for dest, key in PROCESS_FLAGS.items():
        if dest in values:
            overrides[key] = values[dest]
    if args.command == "simulate":
        overrides.update(n=values.get("n"), p=values.get("p"))
    elif args.command == "garch-alpha":
        overrides.update(a1=values.get("a1"), b1=values.get("b1"), nodes=values.get("nodes"),
                         tol=values.get("tol"), alpha_max=values.get("alpha_max"))
        overrides = {k: v for k, v in overrides.items() if not k.startswith("process.") and k != "seed"}
    elif args.command == "hill":
        overrides.update(input=values.get("input"), column=values.get("column"), n=values.get("n"), k=values.get("k"))
    else:
        for dest, key in EXPERIMENT_FLAGS.items():
            overrides[key] = values.get(dest)
        overrides["own_marginal"] = values.get("own_marginal")
        for kind in ("p", "beta", "kappa"):
            if values.get(kind) is not None:
                overrides["growth.kind"] = "explicit" if kind == "p" else kind
                overrides[f"growth.{kind}"] = values[kind]
    return overrides


def load_config(args: argparse.Namespace):
    overrides = collect_overrides(args)
    if CONFIG_MODELS[args.command] is ExperimentConfig:
        overrides["threads"] = resolve_threads(getattr(args, "threads", None))
    return build_config(CONFIG_MODELS[args.command], args.config, overrides)


def exit_code(result_code: int) -> int:
    if result_code == OK:
        return EXIT_PASS
    if result_code == TOLERANCE_FAILURE:
        return EXIT_TOLERANCE
    if result_code == CONFIG_ERROR:
        return EXIT_USAGE
    if result_code == RUNTIME_ERROR or result_code < 0:
        return EXIT_RUNTIME
    return EXIT_PASS


# --- CLI ---
def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO))

    try:
        config = load_config(args)
    except ConfigError as e:
        logging.error(f"[pipeline_runner] {e.message}")
        print(f"heavytail {args.command}: error: {e.message}", file=sys.stderr)
        return EXIT_USAGE

    if args.out_dir:
        out_dir: Optional[Path] = Path(args.out_dir)
    else:
        out_dir = None if args.command in STDOUT_COMMANDS else Path.cwd()
    repository = ManifestRepository(out_dir) if out_dir is not None else None

    pipeline = WORKFLOW_REGISTRY[args.command](config, out_dir)
    pipeline.collector.manifest = RunManifest(
        pipeline_name=args.command,
        start_time=datetime.now(),
        end_time=datetime.now(),
        config_echo=flatten(config),
        seed=getattr(config, "seed", None),
    )

    logging.debug(f"[pipeline_runner] Resolved config: {pipeline.collector.manifest.config_echo}")
    start_time = time.time()
    pipeline.run(repository=repository)
    elapsed = time.time() - start_time

    manifest = pipeline.collector.get_manifest()
    code = exit_code(pipeline.result_code)
    if code in (EXIT_RUNTIME, EXIT_USAGE) and manifest.error:
        print(f"heavytail {args.command}: error: {manifest.error.get('message')}", file=sys.stderr)
    logging.info(f"[pipeline_runner] {args.command} finished with exit code {code} in {elapsed:.2f} seconds. Run ID: {manifest.run_id}")
    return code


if __name__ == "__main__":
    sys.exit(main())
