"""Command-line interface.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical error,
4 I/O error.  Results go to stdout (or ``--out``); diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import min_samples, sandwich, theorem_params, validate_lemma1, validate_lemma2, validate_lemma3
from .coherence import subspace_coherence, vector_coherence
from .config import config_to_dict, load_config
from .detect import PAPER_DOF, RESIDUAL_DOF, TestConfig, noiseless_test, noisy_test
from .errors import MSDError, NumericalError
from .estimator import residual_energy
from .sampling import SeedSpec, draw
from .simlab import (
    ExperimentConfig,
    gen_gaussian_basis,
    gen_perp_vector,
    roc_to_csv,
    run_residual_sweep,
    run_roc,
    run_zero_fill_sweep,
    summaries_to_csv,
)
from .vecspace import SampleIndexSet, SubspaceBasis, read_indices, read_matrix, read_vector, WITH, WITHOUT

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
THREADS_ENV = "MSDETECT_THREADS"


class InputError(Exception):
    """Unreadable or malformed input file."""


def _read(reader, path):
    try:
        return reader(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_basis(path) -> SubspaceBasis:
    return SubspaceBasis(_read(read_matrix, path))


def _fmt(x) -> str:
    return repr(float(x))


def _emit(lines, out=None):
    text = "".join(f"{line}\n" for line in lines)
    if out:
        _write(out, text)
    else:
        sys.stdout.write(text)


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def _omega(args, n) -> SampleIndexSet:
    if args.indices:
        idx = _read(read_indices, args.indices)
        mode = args.mode or (WITHOUT if np.unique(idx).size == idx.size else WITH)
        return SampleIndexSet(idx, n, mode)
    if args.m is None:
        raise MSDError("give either --indices FILE or --m INT")
    return draw(SeedSpec(args.seed).rng(), n, args.m, args.mode or WITHOUT)


def _add_omega_args(p):
    p.add_argument("--indices", help="file of 0-based indices, one per line")
    p.add_argument("--m", type=int, help="number of indices to sample")
    p.add_argument("--mode", choices=[WITH, WITHOUT], help="sampling with or without replacement")
    p.add_argument("--seed", type=int, default=0)


# -- subcommands -----------------------------------------------------------------

def cmd_coherence(args):
    rep = subspace_coherence(_load_basis(args.basis))
    lines = [f"mu_S={_fmt(rep.mu)} argmax={rep.argmax_index}"]
    if args.vector:
        vrep = vector_coherence(_read(read_vector, args.vector))
        lines.append(f"mu_v={_fmt(vrep.mu)} argmax={vrep.argmax_index}")
    _emit(lines)


def cmd_estimate(args):
    basis = _load_basis(args.basis)
    v = _read(read_vector, args.vector)
    rep = residual_energy(basis, v, _omega(args, basis.n))
    _emit([f"t={_fmt(rep.t)}", f"rescaled={_fmt(rep.rescaled)}", f"m={rep.m}", f"n={rep.n}", f"rank={rep.rank}"])


def cmd_bounds(args):
    p = theorem_params(args.n, args.r, args.m, args.delta, args.mu_s, args.mu_y)
    lines = [f"{k}={_fmt(getattr(p, k))}" for k in ("alpha", "beta", "gamma")]
    lines.append(f"min_samples={min_samples(args.r, args.mu_s, args.delta)}")
    sb = sandwich(p, args.full_residual, squared=args.squared, allow_vacuous=args.upper_only)
    lines += [f"lower={_fmt(sb.lower)}", f"upper={_fmt(sb.upper)}", f"confidence={_fmt(sb.confidence)}"]
    if not sb.lower_valid:
        lines.append("lower_valid=false")
    _emit(lines)


def cmd_min_samples(args):
    _emit([str(min_samples(args.r, args.mu_s, args.delta))])


def cmd_validate_lemma(args):
    if args.basis:
        basis = _load_basis(args.basis)
    else:
        basis = gen_gaussian_basis(args.n, args.r, args.seed)
    if args.lemma == 3:
        rep = validate_lemma3(basis, args.m, args.delta, args.trials, args.seed)
    else:
        y = _read(read_vector, args.vector) if args.vector else gen_perp_vector(basis, args.seed)
        fn = validate_lemma1 if args.lemma == 1 else validate_lemma2
        rep = fn(basis, y, args.m, args.delta, args.trials, args.seed)
    _emit([
        f"lemma={rep.lemma_id}",
        f"trials={rep.trials}",
        f"failures={rep.failures}",
        f"empirical_rate={_fmt(rep.empirical_rate)}",
        f"certified_rate={_fmt(rep.certified_rate)}",
        f"within_certificate={str(rep.within_certificate).lower()}",
    ])


def cmd_detect(args):
    basis = _load_basis(args.basis)
    v = _read(read_vector, args.vector)
    omega = _omega(args, basis.n)
    if args.sigma == 0:
        out = noiseless_test(basis, v, omega)
    else:
        out = noisy_test(basis, v, omega, TestConfig(args.lam, args.sigma, args.dof_policy))
    _emit([
        f"statistic={_fmt(out.statistic)}",
        f"threshold={_fmt(out.threshold)}",
        f"dof={out.dof}",
        f"decision={out.decision}",
    ])


def _resolve_threads(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def run_experiment(experiment: str, cfg: ExperimentConfig, threads: int) -> str:
    if experiment == "fig1":
        return summaries_to_csv(run_residual_sweep(cfg, threads=threads))
    if experiment == "fig2":
        return summaries_to_csv(run_zero_fill_sweep(cfg, threads=threads))
    if experiment == "roc":
        return roc_to_csv(run_roc(cfg, threads=threads))
    raise MSDError(f"unknown experiment {experiment!r}")


def _manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def _simulate(experiment, cfg, out, threads, source=None):
    start = time.perf_counter()
    csv = run_experiment(experiment, cfg, threads)
    _write(out, csv)
    manifest = {
        "command": "simulate",
        "experiment": experiment,
        "parameters": config_to_dict(cfg),
        "seed": cfg.seed,
        "version": __version__,
        "config_source": source,
        "outputs": [str(out)],
        "threads": threads,
        "duration_seconds": round(time.perf_counter() - start, 3),
    }
    _write(_manifest_path(out), json.dumps(manifest, indent=2) + "\n")


def cmd_simulate(args):
    try:
        cfg = load_config(args.config, args.section or args.experiment)
    except OSError as exc:
        raise InputError(f"cannot read {args.config}: {exc}") from exc
    _simulate(args.experiment, cfg, args.out, _resolve_threads(args), source=str(args.config))


def cmd_replay(args):
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read manifest {args.manifest}: {exc}") from exc
    cfg = ExperimentConfig(**manifest["parameters"])
    out = args.out or manifest["outputs"][0]
    _simulate(manifest["experiment"], cfg, out, _resolve_threads(args), source=manifest.get("config_source"))


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msdetect", description="Matched subspace detection from incomplete data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coherence", help="coherence of a basis (and optionally a vector)")
    p.add_argument("--basis", required=True)
    p.add_argument("--vector")
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("estimate", help="residual energy from observed entries")
    p.add_argument("--basis", required=True)
    p.add_argument("--vector", required=True)
    _add_omega_args(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bounds", help="concentration constants and sandwich bounds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mu-s", type=float, required=True)
    p.add_argument("--mu-y", type=float, required=True)
    p.add_argument("--full-residual", type=float, default=1.0)
    p.add_argument("--squared", action="store_true", help="use the (1 -/+ alpha)^2 variant")
    p.add_argument("--upper-only", action="store_true", help="report the upper bound even when gamma >= 1")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("min-samples", help="sample count needed by the concentration bound")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--mu-s", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_min_samples)

    p = sub.add_parser("validate-lemma", help="Monte Carlo check of a supporting lemma")
    p.add_argument("lemma", type=int, choices=[1, 2, 3])
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--r", type=int, default=20)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--basis", help="basis CSV (default: seeded Gaussian basis)")
    p.add_argument("--vector", help="vector CSV for lemmas 1-2 (default: seeded unit vector in S-perp)")
    p.set_defaults(func=cmd_validate_lemma)

    p = sub.add_parser("detect", help="noiseless (sigma = 0) or noisy matched subspace test")
    p.add_argument("--basis", required=True)
    p.add_argument("--vector", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--dof-policy", choices=[RESIDUAL_DOF, PAPER_DOF], default=RESIDUAL_DOF)
    _add_omega_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="run a configured experiment and write CSV plus manifest")
    p.add_argument("experiment", choices=["fig1", "fig2", "roc"])
    p.add_argument("--config", required=True)
    p.add_argument("--section", help="config section (default: the experiment name or the only section)")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, help=f"worker threads (env {THREADS_ENV})")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="re-run a simulate manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="override the recorded output path")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"msdetect: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InputError as exc:
        print(f"msdetect: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MSDError, ValueError) as exc:
        print(f"msdetect: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
