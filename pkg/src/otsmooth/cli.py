"""Command-line interface.

Every command writes its artifacts plus one run manifest (JSON) recording
the command line, the resolved parameters, seeds, file paths and the
wall-clock duration. ``otsmooth replay MANIFEST`` re-runs a recorded
command and reproduces its artifacts byte for byte.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from otsmooth import io
from otsmooth.baseline import BaselineConfig, baseline_generate_batch, estimate_cell_centers
from otsmooth.datasets import make_grid, make_ring, mode_report
from otsmooth.exceptions import ConfigurationError, InvalidInputError, UnbracketedError
from otsmooth.generator import generate_batch
from otsmooth.mmd import DEFAULT_EPSILON_GRID, TuneConfig, tune_epsilon
from otsmooth.potential import PotentialModel
from otsmooth.solver import NoiseSpec, SolverConfig, fit_height_vector

logger = logging.getLogger("otsmooth")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3
EXIT_UNBRACKETED = 4

EPILOG = """exit codes:
  0  success
  2  invalid input or arguments
  3  fit did not converge within --max-iters
  4  tune: the epsilon grid never crossed alpha

The seed defaults to $OTSMOOTH_SEED, then 0."""

# learning rates per dataset kind, used when --lr is not given
DEFAULT_LR = {"ring": 2e-4, "grid": 1e-3}


class _Run:
    """Collects what a command read and wrote for its manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.inputs = {}
        self.outputs = {}
        self.result = {}
        self.start = time.perf_counter()

    def manifest(self, status):
        params = {k: v for k, v in vars(self.args).items() if k not in ("func", "manifest")}
        return {
            "command": self.args.command,
            "argv": self.argv,
            "parameters": params,
            "seed": self.args.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "result": self.result,
            "exit_code": status,
            "duration_seconds": round(time.perf_counter() - self.start, 3),
        }


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {exc}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _default_seed():
    env = os.environ.get("OTSMOOTH_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"otsmooth: OTSMOOTH_SEED must be an integer, got {env!r}")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="master seed (default: $OTSMOOTH_SEED or 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for compiled kernels (default: all); results do not depend on it")
    p.add_argument("--manifest", default=None, help="manifest path (default: <main output>.manifest.json)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="otsmooth", description="Semi-discrete OT generators with a smoothed Brenier potential.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", parents=[common], help="write a toy 2-D mixture dataset")
    p.add_argument("kind", choices=["ring", "grid"])
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("fit", parents=[common], help="fit the height vector to a point cloud")
    p.add_argument("data")
    p.add_argument("--out", required=True, help="model JSON")
    p.add_argument("--trace", default=None, help="fit trace JSON (default: <out stem>.trace.json)")
    p.add_argument("--lr", type=float, default=None, help="Adam step (default 2e-4, 1e-3 for grid data)")
    p.add_argument("--mc-init", type=int, default=20000)
    p.add_argument("--patience", type=int, default=50)
    p.add_argument("--grad-tol", type=float, default=0.002)
    p.add_argument("--max-iters", type=int, default=50000)
    p.add_argument("--mc-cap", type=int, default=2**22)
    p.add_argument("--lr-decay", type=float, default=0.5)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("generate", parents=[common], help="sample through the smoothed map")
    p.add_argument("model")
    p.add_argument("--epsilon", type=float, default=None, help="smoothing bound (default: the model's)")
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--header", action="store_true", help="write an x1,...,xd header row")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("tune", parents=[common], help="choose epsilon by the MMD permutation test")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--grid", type=_float_list, default=list(DEFAULT_EPSILON_GRID))
    p.add_argument("--permutations", type=int, default=1000)
    p.add_argument("--max-refinements", type=int, default=6)
    p.add_argument("--binomial-normalization", action="store_true",
                   help="use the doubled MMD normalisation (p-values are unchanged)")
    p.add_argument("--out", required=True, help="generated batch CSV at the chosen epsilon")
    p.add_argument("--log", default=None, help="search log JSON (default: <out stem>.tune.json)")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("baseline", parents=[common], help="piecewise-linear baseline sampler")
    p.add_argument("model")
    p.add_argument("--theta-hat", type=float, default=0.4)
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--mc-centers", type=int, default=1_000_000)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None, help="rejection summary JSON (default: <out stem>.summary.json)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("report", parents=[common], help="mode coverage JSON and SVG overlay")
    p.add_argument("data")
    p.add_argument("generated")
    p.add_argument("--spec", default=None, help="dataset CSV holding the mixture spec (default: DATA)")
    p.add_argument("--svg", required=True)
    p.add_argument("--json", required=True)
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest_file")
    p.set_defaults(func=None)
    return parser


def _sibling(path, suffix):
    p = Path(path)
    return str(p.with_name(p.stem + suffix))


def cmd_dataset(args, run):
    maker = make_ring if args.kind == "ring" else make_grid
    X, spec = maker(args.n, args.seed)
    io.save_dataset(X, spec, args.out, kind=args.kind)
    run.outputs["dataset"] = args.out
    return EXIT_OK


def cmd_fit(args, run):
    X, _, kind = io.load_dataset(args.data, with_kind=True)
    lr = args.lr if args.lr is not None else DEFAULT_LR.get(kind, DEFAULT_LR["ring"])
    cfg = SolverConfig(mc_samples=args.mc_init, learning_rate=lr, patience=args.patience,
                       grad_norm_tol=args.grad_tol, max_iterations=args.max_iters,
                       mc_cap=args.mc_cap, lr_decay=args.lr_decay, seed=args.seed)
    run.result["learning_rate"] = lr
    h, trace = fit_height_vector(X, cfg=cfg)
    trace_path = args.trace or _sibling(args.out, ".trace.json")
    io.save_model(PotentialModel(X, h), args.out)
    io.write_json(trace.to_dict(), trace_path)
    run.inputs["data"] = args.data
    run.outputs.update(model=args.out, trace=trace_path)
    run.result.update(converged=trace.converged, iterations=trace.iterations,
                      final_grad_norm=trace.final_grad_norm)
    logger.info("fit: converged=%s after %d iterations, |grad|=%.4g",
                trace.converged, trace.iterations, trace.final_grad_norm)
    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


def _smoothed(model, epsilon):
    eps = epsilon if epsilon is not None else model.epsilon
    if eps is None:
        raise ConfigurationError("no epsilon: pass --epsilon or use a model that stores one")
    return model.with_epsilon(eps)


def cmd_generate(args, run):
    if args.epsilon is not None and not args.epsilon > 0:
        raise InvalidInputError("--epsilon must be positive")
    model = _smoothed(io.load_model(args.model), args.epsilon)
    X = generate_batch(model, NoiseSpec(model.d, args.seed), args.m, args.stream)
    io.save_points(X, args.out, header=args.header)
    run.inputs["model"] = args.model
    run.outputs["batch"] = args.out
    run.result["epsilon"] = model.epsilon
    return EXIT_OK


def cmd_tune(args, run):
    model = io.load_model(args.model)
    observed, _ = io.load_dataset(args.data)
    cfg = TuneConfig(alpha=args.alpha, delta=args.delta, epsilon_grid=tuple(args.grid),
                     permutations=args.permutations, max_refinements=args.max_refinements,
                     seed=args.seed, binomial_normalization=args.binomial_normalization)
    log_path = args.log or _sibling(args.out, ".tune.json")
    run.inputs.update(model=args.model, data=args.data)
    run.outputs["log"] = log_path
    try:
        res = tune_epsilon(model, observed, cfg)
    except UnbracketedError as exc:
        io.write_json({"epsilon_opt": None, "error": str(exc), "side": exc.side,
                       "search_log": exc.log}, log_path)
        run.result["unbracketed"] = exc.side
        logger.error("%s", exc)
        return EXIT_UNBRACKETED
    io.write_json(res.to_dict(), log_path)
    io.save_points(res.samples, args.out)
    run.outputs["batch"] = args.out
    run.result.update(epsilon_opt=res.epsilon, p_value=res.report.p_value,
                      within_tolerance=res.within_tolerance)
    print(json.dumps({"epsilon_opt": res.epsilon, "p_value": res.report.p_value,
                      "within_tolerance": res.within_tolerance}))
    return EXIT_OK


def cmd_baseline(args, run):
    model = io.load_model(args.model)
    cfg = BaselineConfig(theta_hat=args.theta_hat, mc_samples_for_centers=args.mc_centers,
                         seed=args.seed)
    noise = NoiseSpec(model.d, args.seed)
    centers = estimate_cell_centers(model, noise, cfg)
    batch = baseline_generate_batch(model, centers, cfg, args.m, noise)
    summary_path = args.summary or _sibling(args.out, ".summary.json")
    summary = batch.summary()
    summary["theta_hat"] = args.theta_hat
    summary["empty_cells"] = int(centers.empty.sum())
    io.save_points(batch.points, args.out)
    io.write_json(summary, summary_path)
    print(json.dumps(summary))
    run.inputs["model"] = args.model
    run.outputs.update(batch=args.out, summary=summary_path)
    run.result.update(summary)
    return EXIT_OK


def cmd_report(args, run):
    observed, spec = io.load_dataset(args.data)
    if args.spec is not None:
        _, spec = io.load_dataset(args.spec)
    if spec is None:
        raise InvalidInputError("no mixture spec found; pass --spec with a dataset CSV")
    generated = io.load_points(args.generated, d=spec.mode_centers.shape[1])
    rep = mode_report(generated, spec)
    io.write_json(rep.to_dict(), args.json)
    Path(args.svg).write_text(io.scatter_svg(observed, generated, args.title))
    run.inputs.update(data=args.data, generated=args.generated)
    run.outputs.update(json=args.json, svg=args.svg)
    run.result.update(modes_covered=rep.modes_covered, mixture_fraction=rep.mixture_fraction)
    return EXIT_OK


_MAIN_OUTPUT = {"dataset": "out", "fit": "out", "generate": "out", "tune": "out",
                "baseline": "out", "report": "json"}


def _set_threads(n):
    import numba

    if n is None:
        return
    if n < 1:
        raise InvalidInputError("--threads must be >= 1")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        try:
            recorded = io.read_json(args.manifest_file)["argv"]
        except (OSError, ValueError, KeyError) as exc:
            print(f"otsmooth: cannot read manifest: {exc}", file=sys.stderr)
            return EXIT_INVALID
        return main(recorded)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None:
        args.seed = _default_seed()
    if args.seed < 0:
        parser.error("--seed must be >= 0")
    run = _Run(args, argv)
    # pin the seed in the recorded command line so a replay ignores the environment
    if "--seed" not in argv:
        run.argv += ["--seed", str(args.seed)]
    try:
        _set_threads(args.threads)
        status = args.func(args, run)
    except (InvalidInputError, ConfigurationError, OSError) as exc:
        print(f"otsmooth {args.command}: {exc}", file=sys.stderr)
        status = EXIT_INVALID
    manifest = args.manifest or _sibling(getattr(args, _MAIN_OUTPUT[args.command]), ".manifest.json")
    io.write_json(run.manifest(status), manifest)
    return status


if __name__ == "__main__":
    sys.exit(main())
