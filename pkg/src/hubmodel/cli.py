"""Command-line interface: ``hubmodel <subcommand> ...``.

Exit status is 0 on success, 1 for invalid input or arguments, and 2 for
unexpected internal failures. Each file written gets a sibling
``<file>.manifest.json`` recording the arguments, seed, tool version,
input digests and wall-clock time.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import rng as rngmod
from .core import (
    MATRIX_FORMATS,
    FitResult,
    format_matrix,
    load_grouped_data,
    load_json,
    load_matrix,
    save_fit_result,
    save_grouped_data,
    save_matrix,
    write_json,
)
from .descriptive import co_occurrence, half_weight, half_weight_undefined
from .errors import HubModelError, IoFailure, MalformedFile, ValidationError
from .evaluate import (
    asym_curve,
    asym_curve_diagnostic,
    bootstrap,
    load_partition,
    mae_matrix,
    mae_vector,
    normalized_cut,
    structure_accuracy,
)
from .hub_model import EmConfig, fit_em, fit_known_hub, log_likelihood, mom_pair_estimate
from .simulate import SimConfig, simulate

log = logging.getLogger("hubmodel")

RANDOMIZED = {"simulate", "fit", "bootstrap", "diagnose"}


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    subcommand: str
    argv: list
    seed: int | None
    version: str = __version__
    inputs: dict = field(default_factory=dict)
    duration_seconds: float = 0.0

    def to_dict(self):
        return {
            "subcommand": self.subcommand,
            "argv": self.argv,
            "seed": self.seed,
            "version": self.version,
            "inputs": self.inputs,
            "duration_seconds": self.duration_seconds,
        }


def file_digest(path):
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return "sha256:" + h.hexdigest()


def _add_em_options(p):
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=EmConfig.rel_ll_tolerance,
                   help="relative log-likelihood change that ends a restart")
    p.add_argument("--threshold", type=float, default=1e-4,
                   help="fitted entries at or below this are set to 0")
    p.add_argument("--jobs", type=int, default=1)


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None)


def _em_config(args, seed):
    return EmConfig(
        restarts=args.restarts,
        max_iterations=args.max_iter,
        rel_ll_tolerance=args.tol,
        zero_threshold=args.threshold,
        seed=seed,
    )


def _pair_indices(G, spec):
    parts = [s.strip() for s in spec.split(",")]
    if len(parts) != 2:
        raise UsageError(f"--pair expects two comma-separated labels, got {spec!r}")
    x, y = (G.index_of(lab) for lab in parts)
    if x == y:
        raise UsageError("--pair needs two distinct nodes")
    return x, y


def build_parser():
    parser = _Parser(prog="hubmodel", description="Latent network inference from grouped data.")
    parser.add_argument("--version", action="version", version=f"hubmodel {__version__}")
    parser.add_argument("--strict", action="store_true",
                        help="require an explicit --seed for randomized subcommands")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw ground truth and grouped data")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--groups", type=int, required=True)
    p.add_argument("--power", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=4.0)
    _add_seed(p)
    p.add_argument("--out-groups", required=True)
    p.add_argument("--out-truth", required=True)
    p.add_argument("--hub-col", default=None, help="also write each group's hub in this column")

    p = sub.add_parser("fit", help="estimate (A, rho) by EM, or in closed form with known hubs")
    p.add_argument("--input", required=True)
    p.add_argument("--hub-col", default=None, help="column naming each group's hub (known-hub fit)")
    _add_em_options(p)
    _add_seed(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("describe", help="co-occurrence or half-weight matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--measure", choices=("cooccurrence", "halfweight"), required=True)
    p.add_argument("--format", choices=MATRIX_FORMATS, default="matrix-csv")
    p.add_argument("--out", default=None, help="defaults to stdout")

    p = sub.add_parser("evaluate", help="compare an estimate with the truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--out", default=None)

    p = sub.add_parser("ncut", help="normalized cut of a two-community partition")
    p.add_argument("--matrix", required=True)
    p.add_argument("--matrix-format", choices=("matrix-csv", "json"), default="matrix-csv")
    p.add_argument("--partition", required=True, help="CSV with header node,community")

    p = sub.add_parser("bootstrap", help="bootstrap standard deviations of the EM fit")
    p.add_argument("--input", required=True)
    p.add_argument("--reps", type=int, default=200)
    _add_em_options(p)
    _add_seed(p)
    p.add_argument("--out", default=None)

    p = sub.add_parser("mom", help="method-of-moments estimate for one node pair")
    p.add_argument("--input", required=True)
    p.add_argument("--pair", required=True)

    p = sub.add_parser("diagnose", help="identifiability diagnostics")
    dsub = p.add_subparsers(dest="diagnostic", required=True, parser_class=_Parser)
    d = dsub.add_parser("asym-curve", help="unconstrained fits against the symmetric-element curve")
    d.add_argument("--input", required=True)
    d.add_argument("--pair", required=True)
    d.add_argument("--fits", type=int, default=100)
    _add_em_options(d)
    _add_seed(d)
    d.add_argument("--out", default=None)
    return parser


def _emit(doc, out, manifest, outputs):
    if out is None:
        json.dump(doc, sys.stdout, indent=1)
        sys.stdout.write("\n")
    else:
        write_json(doc, out)
        outputs.append(out)


def cmd_simulate(args, seed, manifest, outputs):
    sim = simulate(SimConfig(args.nodes, args.groups, args.power, args.alpha, args.beta, seed))
    save_grouped_data(sim.groups, args.out_groups,
                      sim.hubs if args.hub_col else None, args.hub_col or "hub")
    write_json(sim.truth_document(), args.out_truth)
    outputs += [args.out_groups, args.out_truth]


def cmd_fit(args, seed, manifest, outputs):
    G, hubs = load_grouped_data(args.input, args.hub_col)
    if hubs is not None:
        A, rho = fit_known_hub(G, hubs)
        result = FitResult(A, rho, log_likelihood(G, A, rho), (), 0, 0.0, None,
                           G.node_labels, A.values)
    else:
        result = fit_em(G, _em_config(args, seed), jobs=args.jobs)
    save_fit_result(result, args.out)
    outputs.append(args.out)
    log.info("log likelihood %s", result.log_likelihood)


def cmd_describe(args, seed, manifest, outputs):
    G, _ = load_grouped_data(args.input)
    M = co_occurrence(G) if args.measure == "cooccurrence" else half_weight(G)
    if args.out is None:
        sys.stdout.write(format_matrix(M, G.node_labels, args.format))
        return
    save_matrix(M, G.node_labels, args.out, args.format)
    outputs.append(args.out)
    if args.measure == "halfweight":
        undefined = np.argwhere(np.triu(half_weight_undefined(G)))
        manifest.inputs["halfweight_undefined_pairs"] = [
            [G.node_labels[i], G.node_labels[j]] for i, j in undefined
        ]


def _estimate_from(doc):
    try:
        return np.array(doc["A"], dtype=np.float64), np.array(doc["rho"], dtype=np.float64), doc["labels"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"result document lacks labels/A/rho: {exc}") from exc


def cmd_evaluate(args, seed, manifest, outputs):
    A_true, rho_true, lab_true = _estimate_from(load_json(args.truth))
    A_est, rho_est, lab_est = _estimate_from(load_json(args.estimate))
    if list(lab_true) != list(lab_est):
        raise ValidationError("truth and estimate have different node labels")
    doc = {
        "accuracy": structure_accuracy(A_true, A_est, args.threshold),
        "mae_A": mae_matrix(A_true, A_est),
        "mae_rho": mae_vector(rho_true, rho_est),
        "threshold": args.threshold,
    }
    _emit(doc, args.out, manifest, outputs)


def cmd_ncut(args, seed, manifest, outputs):
    labels, M = load_matrix(args.matrix, args.matrix_format)
    print(repr(normalized_cut(M, load_partition(args.partition, labels))))


def cmd_bootstrap(args, seed, manifest, outputs):
    G, _ = load_grouped_data(args.input)
    cfg = _em_config(args, seed)
    summary = bootstrap(G, args.reps, cfg, seed=seed, jobs=args.jobs)
    doc = {"labels": list(G.node_labels), **summary.to_dict()}
    _emit(doc, args.out, manifest, outputs)


def cmd_mom(args, seed, manifest, outputs):
    G, _ = load_grouped_data(args.input)
    x, y = _pair_indices(G, args.pair)
    est = mom_pair_estimate(G, x, y)
    print("undefined" if est is None else repr(est))


def cmd_diagnose(args, seed, manifest, outputs):
    G, _ = load_grouped_data(args.input)
    x, y = _pair_indices(G, args.pair)
    cfg = _em_config(args, seed)
    diag = asym_curve_diagnostic(G, x, y, args.fits, cfg, jobs=args.jobs)
    pts = diag.points()
    doc = {
        "pair": [G.node_labels[x], G.node_labels[y]],
        "p_x": diag.p_x,
        "p_y": diag.p_y,
        "p_xy": diag.p_xy,
        "fits": [
            {"A_xy": float(a), "A_yx": float(b), "log_likelihood": f.log_likelihood, "seed": f.seed}
            for (a, b), f in zip(pts, diag.fits)
        ],
        "vertical_distance": diag.vertical_distances().tolist(),
    }
    grid = np.linspace(0.0, 1.0, 101)
    curve = []
    for a in grid:
        try:
            curve.append([float(a), float(asym_curve(diag.p_x, diag.p_y, diag.p_xy, a))])
        except HubModelError:
            continue
    doc["curve"] = curve
    _emit(doc, args.out, manifest, outputs)


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "describe": cmd_describe,
    "evaluate": cmd_evaluate,
    "ncut": cmd_ncut,
    "bootstrap": cmd_bootstrap,
    "mom": cmd_mom,
    "diagnose": cmd_diagnose,
}

INPUT_FLAGS = ("input", "truth", "estimate", "matrix", "partition")


def dispatch(argv=None):
    """Run one subcommand; returns the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        seed = getattr(args, "seed", None)
        if args.command in RANDOMIZED and seed is None:
            if args.strict:
                raise UsageError(f"--seed: required by --strict for {args.command}")
            seed = rngmod.fresh_seed()
            print(f"hubmodel: using generated seed {seed}", file=sys.stderr)
        manifest = RunManifest(args.command, argv, seed)
        for flag in INPUT_FLAGS:
            path = getattr(args, flag, None)
            if path is not None:
                manifest.inputs[path] = file_digest(path)
        outputs = []
        start = time.perf_counter()
        COMMANDS[args.command](args, seed, manifest, outputs)
        manifest.duration_seconds = time.perf_counter() - start
        for out in outputs:
            write_json(manifest.to_dict(), f"{out}.manifest.json")
        return 0
    except (HubModelError, ValueError) as exc:
        print(f"hubmodel: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"hubmodel: internal error: {exc!r}", file=sys.stderr)
        return 2


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
