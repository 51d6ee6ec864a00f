"""Command-line entry points: train, influence, detect, simulate, evaluate.

Every run writes a JSON manifest (resolved parameters, seed, file paths,
per-phase wall-clock timings) next to its primary output, so a run can be
reproduced exactly from the manifest. Exit codes: 0 success, 2 usage,
3 data or parse failure, 4 numeric failure.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .influence import LeaveOneOutImpossibleError, kld_influence, windowed_influence
from .model import EvidenceImpossibleError, ModelError, ObservationSequence
from .outliers import (
    SimulationConfig,
    empirical_auc,
    lof_statistic,
    simulate,
    z_value_scores,
)
from .reference import kld_influence_naive
from .serialize import (
    DataFormatError,
    influence_tsv,
    read_model,
    read_observations,
    window_influence_tsv,
    write_model,
)
from .training import (
    DegenerateFitError,
    EmConfig,
    canonical_state_order,
    em_fit,
    reorder_states,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class _UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


class _Manifest:
    def __init__(self, subcommand: str, args: argparse.Namespace):
        params = {k: v for k, v in vars(args).items() if k != "func"}
        self.data = {
            "tool": "hmmkld",
            "version": __version__,
            "subcommand": subcommand,
            "parameters": params,
            "timings_s": {},
        }
        self._t0 = time.perf_counter()
        self._phase_start = self._t0

    def phase(self, name: str) -> None:
        now = time.perf_counter()
        self.data["timings_s"][name] = round(now - self._phase_start, 6)
        self._phase_start = now

    def write(self, path) -> None:
        self.data["timings_s"]["total"] = round(time.perf_counter() - self._t0, 6)
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _manifest_path(args, primary_output: str) -> Path:
    if args.manifest:
        return Path(args.manifest)
    return Path(str(primary_output) + ".manifest.json")


def cmd_train(args) -> int:
    manifest = _Manifest("train", args)
    obs = read_observations(args.data)
    manifest.phase("load")
    cfg = EmConfig(
        num_states=args.states,
        num_restarts=args.restarts,
        tie_transitions=args.tie_transitions,
        homoscedastic=not args.heteroscedastic,
        seed=args.seed,
    )
    result = em_fit(obs, cfg)
    model = result.model
    if args.canonical:
        model = reorder_states(model, canonical_state_order(model))
    manifest.phase("fit")
    write_model(model, args.out_model)
    if args.report:
        lines = ["field\tvalue"]
        lines.append(f"iterations\t{len(result.log_likelihoods)}")
        lines.append(f"log_likelihood\t{_fmt(result.log_likelihoods[-1])}")
        lines.append(f"converged\t{int(result.converged)}")
        lines.append(f"best_restart\t{result.restart_index}")
        lines.append(f"degenerate_restarts\t{result.degenerate_restarts}")
        for idx, ll in enumerate(result.restart_final_lls):
            lines.append(f"restart_{idx}_log_likelihood\t{_fmt(ll)}")
        Path(args.report).write_text("\n".join(lines) + "\n")
    manifest.phase("write")
    manifest.write(_manifest_path(args, args.out_model))
    return EXIT_OK


def cmd_influence(args) -> int:
    manifest = _Manifest("influence", args)
    model = read_model(args.model)
    obs = read_observations(args.data)
    if args.window < 1 or args.window > len(obs):
        raise _UsageError(
            f"--window must be in [1, {len(obs)}], got {args.window}"
        )
    manifest.phase("load")
    if args.window == 1:
        if args.engine == "naive":
            profile = kld_influence_naive(model, obs)
        else:
            profile = kld_influence(model, obs)
        text = influence_tsv(profile, labels=obs.label_list())
    else:
        if args.engine == "naive":
            raise _UsageError("--engine naive supports --window 1 only")
        profile = windowed_influence(model, obs, args.window)
        text = window_influence_tsv(profile, labels=obs.label_list()[: len(profile)])
    manifest.phase("compute")
    Path(args.out).write_text(text)
    manifest.phase("write")
    manifest.write(_manifest_path(args, args.out))
    return EXIT_OK


def cmd_detect(args) -> int:
    manifest = _Manifest("detect", args)
    obs = read_observations(args.data)
    manifest.phase("load")
    if args.method == "kld":
        cfg = EmConfig(
            num_states=args.states,
            num_restarts=args.restarts,
            tie_transitions=True,
            homoscedastic=True,
            seed=args.seed,
        )
        fit = em_fit(obs, cfg)
        scores = kld_influence(fit.model, obs).k
    elif args.method == "z":
        scores = np.abs(z_value_scores(obs.values, k=args.states, seed=args.seed).scores)
    else:
        result = lof_statistic(obs.values)
        if result.clipped:
            print(
                "warning: series too short for the full neighbor grid; "
                "r range clipped",
                file=sys.stderr,
            )
        scores = result.scores
    manifest.phase("score")
    if args.top_k is not None:
        order = np.argsort(-scores, kind="stable")
        flagged = np.zeros(len(obs), dtype=bool)
        flagged[order[: args.top_k]] = True
    else:
        flagged = scores >= args.threshold
    labels = obs.label_list()
    lines = ["label\tscore\tflagged"]
    for j in range(len(obs)):
        lines.append(f"{labels[j]}\t{_fmt(scores[j])}\t{int(flagged[j])}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    manifest.phase("write")
    manifest.write(_manifest_path(args, args.out))
    return EXIT_OK


def _replicate_record(hypothesis, delta, index, rep) -> dict:
    return {
        "hypothesis": hypothesis,
        "delta": delta,
        "replicate": index,
        "t_kld": rep.t_kld,
        "s_z": rep.s_z,
        "l_lof": rep.l_lof,
        "outliers": rep.outlier_positions,
        "resampled": rep.resampled,
    }


def cmd_simulate(args) -> int:
    manifest = _Manifest("simulate", args)
    if args.replicates < 1:
        raise _UsageError("--replicates must be >= 1")
    deltas = _parse_deltas(args.deltas)
    source = read_observations(args.data)
    manifest.phase("load")

    done = set()
    existing_lines = []
    out = Path(args.out)
    if args.resume and out.exists():
        for line in out.read_text().splitlines():
            rec = json.loads(line)
            done.add((rec["hypothesis"], rec["delta"], rec["replicate"]))
            existing_lines.append(line)

    def base_cfg(delta: float) -> SimulationConfig:
        return SimulationConfig(
            source=source.values,
            subsample_size=args.subsample,
            contamination=args.contamination,
            noise_std=delta,
            replicates=args.replicates,
            seed=args.seed,
            em_restarts=args.em_restarts,
        )

    records = []
    cfg0 = base_cfg(0.0)
    for q in range(args.replicates):
        if ("H0", None, q) in done:
            continue
        rep = simulate(cfg0, "H0", q)
        records.append(_replicate_record("H0", None, q, rep))
    for delta in deltas:
        cfg = base_cfg(delta)
        for q in range(args.replicates):
            if ("H1", delta, q) in done:
                continue
            rep = simulate(cfg, "H1", q)
            records.append(_replicate_record("H1", delta, q, rep))
    manifest.phase("simulate")

    lines = existing_lines + [
        json.dumps(rec, sort_keys=True) for rec in records
    ]
    out.write_text("\n".join(lines) + "\n")
    manifest.phase("write")
    manifest.write(_manifest_path(args, args.out))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    manifest = _Manifest("evaluate", args)
    path = Path(args.scores)
    if not path.exists():
        raise DataFormatError(f"{path}: no such scores file")
    h0 = {"kld": [], "z": [], "lof": []}
    h1 = {}
    count_h0 = 0
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            raise DataFormatError(f"{path}: line {lineno}: invalid JSON")
        scores = {"kld": rec["t_kld"], "z": rec["s_z"], "lof": rec["l_lof"]}
        if rec["hypothesis"] == "H0":
            count_h0 += 1
            for method, value in scores.items():
                h0[method].append(value)
        else:
            delta = float(rec["delta"])
            bucket = h1.setdefault(delta, {"kld": [], "z": [], "lof": []})
            for method, value in scores.items():
                bucket[method].append(value)
    if count_h0 == 0 or not h1:
        raise DataFormatError(f"{path}: need both H0 and H1 replicates")
    manifest.phase("load")

    lines = ["method\tdelta\tauc\tci_lo\tci_hi\treplicates\tseed"]
    for delta in sorted(h1):
        for method in ("kld", "z", "lof"):
            roc = empirical_auc(h1[delta][method], h0[method], seed=args.seed)
            lines.append(
                f"{method}\t{_fmt(delta)}\t{_fmt(roc.auc)}\t{_fmt(roc.ci_lower)}"
                f"\t{_fmt(roc.ci_upper)}\t{len(h1[delta][method])}\t{args.seed}"
            )
    Path(args.out).write_text("\n".join(lines) + "\n")
    manifest.phase("write")
    manifest.write(_manifest_path(args, args.out))
    return EXIT_OK


def _parse_deltas(raw: str):
    try:
        deltas = [float(p) for p in raw.split(",") if p.strip()]
    except ValueError:
        raise _UsageError(f"bad --deltas value: {raw!r}")
    if not deltas:
        raise _UsageError("--deltas must list at least one value")
    return deltas


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmmkld",
        description="KL influence of observations in hidden Markov models",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("train", help="fit an HMM with EM and write a model file")
    p.add_argument("data", help="observations CSV (label,value or value)")
    p.add_argument("--states", "-m", type=int, default=3)
    p.add_argument("--tie-transitions", action="store_true")
    p.add_argument("--heteroscedastic", action="store_true")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--canonical", action="store_true", help="sort states by mean")
    p.add_argument("--out-model", required=True)
    p.add_argument("--report", help="fit report TSV path")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("influence", help="per-observation KL influence profile")
    p.add_argument("model", help="model document path")
    p.add_argument("data", help="observations CSV")
    p.add_argument("--window", type=int, default=1)
    p.add_argument("--engine", choices=("fast", "naive"), default="fast")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("detect", help="flag outlier candidates in a series")
    p.add_argument("data", help="observations CSV")
    p.add_argument("--method", choices=("kld", "z", "lof"), default="kld")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--top-k", type=int)
    group.add_argument("--threshold", type=float)
    p.add_argument("--states", "-m", type=int, default=3)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="generate scored benchmark replicates")
    p.add_argument("data", help="source series CSV")
    p.add_argument("--deltas", default="0.5,2.0,3.0")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--subsample", type=int, default=53)
    p.add_argument("--contamination", type=float, default=0.05)
    p.add_argument("--em-restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--out", required=True, help="scores JSON-lines path")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="AUC table from simulated scores")
    p.add_argument("--scores", required=True, help="JSON-lines from simulate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="benchmark TSV path")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand == "detect" and args.top_k is None and args.threshold is None:
        args.top_k = 5
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, FileNotFoundError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (
        EvidenceImpossibleError,
        LeaveOneOutImpossibleError,
        DegenerateFitError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
