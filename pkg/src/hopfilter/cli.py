"""Command-line driver.

Three subcommands cover the library surface:

  hopfilter synthesize --model plant_or_model.json --out result.json
  hopfilter netsim -p 0.5 -L 3 -N 10 --trials 1000000 --out stats.json
  hopfilter sweep [--config grid.json] --out sweep.csv [--svg sweep.svg]

Every file the tool writes is paired with a `<file>.manifest.json`
capturing the command, the resolved configuration, the seed and the
tool version, so an artifact can always be traced to its run.  All
randomness flows from --seed; the default is the fixed constant 1729,
never the clock, so repeated runs are byte-identical.

Exit codes: 0 success; 2 bad usage or unparseable input; 3 no filter
certificate at the requested loss level (or solver breakdown, which the
message distinguishes); 4 file-system errors.
"""

import argparse
import json
import os
import sys
from importlib import resources

from . import __version__, energy, hop_net, lmi_synthesis, mjls_core, tradeoff
from .errors import (BaselineInfeasible, HopfilterError, IllConditioned,
                     Infeasible, InvalidProbability, ParseError,
                     SolverFailure)

DEFAULT_SEED = 1729
DEFAULT_TRIALS = 1_000_000

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


def _write_json(payload, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
        f.write("\n")


def _write_manifest(command, config, seed, outputs):
    """One manifest per run, next to the first output."""
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": [os.path.basename(p) for p in outputs],
    }
    _write_json(manifest, outputs[0] + ".manifest.json")


def _parse_cap(text):
    if str(text).lower() in ("inf", "none", "unbounded"):
        return None
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"retransmission cap {text!r} is not an integer "
                         f"or 'inf'") from None


def cmd_synthesize(args):
    model = mjls_core.load_model(args.model)
    result = lmi_synthesis.synthesize(model)
    report = lmi_synthesis.check_certificate(model, result)
    payload = lmi_synthesis.result_to_dict(result)
    payload["certificate_audit"] = {
        "passed": report.passed,
        "coupling_max": report.coupling_max,
        "epsilon": report.epsilon,
    }
    outputs = [args.out]
    _write_json(payload, args.out)
    _write_manifest("synthesize", {"model": os.path.basename(args.model)},
                    None, outputs)
    print(f"hinf_norm = {result.hinf_norm:.9g}  gamma = {result.gamma:.9g}  "
          f"status = {result.solver_status}  audit = "
          f"{'pass' if report.passed else 'FAIL'}")
    return EXIT_OK


def cmd_netsim(args):
    cap = _parse_cap(args.L)
    config = hop_net.HopNetworkConfig(p=args.p, L=cap, N=args.N)
    stats = hop_net.monte_carlo(config, args.trials, args.seed)
    p_s = hop_net.success_probability(config)
    counts = hop_net.expected_counts(config)
    print(f"delivery_rate = {stats.delivery_rate:.6f}  "
          f"(closed form P_S = {p_s:.6f})")
    print(f"mean_tx = {stats.mean_tx:.4f}  mean_rx = {stats.mean_rx:.4f}  "
          f"mean_sw = {stats.mean_sw:.4f}")
    print(f"closed-form e_tx = {counts.e_tx:.4f}  e_rx = {counts.e_rx:.4f}")
    if args.out:
        if args.out.endswith(".csv"):
            tx, rx, delivered = hop_net.per_trial_counts(
                config, args.trials, args.seed)
            with open(args.out, "w", encoding="utf-8", newline="") as f:
                f.write("trial,delivered,tx,rx,sw\n")
                for i in range(args.trials):
                    f.write("%d,%s,%d,%d,%d\n" % (
                        i, "true" if delivered[i] else "false",
                        tx[i], rx[i], 2 * tx[i]))
        else:
            _write_json(stats.to_dict(), args.out)
        _write_manifest(
            "netsim",
            {"p": args.p, "L": args.L, "N": args.N, "trials": args.trials},
            args.seed, [args.out])
    return EXIT_OK


def _default_sweep_config():
    path = resources.files("hopfilter").joinpath("data/default_sweep.json")
    with path.open("r", encoding="utf-8") as f:
        return json.load(f)


def _resolve_plant(ref, base_dir):
    if ref == "pendulum":
        return mjls_core.fixture_pendulum()
    path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
    return mjls_core.load_plant(path)


def cmd_sweep(args):
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON in config: {exc}") from exc
        base_dir = os.path.dirname(os.path.abspath(args.config))
    else:
        raw = _default_sweep_config()
        base_dir = os.getcwd()
    try:
        plant = _resolve_plant(raw.get("plant", "pendulum"), base_dir)
        radio = (energy.radio_params_from_dict(raw["radio"])
                 if "radio" in raw else energy.RadioEnergyParams())
        seed = args.seed if args.seed is not None else int(
            raw.get("seed", DEFAULT_SEED))
        trials = args.trials if args.trials is not None else int(
            raw.get("trials", 0))
        config = tradeoff.SweepConfig(
            plant=plant,
            p_grid=tuple(float(v) for v in raw["p_grid"]),
            l_values=tuple(int(v) for v in raw["l_values"]),
            N=int(raw.get("N", 10)),
            ts=float(raw["ts_s"]) if "ts_s" in raw else None,
            radio=radio,
            trials=trials,
            seed=seed,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad sweep config: {exc!r}") from exc

    points = tradeoff.sweep(config)
    tradeoff.write_csv(points, args.out)
    outputs = [args.out]
    if args.svg:
        from . import charts

        charts.render_sweep_svg(points, args.svg)
        outputs.append(args.svg)
    snapshot = dict(raw)
    snapshot["seed"] = seed
    snapshot["trials"] = trials
    _write_manifest("sweep", snapshot, seed, outputs)
    n_feasible = sum(1 for pt in points if pt.feasible)
    print(f"{len(points)} grid points ({n_feasible} feasible) -> {args.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hopfilter",
        description="Filter synthesis under packet loss and the "
                    "retransmission energy trade-off.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_syn = sub.add_parser("synthesize",
                           help="design a filter for a model file")
    p_syn.add_argument("--model", required=True,
                       help="MJLS model or single-mode plant JSON")
    p_syn.add_argument("--out", required=True, help="result JSON path")
    p_syn.set_defaults(func=cmd_synthesize)

    p_net = sub.add_parser("netsim", help="Monte Carlo transport simulation")
    p_net.add_argument("-p", type=float, required=True,
                       help="per-transmission link delivery probability")
    p_net.add_argument("-L", default="inf",
                       help="per-hop transmission cap (integer or 'inf')")
    p_net.add_argument("-N", type=int, default=10, help="links on the path")
    p_net.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p_net.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_net.add_argument("--out", default=None,
                       help="stats JSON, or per-trial CSV if it ends in .csv")
    p_net.set_defaults(func=cmd_netsim)

    p_sw = sub.add_parser("sweep", help="full (p, L) trade-off grid")
    p_sw.add_argument("--config", default=None,
                      help="sweep config JSON (defaults to the packaged grid)")
    p_sw.add_argument("--out", required=True, help="output CSV path")
    p_sw.add_argument("--svg", default=None, help="optional chart SVG path")
    p_sw.add_argument("--seed", type=int, default=None,
                      help="override the config seed")
    p_sw.add_argument("--trials", type=int, default=None,
                      help="override the config Monte Carlo trials")
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidProbability as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (Infeasible, BaselineInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverFailure, IllConditioned) as exc:
        print(f"solver breakdown: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HopfilterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
