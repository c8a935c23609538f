"""Command-line entry point: ``corrsist <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bell, persistency, scan, steering, tangles
from .families import parse_state_spec
from .qstate import AnnihilatedError, MeasurementBattery, PureState, StateError, as_matrix

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3


class CliError(ValueError):
    pass


def _common() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master RNG seed (default 0)")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="emit JSON")
    p.add_argument("--out", default=argparse.SUPPRESS, help="write output to this path")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="corrsist", parents=[common],
                                     description="Persistency of quantum correlations under particle loss.")
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("state", parents=[common], help="inspect a state")
    st.add_argument("action", choices=["show"])
    st.add_argument("--state", required=True)

    tg = sub.add_parser("tangle", parents=[common], help="tangles of a four-qubit pure state")
    tg.add_argument("--state", required=True)

    dt = sub.add_parser("detect", parents=[common], help="entanglement detection")
    dt.add_argument("--state", required=True)
    dt.add_argument("--property", choices=["e", "ge"], default="e")

    bl = sub.add_parser("bell", parents=[common], help="Bell inequalities")
    bl.add_argument("action", choices=["max", "member"])
    bl.add_argument("--state", required=True)
    bl.add_argument("--ineq", default="b16", help="facet4, b16, chsh or a file path")
    bl.add_argument("--restarts", type=int, default=64)
    bl.add_argument("--model", choices=["local", "ns2"], default="local")
    bl.add_argument("--battery", help="JSON file: {\"settings\": [[[x, y, z], ...], ...]}")

    sr = sub.add_parser("steer", parents=[common], help="steering criteria")
    sr.add_argument("mode", nargs="?", choices=["genuine"])
    sr.add_argument("--state", required=True)
    sr.add_argument("--criterion", choices=sorted(steering.CRITERIA))
    sr.add_argument("--restarts", type=int, default=64)

    ps = sub.add_parser("persistency", parents=[common], help="persistency bounds")
    ps.add_argument("--state", required=True)
    ps.add_argument("--property", required=True, type=str.upper, choices=[k.value for k in persistency.PropertyKind])
    ps.add_argument("--batteries", type=int, default=20)
    ps.add_argument("--restarts", type=int, default=16)
    ps.add_argument("--fast-path", action="store_true", help="use the closed-form tau_min conditions when applicable")

    sc = sub.add_parser("scan", parents=[common], help="tau_min grid scan to CSV")
    sc.add_argument("--points", type=int, default=101)
    sc.add_argument("--lo", type=float, default=-1.0)
    sc.add_argument("--hi", type=float, default=1.0)
    sc.add_argument("--both-signs", action="store_true")
    sc.add_argument("--workers", type=int)
    return parser


# ---------------------------------------------------------------- helpers

def _complex_list(a):
    a = np.asarray(a)
    return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}


def _load_battery(path: str) -> MeasurementBattery:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read battery file {path}: {exc}") from exc
    settings = data.get("settings") if isinstance(data, dict) else data
    if not isinstance(settings, list):
        raise CliError("battery file needs a 'settings' list")
    return MeasurementBattery(tuple(tuple(tuple(v) for v in party) for party in settings))


def _state(args):
    return parse_state_spec(args.state)


# ---------------------------------------------------------------- commands

def cmd_state(args):
    state, coords = _state(args)
    out = {"n_qubits": state.n_qubits, "pure": isinstance(state, PureState)}
    if isinstance(state, PureState):
        out["amplitudes"] = _complex_list(state.amplitudes)
    else:
        out["matrix"] = _complex_list(as_matrix(state))
    if coords is not None:
        out["tau_min"] = list(coords.x)
    return out


def cmd_tangle(args):
    state, _ = _state(args)
    if not isinstance(state, PureState) or state.n_qubits != 4:
        raise CliError("tangles need a four-qubit pure state")
    return tangles.tau_aggregates(state.amplitudes).as_dict()


def cmd_detect(args):
    state, _ = _state(args)
    m = as_matrix(state)
    n = state.n_qubits
    if args.property == "e":
        kind = persistency.PropertyKind.E
    else:
        kind = persistency.PropertyKind.GE
        if n > 3:
            raise CliError("genuine-entanglement detection is available for two or three qubits")
    out = persistency.detect(m, kind, persistency.PersistencyOptions(seed=args.seed))
    return {"property": args.property, "n_qubits": n, **out.as_dict()}


def cmd_bell(args):
    state, _ = _state(args)
    m = as_matrix(state)
    if args.action == "max":
        ineq = bell.load_inequality(args.ineq)
        value, battery = bell.maximize_bell(ineq, m, args.restarts, args.seed)
        return {"inequality": ineq.name, "bound": ineq.bound, "value": value, "violated": value > ineq.bound,
                "battery": [battery.bloch_array(p).tolist() for p in range(battery.n_parties)]}
    if not args.battery:
        raise CliError("bell member needs --battery")
    b = bell.behavior(m, _load_battery(args.battery))
    verdict = bell.local_membership(b) if args.model == "local" else bell.ns2_membership(b)
    return {"model": args.model, "membership": verdict}


def cmd_steer(args):
    state, _ = _state(args)
    m = as_matrix(state)
    if args.mode == "genuine":
        value, settings = steering.maximize_genuine_steering(m, args.restarts, args.seed)
        return {"value": value, "bound": steering.GENUINE_BOUND, "violated": value > steering.GENUINE_BOUND,
                "settings": settings.as_dict()}
    if state.n_qubits != 2:
        raise CliError("two-qubit steering criteria need a two-qubit state")
    names = [args.criterion] if args.criterion else None
    if args.criterion and steering.CRITERIA[args.criterion] is None:
        raise CliError(f"criterion {args.criterion!r} has no shipped formula")
    return steering.detect_steering_2q(m, names).as_dict()


def cmd_persistency(args):
    state, coords = _state(args)
    opts = persistency.PersistencyOptions(
        batteries=args.batteries, restarts=args.restarts, seed=args.seed,
        tau_min=coords if args.fast_path else None,
    )
    return persistency.persistency_bounds(as_matrix(state), args.property, opts).as_dict()


def cmd_scan(args):
    cfg = scan.ScanConfig(args.points, args.lo, args.hi, args.both_signs, args.workers)
    cols = scan.scan_tau_min(cfg)
    target = args.out if args.out else sys.stdout
    rows = scan.write_csv(cols, target)
    summary = {"rows": rows, **scan.region_counts(cols)}
    if args.out:
        return summary
    print(json.dumps(summary), file=sys.stderr)
    return None


COMMANDS = {
    "state": cmd_state,
    "tangle": cmd_tangle,
    "detect": cmd_detect,
    "bell": cmd_bell,
    "steer": cmd_steer,
    "persistency": cmd_persistency,
    "scan": cmd_scan,
}


def _render(result, as_json: bool) -> str:
    if as_json:
        return json.dumps(result, indent=2, default=float)
    lines = []
    for key, value in result.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, default=float)
        lines.append(f"{key}: {value}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.seed = getattr(args, "seed", 0)
    args.json = getattr(args, "json", False)
    args.out = getattr(args, "out", None)
    try:
        result = COMMANDS[args.command](args)
    except (AnnihilatedError, scan.EmptyScanError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (StateError, CliError, bell.BellError, persistency.PersistencyError, scan.ScanError,
            KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if result is not None:
        text = _render(result, args.json)
        if args.out and args.command != "scan":
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
