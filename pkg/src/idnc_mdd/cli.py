"""Command-line front end: parameter sweeps over the frame simulator, CSV out."""
from __future__ import annotations

import argparse
import dataclasses
import io
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

from .channel import DEFAULT_SPREAD, ExperimentStats, SimConfig, simulate_frames
from .graph import DEFAULT_ENUMERATION_BOUND
from .policies import PolicyKind

CSV_HEADER = ("policy,M,N,P,T,frames,seed,mean_sum_delay,mean_max_delay,"
              "mean_served_fraction,mean_recovery_transmissions")

SWEEP_FIELDS = {
    "receivers": "receivers",
    "packets": "packets",
    "erasure": "erasure",
    "deadline": "deadline",
}


@dataclass
class SweepSpec:
    parameter: str
    start: float
    step: float
    end: float
    fixed: dict = field(default_factory=dict)

    def values(self) -> list:
        count = int(math.floor((self.end - self.start) / self.step + 1e-9)) + 1
        vals = [self.start + k * self.step for k in range(count)]
        if self.parameter == "erasure":
            return [round(v, 12) for v in vals]
        return [int(round(v)) for v in vals]


def fmt(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.6g}"


def _deadline(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("deadline must be a non-negative integer or 'inf'")
    return value


def _policies(text: str) -> list[PolicyKind]:
    out = []
    for name in text.split(","):
        name = name.strip()
        try:
            out.append(PolicyKind(name))
        except ValueError:
            choices = ", ".join(k.value for k in PolicyKind)
            raise argparse.ArgumentTypeError(f"unknown policy {name!r} (choose from {choices})")
    if not out:
        raise argparse.ArgumentTypeError("at least one policy is required")
    return out


def _sweep(text: str) -> SweepSpec:
    try:
        name, rng = text.split("=", 1)
        start, step, end = (float(x) for x in rng.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad sweep {text!r}, expected <param>=<start>:<step>:<end>")
    if name not in SWEEP_FIELDS:
        raise argparse.ArgumentTypeError(
            f"cannot sweep {name!r} (choose from {', '.join(SWEEP_FIELDS)})")
    if step <= 0 or start > end:
        raise argparse.ArgumentTypeError("sweep needs step > 0 and start <= end")
    return SweepSpec(name, start, step, end)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="idnc-sim",
        description="Monte-Carlo comparison of IDNC max- and sum-decoding-delay policies.")
    ap.add_argument("--receivers", type=int, default=60)
    ap.add_argument("--packets", type=int, default=30)
    ap.add_argument("--erasure", type=float, default=0.5, help="average erasure probability P")
    ap.add_argument("--deadline", type=_deadline, default=math.inf, help="integer or 'inf'")
    ap.add_argument("--frames", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--policy", type=_policies, default=[PolicyKind.MDD_GREEDY, PolicyKind.SDD_GREEDY],
                    help="comma-separated list of mdd, sdd, mdd-exact, sdd-exact")
    ap.add_argument("--sweep", type=_sweep, default=None, metavar="PARAM=START:STEP:END")
    ap.add_argument("--output", default="-", help="CSV path, '-' for stdout")
    ap.add_argument("--max-transmissions", type=int, default=None)
    ap.add_argument("--spread", type=float, default=DEFAULT_SPREAD,
                    help="cap on the half-width of the per-frame erasure spread around P")
    return ap


def parse_args(argv: Sequence[str] | None = None):
    """Returns (config, sweep or None, output path, policies); usage errors exit with status 2."""
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        config = SimConfig(ns.receivers, ns.packets, ns.erasure, ns.deadline, ns.frames,
                           ns.seed, ns.policy[0], ns.max_transmissions, ns.spread)
    except ValueError as exc:
        ap.error(str(exc))
    sweep = ns.sweep
    if sweep is not None:
        for v in sweep.values():
            try:
                _point(config, sweep, v)
            except ValueError as exc:
                ap.error(f"sweep value {v}: {exc}")
        sweep.fixed = {f.name: getattr(config, f.name) for f in dataclasses.fields(config)
                       if f.name != SWEEP_FIELDS[sweep.parameter]}
    for kind in ns.policy:
        if kind.exact:
            points = [config] if sweep is None else [_point(config, sweep, v) for v in sweep.values()]
            worst = max(c.receivers * c.packets for c in points)
            if worst > DEFAULT_ENUMERATION_BOUND:
                ap.error(f"{kind.value} enumerates all maximal cliques and is limited to "
                         f"receivers*packets <= {DEFAULT_ENUMERATION_BOUND} (got {worst})")
    return config, sweep, ns.output, ns.policy


def _point(config: SimConfig, sweep: SweepSpec | None, value) -> SimConfig:
    if sweep is None:
        return config
    return dataclasses.replace(config, **{SWEEP_FIELDS[sweep.parameter]: value})


def csv_row(config: SimConfig, policy: PolicyKind, stats: ExperimentStats) -> str:
    return ",".join([
        policy.value, fmt(config.receivers), fmt(config.packets), fmt(float(config.erasure)),
        fmt(config.deadline), fmt(config.frames), fmt(config.seed),
        fmt(stats.mean_sum_delay), fmt(stats.mean_max_delay),
        fmt(stats.mean_served_fraction), fmt(stats.mean_recovery_transmissions),
    ])


def run_and_emit(config: SimConfig, sweep: SweepSpec | None, policies: Sequence[PolicyKind],
                 out: str, log=None) -> int:
    log = log or sys.stderr
    rows = [CSV_HEADER]
    table = []
    values = [None] if sweep is None else sweep.values()
    cache: dict = {}
    for policy in policies:
        for v in values:
            point = dataclasses.replace(_point(config, sweep, v), policy=policy)
            # the deadline only filters the served statistic, frames are shared across T
            key = dataclasses.replace(point, deadline=math.inf)
            key = tuple(getattr(key, f.name) for f in dataclasses.fields(key))
            if key not in cache:
                cache[key] = simulate_frames(point)
            stats = ExperimentStats.from_frames(cache[key], point.deadline)
            rows.append(csv_row(point, policy, stats))
            table.append((policy.value, point, stats))
    text = "\n".join(rows) + "\n"
    try:
        if out == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            with open(out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"idnc-sim: cannot write {out}: {exc}", file=sys.stderr)
        return 1
    print(summary_table(table), file=log)
    return 0


def summary_table(entries) -> str:
    buf = io.StringIO()
    buf.write(f"{'policy':<10}{'M':>5}{'N':>5}{'P':>7}{'T':>6}"
              f"{'sum D':>11}{'max D':>9}{'served':>9}{'tx':>9}\n")
    for name, c, s in entries:
        buf.write(f"{name:<10}{c.receivers:>5}{c.packets:>5}{c.erasure:>7.3g}{fmt(c.deadline):>6}"
                  f"{s.mean_sum_delay:>11.2f}{s.mean_max_delay:>9.2f}"
                  f"{s.mean_served_fraction:>9.3f}{s.mean_recovery_transmissions:>9.1f}\n")
    return buf.getvalue().rstrip("\n")


def main(argv: Sequence[str] | None = None) -> int:
    config, sweep, out, policies = parse_args(argv)
    return run_and_emit(config, sweep, policies, out)


if __name__ == "__main__":
    sys.exit(main())
