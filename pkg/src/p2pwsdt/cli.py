"""Command-line front end and benchmark sweeps.

Subcommands::

    gen-case           write a benchmark network (cases I..VI) as scenario JSON
    lowerbound         uplink-sum lower bound of a scenario
    allocate           run a static allocator and report its flow rates
    verify             min-cut flow rates of an allocation, optional schedule check
    simulate-dynamic   epoch trace of the dynamic scheme
    sweep              CSV of WSDT versus source uplink for several schemes

Exit codes: 0 success, 1 ``verify`` found the schedule infeasible,
2 unreadable input or bad arguments, 3 invalid instance or request,
4 failure while computing.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .bound import wsdt, wsdt_lower_bound
from .dynamic_sim import Join, Mode, SimulationDivergence, simulate_dynamic
from .maxflow import flow_rates_of_allocation, staggered_schedule, verify_static_schedule
from .model import (
    AllocationError,
    CASE_IDS,
    Network,
    RateAllocation,
    ScenarioError,
    WeightProfile,
    generate_case,
    scenario_to_dict,
    validate_scenario,
)
from .static_alloc import MutualcastError, depth2_rateless, extended_mutualcast, max_common_rate, mutualcast, routing_based

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_RUNTIME = 4

STATIC_SCHEMES = ("lowerbound", "extended", "depth2", "routing")
DYNAMIC_SCHEMES = ("dynamic-retain", "dynamic-leave")
SCHEMES = STATIC_SCHEMES + DYNAMIC_SCHEMES
CSV_HEADER = ("case", "n", "us", "scheme", "wsdt", "lower_bound", "ratio")


class InputError(Exception):
    """A file could not be read or parsed."""


def fmt(x: float) -> str:
    """Numbers everywhere in CLI output: 12 significant digits."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def _round12(x: float) -> float:
    return float(fmt(x))


# ----------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a benchmark case (or a fixed scenario) against many ``U_s`` values."""

    source_uplinks: tuple[float, ...]
    schemes: tuple[str, ...]
    case: str | None = None
    n: int | None = None
    weights: str = "uniform"
    scenario: Network | None = None
    label: str | None = None

    def __post_init__(self):
        if (self.case is None) == (self.scenario is None):
            raise ValueError("give exactly one of a case id or a scenario")
        if self.case is not None:
            if str(self.case).upper() not in CASE_IDS:
                raise ValueError(f"unknown case {self.case!r}; expected one of {', '.join(CASE_IDS)}")
            if self.n is None or self.n < 1:
                raise ValueError("a case sweep needs n >= 1")
            WeightProfile(self.weights)
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ValueError(f"unknown scheme(s) {unknown}; expected from {', '.join(SCHEMES)}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ValueError("schemes must not repeat")
        if not self.source_uplinks:
            raise ValueError("need at least one source uplink value")
        us = list(self.source_uplinks)
        if any(not (u > 0 and math.isfinite(u)) for u in us):
            raise ValueError("source uplink values must be positive and finite")
        if us != sorted(us):
            raise ValueError("source uplink values must be sorted ascending")

    @property
    def case_label(self) -> str:
        if self.label is not None:
            return self.label
        return str(self.case).upper() if self.case is not None else "scenario"

    def network(self, us: float) -> Network:
        if self.scenario is not None:
            return Network(float(us), self.scenario.peers, self.scenario.file_size)
        return generate_case(self.case, self.n, us, self.weights)


@dataclass(frozen=True)
class SweepRow:
    case: str
    n: int
    us: float
    scheme: str
    wsdt: float
    lower_bound: float

    @property
    def ratio(self) -> float:
        if self.lower_bound == 0 or not math.isfinite(self.lower_bound):
            return math.nan
        return self.wsdt / self.lower_bound

    def as_strings(self) -> list[str]:
        return [self.case, str(self.n), fmt(self.us), self.scheme, fmt(self.wsdt), fmt(self.lower_bound), fmt(self.ratio)]


def scheme_wsdt(network: Network, scheme: str) -> float:
    """WSDT of one scheme on one network (``lowerbound`` gives the bound itself)."""
    w, b = network.weights, network.file_size
    if scheme == "lowerbound":
        return wsdt_lower_bound(network).value
    if scheme == "extended":
        return wsdt(extended_mutualcast(network)[1], w, b)
    if scheme == "depth2":
        return depth2_rateless(network).wsdt(w, b)
    if scheme == "routing":
        return routing_based(network).wsdt(w, b)
    if scheme in DYNAMIC_SCHEMES:
        return simulate_dynamic(network, scheme.split("-", 1)[1]).wsdt
    raise ValueError(f"unknown scheme {scheme!r}")


def sweep_rows(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """All rows of a sweep, ordered by ``(U_s, scheme)`` whatever the completion order."""
    tasks = [(us, s) for us in spec.source_uplinks for s in sorted(spec.schemes)]

    def run(task):
        us, scheme = task
        net = spec.network(us)
        lb = wsdt_lower_bound(net).value
        value = lb if scheme == "lowerbound" else scheme_wsdt(net, scheme)
        # store what the CSV will show, so parsing it back is exact
        return SweepRow(spec.case_label, net.n, _round12(us), scheme, _round12(value), _round12(lb))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]
    return sorted(rows, key=lambda r: (r.us, r.scheme))


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CSV_HEADER)
    for r in rows:
        out.writerow(r.as_strings())
    return buf.getvalue()


def run_sweep(spec: SweepSpec, workers: int = 1) -> str:
    """The sweep as a CSV document; identical specs give byte-identical output."""
    return rows_to_csv(sweep_rows(spec, workers))


def parse_sweep_csv(text: str) -> list[SweepRow]:
    """Inverse of :func:`rows_to_csv`; the ratio column is recomputed, not read."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise InputError(f"bad sweep header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        case, n, us, scheme, value, lb, _ = rec
        rows.append(SweepRow(case, int(n), float(us), scheme, float(value), float(lb)))
    return rows


# ----------------------------------------------------------------- file I/O


def _read_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _read_scenario(path: str) -> Network:
    return validate_scenario(_read_json(path))


def _read_joins(path: str) -> list[Join]:
    raw = _read_json(path)
    if isinstance(raw, dict):
        raw = raw.get("joins", [])
    if not isinstance(raw, list):
        raise InputError("joins file must hold a list of {time, uplink, downlink, weight}")
    joins = []
    for k, item in enumerate(raw):
        try:
            t = float(item["time"])
            peer_raw = {"source_uplink": 1.0, "peers": [{key: v for key, v in item.items() if key != "time"}]}
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"join {k}: {exc}") from exc
        joins.append(Join(t, validate_scenario(peer_raw).peers[0]))
    times = [j.time for j in joins]
    if times != sorted(times):
        raise ValueError("join times must be nondecreasing")
    return joins


def allocation_to_dict(alloc: RateAllocation) -> dict[str, Any]:
    out: dict[str, Any] = {"rates": alloc.rates.tolist()}
    if alloc.source_depth1 is not None:
        out["source_depth1"] = np.asarray(alloc.source_depth1).tolist()
    if alloc.source_depth2 is not None:
        out["source_depth2"] = np.asarray(alloc.source_depth2).tolist()
    return out


def allocation_to_csv(alloc: RateAllocation, flows, meta: dict[str, Any]) -> str:
    """Per-peer table; ``to_j`` columns hold the relay rates, ``source_rate`` the diagonal."""
    n = alloc.n
    d1 = np.zeros(n) if alloc.source_depth1 is None else alloc.source_depth1
    d2 = np.zeros(n) if alloc.source_depth2 is None else alloc.source_depth2
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v if isinstance(v, str) else fmt(v)}\n")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["peer", "flow_rate", "download_rate", "upload_rate", "source_rate", "source_depth1", "source_depth2",
                  *[f"to_{j + 1}" for j in range(n)]])
    relay, down, up = alloc.relay_rates, alloc.download_rates(), alloc.upload_rates()
    for i in range(n):
        out.writerow([i + 1, fmt(flows[i]), fmt(down[i]), fmt(up[i]), fmt(alloc.rates[i, i]), fmt(d1[i]), fmt(d2[i]),
                      *[fmt(x) for x in relay[i]]])
    return buf.getvalue()


def _allocation_from_csv(text: str) -> RateAllocation:
    rows = list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))
    n = len(rows)
    rates = np.zeros((n, n))
    for i, row in enumerate(rows):
        rates[i, i] = float(row["source_rate"])
        for j in range(n):
            if j != i:
                rates[i, j] = float(row[f"to_{j + 1}"])
    return RateAllocation(rates)


def _read_allocation(path: str) -> RateAllocation:
    """Rate matrix from JSON (``{"rates": [[...]]}``) or from the CSV ``allocate`` writes."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        if text.lstrip().startswith(("{", "[")):
            raw = json.loads(text)
            rates = raw["rates"] if isinstance(raw, dict) else raw
            return RateAllocation(np.asarray(rates, dtype=float))
        return _allocation_from_csv(text)
    except (KeyError, TypeError, ValueError, AllocationError) as exc:
        raise InputError(f"{path}: no usable rate matrix ({exc})") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated integers, got {text!r}") from exc


def _vector(label: str, values) -> str:
    return f"{label}: " + " ".join(fmt(v) for v in values) + "\n"


# ----------------------------------------------------------------- commands


def cmd_gen_case(args) -> str:
    net = generate_case(args.case, args.n, args.us, args.weights, args.file_size)
    text = json.dumps(scenario_to_dict(net), indent=2) + "\n"
    _write_text(args.out, text)
    return ""


def cmd_lowerbound(args) -> str:
    net = _read_scenario(args.scenario)
    lb = wsdt_lower_bound(net)
    w, b = net.weights, net.file_size
    buf = io.StringIO()
    buf.write(f"# lower_bound: {fmt(lb.value)}\n# level: {fmt(lb.level)}\n")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["peer", "weight", "rate", "weighted_time"])
    for i in range(net.n):
        t = 0.0 if w[i] == 0 else (w[i] * b / lb.rates[i] if lb.rates[i] > 0 else math.inf)
        out.writerow([i + 1, fmt(w[i]), fmt(lb.rates[i]), fmt(t)])
    return buf.getvalue()


def _allocate(net: Network, scheme: str):
    if scheme == "mutualcast":
        rate = max_common_rate(net)
        alloc = mutualcast(net, rate)
        return alloc, np.full(net.n, rate), {}
    if scheme == "extended":
        alloc, flows = extended_mutualcast(net)
        return alloc, flows, {}
    sol = depth2_rateless(net) if scheme == "depth2" else routing_based(net)
    extra = {"c": sol.c, "alpha": sol.alpha}
    if scheme == "routing":
        extra["wasted_uplink"] = sol.wasted_uplink
    return sol.allocation, sol.flow_rates, extra


def cmd_allocate(args) -> str:
    net = _read_scenario(args.scenario)
    alloc, flows, extra = _allocate(net, args.scheme)
    meta = {"scheme": args.scheme, "wsdt": wsdt(flows, net.weights, net.file_size), **extra}
    if args.out and args.out.endswith(".json"):
        _write_text(args.out, json.dumps(allocation_to_dict(alloc), indent=2) + "\n")
        return "".join(f"# {k}: {v if isinstance(v, str) else fmt(v)}\n" for k, v in meta.items())
    table = allocation_to_csv(alloc, flows, meta)
    _write_text(args.out, table)
    return ""


def cmd_verify(args) -> str:
    net = _read_scenario(args.scenario)
    alloc = _read_allocation(args.allocation)
    flows = flow_rates_of_allocation(net, alloc)
    text = _vector("flow_rates", flows) + f"wsdt: {fmt(wsdt(flows, net.weights, net.file_size))}\n"
    if args.durations is None and args.order is None:
        if np.all(flows > 0):
            order, dt = staggered_schedule(flows, net.file_size)
        else:
            return text + "schedule: skipped (some peer has zero flow rate)\n"
    else:
        if args.durations is None or args.order is None:
            raise ValueError("--order and --durations go together")
        order = [k - 1 for k in _ints(args.order)]
        dt = np.array(_floats(args.durations))
    verdict = verify_static_schedule(net, alloc, order, dt)
    text += "order: " + " ".join(str(k + 1) for k in order) + "\n"
    text += _vector("durations", dt) + _vector("received", verdict.flows[order])
    text += f"schedule: {'feasible' if verdict.all_feasible else 'infeasible'}\n"
    if not verdict.all_feasible:
        args._failed = True
    return text


def trace_to_csv(trace) -> str:
    n = trace.weights.size
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["epoch", "t_start", "duration", "event", "supported_ids", *[f"rate_{i + 1}" for i in range(n)]])
    for e in trace.epochs:
        rates = np.zeros(n)
        rates[: e.rates.size] = e.rates
        ids = " ".join(str(i + 1) for i in sorted(e.supported))
        out.writerow([e.index, fmt(e.start), fmt(e.duration), e.event, ids, *[fmt(r) for r in rates]])
    return buf.getvalue()


def cmd_simulate(args) -> str:
    net = _read_scenario(args.scenario)
    joins = _read_joins(args.joins) if args.joins else []
    trace = simulate_dynamic(net, args.mode, joins)
    table = trace_to_csv(trace)
    summary = f"mode: {args.mode}\nepochs: {len(trace.epochs)}\nwsdt: {fmt(trace.wsdt)}\n"
    summary += _vector("finish_times", trace.finish_times)
    if args.trace:
        _write_text(args.trace, table)
        return summary
    return summary + table


def cmd_sweep(args) -> str:
    if args.us is not None and args.us_logspace is not None:
        raise ValueError("use either --us or --us-logspace")
    if args.us is not None:
        us = _floats(args.us)
    elif args.us_logspace is not None:
        lo, hi, count = args.us_logspace
        if int(count) != count or count < 1:
            raise ValueError("--us-logspace COUNT must be a positive integer")
        us = np.logspace(lo, hi, int(count)).tolist()
    elif args.scenario:
        us = None
    else:
        raise ValueError("need --us or --us-logspace")
    schemes = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    if args.scenario:
        net = _read_scenario(args.scenario)
        spec = SweepSpec(tuple(us if us is not None else [net.source_uplink]), schemes, scenario=net, label=args.label)
    else:
        if args.case is None:
            raise ValueError("need --case or --scenario")
        if args.n is None:
            raise ValueError("a case sweep needs --n")
        spec = SweepSpec(tuple(us), schemes, case=args.case, n=args.n, weights=args.weights, label=args.label)
    _write_text(args.out, run_sweep(spec, args.workers))
    return ""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="p2pwsdt", description="Weighted sum download time for P2P file transfer.")
    p.allow_abbrev = False
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-case", help="write a benchmark network as scenario JSON", allow_abbrev=False)
    g.add_argument("--case", required=True, choices=CASE_IDS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--us", type=float, required=True, help="source uplink")
    g.add_argument("--weights", default="uniform", help="uniform, linear, two-class or two-class-mild")
    g.add_argument("--file-size", type=float, default=1.0)
    g.add_argument("--out", help="output path (default stdout)")
    g.set_defaults(func=cmd_gen_case)

    lb = sub.add_parser("lowerbound", help="uplink-sum lower bound", allow_abbrev=False)
    lb.add_argument("--scenario", required=True)
    lb.set_defaults(func=cmd_lowerbound)

    a = sub.add_parser("allocate", help="static allocation and its flow rates", allow_abbrev=False)
    a.add_argument("--scenario", required=True)
    a.add_argument("--scheme", required=True, choices=("mutualcast", "extended", "depth2", "routing"))
    a.add_argument("--out", help="CSV path (default stdout); a .json path gets the bare rate matrix")
    a.set_defaults(func=cmd_allocate)

    v = sub.add_parser("verify", help="min-cut flow rates and schedule feasibility", allow_abbrev=False)
    v.add_argument("--scenario", required=True)
    v.add_argument("--allocation", required=True, help="JSON with a 'rates' matrix")
    v.add_argument("--order", help="1-based finish order, comma separated")
    v.add_argument("--durations", help="epoch lengths, comma separated")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("simulate-dynamic", help="run the dynamic scheme", allow_abbrev=False)
    d.add_argument("--scenario", required=True)
    d.add_argument("--mode", choices=[m.value for m in Mode], default="retain")
    d.add_argument("--joins", help="JSON list of {time, uplink, downlink, weight}")
    d.add_argument("--trace", help="write the epoch trace CSV here instead of stdout")
    d.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="WSDT versus source uplink as CSV", allow_abbrev=False)
    s.add_argument("--case", type=str.upper, choices=CASE_IDS)
    s.add_argument("--scenario", help="sweep a fixed scenario instead of a case")
    s.add_argument("--n", type=int)
    s.add_argument("--us", help="comma-separated source uplinks")
    s.add_argument("--us-logspace", type=float, nargs=3, metavar=("LO", "HI", "COUNT"), help="10**LO .. 10**HI")
    s.add_argument("--weights", default="uniform")
    s.add_argument("--schemes", default="lowerbound,depth2", help=f"comma separated, from {','.join(SCHEMES)}")
    s.add_argument("--label", help="value of the case column")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    args._failed = False
    try:
        text = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ScenarioError, AllocationError, MutualcastError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SimulationDivergence, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if text:
        sys.stdout.write(text)
    return EXIT_INFEASIBLE if args._failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
