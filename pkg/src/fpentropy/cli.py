"""Command-line entry point: ``fpentropy <command> ...``.

Logging verbosity is read from the ``FPENTROPY_LOG_LEVEL`` environment
variable; everything else comes from flags or a config file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .chowliu import MiGraph, chow_liu_upper_bound, estimate_graph, naive_upper_bound, pair_key
from .estimation import EstimationError, build_distribution, effective_domain_size, required_samples
from .independence import VerdictMatrix, classify_pairs
from .io import RecordParseError, dump_json, read_samples, samples_from_reports, write_reports
from .planner import AssignmentPlan, PlanningError, PlanningInput, PoolExhaustedError, greedy_assign, verify_plan
from .sessions import (
    ScriptProfile,
    SiteProfile,
    blocklist_impact,
    entropy_distribution,
    family_call_frequency,
    generate_events,
    parse_events,
    party_split_report,
    select_core_surfaces,
    sessionize,
    signature_association,
)
from .simulator import (
    PHASE3_BIT_BUDGET,
    PopulationModel,
    VisitSchedule,
    client_values,
    filter_records,
    generate_population,
    hash_values,
    run_phase1,
    run_phase2,
    run_phase3,
)
from .structure import AdjacencyMatrix, bandwidth, cuthill_mckee_order, single_linkage_clusters

log = logging.getLogger("fpentropy")


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _read_lines(path: str) -> list[str]:
    if not Path(path).is_file():
        raise CliError(f"no such file: {path}")
    with open(path) as fh:
        return fh.readlines()


def _load_json(path: str) -> Any:
    if not Path(path).is_file():
        raise CliError(f"no such file: {path}")
    with open(path) as fh:
        return json.load(fh)


def _emit(obj: Any, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            dump_json(obj, fh)
    else:
        dump_json(obj, sys.stdout)


def _count(text: str) -> int:
    value = float(text)
    if value < 0 or value != int(value):
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return int(value)


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return value


def _delta(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"delta must lie in (0, 1], got {text}")
    return value


# ---------------------------------------------------------------- commands


def estimates_from_samples(lines: Sequence[str], delta: float, sample_floor: int) -> dict[str, Any]:
    records = read_samples(lines)
    if not records:
        raise CliError("no records")
    # singles and joint records both feed the per-surface node estimates
    nodes_samples: dict[str, list[str]] = {s: list(v) for s, v in records.single.items()}
    for (a, b), rows in records.joint.items():
        if a not in records.single:
            nodes_samples.setdefault(a, []).extend(r[0] for r in rows)
        if b not in records.single:
            nodes_samples.setdefault(b, []).extend(r[1] for r in rows)
    from .estimation import entropy_confidence_interval, mi_estimate

    nodes = {}
    for s in sorted(nodes_samples):
        vals = nodes_samples[s]
        if len(vals) < 2:
            log.warning("surface %s has %d sample(s); skipped", s, len(vals))
            continue
        nodes[s] = entropy_confidence_interval(build_distribution(vals), delta=delta)
    edges = {}
    for (a, b) in sorted(records.joint):
        if a in nodes and b in nodes and len(records.joint[(a, b)]) >= 2:
            edges[pair_key(a, b)] = mi_estimate(records.joint_distribution(a, b), delta, sample_floor=sample_floor)
    graph = MiGraph(nodes, edges)
    return {
        "estimates": [nodes[s].to_json(s) for s in sorted(nodes)],
        "graph": graph.to_json(),
    }


def cmd_estimate(args: argparse.Namespace) -> None:
    _emit(estimates_from_samples(_read_lines(args.reports), args.delta, args.sample_floor), args.out)


def _graph(path: str) -> MiGraph:
    data = _load_json(path)
    return MiGraph.from_json(data.get("graph", data))


def cmd_bound(args: argparse.Namespace) -> None:
    graph = _graph(args.graph)
    subset = [s for s in args.subset.split(",") if s]
    bound = chow_liu_upper_bound(graph, subset, use_chain_bounds=args.chain)
    naive = naive_upper_bound(graph, subset)
    _emit({"subset": sorted(set(subset)), "chow_liu": bound.to_json(), "naive": naive.to_json()}, args.out)


def cmd_classify(args: argparse.Namespace) -> None:
    records = read_samples(_read_lines(args.samples))
    if not records.joint:
        raise CliError("no joint records")
    joints = {k: records.joint_distribution(*k) for k in sorted(records.joint)}
    matrix = classify_pairs(joints, args.threshold, args.confidence, args.rounds, args.seed)
    _emit(matrix.to_json(), args.out)
    if args.csv:
        Path(args.csv).write_text(matrix.to_csv())


def order_report(matrix: VerdictMatrix) -> dict[str, Any]:
    adj = AdjacencyMatrix.from_verdicts(matrix)
    order = cuthill_mckee_order(adj)
    return {"order": order, "bandwidth_before": bandwidth(adj), "bandwidth_after": bandwidth(adj, order)}


def cmd_order(args: argparse.Namespace) -> None:
    matrix = VerdictMatrix.from_json(_load_json(args.verdicts))
    report = order_report(matrix)
    _emit(report, args.out)
    if args.csv:
        Path(args.csv).write_text(matrix.to_csv(report["order"]))


def cluster_report(graph: MiGraph, threshold: float | None, num_clusters: int | None) -> dict[str, Any]:
    result = single_linkage_clusters(graph, num_clusters=num_clusters, mi_threshold=threshold)
    return {
        "clusters": result.clusters,
        "dendrogram": result.tree.to_json(),
        "merges": [list(m) for m in result.tree.merges],
        "leaves": result.tree.leaves,
    }


def cmd_cluster(args: argparse.Namespace) -> None:
    if args.threshold is not None and args.num_clusters is not None:
        raise CliError("give --threshold or --num-clusters, not both")
    _emit(cluster_report(_graph(args.graph), args.threshold, args.num_clusters), args.out)


def cmd_plan(args: argparse.Namespace) -> None:
    data = _load_json(args.input)
    try:
        inp = PlanningInput.from_json(data, budget=args.budget, pool_size=args.pool)
        plan = greedy_assign(inp)
    except PoolExhaustedError as exc:
        if args.out:
            _emit(exc.partial.to_json(), args.out)
        raise CliError(str(exc)) from exc
    except PlanningError as exc:
        raise CliError(str(exc)) from exc
    report = verify_plan(inp, plan)
    out = plan.to_json()
    out["verification"] = _plan_report_json(report)
    _emit(out, args.out)
    if not report.ok:
        raise CliError(str(report))


def _plan_report_json(report) -> dict[str, Any]:
    return {
        "ok": report.ok,
        "total_clients": report.total_clients,
        "uncovered": [list(p) for p in report.uncovered],
        "over_budget_rounds": report.over_budget_rounds,
        "pool_exceeded": report.pool_exceeded,
    }


def _schedule(args: argparse.Namespace) -> VisitSchedule:
    sites = tuple(s for s in (args.sites or "site-0.example").split(",") if s)
    return VisitSchedule(sites, args.visits)


def cmd_simulate(args: argparse.Namespace) -> None:
    model = PopulationModel.load(args.model) if Path(args.model).is_file() else None
    if model is None:
        raise CliError(f"no such file: {args.model}")
    population = generate_population(model, args.clients, args.seed)
    schedule = _schedule(args)
    if args.phase == 1:
        result = run_phase1(population, schedule, seed=args.seed)
    elif args.phase == 2:
        result = run_phase2(population, schedule, seed=args.seed)
    else:
        if not args.plan:
            raise CliError("phase 3 needs --plan")
        plan = AssignmentPlan.from_json(_load_json(args.plan))
        result = run_phase3(population, plan, schedule, seed=args.seed, budget=args.budget)
    records = result.records
    if args.phase > 1 and args.hash_salt:
        records = hash_values(records, args.hash_salt)
    if args.phase > 1 and args.k_anonymity > 1:
        records = filter_records(records, args.k_anonymity)
    if args.out:
        with open(args.out, "w") as fh:
            write_reports(fh, records)
    else:
        write_reports(sys.stdout, records)


def cmd_sessions(args: argparse.Namespace) -> None:
    skipped: Counter = Counter()
    events = parse_events(_read_lines(args.events), skipped)
    sessions = sessionize(events, _verticals(args.verticals), skipped)
    lines = "".join(json.dumps(s.to_json(), sort_keys=True) + "\n" for s in sessions)
    if args.out:
        Path(args.out).write_text(lines)
    else:
        sys.stdout.write(lines)
    if skipped:
        log.warning("skipped %d malformed events", skipped["malformed"])


def _verticals(path: str | None) -> dict[str, str]:
    return dict(_load_json(path)) if path else {}


def cmd_histogram(args: argparse.Namespace) -> None:
    events = parse_events(_read_lines(args.events))
    sessions = sessionize(events)
    if not sessions:
        raise CliError("no sessions")
    hist = entropy_distribution(sessions, _graph(args.graph), args.bucket_width, default_entropy=args.default_entropy)
    if args.out:
        Path(args.out).write_text(hist.to_csv())
    else:
        sys.stdout.write(hist.to_csv())
    if args.json:
        with open(args.json, "w") as fh:
            dump_json(hist.to_json(), fh)
    if args.svg:
        from .plots import histogram_svg

        histogram_svg(hist, args.svg)


def cmd_block_impact(args: argparse.Namespace) -> None:
    events = parse_events(_read_lines(args.events))
    blocklist = [line.strip() for line in _read_lines(args.blocklist)] if args.blocklist else []
    impact = blocklist_impact(events, _graph(args.graph), blocklist, args.signature_block, args.bucket_width)
    _emit(impact.to_json(), args.out)


# ---------------------------------------------------------------- pipeline


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _site_profiles(cfg: list[dict[str, Any]]) -> list[SiteProfile]:
    out = []
    for site in cfg:
        scripts = tuple(
            ScriptProfile(
                sc["id"],
                sc.get("host", ""),
                tuple(sc["surfaces"]),
                float(sc.get("call_probability", 1.0)),
                tuple(sc.get("signatures", ())),
                sc.get("frame_origin"),
            )
            for sc in site["scripts"]
        )
        out.append(SiteProfile(site["site"], scripts, site.get("vertical")))
    return out


def _validate_config(cfg: dict[str, Any]) -> None:
    if not isinstance(cfg.get("seed"), int):
        raise CliError("config needs an integer 'seed'")
    delta = cfg.get("delta", 0.05)
    if not 0 < delta <= 1:
        raise CliError("delta must lie in (0, 1]")
    if cfg.get("phase3", {}).get("budget_bits", PHASE3_BIT_BUDGET) > PHASE3_BIT_BUDGET:
        raise CliError(f"phase-3 budget may not exceed {PHASE3_BIT_BUDGET} bits")
    tv = cfg.get("classify", {}).get("threshold", 0.05)
    if not 0 < tv < 1:
        raise CliError("classify.threshold must lie in (0, 1)")
    if cfg.get("bucket_width", 1.0) <= 0:
        raise CliError("bucket_width must be positive")


def run_pipeline(config_path: str, out_dir: str) -> dict[str, Any]:
    """Run every stage, writing artifacts and a manifest into ``out_dir``.

    Inputs are checked before anything is written. On a stage failure the
    manifest records the failed stage and earlier artifacts are kept.
    """
    cfg_file = Path(config_path)
    if not cfg_file.is_file():
        raise CliError(f"no such file: {config_path}")
    cfg = json.loads(cfg_file.read_text())
    _validate_config(cfg)
    base = cfg_file.parent
    model_path = base / cfg["model"]
    if not model_path.is_file():
        raise CliError(f"no such file: {model_path}")
    inputs = {"config": _sha256(cfg_file), "model": _sha256(model_path)}

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"]
    delta = float(cfg.get("delta", 0.05))
    manifest: dict[str, Any] = {"version": __version__, "seed": seed, "inputs": inputs, "stages": [], "status": "ok"}
    state: dict[str, Any] = {}

    def write_json(name: str, obj: Any) -> str:
        with open(out / name, "w") as fh:
            dump_json(obj, fh)
        return name

    def write_text(name: str, text: str) -> str:
        (out / name).write_text(text)
        return name

    def stage(name: str, fn: Callable[[], list[str]]) -> None:
        if manifest["status"] == "failed":
            manifest["stages"].append({"name": name, "status": "skipped", "outputs": []})
            return
        try:
            outputs = fn()
        except Exception as exc:  # recorded in the manifest, re-raised after
            log.error("stage %s failed: %s", name, exc)
            manifest["status"] = "failed"
            manifest["stages"].append({"name": name, "status": "failed", "outputs": [], "error": str(exc)})
            state["error"] = exc
            return
        manifest["stages"].append({"name": name, "status": "ok", "outputs": outputs})

    model = PopulationModel.load(str(model_path))
    sim = cfg.get("simulation", {})
    schedule = VisitSchedule(tuple(sim.get("sites", ["site-0.example"])), int(sim.get("visits_per_client", 28)))
    n2 = int(sim.get("phase2_clients", 20000))
    p3 = cfg.get("phase3", {})
    pool3 = int(p3.get("pool", 100000))
    salt = str(cfg.get("hash_salt", "fpentropy"))
    k_anon = int(cfg.get("k_anonymity", 50))
    sample_floor = int(p3.get("sample_floor", 30000))

    def s_population() -> list[str]:
        state["population"] = generate_population(model, n2 + pool3, seed)
        return []

    def s_phase1() -> list[str]:
        res = run_phase1(state["population"], schedule, seed=seed, clients=range(n2))
        fam_of = {s.id: s.family for s in model.surfaces}
        calls = Counter(fam_of[r.surface] for r in res.records)
        state["expected_calls"] = {f: c / n2 for f, c in calls.items()}
        callers: dict[str, set[int]] = {}
        for r in res.records:
            callers.setdefault(r.surface, set()).add(r.client_id)
        state["callers"] = callers
        summary = {"records": len(res.records), "expected_calls_per_client": dict(sorted(state["expected_calls"].items()))}
        return [write_json("phase1_summary.json", summary)]

    def s_phase2() -> list[str]:
        res = run_phase2(
            state["population"], schedule, expected_calls=state["expected_calls"], seed=seed, clients=range(n2)
        )
        records = filter_records(hash_values(res.records, salt), k_anon)
        state["phase2"] = records
        state["phase2_clients"] = {c.client_id for c in res.clients}
        with open(out / "phase2_reports.jsonl", "w") as fh:
            write_reports(fh, records)
        return ["phase2_reports.jsonl"]

    def s_plan() -> list[str]:
        samples = client_values(state["phase2"])
        core = p3.get("core") or sorted(
            select_core_surfaces(state["phase2"], **cfg.get("core_criteria", {}))
        )
        core = [s for s in core if s in samples]
        state["core"] = core
        h, k = {}, {}
        for s in core:
            dist = build_distribution(samples[s].values())
            est = estimate_graph({s: samples[s]}, delta).nodes[s]
            h[s] = est.ci_high
            k[s] = effective_domain_size(dist)[0]
        # inflate by the phase-1 co-calling rate so enough assigned clients observe both surfaces
        callers = state["callers"]
        margin = float(p3.get("margin", 1.05))
        n_req = {}
        for i, a in enumerate(core):
            for b in core[i + 1 :]:
                rate = len(callers.get(a, set()) & callers.get(b, set())) / n2
                if rate <= 0:
                    raise PlanningError(f"no phase-1 client called both {a} and {b}")
                n_req[(a, b)] = int(np.ceil(required_samples(k[a], k[b], sample_floor) * margin / rate))
        inp = PlanningInput(core, h, n_req, float(p3.get("budget_bits", PHASE3_BIT_BUDGET)), pool3)
        plan = greedy_assign(inp)
        report = verify_plan(inp, plan)
        if not report.ok:
            raise PlanningError(str(report))
        state["plan"] = plan
        plan_json = plan.to_json()
        plan_json["verification"] = _plan_report_json(report)
        return [write_json("plan_input.json", inp.to_json()), write_json("plan.json", plan_json)]

    def s_phase3() -> list[str]:
        res = run_phase3(
            state["population"],
            state["plan"],
            schedule,
            seed=seed,
            clients=range(n2, n2 + pool3),
            exclude_clients=state["phase2_clients"],
            budget=float(p3.get("budget_bits", PHASE3_BIT_BUDGET)),
        )
        records = filter_records(hash_values(res.records, salt), k_anon)
        state["phase3"] = records
        with open(out / "phase3_reports.jsonl", "w") as fh:
            write_reports(fh, records)
        return ["phase3_reports.jsonl"]

    def s_graph() -> list[str]:
        g2 = estimate_graph(client_values(state["phase2"]), delta, sample_floor=sample_floor)
        g3 = estimate_graph(client_values(state["phase3"]), delta, sample_floor=sample_floor)
        edges = dict(g2.edges)
        for key, est in g3.edges.items():
            if key not in edges or est.n > edges[key].n:
                edges[key] = est
        graph = MiGraph(g2.nodes, {k: v for k, v in edges.items() if all(s in g2.nodes for s in k)})
        state["graph"] = graph
        estimates = {"estimates": [graph.nodes[s].to_json(s) for s in sorted(graph.nodes)], "graph": graph.to_json()}
        return [write_json("graph.json", estimates)]

    def s_classify() -> list[str]:
        c = cfg.get("classify", {})
        samples = samples_from_reports(state["phase3"])
        core = set(state["core"])
        joints = {k: samples.joint_distribution(*k) for k in sorted(samples.joint) if set(k) <= core}
        matrix = classify_pairs(
            joints,
            float(c.get("threshold", 0.05)),
            float(c.get("confidence", 0.90)),
            int(c.get("rounds", 1000)),
            seed,
        )
        state["verdicts"] = matrix
        return [write_json("verdicts.json", matrix.to_json()), write_text("verdicts.csv", matrix.to_csv())]

    def s_order() -> list[str]:
        report = order_report(state["verdicts"])
        return [
            write_json("order.json", report),
            write_text("verdicts_ordered.csv", state["verdicts"].to_csv(report["order"])),
        ]

    def s_cluster() -> list[str]:
        c = cfg.get("cluster", {})
        report = cluster_report(state["graph"], c.get("mi_threshold"), c.get("num_clusters"))
        return [write_json("clusters.json", report)]

    def s_sessions() -> list[str]:
        sc = cfg["sessions"]
        events = generate_events(
            _site_profiles(sc["sites"]), int(sc.get("clients", 200)), int(sc.get("visits_per_client", 10)), seed
        )
        verticals = {s["site"]: s["vertical"] for s in sc["sites"] if s.get("vertical")}
        sessions = sessionize(events, verticals)
        state["events"], state["sessions"], state["verticals"] = events, sessions, verticals
        write_text("events.jsonl", "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in events))
        write_text("sessions.jsonl", "".join(json.dumps(s.to_json(), sort_keys=True) + "\n" for s in sessions))
        return ["events.jsonl", "sessions.jsonl"]

    def s_histogram() -> list[str]:
        bw = float(cfg.get("bucket_width", 1.0))
        graph, sessions = state["graph"], state["sessions"]
        hist = entropy_distribution(sessions, graph, bw)
        split = party_split_report(sessions, graph, min_sites=int(cfg.get("min_sites_per_vertical", 0)))
        sig = signature_association(sessions, graph)
        outputs = [write_text("histogram.csv", hist.to_csv()), write_json("histogram.json", hist.to_json())]
        outputs.append(
            write_json(
                "party_split.json",
                [
                    {"group": g, "first_party_bits": p.first_party_bits, "third_party_bits": p.third_party_bits,
                     "sessions": p.sessions, "sites": p.sites}
                    for g, p in split.items()
                ],
            )
        )
        outputs.append(write_json("signature_association.json", [b.__dict__ for b in sig]))
        if cfg.get("svg"):
            from .plots import boxplot_svg, histogram_svg

            histogram_svg(hist, str(out / "histogram.svg"))
            boxplot_svg(sig, str(out / "signature_association.svg"))
            outputs += ["histogram.svg", "signature_association.svg"]
        thresholds = cfg.get("family_thresholds")
        if thresholds:
            fam_map = {s.id: s.family for s in model.surfaces if s.family in thresholds}
            freq = family_call_frequency(sessions, fam_map, thresholds)
            outputs.append(
                write_json(
                    "family_frequency.json",
                    {
                        "per_site": [{"family": f, "site": s, "fraction": v} for (f, s), v in sorted(freq.per_site.items())],
                        "percentiles": {f: {str(k): v for k, v in p.items()} for f, p in freq.percentiles.items()},
                    },
                )
            )
        return outputs

    def s_block() -> list[str]:
        impact = blocklist_impact(
            state["events"],
            state["graph"],
            cfg.get("blocklist", []),
            bool(cfg.get("signature_block", False)),
            float(cfg.get("bucket_width", 1.0)),
            state["verticals"],
        )
        return [write_json("block_impact.json", impact.to_json())]

    for name, fn in [
        ("population", s_population),
        ("phase1", s_phase1),
        ("phase2", s_phase2),
        ("plan", s_plan),
        ("phase3", s_phase3),
        ("graph", s_graph),
        ("classify", s_classify),
        ("order", s_order),
        ("cluster", s_cluster),
        ("sessions", s_sessions),
        ("histogram", s_histogram),
        ("block_impact", s_block),
    ]:
        stage(name, fn)
    write_json("manifest.json", manifest)
    if manifest["status"] == "failed":
        raise CliError(f"pipeline failed: {state['error']}")
    return manifest


def cmd_pipeline(args: argparse.Namespace) -> None:
    run_pipeline(args.config, args.out)


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpentropy", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("estimate", help="entropy and MI estimates from TSV samples")
    s.add_argument("--reports", required=True)
    s.add_argument("--delta", type=_delta, default=0.05)
    s.add_argument("--sample-floor", type=_count, default=30000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("bound", help="joint-entropy bound for a surface subset")
    s.add_argument("--graph", required=True)
    s.add_argument("--subset", required=True)
    s.add_argument("--chain", action="store_true", help="fill missing edges with chain lower bounds")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("classify", help="pairwise dependence verdicts")
    s.add_argument("--samples", required=True)
    s.add_argument("--threshold", type=_unit_interval, default=0.05)
    s.add_argument("--confidence", type=_unit_interval, default=0.90)
    s.add_argument("--rounds", type=_count, default=1000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("order", help="Cuthill-McKee ordering of a verdict matrix")
    s.add_argument("--verdicts", required=True)
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_order)

    s = sub.add_parser("cluster", help="single-linkage clustering by MI")
    s.add_argument("--graph", required=True)
    s.add_argument("--threshold", type=float)
    s.add_argument("--num-clusters", type=_count)
    s.add_argument("--out")
    s.set_defaults(func=cmd_cluster)

    s = sub.add_parser("plan", help="greedy subset assignment")
    s.add_argument("--input", required=True)
    s.add_argument("--budget", type=float)
    s.add_argument("--pool", type=_count)
    s.add_argument("--out")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", help="simulate a telemetry phase")
    s.add_argument("--model", required=True)
    s.add_argument("--clients", type=_count, required=True)
    s.add_argument("--phase", type=int, choices=(1, 2, 3), required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--plan")
    s.add_argument("--visits", type=_count, default=1)
    s.add_argument("--sites")
    s.add_argument("--budget", type=float, default=PHASE3_BIT_BUDGET)
    s.add_argument("--hash-salt")
    s.add_argument("--k-anonymity", type=_count, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sessions", help="sessionize visit events")
    s.add_argument("--events", required=True)
    s.add_argument("--verticals", help="JSON object mapping site -> vertical")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sessions)

    s = sub.add_parser("histogram", help="per-site-normalized session entropy histogram")
    s.add_argument("--events", required=True)
    s.add_argument("--graph", required=True)
    s.add_argument("--bucket-width", type=float, default=1.0)
    s.add_argument("--default-entropy", type=float, default=0.0)
    s.add_argument("--out")
    s.add_argument("--json")
    s.add_argument("--svg", help="also render the histogram as SVG (needs matplotlib)")
    s.set_defaults(func=cmd_histogram)

    s = sub.add_parser("block-impact", help="entropy histogram change under a blocklist")
    s.add_argument("--events", required=True)
    s.add_argument("--graph", required=True)
    s.add_argument("--blocklist")
    s.add_argument("--signature-block", action="store_true")
    s.add_argument("--bucket-width", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_block_impact)

    s = sub.add_parser("pipeline", help="run every stage from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("FPENTROPY_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except RecordParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CliError, EstimationError, PlanningError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "code", 1)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
