"""Command-line entry points: scenario runner, hazard-pair batch suite,
HARA report emitter, trace replay, and the live dashboard service."""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import hara
from .safety import evaluate_goals
from .scenarios import HAZARD_PAIRS, resolve_scenario
from .simulation import Simulation
from .trace import hash_records, read_ndjson
from .world import ScenarioConfig, load_scenario


def run_scenario(scenario: ScenarioConfig) -> Simulation:
    sim = Simulation(scenario)
    sim.run()
    return sim


def cmd_run(args) -> int:
    scenario = resolve_scenario(args.scenario, seed=args.seed, duration=args.duration)
    t0 = time.monotonic()
    sim = run_scenario(scenario)
    wall = time.monotonic() - t0
    report = sim.report()

    out_dir = Path(args.out) if args.out else Path("runs") / f"{scenario.id}_{scenario.seed}"
    out_dir.mkdir(parents=True, exist_ok=True)
    sim.trace.write_ndjson(out_dir / "trace.ndjson")
    (out_dir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out_dir / "report.txt").write_text(report.text() + "\n", encoding="utf-8")
    result = {
        "scenario_id": scenario.id,
        "seed": scenario.seed,
        "trace_hash": sim.trace.terminal_hash,
        "collisions": sim.collision_count,
        "violations": sim.violation_count,
        "mission_completion": sim.mission_completion(),
        "wall_s": round(wall, 3),
        "report": report.to_dict(),
    }
    (out_dir / "result.json").write_text(
        json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(report.text())
    print(f"trace hash: {sim.trace.terminal_hash}")
    print(f"artifacts: {out_dir}")
    return 0 if report.all_pass else 1


def _suite_cell(job: tuple[str, int]) -> tuple[str, int, int, int]:
    name, seed = job
    scenario = resolve_scenario(name, seed=seed)
    sim = run_scenario(scenario)
    return name, seed, sim.collision_count, sim.violation_count


def run_suite(seeds: int = 50, workers: int = 1, base_seed: int = 1000,
              progress=None) -> dict:
    """All eight hazard pairs x seeds. Mitigated variants must stay collision
    free; every unmitigated variant must show at least one collision or
    envelope violation in at least one seed."""
    jobs = []
    for hz in sorted(HAZARD_PAIRS):
        mit, unmit = HAZARD_PAIRS[hz]
        for s in range(seeds):
            jobs.append((mit, base_seed + s))
            jobs.append((unmit, base_seed + s))
    results: dict[tuple[str, int], tuple[int, int]] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for name, seed, coll, viol in pool.map(_suite_cell, jobs, chunksize=8):
                results[(name, seed)] = (coll, viol)
                if progress:
                    progress(name, seed)
    else:
        for job in jobs:
            name, seed, coll, viol = _suite_cell(job)
            results[(name, seed)] = (coll, viol)
            if progress:
                progress(name, seed)

    table = {}
    ok = True
    for hz in sorted(HAZARD_PAIRS):
        mit, unmit = HAZARD_PAIRS[hz]
        mit_coll = sum(results[(mit, base_seed + s)][0] for s in range(seeds))
        unmit_hits = sum(
            1
            for s in range(seeds)
            if sum(results[(unmit, base_seed + s)]) > 0
        )
        row = {
            "mitigated": mit,
            "unmitigated": unmit,
            "mitigated_collisions": mit_coll,
            "unmitigated_demonstrating_seeds": unmit_hits,
            "pass": mit_coll == 0 and unmit_hits >= 1,
        }
        ok = ok and row["pass"]
        table[hz] = row
    return {"seeds": seeds, "rows": table, "pass": ok}


def cmd_suite(args) -> int:
    t0 = time.monotonic()
    result = run_suite(seeds=args.seeds, workers=args.workers)
    wall = time.monotonic() - t0
    for hz, row in sorted(result["rows"].items()):
        status = "PASS" if row["pass"] else "FAIL"
        print(
            f"{hz}: {status}  mitigated collisions={row['mitigated_collisions']}  "
            f"unmitigated demonstrating seeds={row['unmitigated_demonstrating_seeds']}/{result['seeds']}"
        )
    print(f"suite wall time: {wall:.1f}s")
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0 if result["pass"] else 1


def cmd_hara(args) -> int:
    requirements = hara.load_requirements(
        Path(args.requirements).read_text(encoding="utf-8") if args.requirements else None
    )
    rules = hara.load_hazard_rules(
        Path(args.hazards).read_text(encoding="utf-8") if args.hazards else None
    )
    goal_defs = hara.load_goal_defs(
        Path(args.goals).read_text(encoding="utf-8") if args.goals else None
    )
    sec_table = hara.load_sec_table(
        Path(args.sec_table).read_text(encoding="utf-8") if args.sec_table else None
    )
    hazards = hara.derive_hazards(requirements, rules)
    goals = hara.assess_all(goal_defs, sec_table)
    doc = hara.render_report(hazards, goals, args.format)
    if args.out:
        Path(args.out).write_text(doc, encoding="utf-8")
    else:
        sys.stdout.write(doc)
    return 0


def cmd_replay(args) -> int:
    records = read_ndjson(args.trace)
    terminal = hash_records(records)
    header = next(r for r in records if r["k"] == "header")
    scenario = load_scenario(header["scenario"])
    report = evaluate_goals(records, scenario)
    print(report.text())
    print(f"trace hash: {terminal}")
    if args.expect_hash and args.expect_hash != terminal:
        print(f"hash mismatch: expected {args.expect_hash}", file=sys.stderr)
        return 2
    return 0 if report.all_pass else 1


def cmd_serve(args) -> int:
    from .service import serve

    scenario = resolve_scenario(args.scenario, seed=args.seed, duration=args.duration)
    host, _, port = args.bind.rpartition(":")
    serve(scenario, host=host or "127.0.0.1", port=int(port))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="depotsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario headlessly")
    p.add_argument("scenario", help="scenario file path or bundled scenario name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--out", default=None, help="artifact directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", help="hazard pair batch: mitigated/unmitigated x seeds")
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("hara", help="emit the hazard/safety-goal report")
    p.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    p.add_argument("--requirements", default=None)
    p.add_argument("--hazards", default=None)
    p.add_argument("--goals", default=None)
    p.add_argument("--sec-table", dest="sec_table", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_hara)

    p = sub.add_parser("replay", help="recompute monitors and hash from a trace file")
    p.add_argument("trace")
    p.add_argument("--expect-hash", default=None)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="real-time simulation with dashboard endpoints")
    p.add_argument("scenario")
    p.add_argument("--bind", default="127.0.0.1:8700")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--duration", type=float, default=None)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
