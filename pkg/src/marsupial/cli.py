"""Command-line front end.

Exit codes: 0 success, 1 timeout, 2 configuration error, 3 numerical divergence.
The default output root is ``./out`` unless ``MARSUPIAL_OUT`` is set.
"""

from __future__ import annotations

import argparse
import filecmp
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, replace
from pathlib import Path
from typing import List, Optional

from .config import load_config
from .engine import run_scenario
from .errors import ConfigError, InvalidParams, NumericalDivergence, Timeout
from .metrics import MetricsSummary, read_csv, summarize, write_csv
from .plotting import run_charts, save_chart
from .studies import (
    DEFAULT_BENCH_COUNTS,
    DEFAULT_BENCH_ELEMENT,
    DEFAULT_BENCH_SECONDS,
    DEFAULT_ELEMENT_LENGTHS,
    DEFAULT_REPETITIONS,
    DEFAULT_SEPARATIONS,
    DEFAULT_SLACK,
    bench_rtf,
    catenary_study,
    study_table,
    write_rtf_csv,
    write_study_csv,
)

EXIT_OK, EXIT_TIMEOUT, EXIT_CONFIG, EXIT_DIVERGENCE = 0, 1, 2, 3
OUT_ENV = "MARSUPIAL_OUT"


def default_out_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "out"))


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _print_summary(name: str, s: MetricsSummary) -> None:
    print(f"{name}: {s.targets}/{s.targets_total} targets in {s.sim_time:.2f} s")
    print(f"  distance UAV {s.dist_uav:.3f} m, UGV {s.dist_ugv:.3f} m")
    print(f"  tether released {s.tether_released:.3f} m, collected {s.tether_collected:.3f} m")
    print(f"  catenary error {s.cat_error:.3f} % ({s.cat_skipped} samples skipped), min distance {s.min_dist:.3f} m")


def execute(config_path, out_dir: Optional[Path], log_rate=None, timeout=None, charts=True) -> int:
    """Run one scenario file and write its artifacts. Returns an exit code."""
    try:
        cfg = load_config(config_path)
        if log_rate is not None:
            if not log_rate > 0:
                raise ConfigError("--log-rate must be > 0")
            cfg = replace(cfg, log_rate=float(log_rate))
        if timeout is not None:
            if not timeout > 0:
                raise ConfigError("--timeout must be > 0")
            cfg = replace(cfg, timeout=float(timeout))
    except (ConfigError, InvalidParams) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    out = Path(out_dir) if out_dir is not None else (cfg.output or default_out_root() / cfg.name)
    code = EXIT_OK
    try:
        log = run_scenario(cfg)
    except Timeout as exc:
        _err(str(exc))
        log, code = exc.log, EXIT_TIMEOUT
    except NumericalDivergence as exc:
        _err(str(exc))
        return EXIT_DIVERGENCE
    except (ConfigError, InvalidParams) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    summary = summarize(log, cfg.obstacles)
    write_csv(log, summary, out)
    if charts:
        run_charts(log, out, cfg.obstacles)
    _print_summary(cfg.name, summary)
    print(f"  wrote {out}")
    return code


def _execute_job(args):
    return execute(*args)


def cmd_run(ns) -> int:
    configs = list(ns.configs)
    if ns.config:
        configs.append(ns.config)
    if not configs:
        _err("no scenario given")
        return EXIT_CONFIG
    if ns.seedless_check:
        return _seedless_check(configs, ns)
    outs = []
    for c in configs:
        if ns.out is None:
            outs.append(None)
        elif len(configs) == 1:
            outs.append(Path(ns.out))
        else:
            outs.append(Path(ns.out) / Path(c).stem)
    jobs = [(c, o, ns.log_rate, ns.timeout, not ns.no_charts) for c, o in zip(configs, outs)]
    if ns.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.parallel) as pool:
            codes = list(pool.map(_execute_job, jobs))
    else:
        codes = [_execute_job(j) for j in jobs]
    return max(codes)


def _seedless_check(configs, ns) -> int:
    worst = EXIT_OK
    for c in configs:
        with tempfile.TemporaryDirectory() as tmp:
            dirs = [Path(tmp) / "a", Path(tmp) / "b"]
            codes = [execute(c, d, ns.log_rate, ns.timeout, charts=False) for d in dirs]
            if max(codes) != EXIT_OK and codes[0] != codes[1]:
                _err(f"{c}: runs ended differently ({codes})")
                return max(max(codes), EXIT_TIMEOUT)
            names = sorted(p.name for p in dirs[0].iterdir())
            match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
            if mismatch or errors:
                _err(f"{c}: outputs differ: {sorted(mismatch + errors)}")
                return EXIT_TIMEOUT
            print(f"{c}: {len(match)} files byte-identical across two runs")
            worst = max(worst, max(codes))
    return worst


def cmd_catenary_study(ns) -> int:
    seps, lens = _floats(ns.separations), _floats(ns.element_lengths)
    try:
        cells = catenary_study(seps, lens, ns.slack, ns.duration, ns.parallel)
    except (ConfigError, InvalidParams) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except NumericalDivergence as exc:
        _err(str(exc))
        return EXIT_DIVERGENCE
    out = Path(ns.out) if ns.out else default_out_root() / "catenary_study"
    out.mkdir(parents=True, exist_ok=True)
    path = write_study_csv(cells, out / "catenary_study.csv")
    header, rows = study_table(cells)
    print("  ".join(f"{h:>14}" for h in header))
    for row in rows:
        print("  ".join([f"{row[0]:>14g}"] + [f"{v:>13.3f}%" for v in row[1:]]))
    series = []
    for d in sorted({c.separation for c in cells}):
        pts = sorted((c.element_length, c.error_pct) for c in cells if c.separation == d)
        series.append((f"{d:g} m", [p[0] for p in pts], [p[1] for p in pts]))
    save_chart(out / "catenary_study.svg", series, "Settled shape error", "element length (m)", "error (%)")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_bench_rtf(ns) -> int:
    try:
        report = bench_rtf(_ints(ns.counts), ns.sim_seconds, ns.element_length, ns.repetitions)
    except InvalidParams as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except NumericalDivergence as exc:
        _err(str(exc))
        return EXIT_DIVERGENCE
    out = Path(ns.out) if ns.out else default_out_root() / "bench_rtf"
    out.mkdir(parents=True, exist_ok=True)
    path = write_rtf_csv(report, out / "rtf.csv")
    print(report.machine)
    for r in report.runs:
        print(f"  {r.element_count:>5} elements: {r.sim_seconds:g} s simulated in {r.wall_seconds:.2f} s, RTF {r.rtf:.3f}")
    counts = [r.element_count for r in report.runs]
    save_chart(out / "rtf.svg", [("RTF", counts, [r.rtf for r in report.runs])],
               "Real-time factor", "tether elements", "RTF")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_replay_metrics(ns) -> int:
    src = Path(ns.dir)
    obstacles = []
    if ns.config:
        try:
            obstacles = load_config(ns.config).obstacles
        except (ConfigError, InvalidParams) as exc:
            _err(str(exc))
            return EXIT_CONFIG
    try:
        log = read_csv(src)
    except (OSError, ValueError) as exc:
        _err(f"cannot read logs in {src}: {exc}")
        return EXIT_CONFIG
    if not log.samples:
        _err(f"{src}: log has no samples")
        return EXIT_CONFIG
    summary = summarize(log, obstacles)
    print(",".join(MetricsSummary.header()))
    print(",".join(repr(v) if isinstance(v, float) else str(v) for v in astuple(summary)))
    if ns.charts:
        run_charts(log, Path(ns.out) if ns.out else src, obstacles)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="marsupial", description="Tethered UAV-UGV simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run scenario files and write CSV logs and charts")
    run.add_argument("configs", nargs="*", help="scenario files")
    run.add_argument("--config", help="scenario file (alternative to the positional form)")
    run.add_argument("--out", help="output directory")
    run.add_argument("--log-rate", type=float, help="sampling rate in Hz of simulated time")
    run.add_argument("--timeout", type=float, help="timeout in simulated seconds")
    run.add_argument("--parallel", type=int, default=1, help="worker processes for several scenarios")
    run.add_argument("--seedless-check", action="store_true",
                     help="run each scenario twice and compare the CSV files byte for byte")
    run.add_argument("--no-charts", action="store_true", help="skip the SVG charts")
    run.set_defaults(func=cmd_run)

    cat = sub.add_parser("catenary-study", help="settled tether against the analytic curve")
    cat.add_argument("--separations", default=",".join(f"{v:g}" for v in DEFAULT_SEPARATIONS))
    cat.add_argument("--element-lengths", default=",".join(f"{v:g}" for v in DEFAULT_ELEMENT_LENGTHS))
    cat.add_argument("--slack", type=float, default=DEFAULT_SLACK)
    cat.add_argument("--duration", type=float, default=5.0, help="settling time per cell (s)")
    cat.add_argument("--parallel", type=int, default=1)
    cat.add_argument("--out")
    cat.set_defaults(func=cmd_catenary_study)

    bench = sub.add_parser("bench-rtf", help="real-time factor against tether element count")
    bench.add_argument("--counts", default=",".join(str(c) for c in DEFAULT_BENCH_COUNTS))
    bench.add_argument("--sim-seconds", type=float, default=DEFAULT_BENCH_SECONDS)
    bench.add_argument("--element-length", type=float, default=DEFAULT_BENCH_ELEMENT)
    bench.add_argument("--repetitions", type=int, default=DEFAULT_REPETITIONS)
    bench.add_argument("--out")
    bench.set_defaults(func=cmd_bench_rtf)

    replay = sub.add_parser("replay-metrics", help="recompute the summary from existing CSV logs")
    replay.add_argument("dir", help="directory holding uav.csv, ugv.csv and tether.csv")
    replay.add_argument("--config", help="scenario file supplying the obstacles")
    replay.add_argument("--charts", action="store_true", help="regenerate the SVG charts")
    replay.add_argument("--out", help="chart directory (default: the log directory)")
    replay.set_defaults(func=cmd_replay_metrics)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
