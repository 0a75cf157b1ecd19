"""Command-line entry point: single runs and node-count sweeps.

Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 output I/O
error.
"""

import argparse
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace

from manetsim.energy import EnergyParams
from manetsim.metrics import write_csv, write_means
from manetsim.radio import RadioConfig
from manetsim.scenario import ConfigError, OutputError, ScenarioConfig, config_keys, run_scenario
from manetsim.workload import WorkloadConfig

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_OUTPUT = 0, 1, 2, 3
DEFAULT_NODE_COUNTS = (10, 20, 30, 50)
DEFAULT_PROTOCOLS = ("aodv", "dsr", "olsr")


class SweepError(RuntimeError):
    def __init__(self, triple, cause):
        protocol, nodes, seed = triple
        super().__init__(f"run protocol={protocol} nodes={nodes} seed={seed} failed: {cause}")
        self.triple = triple


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path!r}: {exc.strerror or exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def _convert(key, typ, value):
    if not isinstance(value, str):
        return value
    try:
        if typ is bool:
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        return typ(value)
    except ValueError:
        raise ConfigError(key, f"cannot parse {value!r} as {typ.__name__}") from None


def parse_config(path=None, overrides=None):
    """Layer built-in defaults, then ``path``, then ``overrides`` (flags win)."""
    merged = {}
    if path is not None:
        merged.update(read_config_file(path))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    keys = config_keys()
    top, nested = {}, {"radio": {}, "energy": {}, "workload": {}}
    for key, value in merged.items():
        if key not in keys:
            raise ConfigError(key, "unknown configuration key")
        converted = _convert(key, keys[key], value)
        if "." in key:
            group, name = key.split(".", 1)
            nested[group][name] = converted
        else:
            top[key] = converted
    builders = {"radio": RadioConfig, "energy": EnergyParams, "workload": WorkloadConfig}
    for group, cls in builders.items():
        try:
            top[group] = cls(**nested[group])
        except ValueError as exc:
            raise ConfigError(_key_in(str(exc), group, cls), str(exc)) from None
    return ScenarioConfig(**top)


def _key_in(message, group, cls):
    for f in fields(cls):
        if f"{group}.{f.name}" in message:
            return f"{group}.{f.name}"
    return group


def _run_one(config):
    return run_scenario(config, write=False)


def run_sweep(config, protocols=DEFAULT_PROTOCOLS, node_counts=DEFAULT_NODE_COUNTS,
              seeds=range(1, 11), jobs=1, output_dir=None):
    """Run every (protocol, nodes, seed) combination.

    Mobility and workload streams depend only on (nodes, seed), so every
    protocol sees the same trace. Returns ``(runs, means)`` with ``runs``
    sorted by (protocol, nodes, seed) and ``means`` rows of
    ``(protocol, nodes, mean_control_energy, stddev)``.
    """
    if not node_counts:
        raise ValueError("node_counts must be non-empty")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seeds must be non-empty")
    triples = [(p, n, s) for p in sorted(protocols) for n in sorted(node_counts) for s in seeds]
    configs = [replace(config, protocol=p, nodes=n, seed=s) for p, n, s in triples]
    runs = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, c) for c in configs]
            for triple, fut in zip(triples, futures):
                try:
                    runs.append(fut.result())
                except Exception as exc:
                    raise SweepError(triple, exc) from exc
    else:
        for triple, c in zip(triples, configs):
            try:
                runs.append(_run_one(c))
            except Exception as exc:
                raise SweepError(triple, exc) from exc
    runs.sort(key=lambda s: (s.protocol, s.nodes, s.seed))
    means = seed_means(runs)
    if output_dir is not None:
        try:
            write_csv(runs, output_dir, prefix="sweep_")
            write_means(means, os.path.join(output_dir, "sweep_means.csv"))
        except OSError as exc:
            raise OutputError(f"cannot write results to {output_dir!r}: {exc}") from exc
    return runs, means


def seed_means(runs):
    groups = {}
    for s in runs:
        groups.setdefault((s.protocol, s.nodes), []).append(s.control_energy)
    rows = []
    for (p, n), vals in sorted(groups.items()):
        sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
        rows.append((p, n, statistics.fmean(vals), sd))
    return rows


def build_parser():
    p = argparse.ArgumentParser(
        prog="manetsim",
        description="Energy consumption of AODV, DSR and OLSR in a simulated MANET.")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--protocol", choices=sorted(DEFAULT_PROTOCOLS))
    p.add_argument("--nodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--output", help="output directory (default: results)")
    p.add_argument("--trace", action="store_true",
                   help="also write the event trace and mobility trace")
    p.add_argument("--sweep", action="store_true",
                   help="run all protocols over node counts 10, 20, 30, 50")
    p.add_argument("--seeds", type=int, default=10, help="seeds per sweep cell (default 10)")
    p.add_argument("--protocols", help="comma-separated protocols for --sweep")
    p.add_argument("--node-counts", help="comma-separated node counts for --sweep")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes for --sweep")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration key, e.g. radio.range=200")
    return p


def _csv_list(text, conv, key):
    try:
        return [conv(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r}") from None


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(item, "expected KEY=VALUE")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v.strip()
        overrides.update({"protocol": args.protocol, "nodes": args.nodes, "seed": args.seed,
                          "duration": args.duration, "output_dir": args.output})
        config = parse_config(args.config, overrides)
        if args.seeds < 1:
            raise ConfigError("seeds", "need at least one seed")
        protocols = (_csv_list(args.protocols, str, "protocols") if args.protocols
                     else list(DEFAULT_PROTOCOLS))
        for proto in protocols:
            replace(config, protocol=proto)
        counts = (_csv_list(args.node_counts, int, "node-counts") if args.node_counts
                  else list(DEFAULT_NODE_COUNTS))
        for n in counts:
            replace(config, nodes=n)
    except ConfigError as exc:
        print(f"manetsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.sweep:
            runs, means = run_sweep(config, protocols, counts, range(1, args.seeds + 1),
                                    jobs=args.jobs, output_dir=config.output_dir)
            for p, n, mean, sd in means:
                print(f"{p:5s} nodes={n:3d} control_energy={mean:.6f} J (sd {sd:.6f})")
        else:
            stats = run_scenario(config, write=True, trace=args.trace, mobility_trace=args.trace)
            print(f"{stats.protocol} nodes={stats.nodes} seed={stats.seed} "
                  f"control_energy={stats.control_energy:.6f} J "
                  f"total_energy={stats.total_energy:.6f} J pdr={stats.pdr:.4f}")
    except OutputError as exc:
        print(f"manetsim: output error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    except Exception as exc:
        print(f"manetsim: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
