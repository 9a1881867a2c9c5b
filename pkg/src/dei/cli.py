"""Command line interface.

Every subcommand is a thin wrapper over the package API: nothing here
computes anything, it only parses arguments, wires objects together, and
formats results.
"""

from __future__ import annotations

import dataclasses
import json
import random
import threading
import time
from pathlib import Path

import click

from .archive import Archive, load_archive, merge, save_archive
from .drq import DrqNode, NodeConfig
from .experiment import (
    OperatorSpec,
    SpecError,
    generality,
    generality_series,
    load_corpus,
    load_pool_seeds,
    load_run,
    load_spec,
    merged_qd_series,
    run_experiment,
    write_line_svg,
    write_merged_csv,
    write_summary_csv,
)
from .gossip import (
    AxlShim,
    GossipNode,
    TcpTransport,
    create_axl_app,
    load_peers_file,
    new_peer_id,
)
from .mars import ConfigError, MarsConfig, evaluate, run_battle
from .redcode import RedcodeSyntaxError, parse, serialize


def _load_mars_config(path: str | None, **overrides) -> MarsConfig:
    """Build a battle config from an optional JSON file plus flag overrides."""
    try:
        if path is None:
            config = MarsConfig()
        else:
            config = MarsConfig.from_dict(json.loads(Path(path).read_text()))
        applied = {k: v for k, v in overrides.items() if v is not None}
        if applied:
            config = dataclasses.replace(config, **applied)
    except (ConfigError, ValueError, TypeError, OSError) as err:
        raise click.ClickException(f"bad battle config: {err}") from err
    return config


def _parse_warrior_file(path: str, config: MarsConfig):
    source = Path(path).read_text()
    try:
        return parse(
            source,
            name=Path(path).stem,
            core_size=config.core_size,
            max_warrior_length=config.max_warrior_length,
        )
    except RedcodeSyntaxError as err:
        raise click.ClickException(f"{path}: {err}") from err


@click.group()
@click.version_option(package_name="dei")
def main() -> None:
    """Battle engine, per-node evolution loop, and experiment tools."""


# -- warriors ---------------------------------------------------------------


@main.command("parse")
@click.argument("warrior_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--core-size", type=int, default=None, help="Address space size.")
@click.option("--max-length", type=int, default=None,
              help="Maximum instruction count.")
def parse_cmd(warrior_file: str, core_size: int | None,
              max_length: int | None) -> None:
    """Parse a warrior file and print its canonical form."""
    defaults = MarsConfig()
    size = core_size if core_size is not None else defaults.core_size
    if max_length is None:
        max_length = min(defaults.max_warrior_length, size)
    path = Path(warrior_file)
    try:
        warrior = parse(path.read_text(), name=path.stem, core_size=size,
                        max_warrior_length=max_length)
    except RedcodeSyntaxError as err:
        raise click.ClickException(f"{warrior_file}: {err}") from err
    except ValueError as err:
        raise click.ClickException(str(err)) from err
    click.echo(serialize(warrior).rstrip("\n"))
    click.echo(f";hash {warrior.content_hash()}")


@main.command()
@click.argument("warrior_files", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, help="Placement seed.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON battle config file.")
@click.option("--core-size", type=int, default=None)
@click.option("--max-cycles", type=int, default=None)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="Write an execution trace to this JSONL file.")
@click.option("--trace-limit", type=int, default=100_000)
def battle(warrior_files: tuple[str, ...], seed: int, config_path: str | None,
           core_size: int | None, max_cycles: int | None,
           trace_path: str | None, trace_limit: int) -> None:
    """Fight the given warriors in a single battle."""
    config = _load_mars_config(config_path, core_size=core_size,
                               max_cycles=max_cycles)
    warriors = [_parse_warrior_file(p, config) for p in warrior_files]
    try:
        outcome = run_battle(warriors, config, seed=seed,
                             trace=trace_path is not None,
                             trace_limit=trace_limit)
    except (ConfigError, ValueError) as err:
        raise click.ClickException(str(err)) from err

    for i, warrior in enumerate(outcome.warriors):
        status = "survived" if outcome.survived[i] else "died"
        click.echo(
            f"{warrior.name}: position {outcome.positions[i]}, "
            f"lifespan {int(outcome.lifespans[i])}, {status}"
        )
    if outcome.winner is not None:
        click.echo(f"winner: {outcome.warriors[outcome.winner].name}")
    else:
        click.echo("winner: none (tie)")
    click.echo(f"cycles: {outcome.cycles}")

    if trace_path is not None:
        with open(trace_path, "w", encoding="utf-8") as fh:
            for step in outcome.trace or []:
                fh.write(json.dumps(step.to_dict()) + "\n")
        if outcome.trace_truncated:
            click.echo(f"trace truncated at {trace_limit} steps", err=True)
        click.echo(f"trace written to {trace_path}")


@main.command("eval-generality")
@click.argument("warrior_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True,
              file_okay=False), default=None,
              help="Directory of held-out .red opponents (default: bundled).")
@click.option("--seed", type=int, default=0)
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON battle config file.")
def eval_generality(warrior_file: str, corpus_dir: str | None, seed: int,
                    config_path: str | None) -> None:
    """Score a warrior against the held-out opponent corpus."""
    config = _load_mars_config(config_path)
    warrior = _parse_warrior_file(warrior_file, config)
    try:
        corpus = load_corpus(corpus_dir, config)
    except (ValueError, OSError, RedcodeSyntaxError) as err:
        raise click.ClickException(f"corpus: {err}") from err
    score = generality(warrior, corpus, config, seed=seed)
    click.echo(f"generality: {score:.6f} ({len(corpus)} opponents)")


# -- experiments ------------------------------------------------------------


@main.command()
@click.option("--experiment", "experiment_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Experiment description (JSON).")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Directory to write run artifacts into.")
def sim(experiment_path: str, out_dir: str) -> None:
    """Run an experiment on the simulated network and persist its results."""
    try:
        spec = load_spec(experiment_path)
    except SpecError as err:
        raise click.ClickException(str(err)) from err
    click.echo(
        f"{spec.name}: {spec.condition}, {len(spec.nodes)} node(s), "
        f"{spec.rounds} rounds x {spec.iters_per_round} calls, "
        f"{len(spec.trial_seeds)} trial(s)"
    )
    results = run_experiment(spec, out_dir)
    for result in results:
        last = result.merged_rounds[-1]
        calls = sum(r.calls for rs in result.reports.values() for r in rs)
        click.echo(
            f"trial {result.trial_seed}: merged coverage "
            f"{last['coverage']:.4f}, qd {last['qd_score']:.4f}, "
            f"calls {calls}"
        )
    click.echo(f"artifacts written to {out_dir}")


@main.command()
@click.argument("run_dirs", nargs=-1, required=True,
                type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--csv", "want_csv", is_flag=True, help="Write CSV tables.")
@click.option("--svg", "want_svg", is_flag=True, help="Write SVG plots.")
def report(run_dirs: tuple[str, ...], out_dir: str, want_csv: bool,
           want_svg: bool) -> None:
    """Summarize one or more experiment runs into tables and plots.

    With neither --csv nor --svg, writes both.
    """
    if not want_csv and not want_svg:
        want_csv = want_svg = True
    try:
        runs = [load_run(d) for d in run_dirs]
    except (OSError, ValueError, KeyError) as err:
        raise click.ClickException(f"bad run directory: {err}") from err
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if want_csv:
        summary = out / "summary.csv"
        merged = out / "merged.csv"
        write_summary_csv(runs, summary)
        write_merged_csv(runs, merged)
        written += [summary, merged]
    if want_svg:
        gen_svg = out / "generality_vs_round.svg"
        qd_svg = out / "merged_qd_vs_round.svg"
        write_line_svg(gen_svg, generality_series(runs),
                       "Champion generality vs round", "round", "generality")
        write_line_svg(qd_svg, merged_qd_series(runs),
                       "Merged archive quality-diversity vs round",
                       "round", "qd score")
        written += [gen_svg, qd_svg]
    for path in written:
        click.echo(str(path))


@main.command("merge-archives")
@click.argument("archive_files", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Where to write the merged archive (JSONL).")
@click.option("--pool", "pool_dir", type=click.Path(exists=True,
              file_okay=False), default=None,
              help="Directory of .red opponents to re-score elites against.")
@click.option("--as-is", "as_is", is_flag=True,
              help="Merge stored fitnesses without re-scoring.")
@click.option("--seed", type=int, default=0)
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON battle config file.")
def merge_archives(archive_files: tuple[str, ...], out_path: str,
                   pool_dir: str | None, as_is: bool, seed: int,
                   config_path: str | None) -> None:
    """Merge per-node archives into one, keeping the best elite per cell.

    Stored fitnesses were measured against different opponent pools, so by
    default every elite is re-scored against one shared pool (--pool) before
    comparison; --as-is skips that and trusts the stored numbers.
    """
    if not as_is and pool_dir is None:
        raise click.ClickException("either --pool or --as-is is required")
    config = _load_mars_config(config_path)
    try:
        archives = [load_archive(p, core_size=config.core_size)
                    for p in archive_files]
    except (ValueError, OSError) as err:
        raise click.ClickException(str(err)) from err
    grids = {json.dumps(a.grid.to_dict(), sort_keys=True) for a in archives}
    if len(grids) > 1:
        raise click.ClickException("archives use different grids")

    if not as_is:
        try:
            pool = load_pool_seeds(pool_dir, config)
        except (ValueError, OSError, RedcodeSyntaxError) as err:
            raise click.ClickException(f"pool: {err}") from err
        rescored = []
        for archive in archives:
            fresh = Archive(archive.grid)
            for elite in archive.elites():
                result = evaluate(elite.warrior, pool, config, seed=seed)
                fresh.update(elite.warrior, result.fitness, elite.bc,
                             round_index=elite.round, origin=elite.origin)
            rescored.append(fresh)
        archives = rescored

    merged = merge(archives)
    save_archive(merged, out_path)
    click.echo(
        f"merged {len(archive_files)} archives: {len(merged)} elites, "
        f"coverage {merged.coverage():.4f}, qd {merged.qd_score():.4f}"
    )
    click.echo(f"written to {out_path}")


# -- long-running processes -------------------------------------------------


def _parse_listen(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not host:
        raise click.ClickException(f"bad listen address {value!r}, "
                                   "expected host:port")
    try:
        return host, int(port)
    except ValueError as err:
        raise click.ClickException(f"bad listen port {port!r}") from err


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Node description (JSON).")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Directory for archive and round logs "
                   "(overrides the config's `out`).")
def node(config_path: str, out_dir: str | None) -> None:
    """Run one evolution node as a real process, gossiping over TCP.

    The config file is a JSON object:

    \b
      node        per-node loop settings (node_id, rounds, ...)
      operator    mutation operator (kind, bias or endpoint, ...)
      mars        battle config (optional)
      seeds_dir   starter opponent directory (optional, default bundled)
      listen      host:port to bind, port 0 picks a free one
      peers_file  lines of `peer_id host:port` (optional)
      peer_id     this node's mesh identity (optional, derived from seed)
      out         artifact directory (optional)
      heartbeat_interval   seconds between mesh heartbeats (default 1.0)
      round_pause          seconds to idle after each round (default 0.0)
    """
    try:
        data = json.loads(Path(config_path).read_text())
        node_config = NodeConfig.from_dict(data["node"])
        operator_spec = OperatorSpec.from_dict(data["operator"])
        mars = (MarsConfig.from_dict(data["mars"])
                if data.get("mars") else MarsConfig())
    except (KeyError, ValueError, TypeError, SpecError, ConfigError) as err:
        raise click.ClickException(f"bad node config: {err}") from err

    operator = operator_spec.build(mars)
    try:
        seeds = load_pool_seeds(data.get("seeds_dir"), mars)
    except (ValueError, OSError, RedcodeSyntaxError) as err:
        raise click.ClickException(f"seeds: {err}") from err

    peer_id = data.get("peer_id") or new_peer_id(
        random.Random(node_config.rng_seed))
    peers = (load_peers_file(data["peers_file"])
             if data.get("peers_file") else {})
    listen_host, listen_port = _parse_listen(data.get("listen", "127.0.0.1:0"))

    gossip: GossipNode | None = None

    def on_bytes(payload: bytes, from_peer: str) -> None:
        if gossip is not None:
            gossip.handle_bytes(payload, from_peer)

    transport = TcpTransport(peer_id, on_bytes, listen_host=listen_host,
                             listen_port=listen_port, peers=peers)
    gossip = GossipNode(peer_id, transport=transport,
                        topics=(node_config.topic,),
                        rng_seed=node_config.rng_seed)
    for remote in peers:
        gossip.add_peer(remote)

    host, port = transport.start()
    click.echo(f"node {node_config.node_id}: peer {peer_id} "
               f"listening on {host}:{port}")

    interval = float(data.get("heartbeat_interval", 1.0))
    pause = float(data.get("round_pause", 0.0))
    stop = threading.Event()

    def heartbeat_loop() -> None:
        while not stop.wait(interval):
            gossip.heartbeat()

    beater = threading.Thread(target=heartbeat_loop, daemon=True)
    beater.start()

    drq = DrqNode(node_config, operator=operator, seeds=seeds,
                  mars_config=mars, feed=gossip)
    try:
        for _ in range(node_config.rounds):
            round_report = drq.run_round()
            click.echo(
                f"round {round_report.round_index}: "
                f"coverage {round_report.coverage:.4f}, "
                f"qd {round_report.qd_score:.4f}, "
                f"received {round_report.received}, "
                f"pool {round_report.pool_size}"
            )
            if pause:
                time.sleep(pause)
    finally:
        stop.set()
        beater.join(timeout=interval * 2)
        transport.stop()

    target = out_dir or data.get("out")
    if target:
        out = Path(target)
        out.mkdir(parents=True, exist_ok=True)
        save_archive(drq.archive, str(out / "archive.jsonl"))
        with open(out / "rounds.jsonl", "w", encoding="utf-8") as fh:
            for round_report in drq.reports:
                fh.write(json.dumps(round_report.to_dict(),
                                    sort_keys=True) + "\n")
        click.echo(f"artifacts written to {out}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host: str, port: int) -> None:
    """Serve the battle engine over HTTP."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command("axl-shim")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8470)
@click.option("--peer-id", default=None,
              help="This shim's peer identity (default: random).")
@click.option("--remote", "remotes", multiple=True, metavar="PEER_ID=URL",
              help="Deliver sends for PEER_ID to the shim at URL "
                   "(repeatable).")
def axl_shim(host: str, port: int, peer_id: str | None,
             remotes: tuple[str, ...]) -> None:
    """Run a localhost message-relay endpoint for gossip over HTTP."""
    import uvicorn

    shim = AxlShim(peer_id or new_peer_id())
    for entry in remotes:
        remote_id, sep, url = entry.partition("=")
        if not sep or not remote_id or not url:
            raise click.ClickException(
                f"bad --remote {entry!r}, expected PEER_ID=URL")
        shim.add_remote(remote_id, url)
    click.echo(f"relay peer {shim.peer_id} on {host}:{port}")
    uvicorn.run(create_axl_app(shim), host=host, port=port)


if __name__ == "__main__":
    main()
