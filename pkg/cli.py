"""
Command line subcommands, registered on app.cli.

Each subcommand reads a JSON run configuration, writes <command>.json (and
<command>.csv when there is a table) under --out and exits with 0 on
success, 1 when a verification check fails, 2 on configuration or
precondition errors and 3 on numerical failures.
"""

import json
import logging
from pathlib import Path

import click
from flask import current_app
from flask.cli import with_appcontext

from config import defaults_from_config
from errors import ConfigError, ToolkitError
from services.run_service import COMMANDS, RUN_CONFIG_SCHEMA, RunService, exit_code_for
from utils.helpers import dumps_json, write_csv, write_json


def load_config_file(path):
    """Read a RunConfig document; unreadable or malformed files are ConfigErrors"""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")


def run_command(command, config_path, out, refine, seed, print_schema):
    ctx = click.get_current_context()
    if print_schema:
        click.echo(dumps_json(RUN_CONFIG_SCHEMA), nl=False)
        return
    if config_path is None:
        raise click.UsageError("--config is required unless --print-schema is given")
    service = RunService(defaults_from_config(current_app.config))
    try:
        document = load_config_file(config_path)
        result = service.execute(command, document, seed=seed, refine=refine)
    except ToolkitError as e:
        logging.error(f"{command} failed: {e}")
        click.echo(f"Error: {e}", err=True)
        ctx.exit(exit_code_for(e))
        return
    out_dir = Path(out)
    write_json(out_dir / f"{command}.json", result.payload)
    if result.table is not None:
        header, rows = result.table
        write_csv(out_dir / f"{command}.csv", header, rows)
    if command == "verify":
        failed = [report["name"] for report in result.payload["reports"] if not report["passed"]]
        click.echo(f"{len(result.payload['reports']) - len(failed)} passed, {len(failed)} failed")
    ctx.exit(result.exit_code)


def _subcommand(command, help_text):
    @click.command(command, help=help_text)
    @click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
                  help="JSON run configuration")
    @click.option('--out', default="out", show_default=True, type=click.Path(file_okay=False),
                  help="Directory for the JSON and CSV outputs")
    @click.option('--refine', default=1, show_default=True, type=click.IntRange(min=1),
                  help="Multiply the time-grid resolution by this factor")
    @click.option('--seed', default=None, type=click.IntRange(min=0, max=2 ** 64 - 1),
                  help="Seed for the random test family")
    @click.option('--print-schema', is_flag=True, help="Print the RunConfig schema and exit")
    @with_appcontext
    def subcommand(config_path, out, refine, seed, print_schema):
        run_command(command, config_path, out, refine, seed, print_schema)

    return subcommand


_HELP = {
    "eval": "Evaluate an expansion or an operator image on a point grid",
    "norm": "Variable-exponent norm of an expansion (and its Besov norm when alpha is set)",
    "besov": "Besov-Lipschitz seminorm with its g(t) trace",
    "op": "Apply a semigroup or Bessel operator and compare with the spectral path",
    "verify": "Run the verification suite",
}


def register_commands(app):
    for command in COMMANDS:
        app.cli.add_command(_subcommand(command, _HELP[command]))
