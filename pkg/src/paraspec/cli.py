"""Command-line interface: one subcommand per experiment kind."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .runner import run_config_file


def _common(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(exists=True, dir_okay=False, path_type=Path),
                      help="TOML experiment configuration.")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Override the config seed.")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
                      default=Path("out"), show_default=True,
                      help="Output directory.")(fn)
    fn = click.option("--quiet", is_flag=True, help="Suppress progress output.")(fn)
    return fn


@click.group()
def main():
    """Growth rates of time-dependent parabolic problems vs. their time averages."""


def _make_command(name: str, doc: str):
    @main.command(name=name, help=doc)
    @_common
    def _cmd(config_path: Path, seed, out_dir: Path, quiet: bool):
        code = run_config_file(config_path, out_dir, seed_override=seed,
                               quiet=quiet, expect_experiment=name)
        sys.exit(code)

    return _cmd


_make_command("eigen", "Principal eigenvalue of the ensemble-averaged problem.")
_make_command("lyapunov", "Monte Carlo growth rate over Haar-sampled driver phases.")
_make_command("spectrum", "Sliding-window growth-rate interval of one trajectory.")
_make_command("compare", "Growth rate versus the averaged eigenvalue, with verdict.")
_make_command("sweep", "Compare across a parameter grid; one summary row per cell.")


if __name__ == "__main__":
    main()
