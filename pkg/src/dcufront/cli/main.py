"""Command-line interface for dcufront."""
import sys
from pathlib import Path
from typing import List

import click
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from dcufront import __version__
from dcufront.config import load_config
from dcufront.core.errors import ParameterMismatchError
from dcufront.core.log import configure_logging
from dcufront.core.types import EpochMetrics
from dcufront.diagnostics import LayerCheck
from dcufront.engine import ExperimentEngine
from dcufront.training.evaluate import format_report

console = Console()

TRAINABLE = ["baseline", "nnfb", "cascade", "mtl"]
PRESETS = ["desk", "full", "tiny"]


def common_options(fn):
    """--config and --seed, shared by every command."""
    fn = click.option('--seed', type=int, help='Seed (overrides DCUFRONT_SEED and the config file)')(fn)
    fn = click.option('--config', '-c', 'config_path', type=click.Path(),
                      help='INI configuration file')(fn)
    return fn


def _config(config_path, **flags):
    return load_config(config_path).with_overrides(**flags)


def _fail(e: Exception):
    console.print(f"[red]Error: {e}[/red]")
    if isinstance(e, ParameterMismatchError):
        console.print(e.diff(), markup=False, highlight=False)
    sys.exit(1)


@click.group()
@click.version_option(version=__version__)
@click.option('--log-level', default='INFO',
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              help='Logging verbosity')
def cli(log_level):
    """
    dcufront - multi-channel DCUnet front-end toolkit

    Simulates smart-speaker scenes, trains the baseline, NNFB, cascade and
    multi-task systems, evaluates them per bucket and enhances WAV files.
    """
    configure_logging(log_level)


@cli.command()
@common_options
@click.option('--out', '-o', 'out_dir', type=click.Path(), help='Scene directory (default: paths.scenes)')
@click.option('--num-scenes', '-n', type=int, help='Number of scenes to synthesise')
def simulate(config_path, seed, out_dir, num_scenes):
    """
    Synthesise scenes and write them as WAV triples with sidecars.

    Example:

        dcufront simulate --num-scenes 10 --seed 7 --out scenes/
    """
    try:
        config = _config(config_path, seed=seed, num_scenes=num_scenes)
        directory = out_dir or config.paths.scenes
        if not directory:
            raise click.UsageError("no scene directory: pass --out or set paths.scenes")
        with ExperimentEngine(config) as engine:
            engine.log_config("simulate")
            result = engine.simulate(directory)

        table = Table(show_header=False, box=None)
        table.add_column("Item", style="cyan", width=16)
        table.add_column("Value", style="green")
        table.add_row("Directory", str(result.directory))
        table.add_row("Scenes", str(result.num_scenes))
        table.add_row("Files", str(len(result.files)))
        table.add_row("Digest", result.digest)
        console.print(table)

    except Exception as e:
        _fail(e)


@cli.command()
@common_options
@click.option('--preset', type=click.Choice(PRESETS), help='Model preset')
@click.option('--epochs', type=int, help='Number of epochs')
@click.option('--scenes', 'scenes_dir', type=click.Path(), help='Exported scene directory')
@click.option('--checkpoint', type=click.Path(), help='Checkpoint to write')
@click.option('--metrics', type=click.Path(), help='Metrics log to append to')
def pretrain(config_path, seed, preset, epochs, scenes_dir, checkpoint, metrics):
    """
    Train a stand-alone DCUnet on the enhancement loss.

    Example:

        dcufront pretrain --epochs 10 --checkpoint dcunet.ckpt
    """
    try:
        config = _config(
            config_path, seed=seed, preset=preset, epochs=epochs,
            scenes_dir=scenes_dir, checkpoint=checkpoint, metrics=metrics,
        )
        with ExperimentEngine(config) as engine:
            engine.log_config("pretrain")
            result = engine.pretrain()
        _display_metrics(result.metrics)
        console.print(f"[green]Checkpoint written to: {config.paths.checkpoint}[/green]")

    except Exception as e:
        _fail(e)


@cli.command()
@click.argument('system', type=click.Choice(TRAINABLE, case_sensitive=False))
@common_options
@click.option('--preset', type=click.Choice(PRESETS), help='Model preset')
@click.option('--beta', type=float, help='Weight of the enhancement loss for epochs t <= t_enh')
@click.option('--t-enh', type=int, help='Last epoch with the enhancement loss')
@click.option('--dropout', type=float, help='Dropout probability on back-end input features')
@click.option('--init-from', type=click.Path(), help='Pretrained DCUnet checkpoint')
@click.option('--epochs', type=int, help='Number of epochs')
@click.option('--batch-size', type=int, help='Scenes per batch')
@click.option('--lr', 'learning_rate', type=float, help='Adam learning rate')
@click.option('--scenes', 'scenes_dir', type=click.Path(), help='Exported scene directory')
@click.option('--checkpoint', type=click.Path(), help='Checkpoint to write')
@click.option('--metrics', type=click.Path(), help='Metrics log to append to')
def train(system, config_path, seed, preset, beta, t_enh, dropout, init_from, epochs,
          batch_size, learning_rate, scenes_dir, checkpoint, metrics):
    """
    Train a recognition system.

    Examples:

        # Multi-task DCUnet from a pretrained front-end
        dcufront train mtl --beta 0.8 --t-enh 3 --dropout 0.2 --init-from dcunet.ckpt

        # Single-channel AEC + delay-and-sum baseline
        dcufront train baseline --epochs 10
    """
    try:
        config = _config(
            config_path, seed=seed, preset=preset, beta=beta, t_enh=t_enh, dropout=dropout,
            init_from=init_from, epochs=epochs, batch_size=batch_size, learning_rate=learning_rate,
            scenes_dir=scenes_dir, checkpoint=checkpoint, metrics=metrics,
        )
        with ExperimentEngine(config) as engine:
            engine.log_config(f"train {system}")
            result = engine.train(system)
        _display_metrics(result.metrics)
        console.print(f"[green]Checkpoint written to: {config.paths.checkpoint}[/green]")

    except Exception as e:
        _fail(e)


@cli.command()
@click.argument('checkpoint', type=click.Path())
@common_options
@click.option('--scenes', 'scenes_dir', type=click.Path(), help='Exported scene directory')
@click.option('--format', '-f', 'tablefmt', default='simple', help='tabulate table format')
def evaluate(checkpoint, config_path, seed, scenes_dir, tablefmt):
    """
    Per-bucket frame accuracy of a trained checkpoint.

    Columns: Echoed, <5 dB, [5,15) dB, >=15 dB, Total.

    Example:

        dcufront evaluate mtl.ckpt --scenes test_scenes/
    """
    try:
        config = _config(config_path, seed=seed, scenes_dir=scenes_dir)
        with ExperimentEngine(config) as engine:
            engine.log_config("evaluate")
            report = engine.evaluate(checkpoint)
        click.echo(format_report(report, tablefmt=tablefmt))

    except Exception as e:
        _fail(e)


@cli.command()
@click.argument('checkpoint', type=click.Path())
@click.argument('mic1', type=click.Path(exists=True, dir_okay=False))
@click.argument('mic2', type=click.Path(exists=True, dir_okay=False))
@click.argument('reference', type=click.Path(exists=True, dir_okay=False))
@click.argument('output', type=click.Path(dir_okay=False))
@common_options
def enhance(checkpoint, mic1, mic2, reference, output, config_path, seed):
    """
    Enhance one recording with a checkpoint's DCUnet.

    Example:

        dcufront enhance dcunet.ckpt mic1.wav mic2.wav ref.wav enhanced.wav
    """
    try:
        config = _config(config_path, seed=seed)
        with ExperimentEngine(config) as engine:
            engine.log_config("enhance")
            waveform = engine.enhance(checkpoint, mic1, mic2, reference, output)
        console.print(
            f"[green]Enhanced audio written to: {Path(output)} ({waveform.duration_s:.2f} s)[/green]"
        )

    except Exception as e:
        _fail(e)


@cli.command()
@common_options
@click.option('--preset', type=click.Choice(PRESETS), help='Model preset (default: from config)')
@click.option('--tol', 'tolerance', type=float, default=1e-4, show_default=True,
              help='Largest acceptable relative error')
@click.option('--max-entries', type=int, default=6, show_default=True,
              help='Entries probed per parameter tensor')
def gradcheck(config_path, seed, preset, tolerance, max_entries):
    """
    Finite-difference check of every layer type.

    Exits with status 1 when any layer fails.

    Example:

        dcufront gradcheck --preset tiny --tol 1e-4
    """
    try:
        config = _config(config_path, seed=seed, preset=preset)
        with ExperimentEngine(config) as engine:
            engine.log_config("gradcheck")
            checks = engine.gradcheck(tolerance=tolerance, max_entries=max_entries)
    except Exception as e:
        _fail(e)
        return

    _display_gradcheck(checks, tolerance)
    failed = [c for c in checks if not c.passed]
    if failed:
        console.print(f"[red]{len(failed)} of {len(checks)} layer types failed at tolerance {tolerance:g}[/red]")
        sys.exit(1)
    console.print(f"[bold green]All {len(checks)} layer types passed[/bold green]")


# Helper functions

def _fmt(value, pattern="{:.4f}"):
    return "-" if value is None else pattern.format(value)


def _display_metrics(metrics: List[EpochMetrics]):
    """Per-epoch losses and accuracy."""
    console.print("\n[bold cyan]Training Summary:[/bold cyan]")
    if not metrics:
        console.print("[yellow]No epochs run[/yellow]")
        return
    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Epoch", justify="right")
    table.add_column("System")
    table.add_column("L_asr", justify="right")
    table.add_column("L_enh", justify="right")
    table.add_column("Frame acc", justify="right")
    for m in metrics:
        table.add_row(
            str(m.epoch), m.system, _fmt(m.l_asr), _fmt(m.l_enh),
            _fmt(None if m.frame_acc is None else m.frame_acc * 100, "{:.2f}%"),
        )
    console.print(table)


def _display_gradcheck(checks: List[LayerCheck], tolerance: float):
    console.print(Panel.fit("[bold cyan]Gradient Check[/bold cyan]", border_style="cyan"))
    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Layer")
    table.add_column("Parameters", justify="right")
    table.add_column("Max rel. error", justify="right")
    table.add_column("Result")
    for check in checks:
        result = "[green]PASS[/green]" if check.passed else "[red]FAIL[/red]"
        table.add_row(check.layer, str(len(check.report.errors)), f"{check.max_error:.2e}", result)
    console.print(table)
    console.print(f"Tolerance: {tolerance:g}")


if __name__ == '__main__':
    cli()
