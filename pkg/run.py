#!/usr/bin/env python3
"""
Master pipeline script for the Geometric Building Index.

    python run.py                      full synthetic pipeline
    python run.py <subcommand> [args]  one stage; args go to the stage script

Subcommands: gen-scenes, junctions, fit-prior, gbi, segment, eval, ablate,
dump-config.
"""
import argparse
import sys
import subprocess
from pathlib import Path

SUBCOMMANDS = {
    'gen-scenes': '01_generate_scenes/generate_scenes.py',
    'junctions': '02_detect_junctions/detect_junctions.py',
    'fit-prior': '03_fit_prior/fit_prior.py',
    'gbi': '04_compute_gbi/compute_gbi.py',
    'segment': '04_compute_gbi/segment.py',
    'eval': '05_evaluate/evaluate.py',
    'ablate': '05_evaluate/ablate.py',
    'dump-config': 'common/config.py',
}

PY_DIR = Path(__file__).parent / 'py'

# Prior is fitted on its own suite so evaluation scenes stay unseen
TRAIN_DIR = 'data/train'
TRAIN_COUNT = '50'
TRAIN_SEED = '1017'
EVAL_DIR = 'data/synthetic'
MODEL_PATH = 'models/angle_prior.json'


def run_script(script_name, args=()):
    """Run a stage script in a child process; returns its exit code."""
    script_path = PY_DIR / script_name
    if not script_path.exists():
        print(f"❌ ERROR: Script not found: {script_path}")
        return 1
    result = subprocess.run([sys.executable, str(script_path), *args])
    return result.returncode


def run_step(script_name, description, args=()):
    """Run a pipeline step and report its outcome."""
    print(f"\n{'='*70}")
    print(f"STEP: {description}")
    print(f"Running: {script_name} {' '.join(args)}")
    print(f"{'='*70}\n")

    code = run_script(script_name, args)
    if code == 0:
        print(f"\n✅ {description} completed successfully")
        return True
    print(f"\n❌ ERROR: {description} failed with exit code {code}")
    return False


def pipeline_steps(config=None, jobs=None):
    """(script, description, args) for the full synthetic pipeline."""
    extra = ["--config", str(config)] if config else []
    parallel = extra + (["--jobs", str(jobs)] if jobs else [])
    return [
        (SUBCOMMANDS['gen-scenes'], 'Generate training scenes',
         [TRAIN_DIR, '--count', TRAIN_COUNT, '--seed', TRAIN_SEED, *extra]),
        (SUBCOMMANDS['fit-prior'], 'Fit the angle prior',
         [TRAIN_DIR, '--output', MODEL_PATH, *parallel]),
        (SUBCOMMANDS['gen-scenes'], 'Generate evaluation scenes', [EVAL_DIR, *extra]),
        (SUBCOMMANDS['gbi'], 'Compute GBI heatmaps',
         [f'{EVAL_DIR}/scenes', '--model', MODEL_PATH, '--output-dir', 'outputs/gbi', *parallel]),
        (SUBCOMMANDS['eval'], 'Evaluate heatmaps against masks',
         ['outputs/gbi', f'{EVAL_DIR}/masks', *extra]),
        (SUBCOMMANDS['ablate'], 'Ablate the index terms',
         [EVAL_DIR, '--model', MODEL_PATH, *parallel]),
    ]


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)

    if argv and not argv[0].startswith('-'):
        command, rest = argv[0], argv[1:]
        if command not in SUBCOMMANDS:
            print(f"❌ ERROR: unknown subcommand {command!r}\n")
            print(__doc__.strip())
            return 2
        return run_script(SUBCOMMANDS[command], rest)

    parser = argparse.ArgumentParser(
        description="Run the full synthetic pipeline, or one stage via a subcommand",
        epilog=f"subcommands: {', '.join(SUBCOMMANDS)}",
    )
    parser.add_argument("--config", type=Path, help="config file passed to every stage")
    parser.add_argument("--jobs", type=int, help="worker processes for the per-image stages")
    args = parser.parse_args(argv)

    print("""
╔══════════════════════════════════════════════════════════════════════╗
║              Geometric Building Index Pipeline                      ║
║         junctions → angle prior → GBI → evaluation                  ║
╚══════════════════════════════════════════════════════════════════════╝
    """)

    steps = pipeline_steps(args.config, args.jobs)
    for i, (script, description, step_args) in enumerate(steps, 1):
        print(f"\n[Step {i}/{len(steps)}]")
        if not run_step(script, description, step_args):
            print(f"\n❌ Pipeline failed at step {i}: {description}")
            print("Fix the error and run again, or run individual stages with `python run.py <subcommand>`.")
            return 1

    print(f"\n{'='*70}")
    print("✅ PIPELINE COMPLETED SUCCESSFULLY!")
    print(f"{'='*70}\n")
    print("Output files created:")
    print(f"  • {MODEL_PATH} - fitted angle prior")
    print("  • outputs/gbi/*.png - GBI heatmaps")
    print("  • outputs/eval/summary.json - mAP and mean F")
    print("  • outputs/ablation/ablation.csv - per-variant scores")
    print("  • reports/*.html - HTML summary reports for each step")
    print("\nSee README.md for details on outputs and methodology.")
    return 0


if __name__ == '__main__':
    sys.exit(main())
