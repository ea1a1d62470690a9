#!/usr/bin/env python3
"""
Master script to run every job file under configs/.

Each job file names its subcommand in the "command" key and is handed to the
command-line front end unchanged. Convergence jobs report their fitted slope.
Useful for regenerating all results in one go.
"""

import argparse
import glob
import json
import os
import sys
from datetime import datetime

from frackac import cli
from logger_config import get_logger


def read_command(path):
    """Subcommand named by a job file, or None when the file cannot tell."""
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError):
        return None
    return data.get("command") if isinstance(data, dict) else None


def run_job(path, logger, workers=None, out=None):
    """
    Run a single job file and return results.

    Args:
        path: Path to the JSON job file
        logger: Logger instance for run_all
        workers: Worker processes (None defers to the environment)
        out: Output directory override

    Returns:
        Dict with the job outcome
    """
    name = os.path.splitext(os.path.basename(path))[0]
    logger.info("=" * 70)
    logger.info(f"Running job {name}")
    logger.info("=" * 70)

    command = read_command(path)
    if command is None:
        logger.error(f"{path} does not name a command")
        return {"success": False, "job": name, "command": None, "slope": None, "error": "no command"}

    argv = [command, "--config", path]
    if workers is not None:
        argv += ["--workers", str(workers)]
    if out is not None:
        argv += ["--out", out]

    status = cli.main(argv)
    if status != 0:
        return {"success": False, "job": name, "command": command, "slope": None, "error": f"exit status {status}"}

    slope = None
    if command == "convergence":
        config = cli.resolve_run_config(cli.create_argument_parser().parse_args(argv))
        side_car = os.path.join(config.output.directory, f"{config.prefix}_convergence.json")
        with open(side_car, "r") as f:
            slope = json.load(f).get("fitted_slope")

    return {"success": True, "job": name, "command": command, "slope": slope, "error": None}


def main():
    """Main execution function."""
    parser = argparse.ArgumentParser(description="Run all fractional diffusion job files")
    parser.add_argument(
        "--configs",
        nargs="+",
        default=["configs/*.json"],
        help="Job files or glob patterns (default: configs/*.json)",
    )
    parser.add_argument("--workers", type=int, help="Worker processes passed to every job")
    parser.add_argument("--out", help="Output directory for every job (overrides output.directory)")
    args = parser.parse_args()

    logger = get_logger("run_all")

    paths = []
    for pattern in args.configs:
        matches = sorted(glob.glob(pattern))
        paths.extend(matches if matches else [pattern])

    logger.info("=" * 70)
    logger.info("Fractional Diffusion Job Suite")
    logger.info(f"Started at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    logger.info(f"Running {len(paths)} job(s)")
    logger.info("=" * 70)

    results = [run_job(path, logger, workers=args.workers, out=args.out) for path in paths]

    logger.info("=" * 70)
    logger.info("FINAL SUMMARY")
    logger.info("=" * 70)

    failed = 0
    for result in results:
        if result["success"]:
            detail = f"slope {result['slope']:.4f}" if result["slope"] is not None else "done"
            logger.info(f"  {result['job']} ({result['command']}): {detail}")
        else:
            failed += 1
            logger.error(f"  {result['job']}: failed - {result['error']}")

    logger.info(f"Total jobs run: {len(results)}")
    logger.info(f"Successful: {len(results) - failed}")
    logger.info(f"Failed: {failed}")
    logger.info(f"Completed at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")

    if failed > 0:
        sys.exit(1)


if __name__ == "__main__":
    main()
