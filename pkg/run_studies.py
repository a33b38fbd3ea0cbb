#!/usr/bin/env python3
"""
Study Pipeline
Runs the standard H3+ studies end to end and logs each stage
"""

import subprocess
import sys
from datetime import datetime
import logging
import os

os.makedirs('logs', exist_ok=True)

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler('logs/studies.log'),
        logging.StreamHandler(sys.stdout)
    ]
)

logger = logging.getLogger(__name__)

STAGES = [
    ("python3 src/cli.py validate", "Validate Hamiltonian", 300),
    ("python3 src/cli.py shift-optimize", "Optimize Symmetry Shift", 300),
    ("python3 src/cli.py run --preset h3plus-paper --backend exact", "Noiseless Estimate", 3600),
    ("python3 src/cli.py run --preset h3plus-paper --backend density --config config/noisy.cfg",
     "Depolarizing Estimate", 7200),
    ("python3 src/cli.py run --preset h3plus-paper --config config/leakage.cfg --jobs -1",
     "Leakage Repetitions", 14400),
    ("python3 src/cli.py sweep --preset h3plus-quick --jobs -1", "Sweep (s, tau)", 7200),
    ("python3 src/cli.py baselines --monte-carlo-shots 100000", "Baseline Comparison", 3600),
]


def run_command(command, description, timeout):
    """Run a command and log results"""
    logger.info(f"{'='*60}")
    logger.info(f"RUNNING: {description}")
    logger.info(f"{'='*60}")

    try:
        result = subprocess.run(
            command,
            shell=True,
            capture_output=True,
            text=True,
            timeout=timeout
        )

        if result.stdout:
            logger.info(result.stdout)

        if result.returncode == 0:
            logger.info(f"✅ SUCCESS: {description}")
            return True
        else:
            logger.error(f"❌ FAILED: {description} (exit code {result.returncode})")
            if result.stderr:
                logger.error(result.stderr)
            return False

    except subprocess.TimeoutExpired:
        logger.error(f"⏱️ TIMEOUT: {description} took longer than {timeout // 60} minutes")
        return False
    except Exception as e:
        logger.error(f"❌ ERROR: {description} - {str(e)}")
        return False


def main():
    """Run every study stage"""
    logger.info("="*60)
    logger.info("🧪 H3+ STUDY PIPELINE")
    logger.info(f"Started: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    logger.info("="*60)

    success_count = 0
    for command, description, timeout in STAGES:
        if run_command(command, description, timeout):
            success_count += 1

    logger.info("="*60)
    logger.info("📊 STUDY SUMMARY")
    logger.info("="*60)
    logger.info(f"Completed: {success_count}/{len(STAGES)} stages")
    logger.info(f"Finished: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    logger.info("="*60)

    if success_count == len(STAGES):
        logger.info("✅ All stages completed successfully!")
        sys.exit(0)
    else:
        logger.warning(f"⚠️ {len(STAGES) - success_count} stage(s) failed")
        sys.exit(1)


if __name__ == "__main__":
    main()
