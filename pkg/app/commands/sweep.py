"""
Sweep and point commands - key rate against channel loss
"""

import logging
from pathlib import Path
from typing import List, Optional

from models import KeyRateReport, RunConfig
from utils.keyrate_engine import total_keyrate
from utils.storage import write_sweep_csv

logger = logging.getLogger(__name__)


def evaluate_point(config: RunConfig, loss_db: float) -> KeyRateReport:
    """Passive and active-limit rates at one loss value"""
    cfg = config.channel_config(loss_db)
    report = total_keyrate(
        cfg,
        config.branch_cut(),
        config.n_bar,
        workers=config.workers,
        rel_tol_click=config.rel_tol_click,
        rel_tol_transition=config.rel_tol_transition,
        cache_dir=config.cache_dir,
        record_timing=config.record_timing,
    )
    return report.model_copy(update={"loss_db": float(loss_db)})


def run_sweep_command(config: RunConfig, output: Optional[str] = None) -> Path:
    """
    Evaluate every loss point in ascending order and write the CSV

    Returns:
        Path of the written CSV
    """
    reports: List[KeyRateReport] = []
    points = config.loss_points()
    for index, loss in enumerate(points, start=1):
        logger.info("loss point %d/%d: %g dB", index, len(points), loss)
        report = evaluate_point(config, loss)
        if report.status != "ok":
            logger.warning("%g dB finished with status %s (%d failed combinations)", loss, report.status, len(report.failed_combinations))
        logger.info("%g dB: passive %.6e, active limit %.6e", loss, report.rate_passive, report.rate_active_limit)
        reports.append(report)
    return write_sweep_csv(output or config.output_path, reports)


def run_point_command(config: RunConfig, loss_db: float) -> str:
    """KeyRateReport of one loss value as JSON"""
    return evaluate_point(config, loss_db).model_dump_json(indent=2)
