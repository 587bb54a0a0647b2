"""
Emit-plot command - standalone plotting script for a sweep CSV
"""

import logging
from pathlib import Path
from typing import Optional, Tuple

from utils.plotting import build_figure, write_plot_script
from utils.storage import read_sweep_csv

logger = logging.getLogger(__name__)


def run_plot_command(csv_path: str, script_path: Optional[str] = None, html: bool = False) -> Tuple[Path, Optional[Path]]:
    """
    Write <csv stem>_plot.py next to the CSV (and the figure as HTML on request)

    Raises:
        ConfigError: If the CSV is missing or malformed
    """
    rows = read_sweep_csv(csv_path)
    csv_file = Path(csv_path)
    script = write_plot_script(csv_path, script_path or str(csv_file.with_name(f"{csv_file.stem}_plot.py")))
    html_path = None
    if html:
        html_path = csv_file.with_suffix(".html")
        build_figure(rows).write_html(str(html_path), include_plotlyjs="cdn")
        logger.info("wrote figure %s", html_path)
    return script, html_path
