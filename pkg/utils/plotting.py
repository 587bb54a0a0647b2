"""
Key rate versus loss figures
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, List

import plotly.graph_objects as go

from utils.errors import ConfigError

logger = logging.getLogger(__name__)

CURVES = {
    "rate_passive": "Passive",
    "rate_active_limit": "Active limit",
}

PLOT_SCRIPT_TEMPLATE = '''"""Plot key rate against channel loss from {csv_name}"""

import csv
from pathlib import Path

import plotly.graph_objects as go

CSV_PATH = Path(__file__).parent / {csv_rel!r}
CURVES = {curves!r}


def main():
    with open(CSV_PATH, newline="") as f:
        rows = list(csv.DictReader(f))
    fig = go.Figure()
    for column, label in CURVES.items():
        points = [(float(r["loss_db"]), float(r[column])) for r in rows if float(r[column]) > 0]
        fig.add_trace(go.Scatter(x=[p[0] for p in points], y=[p[1] for p in points], mode="lines+markers", name=label))
    fig.update_layout(xaxis_title="Channel loss (dB)", yaxis_title="Key rate (bits per round)")
    fig.update_yaxes(type="log", exponentformat="power")
    fig.show()


if __name__ == "__main__":
    main()
'''


def positive_points(rows: List[Dict[str, Any]], column: str):
    """(loss, rate) pairs with rate > 0; zero rates have no place on a log axis"""
    return [(row["loss_db"], row[column]) for row in rows if row[column] > 0]


def build_figure(rows: List[Dict[str, Any]]) -> go.Figure:
    """Log-scale key rate against loss, one trace per protocol"""
    fig = go.Figure()
    for column, label in CURVES.items():
        points = positive_points(rows, column)
        fig.add_trace(
            go.Scatter(
                x=[p[0] for p in points],
                y=[p[1] for p in points],
                mode="lines+markers",
                name=label,
            )
        )
    fig.update_layout(
        title="Key rate against channel loss",
        xaxis_title="Channel loss (dB)",
        yaxis_title="Key rate (bits per round)",
        height=500,
    )
    fig.update_yaxes(type="log", exponentformat="power")
    return fig


def render_plot_script(csv_path: str, script_path: str) -> str:
    """Source of a standalone script that reads the CSV relative to its own location"""
    csv_rel = os.path.relpath(Path(csv_path).resolve(), Path(script_path).resolve().parent)
    return PLOT_SCRIPT_TEMPLATE.format(csv_name=Path(csv_path).name, csv_rel=csv_rel, curves=CURVES)


def write_plot_script(csv_path: str, script_path: str) -> Path:
    out = Path(script_path)
    if not Path(csv_path).exists():
        raise ConfigError(f"{csv_path} does not exist")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_plot_script(csv_path, script_path), encoding="utf-8")
    logger.info("wrote plot script %s", out)
    return out
