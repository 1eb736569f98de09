#!/usr/bin/env python3
"""
HTML stage reports and figure output.

Every dataset-level stage summarizes its run in reports/<stage>_report.html:
a row of metric cards followed by tables, in the same layout for all stages.
"""

import html as html_escape
from datetime import datetime
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from atomic_io import atomic_path, write_text

REPORT_STYLE = """
        body { font-family: Arial, sans-serif; margin: 40px; background: #f5f5f5; }
        .container { max-width: 1200px; margin: 0 auto; background: white; padding: 30px; box-shadow: 0 2px 4px rgba(0,0,0,0.1); }
        h1 { color: #2c3e50; border-bottom: 3px solid #3498db; padding-bottom: 10px; }
        h2 { color: #34495e; margin-top: 30px; border-bottom: 2px solid #bdc3c7; padding-bottom: 5px; }
        .metric { display: inline-block; margin: 15px 20px 15px 0; padding: 15px 25px; background: #ecf0f1; border-radius: 5px; }
        .metric-label { font-size: 12px; color: #7f8c8d; text-transform: uppercase; }
        .metric-value { font-size: 24px; font-weight: bold; color: #2c3e50; }
        table { width: 100%; border-collapse: collapse; margin: 20px 0; }
        th { background: #34495e; color: white; padding: 12px; text-align: left; }
        td { padding: 10px; border-bottom: 1px solid #ecf0f1; }
        tr:hover { background: #f8f9fa; }
        img { max-width: 100%; margin: 20px 0; }
        .footer { margin-top: 40px; padding-top: 20px; border-top: 1px solid #bdc3c7; color: #7f8c8d; font-size: 12px; }
"""


def _format_cell(value):
    if isinstance(value, float):
        return f"{value:.4f}"
    if isinstance(value, int):
        return f"{value:,}"
    return html_escape.escape(str(value))


def _table(df):
    rows = ["        <table>", "            <tr>"]
    rows += [f"                <th>{html_escape.escape(str(c))}</th>" for c in df.columns]
    rows.append("            </tr>")
    for record in df.itertuples(index=False):
        rows.append("            <tr>")
        rows += [f"                <td>{_format_cell(v)}</td>" for v in record]
        rows.append("            </tr>")
    rows.append("        </table>")
    return "\n".join(rows)


def generate_html_report(title, metrics, tables=(), images=(), footer=()):
    """Render a stage report.

    Args:
        title: Page heading
        metrics: (label, value) pairs shown as metric cards
        tables: (heading, DataFrame) pairs
        images: (heading, relative path) pairs
        footer: Lines for the page footer

    Returns:
        HTML document as a string
    """
    parts = [f"""<!DOCTYPE html>
<html>
<head>
    <meta charset="UTF-8">
    <title>{html_escape.escape(title)}</title>
    <style>{REPORT_STYLE}    </style>
</head>
<body>
    <div class="container">
        <h1>{html_escape.escape(title)}</h1>
        <p>Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}</p>

        <h2>Summary</h2>"""]
    for label, value in metrics:
        parts.append(f"""        <div class="metric">
            <div class="metric-label">{html_escape.escape(label)}</div>
            <div class="metric-value">{_format_cell(value)}</div>
        </div>""")
    for heading, df in tables:
        parts.append(f"\n        <h2>{html_escape.escape(heading)}</h2>")
        parts.append(_table(df))
    for heading, src in images:
        parts.append(f"\n        <h2>{html_escape.escape(heading)}</h2>")
        parts.append(f'        <img src="{html_escape.escape(str(src))}" alt="{html_escape.escape(heading)}">')
    parts.append('\n        <div class="footer">')
    parts += [f"            <p>{html_escape.escape(line)}</p>" for line in footer]
    parts.append("        </div>\n    </div>\n</body>\n</html>\n")
    return "\n".join(parts)


def write_report(html, path):
    return write_text(html, path)


def save_figure(fig, path, dpi=150):
    """Save a matplotlib figure as PNG atomically and close it."""
    path = Path(path)
    with atomic_path(path) as tmp:
        fig.savefig(tmp, format="png", dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    return path
