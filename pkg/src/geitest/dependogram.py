"""Dependogram output: one bar per (subset, lag) statistic.

Bars show the per-term Cramer-von Mises statistics; a dashed line per
subset block marks the upper alpha quantile of the matching limit law,
so bars crossing the line flag the lags driving a rejection.  Output is
self-contained SVG (no plotting dependency) plus an optional CSV with
the same numbers.
"""
from __future__ import annotations

import csv

from .asymptotics import xi_distribution
from .core import DataError, StatisticReport

__all__ = ["dependogram_rows", "render_dependogram", "write_dependogram"]


def dependogram_rows(report: StatisticReport, alpha: float = 0.05) -> list[dict]:
    """Tabular form: one row per CvM term with its critical value."""
    rows = []
    for t in report.per_term:
        if t.kind != "cvm":
            continue
        card = len(t.subset)
        crit = xi_distribution(card).quantile_upper(alpha)
        lag = ",".join(str(v) for v in (t.lags[j] for j in t.subset))
        rows.append({
            "subset": "{" + ",".join(str(j + 1) for j in t.subset) + "}",
            "lags": lag,
            "statistic": t.value,
            "critical": crit,
            "significant": t.value > crit,
        })
    if not rows:
        raise DataError("report holds no per-term CvM statistics")
    return rows


_BAR_W = 9
_GAP = 3
_BLOCK_GAP = 18
_HEIGHT = 260
_MARGIN = 42


def render_dependogram(report: StatisticReport, alpha: float = 0.05) -> str:
    """Render the dependogram as an SVG string."""
    rows = dependogram_rows(report, alpha)
    top = 1.08 * max(max(r["statistic"] for r in rows),
                     max(r["critical"] for r in rows))
    if top <= 0:
        top = 1.0

    def y(v):
        return _MARGIN + (_HEIGHT - 2 * _MARGIN) * (1.0 - v / top)

    parts = []
    x = _MARGIN + _GAP
    blocks: list[tuple[str, float, float, float]] = []
    prev_subset = None
    for r in rows:
        if r["subset"] != prev_subset:
            if prev_subset is not None:
                blocks.append((prev_subset, bx0, x - _GAP, crit))
                x += _BLOCK_GAP
            prev_subset, bx0, crit = r["subset"], x, r["critical"]
        h = max(y(0.0) - y(r["statistic"]), 0.5)
        cls = "bar significant" if r["significant"] else "bar"
        parts.append(
            f'<rect class="{cls}" x="{x:.1f}" y="{y(r["statistic"]):.1f}" '
            f'width="{_BAR_W}" height="{h:.1f}">'
            f'<title>{r["subset"]} lag {r["lags"]}: {r["statistic"]:.5g}'
            f'</title></rect>')
        x += _BAR_W + _GAP
    blocks.append((prev_subset, bx0, x - _GAP, crit))
    width = x + _MARGIN

    for label, x0, x1, crit in blocks:
        parts.append(f'<line class="critical" x1="{x0:.1f}" y1="{y(crit):.1f}" '
                     f'x2="{x1:.1f}" y2="{y(crit):.1f}"/>')
        parts.append(f'<text class="label" x="{(x0 + x1) / 2:.1f}" '
                     f'y="{_HEIGHT - 8}" text-anchor="middle">{label}</text>')
    parts.append(f'<line class="axis" x1="{_MARGIN}" y1="{y(0):.1f}" '
                 f'x2="{width - _MARGIN}" y2="{y(0):.1f}"/>')
    for frac in (0.0, 0.5, 1.0):
        v = frac * top
        parts.append(f'<text class="tick" x="{_MARGIN - 4}" y="{y(v) + 3:.1f}" '
                     f'text-anchor="end">{v:.3g}</text>')

    style = ("rect.bar{fill:#4878a8}rect.bar.significant{fill:#c04040}"
             "line.critical{stroke:#303030;stroke-dasharray:5 3}"
             "line.axis{stroke:#303030}"
             "text{font:10px sans-serif;fill:#303030}")
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
            f'height="{_HEIGHT}" viewBox="0 0 {width:.0f} {_HEIGHT}">'
            f'<style>{style}</style>'
            f'<desc>per-lag dependence statistics, alpha={alpha}</desc>'
            + "".join(parts) + "</svg>\n")


def write_dependogram(report: StatisticReport, svg_path,
                      alpha: float = 0.05, csv_path=None) -> None:
    with open(svg_path, "w", encoding="utf-8") as fh:
        fh.write(render_dependogram(report, alpha))
    if csv_path is not None:
        rows = dependogram_rows(report, alpha)
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
