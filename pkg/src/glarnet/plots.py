"""Minimal self-contained SVG line charts (median line + quartile band).

Output is plain polyline SVG built from the data, so no plotting backend is
needed to render experiment summaries.
"""
from __future__ import annotations

import math

from .model import atomic_write_text

_W, _H = 480, 320
_PAD = 50


def _scale(vals, lo_pix, hi_pix, log=False):
    vals = [math.log10(v) if log else v for v in vals]
    vmin, vmax = min(vals), max(vals)
    span = vmax - vmin or 1.0

    def to_pix(v):
        v = math.log10(v) if log else v
        return lo_pix + (v - vmin) / span * (hi_pix - lo_pix)

    return to_pix


def line_chart_svg(x, y, y_lo=None, y_hi=None, xlabel="", ylabel="", title="",
                   logx=False, logy=False) -> str:
    """Polyline chart of y vs x with an optional quartile band."""
    sx = _scale(x, _PAD, _W - _PAD, log=logx)
    all_y = list(y) + list(y_lo or []) + list(y_hi or [])
    sy = _scale(all_y, _H - _PAD, _PAD, log=logy)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="15" y="{_H / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {_H / 2})">{ylabel}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
    ]
    if y_lo is not None and y_hi is not None:
        band = [(sx(a), sy(b)) for a, b in zip(x, y_hi)]
        band += [(sx(a), sy(b)) for a, b in zip(reversed(list(x)), reversed(list(y_lo)))]
        pts = " ".join(f"{px:.2f},{py:.2f}" for px, py in band)
        parts.append(f'<polygon points="{pts}" fill="#c6dbef" stroke="none"/>')
    pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#2171b5" stroke-width="2"/>')
    for a, b in zip(x, y):
        parts.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="#2171b5"/>')
    for a, b in zip(x, y):
        parts.append(f'<text x="{sx(a):.2f}" y="{_H - _PAD + 15}" text-anchor="middle" '
                     f'font-size="10">{a:g}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def emit_experiment_plots(cells, out_dir) -> list:
    """Write the four standard summary charts; returns the written paths."""
    import os

    written = []
    by_s, by_T = {}, {}
    for c in cells:
        by_s.setdefault(c.s, []).append(c)
        by_T.setdefault(c.T, []).append(c)

    s_star = max(by_s, key=lambda s: len(by_s[s]))
    tc = sorted(by_s[s_star], key=lambda c: c.T)
    if len(tc) >= 2:
        T = [c.T for c in tc]
        for name, y, lo, hi, ylabel in (
            ("mse_vs_T.svg", [c.mse_median for c in tc], [c.mse_q25 for c in tc],
             [c.mse_q75 for c in tc], "median MSE"),
            ("mseT_vs_T.svg", [c.mse_times_T for c in tc], None, None, "median MSE x T"),
        ):
            path = os.path.join(out_dir, name)
            atomic_write_text(path, line_chart_svg(
                T, y, lo, hi, xlabel="T", ylabel=ylabel,
                title=f"s={s_star}", logx=True, logy=(name == "mse_vs_T.svg")))
            written.append(path)

    T_star = max(by_T, key=lambda T: len(by_T[T]))
    sc = sorted(by_T[T_star], key=lambda c: c.s)
    if len(sc) >= 2:
        s = [c.s for c in sc]
        for name, y, lo, hi, ylabel in (
            ("mse_vs_s.svg", [c.mse_median for c in sc], [c.mse_q25 for c in sc],
             [c.mse_q75 for c in sc], "median MSE"),
            ("mse_over_s_vs_s.svg", [c.mse_over_s for c in sc], None, None, "median MSE / s"),
        ):
            path = os.path.join(out_dir, name)
            atomic_write_text(path, line_chart_svg(
                s, y, lo, hi, xlabel="s", ylabel=ylabel, title=f"T={T_star}"))
            written.append(path)
    return written
