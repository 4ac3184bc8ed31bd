"""Small SVG renderings of solution paths and stability paths.

No plotting dependency: charts are built as plain SVG strings with axis
ticks, one polyline per variable, and a compact legend.  Enough to eyeball
which allowances survive along the budget and where the selection threshold
sits; anything fancier belongs in the caller's own tooling.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_PALETTE = (
    "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
    "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0",
)

_W, _H = 720, 460
_ML, _MR, _MT, _MB = 64, 150, 28, 48


def _scale(values: np.ndarray, lo_px: float, hi_px: float) -> tuple[float, float, float, float]:
    vmin = float(np.min(values))
    vmax = float(np.max(values))
    if vmax <= vmin:
        vmax = vmin + 1.0
    return vmin, vmax, lo_px, hi_px


def _px(v: float, vmin: float, vmax: float, lo_px: float, hi_px: float) -> float:
    return lo_px + (v - vmin) / (vmax - vmin) * (hi_px - lo_px)


def _ticks(vmin: float, vmax: float, n: int = 5) -> list[float]:
    raw = np.linspace(vmin, vmax, n)
    return [float(t) for t in raw]


def _fmt(v: float) -> str:
    return f"{v:.3g}"


def _chart(
    x: np.ndarray,
    series: Sequence[np.ndarray],
    labels: Sequence[str],
    title: str,
    x_label: str,
    y_label: str,
    extra: str = "",
    y_fixed: tuple[float, float] | None = None,
    dashed: Sequence[bool] | None = None,
) -> str:
    x = np.asarray(x, dtype=float)
    ally = np.concatenate([np.asarray(s, dtype=float) for s in series])
    ally = ally[np.isfinite(ally)]
    if ally.size == 0:
        ally = np.array([0.0, 1.0])
    xmin, xmax, xlo, xhi = _scale(x, _ML, _W - _MR)
    if y_fixed is not None:
        ymin, ymax = y_fixed
    else:
        ymin, ymax = float(ally.min()), float(ally.max())
        if ymax <= ymin:
            ymax = ymin + 1.0
        pad = 0.05 * (ymax - ymin)
        ymin, ymax = ymin - pad, ymax + pad
    ylo, yhi = _H - _MB, _MT

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_ML}" y="18" font-size="14" font-weight="bold">{title}</text>',
    ]
    # axes and ticks
    parts.append(
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="#333"/>'
    )
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="#333"/>')
    for t in _ticks(xmin, xmax):
        px = _px(t, xmin, xmax, xlo, xhi)
        parts.append(
            f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" y2="{_H - _MB + 4}" stroke="#333"/>'
            f'<text x="{px:.1f}" y="{_H - _MB + 17}" text-anchor="middle">{_fmt(t)}</text>'
        )
    for t in _ticks(ymin, ymax):
        py = _px(t, ymin, ymax, ylo, yhi)
        parts.append(
            f'<line x1="{_ML - 4}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" stroke="#333"/>'
            f'<text x="{_ML - 7}" y="{py + 4:.1f}" text-anchor="end">{_fmt(t)}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_H - 10}" text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{(_MT + _H - _MB) / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.0f})">{y_label}</text>'
    )
    # series
    for s_idx, (ys, label) in enumerate(zip(series, labels)):
        color = _PALETTE[s_idx % len(_PALETTE)]
        pts = " ".join(
            f"{_px(float(xv), xmin, xmax, xlo, xhi):.1f},"
            f"{_px(float(yv), ymin, ymax, ylo, yhi):.1f}"
            for xv, yv in zip(x, np.asarray(ys, dtype=float))
            if np.isfinite(yv)
        )
        dash = ' stroke-dasharray="5,4"' if dashed and dashed[s_idx] else ""
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{pts}"/>'
        )
        ly = _MT + 16 * s_idx
        if ly < _H - _MB:
            parts.append(
                f'<line x1="{_W - _MR + 8}" y1="{ly + 6}" x2="{_W - _MR + 28}" y2="{ly + 6}" '
                f'stroke="{color}" stroke-width="2"{dash}/>'
                f'<text x="{_W - _MR + 33}" y="{ly + 10}">{label}</text>'
            )
    parts.append(extra)
    parts.append("</svg>")
    return "\n".join(p for p in parts if p)


def path_plot_svg(
    taus: np.ndarray, lambdas: np.ndarray, names: Sequence[str] | None = None
) -> str:
    """Allowance trajectories lambda_k(tau), one polyline per covariate."""
    lambdas = np.asarray(lambdas, dtype=float)
    p = lambdas.shape[1]
    names = list(names) if names is not None else [f"x{k + 1}" for k in range(p)]
    # legend space is finite; label the largest-allowance variables only
    peak = lambdas.max(axis=0)
    show = np.argsort(peak)[::-1]
    series = [lambdas[:, k] for k in show]
    labels = [names[k] for k in show]
    return _chart(
        np.asarray(taus, dtype=float),
        series,
        labels[:24],
        "allowance paths",
        "budget tau",
        "lambda_k",
    )


def stability_plot_svg(
    taus: np.ndarray,
    pi_hat: np.ndarray,
    names: Sequence[str] | None = None,
    pi_thr: np.ndarray | None = None,
    q_hat: np.ndarray | None = None,
) -> str:
    """Selection proportions per variable with threshold and q_hat overlays."""
    pi_hat = np.asarray(pi_hat, dtype=float)
    T, p = pi_hat.shape
    names = list(names) if names is not None else [f"x{k + 1}" for k in range(p)]
    order = np.argsort(pi_hat.max(axis=0))[::-1]
    series = [pi_hat[:, k] for k in order]
    labels = [names[k] for k in order]
    dashed = [False] * len(series)
    if q_hat is not None:
        series.append(np.asarray(q_hat, dtype=float) / p)
        labels.append("q_hat / p")
        dashed.append(True)
    if pi_thr is not None:
        series.append(np.asarray(pi_thr, dtype=float))
        labels.append("pi_thr")
        dashed.append(True)
    return _chart(
        np.asarray(taus, dtype=float),
        series,
        labels[:24],
        "stability paths",
        "budget tau",
        "selection proportion",
        y_fixed=(0.0, 1.05),
        dashed=dashed,
    )
