"""
Figure emitters
~~~~~~~~~~~~~~~
Each figure writes a plain SVG and a CSV of the sampled points it was drawn
from. Ellipses are ``{M u : u unit}`` and figure-eights are
``(u^T M u) u``, both sampled at 720 angles; a negative quadratic form puts
the point on the opposite side of the origin, which shows up as "ears".
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Any
from xml.sax.saxutils import escape

import numpy as np

from .bayes import bayes_iterate
from .errors import IoError
from .gleason import dyad, figure1_mixture, mixture_density
from .io import write_csv, write_json
from .odot import odot, odot_lie_limit
from .symmat import SpectralMatrix, jacobi_eigh, mat_power

ANGLES = 720
FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")
PALETTE = ("#1f4e79", "#c0504d", "#4f8f3a", "#7f5fa8", "#d08a1c", "#2a9d8f", "#6b6b6b")


def unit_circle(samples: int = ANGLES) -> tuple[np.ndarray, np.ndarray]:
    """Angles ``2 pi k / samples`` and the matching unit vectors as rows."""
    theta = 2.0 * np.pi * np.arange(samples) / samples
    return theta, np.column_stack([np.cos(theta), np.sin(theta)])


def ellipse_points(m, samples: int = ANGLES) -> np.ndarray:
    _, u = unit_circle(samples)
    return u @ np.asarray(m, dtype=float).T


def quadratic_form(m, samples: int = ANGLES) -> np.ndarray:
    """``u^T M u`` per sampled angle; ``M`` need not be symmetric."""
    _, u = unit_circle(samples)
    return np.einsum("ki,ij,kj->k", u, np.asarray(m, dtype=float), u)


def figure_eight(values: np.ndarray, samples: int = ANGLES) -> np.ndarray:
    _, u = unit_circle(samples)
    return values[:, None] * u


def odot_dyad_form(a, samples: int = ANGLES) -> np.ndarray:
    """``tr(A (.) u u^T)`` per sampled angle."""
    _, u = unit_circle(samples)
    return np.array([odot(a, dyad(v)).matrix.trace() for v in u])


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def thin_ellipse(theta: float, major: float = 1.0, minor: float = 0.08) -> SpectralMatrix:
    r = rotation(theta)
    return SpectralMatrix(r @ np.diag([major, minor]) @ r.T)


class Canvas:
    """Minimal SVG writer in data coordinates centered on the origin."""

    def __init__(self, extent: float, size: int = 480, title: str = ""):
        self.extent = float(extent)
        self.size = size
        self.title = title
        self._items: list[str] = []

    def _xy(self, x: float, y: float) -> tuple[float, float]:
        half = self.size / 2.0
        k = half / self.extent
        return half + k * x, half - k * y

    def polyline(self, pts, color: str, dashed: bool = False, closed: bool = True,
                 width: float = 1.5) -> None:
        pts = np.asarray(pts, dtype=float)
        if closed:
            pts = np.vstack([pts, pts[:1]])
        coords = " ".join("{:.3f},{:.3f}".format(*self._xy(x, y)) for x, y in pts)
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self._items.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{dash}/>'
        )

    def segment(self, p, q, color: str, width: float = 1.0) -> None:
        (x1, y1), (x2, y2) = self._xy(*p), self._xy(*q)
        self._items.append(
            f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
            f'stroke="{color}" stroke-width="{width}"/>'
        )

    def label(self, x: float, y: float, text: str, color: str = "#000000") -> None:
        px, py = self._xy(x, y)
        self._items.append(
            f'<text x="{px:.1f}" y="{py:.1f}" font-size="12" fill="{color}">{escape(text)}</text>'
        )

    def render(self) -> str:
        s = self.size
        head = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">',
            f'<rect width="{s}" height="{s}" fill="#ffffff"/>',
        ]
        if self.title:
            head.append(f'<title>{escape(self.title)}</title>')
        axes = self._axes()
        return "\n".join(head + axes + self._items + ["</svg>", ""])

    def _axes(self) -> list[str]:
        (x1, y1), (x2, y2) = self._xy(-self.extent, 0), self._xy(self.extent, 0)
        (x3, y3), (x4, y4) = self._xy(0, -self.extent), self._xy(0, self.extent)
        style = 'stroke="#bbbbbb" stroke-width="0.75"'
        return [
            f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" {style}/>',
            f'<line x1="{x3:.3f}" y1="{y3:.3f}" x2="{x4:.3f}" y2="{y4:.3f}" {style}/>',
        ]

    def save(self, path) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.render(), encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc
        return path


def _extent(*arrays) -> float:
    return 1.15 * max(float(np.max(np.abs(a))) for a in arrays)


def fig1(out_dir) -> dict[str, Any]:
    """The three-dyad mixture, its matrix and both decompositions."""
    out = Path(out_dir)
    weights, directions = figure1_mixture()
    d = mixture_density(weights, directions)
    sp = d.spectrum()
    ell = ellipse_points(d)

    canvas = Canvas(_extent(ell), title="mixture of dyads and its eigendecomposition")
    canvas.polyline(ell, PALETTE[0])
    for k, (w, u) in enumerate(zip(weights, directions)):
        u = np.asarray(u, dtype=float)
        canvas.segment(-w * u, w * u, PALETTE[(k + 1) % len(PALETTE)], width=2.0)
    for lam, v in zip(sp.eigenvalues, sp.eigenvectors.T):
        canvas.segment(-lam * v, lam * v, "#000000", width=1.0)
        canvas.label(*(lam * v), f"{lam:.2f}")

    theta, _ = unit_circle()
    write_csv(out / "fig1.csv", ["angle", "x", "y"],
              [(t, x, y) for t, (x, y) in zip(theta, ell)])
    summary = {
        "mixture": {
            "weights": [float(w) for w in weights],
            "directions": [[float(x) for x in u] for u in directions],
        },
        "matrix": d.data.tolist(),
        "eigendecomposition": {
            "eigenvalues": sp.eigenvalues.tolist(),
            "eigenvectors": sp.eigenvectors.T.tolist(),
        },
        "reconstruction_residual": float(np.linalg.norm(sp.reconstruct() - d.data)),
    }
    write_json(out / "fig1.json", summary)
    canvas.save(out / "fig1.svg")
    return summary


def fig2(out_dir, a=None) -> dict[str, Any]:
    """Ellipse ``{A u}``, ``tr(A u u^T) u`` and ``tr(A (.) u u^T) u``."""
    out = Path(out_dir)
    if a is None:
        a = mixture_density(*figure1_mixture())
    ell = ellipse_points(a)
    plain = quadratic_form(a)
    soft = odot_dyad_form(a)
    contained = soft <= plain + 1e-10
    p8, s8 = figure_eight(plain), figure_eight(soft)

    canvas = Canvas(_extent(ell, p8), title="generalized probabilities in direction u")
    canvas.polyline(ell, PALETTE[0])
    canvas.polyline(p8, PALETTE[1])
    canvas.polyline(s8, PALETTE[1], dashed=True)
    canvas.save(out / "fig2.svg")

    theta, _ = unit_circle()
    rows = [
        (theta[k], ell[k, 0], ell[k, 1], plain[k], p8[k, 0], p8[k, 1],
         soft[k], s8[k, 0], s8[k, 1], bool(contained[k]))
        for k in range(ANGLES)
    ]
    write_csv(out / "fig2.csv",
              ["angle", "ellipse_x", "ellipse_y", "prob", "prob_x", "prob_y",
               "odot_prob", "odot_x", "odot_y", "contained"], rows)
    return {"all_contained": bool(contained.all()),
            "max_excess": float(np.max(soft - plain))}


def fig3_fixture(commuting: bool = False) -> tuple[SpectralMatrix, SpectralMatrix]:
    """Two thin ellipses at 20 and 70 degrees, or a commuting pair sharing axes."""
    s = thin_ellipse(math.radians(20.0))
    if commuting:
        return s, thin_ellipse(math.radians(20.0), major=0.3, minor=0.9)
    return s, thin_ellipse(math.radians(70.0))


def fig3(out_dir, commuting: bool = False) -> dict[str, Any]:
    """``u^T S T u`` against ``tr(S (.) T u u^T)``."""
    out = Path(out_dir)
    s, t = fig3_fixture(commuting)
    st = s.data @ t.data
    prod = quadratic_form(st)
    soft = quadratic_form(odot(s, t).matrix)
    p8, s8 = figure_eight(prod), figure_eight(soft)

    canvas = Canvas(_extent(p8, s8, ellipse_points(s), ellipse_points(t)),
                    title="matrix product against odot product")
    canvas.polyline(ellipse_points(s), PALETTE[2], width=1.0)
    canvas.polyline(ellipse_points(t), PALETTE[3], width=1.0)
    canvas.polyline(p8, PALETTE[1])
    canvas.polyline(s8, PALETTE[0], dashed=True)
    canvas.save(out / "fig3.svg")

    theta, _ = unit_circle()
    rows = [(theta[k], prod[k], p8[k, 0], p8[k, 1], soft[k], s8[k, 0], s8[k, 1])
            for k in range(ANGLES)]
    write_csv(out / "fig3.csv",
              ["angle", "product", "product_x", "product_y", "odot", "odot_x", "odot_y"], rows)
    return {
        "commuting": commuting,
        "min_product_form": float(prod.min()),
        "min_odot_form": float(soft.min()),
        "max_gap": float(np.max(np.abs(prod - soft))),
    }


def lie_product(s, t, k: int) -> np.ndarray:
    """Plain ``(S^(1/2^k) T^(1/2^k))^(2^k)`` by repeated squaring, unsymmetrized."""
    p = 0.5 ** k
    x = mat_power(s, p).data @ mat_power(t, p).data
    for _ in range(k):
        x = x @ x
    return x


def fig4(out_dir, depths=range(7)) -> dict[str, Any]:
    """Ellipses of the limit formula for both orderings at increasing depth."""
    out = Path(out_dir)
    s, t = fig3_fixture()
    target = odot(s, t).matrix
    ref = ellipse_points(target)
    canvas = Canvas(_extent(ref, ellipse_points(s.data @ t.data)),
                    title="limit formula for the odot product")
    canvas.polyline(ref, "#000000", width=2.0)

    theta, _ = unit_circle()
    rows = []
    gaps = {}
    for k in depths:
        color = PALETTE[k % len(PALETTE)]
        for order, (x, y) in (("ST", (s, t)), ("TS", (t, s))):
            m = lie_product(x, y, k)
            pts = ellipse_points(m)
            canvas.polyline(pts, color, dashed=order == "TS", width=1.0)
            rows.extend((k, order, theta[i], pts[i, 0], pts[i, 1]) for i in range(ANGLES))
            gaps[f"{order}_{k}"] = float(np.linalg.norm(m - target.data))
    canvas.save(out / "fig4.svg")
    write_csv(out / "fig4.csv", ["k", "order", "angle", "x", "y"], rows)
    deep = odot_lie_limit(s, t, 24).matrix
    return {"frobenius_gap": gaps, "gap_at_k24": float(np.linalg.norm(deep.data - target.data))}


def fig5_fixture() -> tuple[np.ndarray, np.ndarray]:
    """Prior ``diag(0.9, 0.1)``; likelihood with eigenvalues 0.9, 0.1 on the 45 degree axes."""
    r = rotation(math.pi / 4.0)
    return np.diag([0.9, 0.1]), r @ np.diag([0.9, 0.1]) @ r.T


def fig5(out_dir, steps: int = 12) -> dict[str, Any]:
    """Posterior ellipses along repeated Bayes updates."""
    out = Path(out_dir)
    prior, like = fig5_fixture()
    trace = bayes_iterate(prior, like, steps)
    canvas = Canvas(1.15, title="iterated Bayes updates")
    canvas.polyline(ellipse_points(like), "#000000", dashed=True, width=1.0)
    theta, _ = unit_circle()
    rows = []
    for k, state in enumerate(trace.states):
        pts = ellipse_points(state)
        canvas.polyline(pts, PALETTE[k % len(PALETTE)], width=1.0)
        rows.extend((k, trace.overlap[k], theta[i], pts[i, 0], pts[i, 1]) for i in range(ANGLES))
    canvas.save(out / "fig5.svg")
    write_csv(out / "fig5.csv", ["step", "overlap", "angle", "x", "y"], rows)
    return {"overlap": list(trace.overlap),
            "top_eigenvalue": [float(jacobi_eigh(s.data).eigenvalues[0]) for s in trace.states]}


def make_figure(name: str, out_dir, **kwargs) -> dict[str, Any]:
    builders = {"fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5}
    if name not in builders:
        raise ValueError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    return builders[name](out_dir, **kwargs)
