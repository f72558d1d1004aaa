"""Region scans over the renormalized coordinates (v1, v2) at fixed u.

Every grid point fixes v3 = 1 - v1 - v2 (the Casimir constraint) and is
classified against the inner PPT set, the exact extendible set and the outer
reduced-expectation-value set.  The cheap 4x4 eigenvalue tests run first; the
SDP only runs where they disagree, which is sound because the three sets are
nested.  Output goes to CSV and optionally to a simple SVG rendering.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import feasibility, matcore, reduction

SVG_COLORS = {"R": "#1b5e90", "S": "#5aa9d6", "T": "#c6e3f2"}
_CSV_HEADER = ("v1", "v2", "in_R", "in_Sj", "in_Tj")


@dataclass(frozen=True)
class ScanResult:
    """Grid membership flags; ``in_s`` is -1 where the exact set was skipped."""

    two_j: int
    u: np.ndarray
    v1_values: np.ndarray
    v2_values: np.ndarray
    in_r: np.ndarray
    in_s: np.ndarray
    in_t: np.ndarray
    point_seconds: np.ndarray

    @property
    def j(self) -> float:
        return self.two_j / 2.0

    def area(self, which: str) -> int:
        """Number of member cells of one of the sets R, S, T."""
        flags = {"R": self.in_r, "S": self.in_s, "T": self.in_t}[which.upper()]
        return int((flags == 1).sum())

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_CSV_HEADER)
            for i1, v1 in enumerate(self.v1_values):
                for i2, v2 in enumerate(self.v2_values):
                    s = self.in_s[i1, i2]
                    writer.writerow(
                        [
                            f"{v1:.12g}",
                            f"{v2:.12g}",
                            int(self.in_r[i1, i2]),
                            "" if s < 0 else int(s),
                            int(self.in_t[i1, i2]),
                        ]
                    )

    def to_svg(self, path: str, size: int = 640, margin: int = 60) -> None:
        write_scan_svg(self, path, size=size, margin=margin)


def _point_flags(two_j: int, u: np.ndarray, v1: float, v2: float, want_s: bool, tol: float, band: float):
    v3 = 1.0 - v1 - v2
    coords = reduction.RenormalizedCoords(u=u, v=np.array([v1, v2, v3]), two_j=two_j)
    m = reduction.moments_from_coords(coords)
    rho = reduction.reconstruct_rho(m)
    rho_psd = matcore.min_eigenvalue(rho) >= -tol
    in_r = rho_psd and reduction.ppt_inner_test(rho, tol=tol)
    in_t = rho_psd and matcore.is_psd(reduction.tau(rho, two_j), tol=tol)
    if not want_s:
        return in_r, -1, in_t
    if in_r:
        return in_r, 1, in_t
    if not in_t:
        return in_r, 0, in_t
    verdict = feasibility.exact_test_direct(m, band=band)
    return in_r, 1 if verdict.accepted else 0, in_t


def _scan_rows(args):
    two_j, u, v1_chunk, v2s, want_s, tol, band = args
    n2 = len(v2s)
    r = np.zeros((len(v1_chunk), n2), dtype=np.int8)
    s = np.full((len(v1_chunk), n2), -1, dtype=np.int8)
    t = np.zeros((len(v1_chunk), n2), dtype=np.int8)
    secs = np.zeros((len(v1_chunk), n2))
    for i1, v1 in enumerate(v1_chunk):
        for i2, v2 in enumerate(v2s):
            t0 = time.perf_counter()
            fr, fs, ft = _point_flags(two_j, u, float(v1), float(v2), want_s, tol, band)
            secs[i1, i2] = time.perf_counter() - t0
            r[i1, i2] = 1 if fr else 0
            s[i1, i2] = fs
            t[i1, i2] = 1 if ft else 0
    return r, s, t, secs


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("SPINMOMENT_THREADS", "1")))
    except ValueError:
        return 1


def scan_grid(
    two_j: int,
    u,
    v1_range=(-0.2, 1.0),
    v2_range=(-0.2, 1.0),
    resolution: int = 101,
    sets=("R", "S", "T"),
    tol: float = matcore.PSD_TOL,
    band: float = feasibility.BOUNDARY_BAND,
    workers: int | None = None,
) -> ScanResult:
    """Classify a (v1, v2) grid at fixed u against the requested sets.

    R and T are always evaluated (they cost two small eigenvalue problems);
    the exact set S is skipped unless requested.  Rows are distributed across
    worker processes when ``workers`` > 1, with a deterministic merge order.
    """
    two_j = reduction._require_j_ge_1(two_j)
    if resolution < 2 or resolution > 1024:
        raise ValueError("resolution must be between 2 and 1024")
    u = np.asarray(u, dtype=float)
    if u.shape != (3,):
        raise ValueError("u must be a real 3-vector")
    want_s = "S" in {str(x).upper() for x in sets}
    v1s = np.linspace(v1_range[0], v1_range[1], resolution)
    v2s = np.linspace(v2_range[0], v2_range[1], resolution)
    workers = default_workers() if workers is None else max(1, int(workers))

    if workers == 1:
        r, s, t, secs = _scan_rows((two_j, u, v1s, v2s, want_s, tol, band))
    else:
        chunk_rows = max(1, resolution // (4 * workers))
        chunks = [
            (two_j, u, v1s[lo : lo + chunk_rows], v2s, want_s, tol, band)
            for lo in range(0, resolution, chunk_rows)
        ]
        parts_r, parts_s, parts_t, parts_sec = [], [], [], []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for pr, ps, pt, psec in pool.map(_scan_rows, chunks):
                parts_r.append(pr)
                parts_s.append(ps)
                parts_t.append(pt)
                parts_sec.append(psec)
        r = np.concatenate(parts_r)
        s = np.concatenate(parts_s)
        t = np.concatenate(parts_t)
        secs = np.concatenate(parts_sec)

    return ScanResult(
        two_j=two_j,
        u=u,
        v1_values=v1s,
        v2_values=v2s,
        in_r=r,
        in_s=s,
        in_t=t,
        point_seconds=secs,
    )


def read_scan_csv(path: str):
    """Read back a scan CSV: returns (rows, header) with numeric fields parsed.

    Each row is (v1, v2, in_r, in_s, in_t) with in_s None when it was skipped.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != _CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        for rec in reader:
            v1, v2, fr, fs, ft = rec
            rows.append(
                (float(v1), float(v2), int(fr), None if fs == "" else int(fs), int(ft))
            )
    return rows, header


def write_scan_svg(result: ScanResult, path: str, size: int = 640, margin: int = 60) -> None:
    """Render the nested regions as filled grid cells (SVG 1.1, no dependencies).

    Cell fills use the innermost membership: R inside S inside T.  Cells are
    emitted row-major with ids c-<i1>-<i2> so the drawing can be checked
    against the CSV flags.
    """
    n1 = len(result.v1_values)
    n2 = len(result.v2_values)
    cw = size / n1
    ch = size / n2
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{size + 2 * margin}" height="{size + 2 * margin}">',
        f'<rect x="{margin}" y="{margin}" width="{size}" height="{size}" '
        'fill="white" stroke="black" stroke-width="1"/>',
    ]
    for i1 in range(n1):
        for i2 in range(n2):
            if result.in_r[i1, i2] == 1:
                fill = SVG_COLORS["R"]
            elif result.in_s[i1, i2] == 1:
                fill = SVG_COLORS["S"]
            elif result.in_t[i1, i2] == 1:
                fill = SVG_COLORS["T"]
            else:
                continue
            x = margin + i1 * cw
            y = margin + size - (i2 + 1) * ch
            lines.append(
                f'<rect id="c-{i1}-{i2}" x="{x:.3f}" y="{y:.3f}" '
                f'width="{cw:.3f}" height="{ch:.3f}" fill="{fill}"/>'
            )
    j_label = f"{result.two_j // 2}" if result.two_j % 2 == 0 else f"{result.two_j}/2"
    u_label = ", ".join(f"{x:g}" for x in result.u)
    lines.append(
        f'<text x="{margin}" y="{margin - 20}" font-size="16">'
        f"moment regions at j = {j_label}, u = ({u_label})</text>"
    )
    lines.append(
        f'<text x="{margin + size / 2}" y="{size + 2 * margin - 15}" '
        f'font-size="14" text-anchor="middle">v1</text>'
    )
    lines.append(
        f'<text x="15" y="{margin + size / 2}" font-size="14" '
        f'transform="rotate(-90 15 {margin + size / 2})" text-anchor="middle">v2</text>'
    )
    for i, (name, color) in enumerate(SVG_COLORS.items()):
        x = margin + size - 150 + i * 50
        lines.append(f'<rect x="{x}" y="{margin - 32}" width="14" height="14" fill="{color}"/>')
        lines.append(f'<text x="{x + 18}" y="{margin - 20}" font-size="13">{name}</text>')
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
