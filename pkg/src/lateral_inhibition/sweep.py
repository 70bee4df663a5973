"""Patterning classification over a (p_Ri, l12) grid for the two-compartment
network."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .graph import check_equitable, two_compartment
from .params import ParameterSet
from .patterning import classify_patterning, find_fixed_points, reduced_system

HOMOGENEOUS, PATTERNED, MARGINAL, FAILED = 0, 1, 2, -1
CODE_NAMES = {HOMOGENEOUS: "homogeneous", PATTERNED: "patterned", MARGINAL: "marginal", FAILED: "failed"}

DEFAULT_P_RI = (1e-10, 1e-4)  # M
DEFAULT_L12 = (1e-4, 6e-3)  # m
DEFAULT_N = 64


def axis(lo: float, hi: float, n: int, spacing: str = "log", extra=()) -> np.ndarray:
    """Strictly increasing axis with optional extra values merged in."""
    if not (0 < lo < hi) or n < 2:
        raise ValueError("axis needs 0 < lo < hi and at least two points")
    if spacing == "log":
        base = np.geomspace(lo, hi, n)
    elif spacing == "linear":
        base = np.linspace(lo, hi, n)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    return np.unique(np.concatenate([base, np.asarray(extra, dtype=float)]))


@dataclass(frozen=True)
class SweepCell:
    l12: float  # m
    p_Ri: float  # M
    code: int
    n_fixed_points: int = 0
    middle_slope: float = float("nan")
    error: str = ""

    @property
    def label(self) -> str:
        return CODE_NAMES[self.code]


def evaluate_cell(p: ParameterSet, p_Ri: float, l12: float, width_factor: float = 1.0) -> SweepCell:
    """Classify one grid point; failures are recorded instead of raised."""
    try:
        pair = check_equitable(two_compartment(l12, width_factor=width_factor))
        report = find_fixed_points(reduced_system(pair, p.replace(p_Ri=p_Ri)))
        label, marginal = classify_patterning(report)
        code = PATTERNED if label == "patterned" else HOMOGENEOUS
        if marginal and report.middle.label == "marginal":
            code = MARGINAL
        return SweepCell(l12, p_Ri, code, len(report.points), report.middle.slope)
    except Exception as exc:  # noqa: BLE001 - the sweep must keep going
        return SweepCell(l12, p_Ri, FAILED, error=f"{type(exc).__name__}: {exc}")


@dataclass(frozen=True)
class SweepGrid:
    p_Ri: np.ndarray  # columns
    l12: np.ndarray  # rows
    codes: np.ndarray  # (len(l12), len(p_Ri))
    cells: tuple[SweepCell, ...]
    width_factor: float = 1.0

    def column(self, p_Ri: float) -> np.ndarray:
        return self.codes[:, int(np.argmin(np.abs(np.log(self.p_Ri / p_Ri))))]

    def row(self, l12: float) -> np.ndarray:
        return self.codes[int(np.argmin(np.abs(np.log(self.l12 / l12)))), :]

    def code_at(self, p_Ri: float, l12: float) -> int:
        i = int(np.argmin(np.abs(np.log(self.l12 / l12))))
        j = int(np.argmin(np.abs(np.log(self.p_Ri / p_Ri))))
        return int(self.codes[i, j])

    def to_matrix_csv(self, path) -> None:
        """Rows are l12 (um), columns p_Ri (M); values are cell codes."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l12_um", *(f"{v:.6g}" for v in self.p_Ri)])
            for l12, row in zip(self.l12, self.codes):
                w.writerow([f"{l12 * 1e6:.6g}", *(str(int(c)) for c in row)])

    def to_dict(self) -> dict:
        cells = []
        for c in self.cells:
            d = asdict(c)
            d["l12_um"] = d.pop("l12") * 1e6
            d["p_Ri_M"] = d.pop("p_Ri")
            d["label"] = c.label
            if not np.isfinite(d["middle_slope"]):
                d["middle_slope"] = None
            cells.append(d)
        return {
            "p_Ri_M": self.p_Ri.tolist(),
            "l12_um": (self.l12 * 1e6).tolist(),
            "width_factor": self.width_factor,
            "codes": {str(k): v for k, v in CODE_NAMES.items()},
            "matrix": self.codes.tolist(),
            "cells": cells,
        }


def run_sweep(p: ParameterSet, p_axis, l_axis, width_factor: float = 1.0,
              threads: int | None = None) -> SweepGrid:
    """Classify every grid cell, in parallel when ``threads`` > 1.

    Cells are independent and results are placed by index, so the output
    does not depend on the thread count.
    """
    p_axis = np.asarray(p_axis, dtype=float)
    l_axis = np.asarray(l_axis, dtype=float)
    for name, ax in (("p_Ri", p_axis), ("l12", l_axis)):
        if ax.ndim != 1 or ax.size == 0 or np.any(np.diff(ax) <= 0):
            raise ValueError(f"{name} axis must be non-empty and strictly increasing")
    jobs = [(i, j) for i in range(l_axis.size) for j in range(p_axis.size)]

    def work(ij):
        i, j = ij
        return evaluate_cell(p, float(p_axis[j]), float(l_axis[i]), width_factor)

    if threads is None or threads <= 1:
        cells = [work(ij) for ij in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(work, jobs))
    codes = np.array([c.code for c in cells], dtype=int).reshape(l_axis.size, p_axis.size)
    return SweepGrid(p_axis, l_axis, codes, tuple(cells), width_factor)


def length_cap(p: ParameterSet, p_Ri: float, width_factor: float = 1.0, l_min: float = 1e-5,
               l_max: float = 1.0, n: int = 241) -> float:
    """Shortest length beyond which no scanned length patterns.

    Returns 0 if nothing in [l_min, l_max] patterns and inf if the longest
    scanned length still does.
    """
    ls = np.geomspace(l_min, l_max, n)
    patterned = np.array([evaluate_cell(p, p_Ri, l, width_factor).code == PATTERNED for l in ls])
    if not patterned.any():
        return 0.0
    last = int(np.nonzero(patterned)[0][-1])
    if last == n - 1:
        return float("inf")
    return float(ls[last + 1])


def is_contiguous(mask) -> bool:
    """True if the True entries of a 1-D mask form one unbroken run (or none)."""
    idx = np.nonzero(np.asarray(mask, dtype=bool))[0]
    return idx.size == 0 or bool(idx[-1] - idx[0] + 1 == idx.size)
