"""Compartment networks, weighted Laplacians and two-class equitable partitions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .params import DomainError

D_AHL_25C = 4.9e-10  # m^2/s, AHL in water at 25 C
CLASSES = ("A", "B")


def edge_weight(length: float, width: float, diffusivity: float = D_AHL_25C) -> float:
    """Exchange rate (1/s) of a channel of given length and width.

    A square compartment of side ``width`` joined by a channel of the same
    width gives ``d = D / (l * w)``; with ``w = l / k`` this is ``k D / l**2``.
    """
    if not (length > 0 and width > 0 and diffusivity > 0):
        raise DomainError(
            f"channel geometry must be positive (l={length}, w={width}, D={diffusivity})"
        )
    return diffusivity / (length * width)


@dataclass(frozen=True)
class Channel:
    u: str
    v: str
    length: float  # m
    width: float | None = None  # m; falls back to the graph-level rule


@dataclass(frozen=True)
class CompartmentGraph:
    """Undirected compartment network with A/B vertex classes.

    ``width`` is a single compartment/channel width shared by all channels.
    When it is None each channel uses ``w = l / width_factor``.
    """

    vertices: tuple[tuple[str, str], ...]
    channels: tuple[Channel, ...] = ()
    width: float | None = None
    width_factor: float = 1.0
    diffusivity: float = D_AHL_25C

    def __post_init__(self) -> None:
        ids = [v for v, _ in self.vertices]
        if len(set(ids)) != len(ids):
            raise ValueError("vertex ids must be unique")
        for vid, cls in self.vertices:
            if cls not in CLASSES:
                raise ValueError(f"vertex {vid!r} has class {cls!r}, expected A or B")
        known = set(ids)
        seen = set()
        for ch in self.channels:
            if ch.u not in known or ch.v not in known:
                raise ValueError(f"channel {ch.u}-{ch.v} references an unknown vertex")
            if ch.u == ch.v:
                raise ValueError(f"self-loop on {ch.u!r}")
            key = frozenset((ch.u, ch.v))
            if key in seen:
                raise ValueError(f"duplicate channel {ch.u}-{ch.v}")
            seen.add(key)
            if not ch.length > 0:
                raise DomainError(f"channel {ch.u}-{ch.v} has non-positive length")
        if self.width is not None and not self.width > 0:
            raise DomainError("width must be positive")
        if not (self.width_factor > 0 and self.diffusivity > 0):
            raise DomainError("width_factor and diffusivity must be positive")

    @classmethod
    def build(
        cls,
        vertices: Mapping[str, str] | Iterable[tuple[str, str]],
        channels: Iterable[tuple[str, str, float] | Channel],
        **kw,
    ) -> "CompartmentGraph":
        verts = tuple(vertices.items()) if isinstance(vertices, Mapping) else tuple(vertices)
        chans = tuple(c if isinstance(c, Channel) else Channel(*c) for c in channels)
        return cls(verts, chans, **kw)

    @property
    def order(self) -> list[str]:
        """Vertex ids with every A vertex before every B vertex."""
        return [v for v, c in self.vertices if c == "A"] + [v for v, c in self.vertices if c == "B"]

    @property
    def n_A(self) -> int:
        return sum(1 for _, c in self.vertices if c == "A")

    @property
    def n_B(self) -> int:
        return sum(1 for _, c in self.vertices if c == "B")

    @property
    def class_of(self) -> dict[str, str]:
        return dict(self.vertices)

    def channel_width(self, ch: Channel) -> float:
        if ch.width is not None:
            return ch.width
        if self.width is not None:
            return self.width
        return ch.length / self.width_factor

    def weights(self, scale: Callable[[Channel], float] | None = None) -> dict[tuple[str, str], float]:
        out = {}
        for ch in self.channels:
            d = edge_weight(ch.length, self.channel_width(ch), self.diffusivity)
            if scale is not None:
                d *= scale(ch)
            out[(ch.u, ch.v)] = d
        return out


def two_compartment(length: float, width_factor: float = 1.0, width: float | None = None,
                    diffusivity: float = D_AHL_25C) -> CompartmentGraph:
    """One A and one B compartment joined by a single channel."""
    return CompartmentGraph.build(
        [("A1", "A"), ("B1", "B")], [("A1", "B1", length)],
        width=width, width_factor=width_factor, diffusivity=diffusivity,
    )


def parallelogram(l_13: float, l_14: float, width: float, diffusivity: float = D_AHL_25C,
                  l_23: float | None = None, l_24: float | None = None) -> CompartmentGraph:
    """Two A and two B compartments with channels A1-B3, A1-B4, A2-B3, A2-B4.

    Opposite channels share a length by default (``l_24 = l_13``,
    ``l_23 = l_14``), which makes the A/B partition equitable.
    """
    l_23 = l_14 if l_23 is None else l_23
    l_24 = l_13 if l_24 is None else l_24
    return CompartmentGraph.build(
        [("A1", "A"), ("A2", "A"), ("B3", "B"), ("B4", "B")],
        [("A1", "B3", l_13), ("A1", "B4", l_14), ("A2", "B3", l_23), ("A2", "B4", l_24)],
        width=width, diffusivity=diffusivity,
    )


def build_laplacian(g: CompartmentGraph, scale: Callable[[Channel], float] | None = None) -> np.ndarray:
    """Weighted Laplacian in A-first vertex order (rows sum to zero)."""
    idx = {v: i for i, v in enumerate(g.order)}
    n = len(idx)
    L = np.zeros((n, n))
    for (u, v), d in g.weights(scale).items():
        i, j = idx[u], idx[v]
        L[i, j] += d
        L[j, i] += d
    # diagonal from the off-diagonal row sums so each row sums to zero exactly
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


class NotEquitable(Exception):
    """The A/B partition is not equitable; carries the worst offending pair."""

    def __init__(self, vertex: str, other: str, target_class: str, discrepancy: float):
        self.vertex = vertex
        self.other = other
        self.target_class = target_class
        self.discrepancy = discrepancy
        super().__init__(
            f"partition not equitable: weight from {vertex!r} into class {target_class} "
            f"differs from {other!r} by relative {discrepancy:.3g}"
        )


@dataclass(frozen=True)
class LaplacianPair:
    L: np.ndarray
    Lbar: np.ndarray
    class_map: Mapping[str, int]
    n_A: int
    n_B: int
    order: Sequence[str] = field(default_factory=tuple)

    @property
    def d_AB(self) -> float:
        """Total weight from any A vertex into class B."""
        return float(self.Lbar[0, 1])

    @property
    def d_BA(self) -> float:
        return float(self.Lbar[1, 0])


def class_row_sums(L: np.ndarray, n_A: int) -> np.ndarray:
    """Row sums of the off-diagonal class blocks: [A->B for A rows, B->A for B rows]."""
    return np.concatenate([L[:n_A, n_A:].sum(axis=1), L[n_A:, :n_A].sum(axis=1)])


def check_equitable(g: CompartmentGraph, tol: float = 1e-9,
                    L: np.ndarray | None = None) -> LaplacianPair:
    """Verify the A/B partition is equitable and return the quotient Laplacian.

    Raises NotEquitable when, within a class, the summed weight into the other
    class varies by more than ``tol`` relative to its largest value.
    """
    if L is None:
        L = build_laplacian(g)
    n_A, n_B = g.n_A, g.n_B
    if n_A == 0 or n_B == 0:
        raise ValueError("both classes need at least one compartment")
    order = g.order
    sums = class_row_sums(L, n_A)
    dbar = []
    for lo, hi, target in ((0, n_A, "B"), (n_A, n_A + n_B, "A")):
        s = sums[lo:hi]
        ref = np.max(np.abs(s))
        if ref == 0:
            dbar.append(0.0)
            continue
        worst = int(np.argmax(np.abs(s - s[0])))
        rel = abs(s[worst] - s[0]) / ref
        if rel > tol:
            raise NotEquitable(order[lo + worst], order[lo], target, rel)
        dbar.append(float(s.mean()))
    d_ab, d_ba = dbar
    Lbar = np.array([[-d_ab, d_ab], [d_ba, -d_ba]])
    class_map = {v: (0 if i < n_A else 1) for i, v in enumerate(order)}
    return LaplacianPair(L=L, Lbar=Lbar, class_map=class_map, n_A=n_A, n_B=n_B, order=tuple(order))


def sender_first(L: np.ndarray, n_A: int, direction: str) -> np.ndarray:
    """Laplacian reordered so the sending class comes first.

    ``"AB"`` keeps the A-first order; ``"BA"`` puts B vertices first, which
    turns the Y transceiver into the same shape as the X one.
    """
    if direction == "AB":
        return L
    if direction != "BA":
        raise ValueError(f"direction must be 'AB' or 'BA', got {direction!r}")
    n = L.shape[0]
    perm = np.r_[np.arange(n_A, n), np.arange(n_A)]
    return L[np.ix_(perm, perm)]
