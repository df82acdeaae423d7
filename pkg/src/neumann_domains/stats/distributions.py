"""Mergeable empirical distributions with symmetry and support checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

SCHEMA_VERSION = 1
KINDS = ("continuousHistogram", "integerPMF", "CDF")


class InsufficientSamples(ValueError):
    pass


@dataclass
class EmpiricalDistribution:
    """Histogram, integer PMF or CDF tally backed by integer counts.

    * ``continuousHistogram``: ``edges`` has ``len(counts) + 1`` bin edges.
    * ``integerPMF``: ``atoms`` holds the sorted integer support points.
    * ``CDF``: ``atoms`` holds evaluation points ``c`` and ``counts[i]`` the
      number of samples strictly below ``atoms[i]``; ``samples`` normalizes.
    """

    kind: str
    counts: np.ndarray
    samples: int
    edges: np.ndarray | None = None
    atoms: np.ndarray | None = None
    center: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        if self.kind == "continuousHistogram":
            self.edges = np.asarray(self.edges, dtype=float)
            if self.edges.size != self.counts.size + 1:
                raise ValueError("histogram needs one more edge than bins")
        else:
            self.atoms = np.asarray(self.atoms, dtype=np.int64 if self.kind == "integerPMF" else float)
            if self.atoms.size != self.counts.size:
                raise ValueError("need one count per atom")

    @classmethod
    def histogram(cls, values=(), bins: int = 100, lo: float = 0.0, hi: float = 1.0,
                  center: float | None = None) -> EmpiricalDistribution:
        edges = np.linspace(lo, hi, bins + 1)
        dist = cls("continuousHistogram", np.zeros(bins, np.int64), 0, edges=edges, center=center)
        dist.add(values)
        return dist

    @classmethod
    def pmf(cls, values=(), center: float | None = None) -> EmpiricalDistribution:
        dist = cls("integerPMF", np.zeros(0, np.int64), 0, atoms=np.zeros(0, np.int64), center=center)
        dist.add(values)
        return dist

    @classmethod
    def cdf(cls, values, points, samples: int | None = None) -> EmpiricalDistribution:
        """Counts of ``values < c`` at each ``c`` in ``points``."""
        values = np.sort(np.asarray(values, dtype=float))
        points = np.asarray(points, dtype=float)
        counts = np.searchsorted(values, points, side="left")
        return cls("CDF", counts, int(values.size if samples is None else samples), atoms=points)

    def add(self, values: Iterable) -> None:
        values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
        if values.size == 0:
            return
        if self.kind == "continuousHistogram":
            lo, hi = self.edges[0], self.edges[-1]
            if np.any((values < lo) | (values > hi)) or not np.all(np.isfinite(values)):
                raise ValueError("histogram value outside its range")
            idx = np.searchsorted(self.edges, values, side="right") - 1
            idx = np.clip(idx, 0, self.counts.size - 1)
            self.counts += np.bincount(idx, minlength=self.counts.size)
        elif self.kind == "integerPMF":
            ints = values.astype(np.int64)
            if not np.array_equal(ints, values):
                raise ValueError("PMF values must be integers")
            atoms, counts = np.unique(ints, return_counts=True)
            self._merge_atoms(atoms, counts)
        else:
            raise ValueError("a CDF tally is built in one pass by EmpiricalDistribution.cdf")
        self.samples += int(values.size)

    def _merge_atoms(self, atoms: np.ndarray, counts: np.ndarray) -> None:
        all_atoms = np.union1d(self.atoms, atoms)
        merged = np.zeros(all_atoms.size, dtype=np.int64)
        merged[np.searchsorted(all_atoms, self.atoms)] += self.counts
        merged[np.searchsorted(all_atoms, atoms)] += counts
        self.atoms, self.counts = all_atoms, merged

    def merge(self, other: EmpiricalDistribution) -> EmpiricalDistribution:
        """Combined tally; associative and commutative."""
        if self.kind != other.kind:
            raise ValueError("cannot merge distributions of different kinds")
        if self.kind == "continuousHistogram":
            if not np.array_equal(self.edges, other.edges):
                raise ValueError("histogram edges differ")
            return EmpiricalDistribution(self.kind, self.counts + other.counts, self.samples + other.samples,
                                         edges=self.edges.copy(), center=self.center, meta=dict(self.meta))
        if self.kind == "integerPMF":
            out = EmpiricalDistribution(self.kind, self.counts.copy(), self.samples + other.samples,
                                        atoms=self.atoms.copy(), center=self.center, meta=dict(self.meta))
            out._merge_atoms(other.atoms, other.counts)
            return out
        if not np.array_equal(self.atoms, other.atoms):
            raise ValueError("CDF evaluation points differ")
        return EmpiricalDistribution(self.kind, self.counts + other.counts, self.samples + other.samples,
                                     atoms=self.atoms.copy(), meta=dict(self.meta))

    def probabilities(self) -> np.ndarray:
        if self.samples == 0:
            return np.zeros(self.counts.size)
        return self.counts / self.samples

    def mass(self) -> float:
        if self.kind == "CDF":
            return float(self.counts.max(initial=0) / self.samples) if self.samples else 0.0
        return math.fsum(self.probabilities())

    def mean(self) -> float:
        if self.kind == "integerPMF":
            return float(np.dot(self.atoms, self.counts) / self.samples)
        if self.kind == "continuousHistogram":
            mids = 0.5 * (self.edges[1:] + self.edges[:-1])
            return float(np.dot(mids, self.counts) / self.samples)
        raise ValueError("mean of a CDF tally is not defined here")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"version": SCHEMA_VERSION, "kind": self.kind}
        if self.center is not None:
            out["center"] = float(self.center)
        if self.kind == "continuousHistogram":
            out["bins"] = [
                {"lo": float(lo), "hi": float(hi), "count": int(c)}
                for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts)
            ]
        elif self.kind == "integerPMF":
            out["atoms"] = [{"j": int(j), "count": int(c)} for j, c in zip(self.atoms, self.counts)]
        else:
            out["points"] = [{"c": float(a), "count": int(c)} for a, c in zip(self.atoms, self.counts)]
        out["samples"] = int(self.samples)
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EmpiricalDistribution:
        version = data.get("version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported distribution schema version {version!r}")
        kind = data["kind"]
        center = data.get("center")
        meta = data.get("meta", {})
        if kind == "continuousHistogram":
            bins = data["bins"]
            edges = [b["lo"] for b in bins] + [bins[-1]["hi"]] if bins else [0.0]
            return cls(kind, [b["count"] for b in bins], data["samples"], edges=edges, center=center, meta=meta)
        if kind == "integerPMF":
            atoms = data["atoms"]
            return cls(kind, [a["count"] for a in atoms], data["samples"],
                       atoms=[a["j"] for a in atoms], center=center, meta=meta)
        if kind == "CDF":
            points = data["points"]
            return cls(kind, [p["count"] for p in points], data["samples"],
                       atoms=[p["c"] for p in points], meta=meta)
        raise ValueError(f"unknown distribution kind {kind!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> EmpiricalDistribution:
        return cls.from_dict(json.loads(text))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmpiricalDistribution):
            return NotImplemented
        same = lambda a, b: (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))
        return (self.kind == other.kind and self.samples == other.samples and np.array_equal(self.counts, other.counts)
                and same(self.edges, other.edges) and same(self.atoms, other.atoms) and self.center == other.center
                and self.meta == other.meta)


def _reflected(dist: EmpiricalDistribution, center: float) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities on the union support and their mirror images."""
    if dist.kind == "integerPMF":
        mirror = 2 * center - dist.atoms
        if not np.allclose(mirror, np.round(mirror)):
            raise ValueError("center must be an integer or half-integer for an integer PMF")
        mirror = np.round(mirror).astype(np.int64)
        support = np.union1d(dist.atoms, mirror)
        p = np.zeros(support.size)
        q = np.zeros(support.size)
        prob = dist.probabilities()
        p[np.searchsorted(support, dist.atoms)] = prob
        q[np.searchsorted(support, mirror)] = prob
        return p, q
    if dist.kind == "continuousHistogram":
        mirror_edges = 2 * center - dist.edges[::-1]
        if not np.allclose(mirror_edges, dist.edges, atol=1e-12):
            raise ValueError("histogram bins are not symmetric about the center")
        prob = dist.probabilities()
        return prob, prob[::-1]
    raise ValueError("symmetry test needs a histogram or an integer PMF")


def symmetry_test(dist: EmpiricalDistribution, center: float | None = None,
                  min_samples: int = 10_000, factor: float = 3.0) -> dict[str, Any]:
    """Total-variation distance to the reflection about ``center``.

    Passes when ``TV <= factor * sqrt(atoms / samples)``, where ``atoms`` is
    the number of support points (or occupied bins) of the distribution and
    its reflection together.
    """
    center = dist.center if center is None else center
    if center is None:
        raise ValueError("symmetry test needs a center")
    if dist.samples < min_samples:
        raise InsufficientSamples(f"{dist.samples} samples, need at least {min_samples}")
    p, q = _reflected(dist, center)
    tv = 0.5 * float(np.abs(p - q).sum())
    atoms = int(np.count_nonzero((p > 0) | (q > 0)))
    threshold = factor * math.sqrt(atoms / dist.samples)
    return {"center": center, "tv": tv, "atoms": atoms, "samples": dist.samples,
            "threshold": threshold, "passed": tv <= threshold}


def support_check(dist: EmpiricalDistribution, support) -> dict[str, Any]:
    """Mass outside the expected support.

    ``support`` is a closed interval ``(lo, hi)`` for histograms (a bin is
    outside only if it lies entirely beyond an end) or a collection of
    allowed integers for a PMF.
    """
    prob = dist.probabilities()
    if dist.kind == "continuousHistogram":
        lo, hi = support
        outside = (dist.edges[1:] < lo) | (dist.edges[:-1] > hi)
    elif dist.kind == "integerPMF":
        allowed = np.asarray(sorted(support), dtype=np.int64)
        outside = ~np.isin(dist.atoms, allowed)
    else:
        raise ValueError("support check needs a histogram or an integer PMF")
    mass = float(prob[outside].sum())
    return {"outside_mass": mass, "outside_count": int(dist.counts[outside].sum()), "passed": mass == 0.0}


def values_outside(values, lo: float, hi: float, tol: float = 1e-9) -> int:
    """Number of raw samples outside ``[lo - tol, hi + tol]``."""
    values = np.asarray(values, dtype=float)
    return int(np.count_nonzero((values < lo - tol) | (values > hi + tol)))
