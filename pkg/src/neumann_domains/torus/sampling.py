"""Random eigenspace fields with redraw of non-Morse and non-Morse-Smale draws.

Draw ``i`` of a run with seed ``s`` uses its own generator spawned from
``SeedSequence(s)``, and draws are accepted in index order, so the accepted
set does not depend on how many worker processes computed it.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .complex import MorseComplex, NonMorseSmale, build_complex
from .critical import CriticalPointSearchError, NonMorseField
from .field import TorusField, random_field
from .tracing import TRACE_TOL, TracingError

# draws with these outcomes are redrawn; anything else is a bug and propagates
REJECTED = (NonMorseField, CriticalPointSearchError, NonMorseSmale, TracingError)


def draw_rng(seed: int, draw: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(draw,)))


def draw_field(norm: int, seed: int, draw: int) -> TorusField:
    return random_field(norm, draw_rng(seed, draw))


@dataclass
class Rejection:
    draw: int
    reason: str
    message: str


@dataclass
class SampleRun:
    norm: int
    seed: int
    complexes: list[MorseComplex] = field(default_factory=list)
    draws: list[int] = field(default_factory=list)  # draw index of each accepted complex
    rejections: list[Rejection] = field(default_factory=list)

    @property
    def attempted(self) -> int:
        return len(self.draws) + len(self.rejections)

    @property
    def rejection_rate(self) -> float:
        return len(self.rejections) / self.attempted if self.attempted else 0.0

    def rejection_report(self) -> dict:
        return {"attempted": self.attempted, "accepted": len(self.draws),
                "rejected": len(self.rejections), "rate": self.rejection_rate,
                "reasons": dict(Counter(r.reason for r in self.rejections))}


def _one(args):
    norm, seed, draw, nodal, tol = args
    f = draw_field(norm, seed, draw)
    try:
        return draw, build_complex(f, nodal=nodal, tol=tol), None
    except REJECTED as exc:
        return draw, None, Rejection(draw, type(exc).__name__, str(exc))


def sample_complexes(norm: int, count: int, seed: int, *, nodal: bool = True, tol: float = TRACE_TOL,
                     jobs: int = 1, max_draws: int | None = None, redraw: bool = True) -> SampleRun:
    """The first ``count`` draws of the ensemble whose complex can be assembled.

    With ``redraw=False`` the first rejected draw raises instead.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    max_draws = max_draws if max_draws is not None else 4 * count + 10
    run = SampleRun(norm, seed)
    nxt = 0
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    try:
        while len(run.draws) < count:
            if nxt >= max_draws:
                raise RuntimeError(f"only {len(run.draws)} of {count} fields accepted in {max_draws} draws")
            batch = range(nxt, min(nxt + max(count - len(run.draws), jobs), max_draws))
            nxt = batch.stop
            args = [(norm, seed, d, nodal, tol) for d in batch]
            results = pool.map(_one, args) if pool else map(_one, args)
            for draw, cx, rej in results:
                if len(run.draws) == count:
                    break
                if rej is not None:
                    if not redraw:
                        raise RuntimeError(f"draw {draw} rejected: {rej.reason}: {rej.message}")
                    run.rejections.append(rej)
                else:
                    run.draws.append(draw)
                    run.complexes.append(cx)
    finally:
        if pool:
            pool.shutdown()
    return run
