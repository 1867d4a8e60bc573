"""Fitness surface over a learning-rate x perplexity grid."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed

from ..errors import CalibrationFailure, DivergenceError
from ..tsne import TsneConfig, affinities, run_tsne
from .fitness import fitness

log = logging.getLogger(__name__)


def default_axis(count: int = 12, low: float = 1.0, high: float = 750.0) -> list:
    """Log-spaced integer values in ``[low, high]``."""
    return sorted({float(round(v)) for v in np.geomspace(low, high, count)})


@dataclass
class SweepGrid:
    learning_rates: list
    perplexities: list
    surface: np.ndarray  # len(learning_rates) x len(perplexities); NaN for failed cells

    @property
    def argmax(self):
        """``(i, j)`` of the best finite cell, or ``None`` if every cell failed."""
        if not np.any(np.isfinite(self.surface)):
            return None
        i, j = np.unravel_index(np.nanargmax(self.surface), self.surface.shape)
        return int(i), int(j)

    @property
    def best(self):
        cell = self.argmax
        if cell is None:
            return None
        i, j = cell
        return {"learning_rate": self.learning_rates[i], "perplexity": self.perplexities[j],
                "fitness": float(self.surface[i, j])}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("learning_rate,perplexity,fitness\n")
            for i, lr in enumerate(self.learning_rates):
                for j, perp in enumerate(self.perplexities):
                    fh.write(f"{float(lr)!r},{float(perp)!r},{float(self.surface[i, j])!r}\n")


def _cell(X, labels, P, config):
    if P is None:
        return math.nan
    try:
        emb = run_tsne(X, config, P=P)
    except DivergenceError as exc:
        log.warning("cell lr=%g perplexity=%g diverged at iteration %d",
                    config.learning_rate, config.perplexity, exc.iteration)
        return math.nan
    return fitness(emb.y, labels).overall


def sweep_fitness(X, labels, learning_rates, perplexities, template: TsneConfig | None = None,
                  *, seed: int | None = None, n_jobs: int = 1) -> SweepGrid:
    """Run t-SNE in every grid cell and score each embedding.

    Every cell uses the same initialization seed (``seed`` or the template's),
    so cells differ only in their hyperparameters. Cells whose perplexity is
    infeasible or whose run diverges are NaN.
    """
    if not learning_rates or not perplexities:
        raise ValueError("sweep grid axes must be non-empty")
    template = template or TsneConfig()
    if seed is not None:
        template = replace(template, seed=seed)
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)

    affinity = {}
    for perp in dict.fromkeys(perplexities):
        try:
            affinity[perp] = affinities(X, replace(template, perplexity=perp))
        except (ValueError, CalibrationFailure) as exc:
            log.warning("perplexity %g skipped: %s", perp, exc)
            affinity[perp] = None

    cells = [(lr, perp) for lr in learning_rates for perp in perplexities]
    values = Parallel(n_jobs=n_jobs)(
        delayed(_cell)(X, labels, affinity[perp], replace(template, learning_rate=lr, perplexity=perp))
        for lr, perp in cells
    )
    surface = np.array(values, dtype=np.float64).reshape(len(learning_rates), len(perplexities))
    return SweepGrid(list(learning_rates), list(perplexities), surface)
