"""Seeded phase-state sampling."""

from __future__ import annotations

import numpy as np

DEFAULT_BOX = 2.0
DEFAULT_RADII = (0.1, 1.0, 10.0)


def sample_states(rng: np.random.Generator, count: int, algebra, box: float = DEFAULT_BOX,
                  radii=DEFAULT_RADII):
    """``W`` uniform in ``[-box, box]^n``; ``V`` uniform on spheres of the given radii.

    Radii are assigned round-robin so every radius receives ``count/len(radii)``
    states.  Spheres are for the algebra's inner product.
    """
    n = algebra.dim
    W = rng.uniform(-box, box, size=(count, n))
    Z = rng.standard_normal(size=(count, n))
    Z /= np.sqrt(algebra.inner(Z, Z))[:, None]
    r = np.asarray(radii, dtype=float)[np.arange(count) % len(radii)]
    return W, Z * r[:, None]
