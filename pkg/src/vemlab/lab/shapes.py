"""Built-in reference polygons for the laboratory."""

from __future__ import annotations

import numpy as np

SHAPES = ("triangle", "square", "pentagon", "lhex", "thin")


def shape_vertices(name: str, aspect: float = 4.0) -> np.ndarray:
    """Counter-clockwise vertices of a built-in shape.

    ``thin`` is the rectangle [0, aspect] x [0, 1].
    """
    if name == "triangle":
        v = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    elif name == "square":
        v = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    elif name == "pentagon":
        ang = 2 * np.pi * np.arange(5) / 5 + np.pi / 2
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    elif name == "lhex":
        v = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]
    elif name == "thin":
        if not aspect > 0:
            raise ValueError("aspect must be positive")
        v = [(0.0, 0.0), (float(aspect), 0.0), (float(aspect), 1.0), (0.0, 1.0)]
    else:
        raise ValueError(f"unknown shape {name!r}; choose from {', '.join(SHAPES)}")
    return np.array(v, dtype=float)
