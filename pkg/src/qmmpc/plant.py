"""Switched polytopic plant, the built-in three-vertex example, and the
two switching-signal generators (deterministic cycle and seeded random).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UnknownMode

DSWS = "dsws"
RSWS = "rsws"

# Dwell length of the deterministic switching cycle: mode 1 on [0, 25),
# mode 2 on [25, 50), mode 3 on [50, 75), then the cycle repeats.
DSWS_DWELL = 25


@dataclass(frozen=True)
class PolytopicModel:
    """Vertex systems (A_j, B_j, C_j), j = 1..L_g, all sharing dimensions."""

    vertices: tuple

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("a model needs at least one vertex")
        norm = []
        shapes = None
        for j, (a, b, c) in enumerate(self.vertices, start=1):
            a = np.asarray(a, dtype=float)
            b = np.asarray(b, dtype=float)
            c = np.asarray(c, dtype=float)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise DimensionMismatch(f"vertex {j}: A must be square, got {a.shape}")
            n_x = a.shape[0]
            if b.ndim != 2 or b.shape[0] != n_x:
                raise DimensionMismatch(f"vertex {j}: B must be (n_x, n_u), got {b.shape}")
            if c.ndim != 2 or c.shape[1] != n_x:
                raise DimensionMismatch(f"vertex {j}: C must be (n_y, n_x), got {c.shape}")
            if shapes is None:
                shapes = (a.shape, b.shape, c.shape)
            elif shapes != (a.shape, b.shape, c.shape):
                raise DimensionMismatch(f"vertex {j}: dimensions differ from vertex 1")
            norm.append((a, b, c))
        object.__setattr__(self, "vertices", tuple(norm))

    @property
    def L_g(self) -> int:
        return len(self.vertices)

    @property
    def n_x(self) -> int:
        return self.vertices[0][0].shape[0]

    @property
    def n_u(self) -> int:
        return self.vertices[0][1].shape[1]

    @property
    def n_y(self) -> int:
        return self.vertices[0][2].shape[0]

    def vertex(self, s: int):
        """Vertex matrices for 1-based mode index s."""
        if not 1 <= int(s) <= self.L_g:
            raise UnknownMode(f"mode {s} outside 1..{self.L_g}")
        return self.vertices[int(s) - 1]


@dataclass(frozen=True)
class SwitchSignal:
    """Mode index per step, 1-based."""

    modes: np.ndarray
    kind: str
    seed: int | None = None

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.int64)
        if modes.ndim != 1 or modes.size < 1:
            raise ValueError("signal must be a non-empty 1-D sequence of mode indices")
        if np.any(modes < 1):
            raise UnknownMode("mode indices are 1-based")
        object.__setattr__(self, "modes", modes)

    @property
    def horizon(self) -> int:
        return int(self.modes.size)


def example_model() -> PolytopicModel:
    """The built-in three-vertex example plant.

    A_i = [[0.8500, -0.0743*alpha_i], [0.0811*beta_i, 0.9050]],
    B_i = gamma_i * [0.1050, 0.0092]^T, C_i = [0.65, -0.50], with
    (alpha, beta, gamma) paired vertex-wise as (1, 1, 0.33),
    (1.7, 1.5, 0.66), (2.4, 4.3, 1).
    """
    alphas = (1.0, 1.7, 2.4)
    betas = (1.0, 1.5, 4.3)
    gammas = (0.33, 0.66, 1.0)
    b_base = np.array([[0.1050], [0.0092]])
    c_row = np.array([[0.65, -0.50]])
    vertices = []
    for alpha, beta, gamma in zip(alphas, betas, gammas):
        a = np.array([[0.8500, -0.0743 * alpha], [0.0811 * beta, 0.9050]])
        vertices.append((a, gamma * b_base, c_row))
    return PolytopicModel(tuple(vertices))


def step(model: PolytopicModel, s: int, x, u):
    """One plant step: returns (x_next, y) with y read from the pre-update state."""
    a, b, c = model.vertex(s)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (model.n_x,):
        raise DimensionMismatch(f"state must have shape ({model.n_x},), got {x.shape}")
    if u.shape != (model.n_u,):
        raise DimensionMismatch(f"input must have shape ({model.n_u},), got {u.shape}")
    return a @ x + b @ u, c @ x


def dsws(horizon: int) -> SwitchSignal:
    """Deterministic switching signal: 25-step dwell cycling 1, 2, 3."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    k = np.arange(horizon)
    return SwitchSignal((k // DSWS_DWELL) % 3 + 1, DSWS)


def rsws(horizon: int, seed: int) -> SwitchSignal:
    """Random switching signal: i.i.d. uniform over {1, 2, 3}.

    Drawn from numpy's PCG64 generator, so a given seed reproduces the
    same sequence on every platform.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    return SwitchSignal(rng.integers(1, 4, size=horizon), RSWS, seed=int(seed))


def save_signal(signal: SwitchSignal, path) -> None:
    """One mode index per line."""
    with open(path, "w", encoding="ascii") as fh:
        for m in signal.modes:
            fh.write(f"{int(m)}\n")


def load_signal(path) -> SwitchSignal:
    with open(path, "r", encoding="ascii") as fh:
        modes = [int(line) for line in fh if line.strip()]
    return SwitchSignal(np.array(modes, dtype=np.int64), "file")
