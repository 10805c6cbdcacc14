"""Experiment configuration and the flat key-value text format.

One value per line under [section] headers; matrices are written row-major
as "rows cols v11 v12 ..." and vectors as bare whitespace-separated values.
The same format carries saved observer designs and external models, so an
offline synthesis result can be reused across runs.

All defaults reproduce the flagship scenario (builtin model, Q = I, R = 1,
eps = 0.001, u_max = 1, rho = sqrt(0.7), W = I, horizon 100, the standard
initial states), so a run with no config file at all is the flagship run.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields

import numpy as np

from . import controller, observer, plant
from .errors import InvalidConfig

BUILTIN_MODEL = "paper-eq58"


def _fmt_matrix(mat) -> str:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    vals = " ".join(f"{v:.17g}" for v in mat.ravel())
    return f"{mat.shape[0]} {mat.shape[1]} {vals}"


def _parse_matrix(text: str, key: str) -> np.ndarray:
    toks = text.split()
    if len(toks) < 3:
        raise InvalidConfig(f"{key}: matrix needs 'rows cols values...', got {text!r}")
    try:
        rows, cols = int(toks[0]), int(toks[1])
        vals = [float(t) for t in toks[2:]]
    except ValueError as exc:
        raise InvalidConfig(f"{key}: {exc}") from None
    if rows < 1 or cols < 1 or len(vals) != rows * cols:
        raise InvalidConfig(f"{key}: expected {rows}x{cols} = {rows * cols} values, got {len(vals)}")
    return np.array(vals).reshape(rows, cols)


def _fmt_vector(vec) -> str:
    return " ".join(f"{v:.17g}" for v in np.atleast_1d(np.asarray(vec, dtype=float)))


def _parse_vector(text: str, key: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split()]
    except ValueError as exc:
        raise InvalidConfig(f"{key}: {exc}") from None
    if not vals:
        raise InvalidConfig(f"{key}: empty vector")
    return np.array(vals)


def _parse_sections(text: str, source: str = "<config>") -> dict:
    sections: dict[str, dict[str, str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise InvalidConfig(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        if current is None:
            raise InvalidConfig(f"{source}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in sections[current]:
            raise InvalidConfig(f"{source}:{lineno}: duplicate key {key!r} in [{current}]")
        sections[current][key] = value.strip()
    return sections


@dataclass
class ExperimentConfig:
    """Everything one closed-loop experiment needs."""

    model: str = BUILTIN_MODEL          # builtin name or path to a model file
    rho: float = math.sqrt(0.7)
    W: np.ndarray = field(default_factory=lambda: np.eye(2))
    Q: np.ndarray = field(default_factory=lambda: np.eye(2))
    R: np.ndarray = field(default_factory=lambda: np.array([[1.0]]))
    eps: float = 1e-3
    u_max: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    horizon: int = 100
    signal_kind: str = plant.DSWS       # dsws | rsws | file
    seed: int = 1
    signal_file: str | None = None
    x0: np.ndarray = field(default_factory=lambda: np.array([-1.5, -0.2]))
    xhat0: np.ndarray = field(default_factory=lambda: np.array([0.5, 1.0]))
    mode: str = controller.PROPOSED
    design_file: str | None = None      # pre-synthesized observer design
    out_dir: str = "out"

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not np.array_equal(np.asarray(a), np.asarray(b)):
                    return False
            elif a != b:
                return False
        return True

    def validate(self) -> "ExperimentConfig":
        """Run the target-module validations before any computation starts."""
        if self.horizon < 1:
            raise InvalidConfig(f"horizon must be >= 1, got {self.horizon}")
        if self.signal_kind not in (plant.DSWS, plant.RSWS, "file"):
            raise InvalidConfig(f"unknown signal kind {self.signal_kind!r}")
        if self.signal_kind == "file" and not self.signal_file:
            raise InvalidConfig("signal kind 'file' needs signal_file")
        try:
            observer.ObserverSpec(rho=self.rho, W=self.W)
            controller.ControllerConfig(
                Q=self.Q, R=self.R, u_max=self.u_max, eps=self.eps, mode=self.mode
            )
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None
        for path_field in ("model", "signal_file", "design_file"):
            path = getattr(self, path_field)
            if path_field == "model" and path == BUILTIN_MODEL:
                continue
            if path is not None and not os.path.exists(path):
                raise InvalidConfig(f"{path_field}: file not found: {path}")
        return self

    # -- derived objects ---------------------------------------------------

    def load_model(self) -> plant.PolytopicModel:
        if self.model == BUILTIN_MODEL:
            return plant.example_model()
        return load_model(self.model)

    def observer_spec(self) -> observer.ObserverSpec:
        return observer.ObserverSpec(rho=self.rho, W=self.W)

    def controller_config(self) -> controller.ControllerConfig:
        return controller.ControllerConfig(
            Q=self.Q, R=self.R, u_max=self.u_max, eps=self.eps, mode=self.mode
        )

    def signal(self) -> plant.SwitchSignal:
        if self.signal_kind == plant.DSWS:
            return plant.dsws(self.horizon)
        if self.signal_kind == plant.RSWS:
            return plant.rsws(self.horizon, self.seed)
        sig = plant.load_signal(self.signal_file)
        if sig.horizon != self.horizon:
            raise InvalidConfig(
                f"signal file has {sig.horizon} steps, config wants {self.horizon}"
            )
        return sig


def render_config(cfg: ExperimentConfig) -> str:
    lines = [
        "[experiment]",
        f"model = {cfg.model}",
        f"mode = {cfg.mode}",
        f"horizon = {cfg.horizon}",
        f"out_dir = {cfg.out_dir}",
    ]
    if cfg.design_file is not None:
        lines.append(f"design_file = {cfg.design_file}")
    lines += [
        "",
        "[observer]",
        f"rho = {cfg.rho:.17g}",
        f"W = {_fmt_matrix(cfg.W)}",
        "",
        "[controller]",
        f"Q = {_fmt_matrix(cfg.Q)}",
        f"R = {_fmt_matrix(cfg.R)}",
        f"eps = {cfg.eps:.17g}",
        f"u_max = {_fmt_vector(cfg.u_max)}",
        "",
        "[signal]",
        f"kind = {cfg.signal_kind}",
        f"seed = {cfg.seed}",
    ]
    if cfg.signal_file is not None:
        lines.append(f"file = {cfg.signal_file}")
    lines += [
        "",
        "[initial]",
        f"x0 = {_fmt_vector(cfg.x0)}",
        f"xhat0 = {_fmt_vector(cfg.xhat0)}",
        "",
    ]
    return "\n".join(lines)


_KNOWN_KEYS = {
    "experiment": {"model", "mode", "horizon", "out_dir", "design_file"},
    "observer": {"rho", "W"},
    "controller": {"Q", "R", "eps", "u_max"},
    "signal": {"kind", "seed", "file"},
    "initial": {"x0", "xhat0"},
}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    sections = _parse_sections(text, source)
    for sec, keys in sections.items():
        if sec not in _KNOWN_KEYS:
            raise InvalidConfig(f"{source}: unknown section [{sec}]")
        unknown = set(keys) - _KNOWN_KEYS[sec]
        if unknown:
            raise InvalidConfig(f"{source}: unknown keys in [{sec}]: {sorted(unknown)}")
    cfg = ExperimentConfig()
    exp = sections.get("experiment", {})
    cfg.model = exp.get("model", cfg.model)
    cfg.mode = exp.get("mode", cfg.mode)
    if "horizon" in exp:
        try:
            cfg.horizon = int(exp["horizon"])
        except ValueError:
            raise InvalidConfig(f"{source}: horizon must be an integer") from None
    cfg.out_dir = exp.get("out_dir", cfg.out_dir)
    cfg.design_file = exp.get("design_file", cfg.design_file)
    obs = sections.get("observer", {})
    if "rho" in obs:
        cfg.rho = float(obs["rho"])
    if "W" in obs:
        cfg.W = _parse_matrix(obs["W"], "W")
    ctl = sections.get("controller", {})
    if "Q" in ctl:
        cfg.Q = _parse_matrix(ctl["Q"], "Q")
    if "R" in ctl:
        cfg.R = _parse_matrix(ctl["R"], "R")
    if "eps" in ctl:
        cfg.eps = float(ctl["eps"])
    if "u_max" in ctl:
        cfg.u_max = _parse_vector(ctl["u_max"], "u_max")
    sig = sections.get("signal", {})
    cfg.signal_kind = sig.get("kind", cfg.signal_kind)
    if "seed" in sig:
        cfg.seed = int(sig["seed"])
    cfg.signal_file = sig.get("file", cfg.signal_file)
    init = sections.get("initial", {})
    if "x0" in init:
        cfg.x0 = _parse_vector(init["x0"], "x0")
    if "xhat0" in init:
        cfg.xhat0 = _parse_vector(init["xhat0"], "xhat0")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config: {exc}") from None
    return parse_config(text, source=str(path))


# -- observer design files --------------------------------------------------


def render_design(design: observer.ObserverDesign) -> str:
    return "\n".join(
        [
            "[observer_design]",
            f"rho = {design.spec.rho:.17g}",
            f"W = {_fmt_matrix(design.spec.W)}",
            f"L_obs = {_fmt_matrix(design.L_obs)}",
            f"P_o = {_fmt_matrix(design.P_o)}",
            "",
        ]
    )


def save_design(design: observer.ObserverDesign, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_design(design))


def load_design(path) -> observer.ObserverDesign:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            sections = _parse_sections(fh.read(), str(path))
    except OSError as exc:
        raise InvalidConfig(f"cannot read design: {exc}") from None
    sec = sections.get("observer_design")
    if sec is None:
        raise InvalidConfig(f"{path}: missing [observer_design] section")
    try:
        spec = observer.ObserverSpec(rho=float(sec["rho"]), W=_parse_matrix(sec["W"], "W"))
        return observer.ObserverDesign(
            L_obs=_parse_matrix(sec["L_obs"], "L_obs"),
            P_o=_parse_matrix(sec["P_o"], "P_o"),
            spec=spec,
        )
    except KeyError as exc:
        raise InvalidConfig(f"{path}: missing key {exc}") from None
    except ValueError as exc:
        raise InvalidConfig(f"{path}: {exc}") from None


# -- external model files -----------------------------------------------------


def render_model(model: plant.PolytopicModel) -> str:
    lines = ["[model]", f"vertices = {model.L_g}"]
    for j, (a, b, c) in enumerate(model.vertices, start=1):
        lines.append(f"A{j} = {_fmt_matrix(a)}")
        lines.append(f"B{j} = {_fmt_matrix(b)}")
        lines.append(f"C{j} = {_fmt_matrix(c)}")
    lines.append("")
    return "\n".join(lines)


def save_model(model: plant.PolytopicModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_model(model))


def load_model(path) -> plant.PolytopicModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            sections = _parse_sections(fh.read(), str(path))
    except OSError as exc:
        raise InvalidConfig(f"cannot read model: {exc}") from None
    sec = sections.get("model")
    if sec is None:
        raise InvalidConfig(f"{path}: missing [model] section")
    try:
        count = int(sec["vertices"])
        vertices = tuple(
            (
                _parse_matrix(sec[f"A{j}"], f"A{j}"),
                _parse_matrix(sec[f"B{j}"], f"B{j}"),
                _parse_matrix(sec[f"C{j}"], f"C{j}"),
            )
            for j in range(1, count + 1)
        )
        return plant.PolytopicModel(vertices)
    except KeyError as exc:
        raise InvalidConfig(f"{path}: missing key {exc}") from None
    except (ValueError, InvalidConfig) as exc:
        raise InvalidConfig(f"{path}: {exc}") from None
