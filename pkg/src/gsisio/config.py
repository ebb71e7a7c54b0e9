"""Scenario configuration: a small line-oriented key = value format.

Syntax rules:

  * one `key = value` binding per logical line
  * `#` starts a comment (outside double quotes)
  * values: numbers, true/false, double-quoted strings, and nested
    bracket arrays like [[0.1, 0.2], [0.3, 0.4]]
  * a line whose brackets have not closed continues on the next line

Field formulas (f1 .. fn, g1 .. gl) are quoted expressions over
x1 .. xn; known-input and unknown-input signals (u1 .., d1 ..) are
quoted expressions over the time index k. Dimensions are inferred from
the data and cross-checked. Jacobian rectangles may be given
explicitly or estimated by sampling when omitted; Lipschitz constants
default to the induced norm of the rectangle's absolute envelope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .affine_abstraction import estimate_jacobian_bounds
from .expressions import (
    ExpressionAst,
    ParseError,
    evaluate,
    parse_expression,
    parse_time_expression,
)
from .interval_core import IntervalVector
from .mixed_monotone import NonlinearField
from .observer import SystemModel

__all__ = [
    "ConfigError",
    "EXAMPLE_CONFIG",
    "ScenarioConfig",
    "build_model",
    "load_scenario",
    "parse_config_text",
    "parse_scenario",
]


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


def _strip_comment(line: str) -> str:
    in_quote = False
    for i, c in enumerate(line):
        if c == '"':
            in_quote = not in_quote
        elif c == "#" and not in_quote:
            return line[:i]
    return line


def _logical_lines(text: str):
    """Yield (line_number, content) with bracket-open continuation."""
    pending = ""
    pending_no = 0
    for no, raw in enumerate(text.splitlines(), start=1):
        chunk = _strip_comment(raw).strip()
        if not chunk and not pending:
            continue
        if pending:
            pending = pending + " " + chunk
        else:
            pending, pending_no = chunk, no
        if pending.count("[") > pending.count("]"):
            continue
        if pending:
            yield pending_no, pending
        pending = ""
    if pending:
        yield pending_no, pending


def _parse_array(text: str, line_no: int):
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def value():
        nonlocal pos
        skip_ws()
        if pos >= len(text):
            raise ConfigError(f"line {line_no}: unterminated array")
        if text[pos] == "[":
            pos += 1
            items = []
            skip_ws()
            if pos < len(text) and text[pos] == "]":
                pos += 1
                return items
            while True:
                items.append(value())
                skip_ws()
                if pos < len(text) and text[pos] == ",":
                    pos += 1
                    continue
                if pos < len(text) and text[pos] == "]":
                    pos += 1
                    return items
                raise ConfigError(
                    f"line {line_no}: expected ',' or ']' in array"
                )
        start = pos
        while pos < len(text) and text[pos] not in ",]\t ":
            pos += 1
        token = text[start:pos]
        try:
            return float(token)
        except ValueError:
            raise ConfigError(
                f"line {line_no}: bad number {token!r} in array"
            ) from None

    out = value()
    skip_ws()
    if pos != len(text):
        raise ConfigError(f"line {line_no}: trailing text after array")
    return out


def _parse_value(text: str, line_no: int):
    if text.startswith('"'):
        if not (text.endswith('"') and len(text) >= 2):
            raise ConfigError(f"line {line_no}: unterminated string")
        return text[1:-1]
    if text.startswith("["):
        return _parse_array(text, line_no)
    if text in ("true", "false"):
        return text == "true"
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {line_no}: cannot parse value {text!r}") from None


def parse_config_text(text: str) -> dict:
    """Parse raw config text into a flat {key: value} mapping."""
    out: dict = {}
    for no, line in _logical_lines(text):
        if "=" not in line:
            raise ConfigError(f"line {no}: expected 'key = value'")
        key, _, rest = line.partition("=")
        key = key.strip()
        rest = rest.strip()
        if not key or not key.replace("_", "").isalnum():
            raise ConfigError(f"line {no}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"line {no}: duplicate key {key!r}")
        if not rest:
            raise ConfigError(f"line {no}: missing value for {key!r}")
        out[key] = _parse_value(rest, no)
    return out


def _indexed_series(raw: dict, prefix: str) -> list[str]:
    found = {}
    for key, val in raw.items():
        if key.startswith(prefix) and key[len(prefix) :].isdigit():
            found[int(key[len(prefix) :])] = (key, val)
    if not found:
        return []
    exprs = []
    for i in range(1, max(found) + 1):
        if i not in found:
            raise ConfigError(f"missing {prefix}{i} (series must be contiguous)")
        key, val = found[i]
        if not isinstance(val, str):
            raise ConfigError(f"{key} must be a quoted expression")
        exprs.append(val)
    return exprs


def _matrix(raw: dict, key: str, rows: int, cols: int) -> np.ndarray:
    if key not in raw:
        raise ConfigError(f"missing required matrix {key!r}")
    try:
        m = np.array(raw[key], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a numeric array") from None
    if m.ndim == 1 and cols == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.shape != (rows, cols):
        raise ConfigError(f"{key} must be a {rows} x {cols} matrix, got {m.shape}")
    return m


def _vector(raw: dict, key: str, size: int) -> np.ndarray:
    if key not in raw:
        raise ConfigError(f"missing required vector {key!r}")
    v = np.asarray(raw[key], dtype=float).reshape(-1)
    if v.size != size:
        raise ConfigError(f"{key} must have {size} entries, got {v.size}")
    return v


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: dimensions, formulas, matrices, run options."""

    n: int
    m: int
    p: int
    l: int
    f_sources: list[str]
    g_sources: list[str]
    f_asts: list[ExpressionAst] = field(repr=False)
    g_asts: list[ExpressionAst] = field(repr=False)
    u_asts: list[ExpressionAst] = field(repr=False)
    d_asts: list[ExpressionAst] = field(repr=False)
    B: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)
    G: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    w_bounds: IntervalVector = field(repr=False)
    v_bounds: IntervalVector = field(repr=False)
    x0_bounds: IntervalVector = field(repr=False)
    jac_f: tuple[np.ndarray, np.ndarray] | None = field(repr=False)
    jac_g: tuple[np.ndarray, np.ndarray] | None = field(repr=False)
    lipschitz_f: float | None
    lipschitz_g: float | None
    horizon: int = 100
    seed: int = 0
    bounding: str = "corollary"

    def u_signal(self) -> Callable[[int], np.ndarray]:
        asts = self.u_asts

        def u_of(k: int) -> np.ndarray:
            env = {"k": float(k)}
            return np.array([evaluate(a, env) for a in asts], dtype=float)

        return u_of

    def d_signal(self) -> Callable[[int], np.ndarray]:
        asts = self.d_asts

        def d_of(k: int) -> np.ndarray:
            env = {"k": float(k)}
            return np.array([evaluate(a, env) for a in asts], dtype=float)

        return d_of


def parse_scenario(text: str) -> ScenarioConfig:
    raw = parse_config_text(text)

    f_sources = _indexed_series(raw, "f")
    g_sources = _indexed_series(raw, "g")
    if not f_sources:
        raise ConfigError("no state formulas f1, f2, ... found")
    if not g_sources:
        raise ConfigError("no output formulas g1, g2, ... found")
    n = len(f_sources)
    l = len(g_sources)

    def _parse_state_expr(key: str, src: str) -> ExpressionAst:
        try:
            return parse_expression(src, n)
        except ParseError as exc:
            raise ConfigError(f"{key}: {exc}") from exc

    f_asts = [_parse_state_expr(f"f{i+1}", s) for i, s in enumerate(f_sources)]
    g_asts = [_parse_state_expr(f"g{i+1}", s) for i, s in enumerate(g_sources)]

    b_probe = raw.get("B")
    if b_probe is None:
        raise ConfigError("missing required matrix 'B'")
    m = np.atleast_2d(np.asarray(b_probe, dtype=float)).shape[1]
    g_probe = raw.get("G")
    if g_probe is None:
        raise ConfigError("missing required matrix 'G'")
    p = np.atleast_2d(np.asarray(g_probe, dtype=float)).shape[1]

    for key, want in (("n", n), ("m", m), ("p", p), ("l", l)):
        if key in raw and int(raw[key]) != want:
            raise ConfigError(
                f"declared {key} = {int(raw[key])} conflicts with inferred {want}"
            )

    B = _matrix(raw, "B", n, m)
    D = _matrix(raw, "D", l, m)
    G = _matrix(raw, "G", n, p)
    H = _matrix(raw, "H", l, p)

    def _bounds(prefix: str, size: int) -> IntervalVector:
        lo = _vector(raw, f"{prefix}_lower", size)
        hi = _vector(raw, f"{prefix}_upper", size)
        try:
            return IntervalVector(lo, hi)
        except ValueError as exc:
            raise ConfigError(f"{prefix} bounds: {exc}") from exc

    w_bounds = _bounds("w", n)
    v_bounds = _bounds("v", l)
    x0_bounds = _bounds("x0", n)

    def _jac(tag: str, rows: int) -> tuple[np.ndarray, np.ndarray] | None:
        lo_key, hi_key = f"jacobian_{tag}_lower", f"jacobian_{tag}_upper"
        if lo_key not in raw and hi_key not in raw:
            return None
        lo = _matrix(raw, lo_key, rows, n)
        hi = _matrix(raw, hi_key, rows, n)
        if np.any(lo > hi):
            raise ConfigError(f"jacobian_{tag} bounds are inverted somewhere")
        return lo, hi

    jac_f = _jac("f", n)
    jac_g = _jac("g", l)

    def _scalar(key: str) -> float | None:
        if key not in raw:
            return None
        val = raw[key]
        if not isinstance(val, float):
            raise ConfigError(f"{key} must be a number")
        if val < 0:
            raise ConfigError(f"{key} must be nonnegative")
        return val

    u_sources = _indexed_series(raw, "u")
    d_sources = _indexed_series(raw, "d")
    if u_sources and len(u_sources) != m:
        raise ConfigError(f"expected {m} input signals u1..., got {len(u_sources)}")
    if d_sources and len(d_sources) != p:
        raise ConfigError(f"expected {p} input signals d1..., got {len(d_sources)}")
    if not u_sources:
        u_sources = ["0"] * m
    if not d_sources:
        d_sources = ["0"] * p

    def _parse_time(key: str, src: str) -> ExpressionAst:
        try:
            return parse_time_expression(src)
        except ParseError as exc:
            raise ConfigError(f"{key}: {exc}") from exc

    u_asts = [_parse_time(f"u{i+1}", s) for i, s in enumerate(u_sources)]
    d_asts = [_parse_time(f"d{i+1}", s) for i, s in enumerate(d_sources)]

    horizon = int(raw.get("horizon", 100))
    if horizon < 1:
        raise ConfigError("horizon must be at least 1")
    seed = int(raw.get("seed", 0))
    bounding = raw.get("bounding", "corollary")
    if bounding not in ("corollary", "embed"):
        raise ConfigError(f"bounding must be 'corollary' or 'embed', got {bounding!r}")

    return ScenarioConfig(
        n=n,
        m=m,
        p=p,
        l=l,
        f_sources=f_sources,
        g_sources=g_sources,
        f_asts=f_asts,
        g_asts=g_asts,
        u_asts=u_asts,
        d_asts=d_asts,
        B=B,
        D=D,
        G=G,
        H=H,
        w_bounds=w_bounds,
        v_bounds=v_bounds,
        x0_bounds=x0_bounds,
        jac_f=jac_f,
        jac_g=jac_g,
        lipschitz_f=_scalar("lipschitz_f"),
        lipschitz_g=_scalar("lipschitz_g"),
        horizon=horizon,
        seed=seed,
        bounding=bounding,
    )


def load_scenario(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_scenario(text)


def _field_evaluator(asts: list[ExpressionAst], n: int):
    def ev(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            env = {f"x{i + 1}": x[i] for i in range(n)}
            return np.array([evaluate(a, env) for a in asts], dtype=float)
        env = {f"x{i + 1}": x[..., i] for i in range(n)}
        shape = x.shape[:-1]
        cols = [
            np.broadcast_to(np.asarray(evaluate(a, env), dtype=float), shape)
            for a in asts
        ]
        return np.stack(cols, axis=-1)

    return ev


def _estimation_box(cfg: ScenarioConfig) -> IntervalVector:
    # widen the initial box a little so the sampled rectangle stays
    # honest during the transient, when framers overshoot it
    mid = cfg.x0_bounds.midpoint()
    half = 0.5 * cfg.x0_bounds.width
    pad = 1.5 * half + 0.5
    return IntervalVector(mid - pad, mid + pad)


def build_model(cfg: ScenarioConfig) -> SystemModel:
    """Instantiate the observer-facing system from a scenario."""
    f_eval = _field_evaluator(cfg.f_asts, cfg.n)
    g_eval = _field_evaluator(cfg.g_asts, cfg.n)

    if cfg.jac_f is not None:
        f_lo, f_hi = cfg.jac_f
    else:
        f_lo, f_hi = estimate_jacobian_bounds(f_eval, _estimation_box(cfg))
    if cfg.jac_g is not None:
        g_lo, g_hi = cfg.jac_g
    else:
        g_lo, g_hi = estimate_jacobian_bounds(g_eval, _estimation_box(cfg))

    lip_f = cfg.lipschitz_f
    if lip_f is None:
        lip_f = float(np.linalg.norm(np.maximum(np.abs(f_lo), np.abs(f_hi)), 2))
    lip_g = cfg.lipschitz_g
    if lip_g is None:
        lip_g = float(np.linalg.norm(np.maximum(np.abs(g_lo), np.abs(g_hi)), 2))

    f_field = NonlinearField(
        dimension_in=cfg.n,
        dimension_out=cfg.n,
        evaluator=f_eval,
        lipschitz_constant=lip_f,
        jacobian_lower=f_lo,
        jacobian_upper=f_hi,
    )
    g_field = NonlinearField(
        dimension_in=cfg.n,
        dimension_out=cfg.l,
        evaluator=g_eval,
        lipschitz_constant=lip_g,
        jacobian_lower=g_lo,
        jacobian_upper=g_hi,
    )
    return SystemModel(
        f=f_field,
        g=g_field,
        B=cfg.B,
        D=cfg.D,
        G=cfg.G,
        H=cfg.H,
        w_bounds=cfg.w_bounds,
        v_bounds=cfg.v_bounds,
        x0_bounds=cfg.x0_bounds,
    )


EXAMPLE_CONFIG = """\
# Bundled example model: two states, two outputs, two unknown inputs,
# one known input channel (held at zero), rank-deficient feedthrough.
# Note: [G; H] has full column rank, so the gain family exists, but
# H itself has rank 1 and G does not annihilate the null space of H.
# The observer existence condition therefore fails by structure and
# `gsisio run` refuses this scenario with exit code 3. It is bundled
# as the reference case for `gsisio gains`, which prints the full
# diagnosis.

f1 = "0.6*x1 - 0.12*x2 + 1.1*sin(0.3*x2 - 0.2*x1)"
f2 = "-0.2*x1 - 0.14*x2"
g1 = "0.2*x1 + 0.65*x2 + 0.8*sin(0.3*x1 + 0.2*x2)"
g2 = "sin(x1)"

B = [[0.0], [0.0]]
D = [[0.0], [0.0]]
G = [[0.0, -0.1], [0.2, -0.2]]
H = [[-0.1, 0.3], [0.25, -0.75]]

w_lower = [-0.2, -0.2]
w_upper = [0.2, 0.2]
v_lower = [-0.2, -0.2]
v_upper = [0.2, 0.2]
x0_lower = [-1.1, -2.0]
x0_upper = [2.0, 1.1]

jacobian_f_lower = [[0.38, -0.52], [-0.21, -0.15]]
jacobian_f_upper = [[0.82, 0.21], [-0.19, -0.13]]
jacobian_g_lower = [[-0.04, 0.49], [-1.0, -0.01]]
jacobian_g_upper = [[0.44, 0.81], [1.0, 0.01]]
lipschitz_f = 0.35
lipschitz_g = 0.74

u1 = "0"
d1 = "0.5*sin(0.1*k)"
d2 = "0.5*cos(0.07*k) + 0.2"

horizon = 200
seed = 0
bounding = "corollary"
"""
