"""Experiment configuration: a small line-oriented section/key-value
format with diagnostics tied to line numbers.

Sections: [model], [custom], [grids], [schedule], [output].  Couplings
may be numbers or the symbolic tokens mu0 / mu_max, optionally scaled
("1.5*mu0"); they resolve against the quadrature grid declared in the
same config.  Custom dispersions and form factors use a tiny arithmetic
grammar (+ - * /, cos, sin, pi, coordinates p1..p3 / q1..q3).
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError
from .models import (ModelSpec, cos_form_factor, make_reference_model,
                     make_form_factor, sin_form_factor)

_SECTIONS = ("model", "custom", "grids", "schedule", "output")

_KNOWN_KEYS = {
    "model": {"name", "phi1", "phi2", "mu1", "mu2"},
    "custom": {"u", "phi1", "phi1_parity", "phi2", "phi2_parity"},
    "grids": {"quad_n", "kernel_n", "p_grid_n", "one_d_n"},
    "schedule": {"z", "z_from", "z_to", "z_count"},
    "output": {"dir", "format"},
}

_GRID_DEFAULTS = {"quad_n": 32, "kernel_n": 20, "p_grid_n": 16, "one_d_n": 256}

_BUILTIN_MODELS = ("reference-cos", "reference-sin", "custom")


# ---------------------------------------------------------------------------
# Expression grammar.
# ---------------------------------------------------------------------------

_ALLOWED_CALLS = {"cos", "sin"}
_ALLOWED_NAMES = {"p1", "p2", "p3", "q1", "q2", "q3", "pi"} | _ALLOWED_CALLS
_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div)


def _validate_expr(node, errors):
    if isinstance(node, ast.Expression):
        _validate_expr(node.body, errors)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _ALLOWED_BINOPS):
            errors.append(f"operator {type(node.op).__name__} not allowed")
        _validate_expr(node.left, errors)
        _validate_expr(node.right, errors)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            errors.append(f"unary {type(node.op).__name__} not allowed")
        _validate_expr(node.operand, errors)
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _ALLOWED_CALLS):
            errors.append("only cos(...) and sin(...) calls are allowed")
        if len(node.args) != 1 or node.keywords:
            errors.append("cos/sin take exactly one positional argument")
        for a in node.args:
            _validate_expr(a, errors)
    elif isinstance(node, ast.Name):
        if node.id not in _ALLOWED_NAMES:
            errors.append(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            errors.append(f"constant {node.value!r} not allowed")
    else:
        errors.append(f"syntax element {type(node).__name__} not allowed")


def compile_expression(text: str, variables):
    """Compile an arithmetic expression into a vectorized function of the
    listed variables (each an (..., ) array); returns f or raises
    DomainError listing grammar violations."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise DomainError(f"cannot parse expression {text!r}: {exc.msg}")
    errors: list = []
    _validate_expr(tree, errors)
    used = {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}
    bad = used - set(variables) - _ALLOWED_CALLS - {"pi"}
    if bad:
        errors.append(f"variables {sorted(bad)} not available here")
    if errors:
        raise DomainError(f"invalid expression {text!r}: " + "; ".join(errors))
    code = compile(tree, "<config>", "eval")
    env = {"cos": np.cos, "sin": np.sin, "pi": np.pi}

    def f(**arrays):
        return eval(code, {"__builtins__": {}}, {**env, **arrays})

    return f


def _expr_parity(f, names, rng_seed=99):
    """Sampled parity of a compiled expression: 'even', 'odd' or None."""
    rng = np.random.default_rng(rng_seed)
    x = rng.uniform(-np.pi, np.pi, size=(64, len(names)))
    args = {n: x[:, i] for i, n in enumerate(names)}
    neg = {n: -x[:, i] for i, n in enumerate(names)}
    vp = np.asarray(f(**args), dtype=float)
    vm = np.asarray(f(**neg), dtype=float)
    scale = 1.0 + np.max(np.abs(vp))
    if np.max(np.abs(vm - vp)) <= 1e-9 * scale:
        return "even"
    if np.max(np.abs(vm + vp)) <= 1e-9 * scale:
        return "odd"
    return None


# ---------------------------------------------------------------------------
# Coupling tokens.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingSpec:
    """Either an explicit value or scale * (mu0 | mu_max)."""

    raw: str
    value: Optional[float] = None
    symbol: Optional[str] = None  # "mu0" | "mu_max"
    scale: float = 1.0

    def __str__(self):
        return self.raw


def parse_coupling(text: str) -> CouplingSpec:
    text = text.strip()
    scale, sym = 1.0, text
    if "*" in text:
        left, sym = (part.strip() for part in text.split("*", 1))
        try:
            scale = float(left)
        except ValueError:
            raise DomainError(f"bad coupling scale {left!r}")
    if sym in ("mu0", "mu_max"):
        return CouplingSpec(raw=text, symbol=sym, scale=scale)
    try:
        return CouplingSpec(raw=text, value=float(text))
    except ValueError:
        raise DomainError(
            f"coupling must be a number, mu0, mu_max or k*mu0 / k*mu_max, got {text!r}"
        )


# ---------------------------------------------------------------------------
# Config structure.
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    model_name: str
    phi1: str
    phi2: str
    mu1: CouplingSpec
    mu2: CouplingSpec
    custom: dict = field(default_factory=dict)
    grids: dict = field(default_factory=lambda: dict(_GRID_DEFAULTS))
    z_schedule: tuple = ()
    output_dir: str = "out"
    output_format: str = "csv"

    def serialize(self) -> str:
        lines = ["[model]", f"name = {self.model_name}"]
        if self.phi1:
            lines.append(f"phi1 = {self.phi1}")
        if self.phi2:
            lines.append(f"phi2 = {self.phi2}")
        lines += [f"mu1 = {self.mu1.raw}", f"mu2 = {self.mu2.raw}"]
        if self.custom:
            lines.append("")
            lines.append("[custom]")
            for k in ("u", "phi1", "phi1_parity", "phi2", "phi2_parity"):
                if k in self.custom:
                    lines.append(f"{k} = {self.custom[k]}")
        lines += ["", "[grids]"]
        for k in ("quad_n", "kernel_n", "p_grid_n", "one_d_n"):
            lines.append(f"{k} = {self.grids[k]}")
        lines += ["", "[schedule]"]
        if self.z_schedule:
            lines.append("z = " + ", ".join(repr(z) for z in self.z_schedule))
        lines += ["", "[output]",
                  f"dir = {self.output_dir}", f"format = {self.output_format}"]
        return "\n".join(lines) + "\n"


def _parse_lines(text):
    """Raw pass: ((section, key, value, line_number), ...) + diagnostics."""
    entries = []
    diagnostics = []
    section = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                diagnostics.append((ln, f"unknown section [{section}]"))
                section = None
            continue
        if "=" not in line:
            diagnostics.append((ln, f"expected key = value, got {line!r}"))
            continue
        if section is None:
            diagnostics.append((ln, "key outside of any known section"))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS[section]:
            diagnostics.append((ln, f"unknown key {key!r} in section [{section}]"))
            continue
        entries.append((section, key, value, ln))
    return entries, diagnostics


def parse_config(text: str) -> ExperimentConfig:
    """Parse, collecting all diagnostics; raises ConfigError with
    (line, message) pairs when anything is invalid."""
    entries, diagnostics = _parse_lines(text)
    values = {}
    lines = {}
    for section, key, value, ln in entries:
        if (section, key) in values:
            diagnostics.append((ln, f"duplicate key {key!r} in [{section}]"))
        values[(section, key)] = value
        lines[(section, key)] = ln

    def get(section, key, default=None):
        return values.get((section, key), default)

    name = get("model", "name")
    if name is None:
        diagnostics.append((None, "missing [model] name"))
        name = "reference-cos"
    elif name not in _BUILTIN_MODELS:
        diagnostics.append((lines[("model", "name")],
                            f"model name must be one of {_BUILTIN_MODELS}"))
        name = "reference-cos"

    couplings = {}
    for key in ("mu1", "mu2"):
        raw = get("model", key)
        if raw is None:
            diagnostics.append((None, f"missing [model] {key}"))
            couplings[key] = CouplingSpec(raw="mu0", symbol="mu0")
            continue
        try:
            couplings[key] = parse_coupling(raw)
        except DomainError as exc:
            diagnostics.append((lines[("model", key)], str(exc)))
            couplings[key] = CouplingSpec(raw="mu0", symbol="mu0")

    custom = {}
    if name == "custom":
        for key in ("u", "phi1", "phi2"):
            if get("custom", key) is None:
                diagnostics.append((None, f"custom model needs [custom] {key}"))
        for key in ("phi1", "phi2"):
            if get("custom", f"{key}_parity") not in ("even", "odd"):
                diagnostics.append(
                    (lines.get(("custom", f"{key}_parity")),
                     f"[custom] {key}_parity must be 'even' or 'odd'"))
        for key in _KNOWN_KEYS["custom"]:
            if get("custom", key) is not None:
                custom[key] = get("custom", key)
        # grammar + parity validation
        for key, vars_ in (("u", ("p1", "p2", "p3", "q1", "q2", "q3")),
                           ("phi1", ("p1", "p2", "p3")),
                           ("phi2", ("p1", "p2", "p3"))):
            expr = custom.get(key)
            if expr is None:
                continue
            try:
                f = compile_expression(expr, vars_)
            except DomainError as exc:
                diagnostics.append((lines.get(("custom", key)), str(exc)))
                continue
            if key != "u":
                declared = custom.get(f"{key}_parity")
                actual = _expr_parity(f, vars_)
                if declared in ("even", "odd") and actual != declared:
                    diagnostics.append(
                        (lines.get(("custom", key)),
                         f"{key} declared {declared} but samples as "
                         f"{actual or 'neither even nor odd'}"))
    else:
        for section, key, value, ln in entries:
            if section == "custom":
                diagnostics.append((ln, "[custom] keys need model name = custom"))
                break

    grids = dict(_GRID_DEFAULTS)
    for key in _KNOWN_KEYS["grids"]:
        raw = get("grids", key)
        if raw is None:
            continue
        try:
            n = int(raw)
            if n < 4:
                raise ValueError
            grids[key] = n
        except ValueError:
            diagnostics.append((lines[("grids", key)],
                                f"{key} must be an integer >= 4, got {raw!r}"))

    schedule = ()
    if get("schedule", "z") is not None:
        try:
            schedule = tuple(float(part) for part in
                             get("schedule", "z").split(",") if part.strip())
        except ValueError:
            diagnostics.append((lines[("schedule", "z")], "bad z list"))
    elif get("schedule", "z_from") is not None:
        try:
            z_from = float(get("schedule", "z_from"))
            z_to = float(get("schedule", "z_to"))
            count = int(get("schedule", "z_count", "5"))
            if z_from >= 0 or z_to >= 0 or count < 2:
                raise ValueError
            schedule = tuple(-v for v in np.geomspace(-z_from, -z_to, count))
        except (TypeError, ValueError):
            diagnostics.append((lines.get(("schedule", "z_from")),
                                "geometric schedule needs negative z_from, z_to "
                                "and z_count >= 2"))
    if schedule and any(b <= a for a, b in zip(schedule, schedule[1:])):
        diagnostics.append((lines.get(("schedule", "z"),
                                      lines.get(("schedule", "z_from"))),
                            "schedule must increase strictly toward 0-"))

    fmt = get("output", "format", "csv")
    if fmt != "csv":
        diagnostics.append((lines.get(("output", "format")),
                            f"unsupported output format {fmt!r}"))
        fmt = "csv"

    if diagnostics:
        raise ConfigError(diagnostics)

    return ExperimentConfig(
        model_name=name,
        phi1=get("model", "phi1", ""),
        phi2=get("model", "phi2", ""),
        mu1=couplings["mu1"],
        mu2=couplings["mu2"],
        custom=custom,
        grids=grids,
        z_schedule=schedule,
        output_dir=get("output", "dir", "out"),
        output_format=fmt,
    )


# ---------------------------------------------------------------------------
# Model construction and coupling resolution.
# ---------------------------------------------------------------------------


def _coeff_tuple(text, default):
    if not text:
        return default
    parts = [float(p) for p in text.split(",")]
    if len(parts) > 4:
        raise DomainError("at most 4 cosine coefficients (a0, a1, a2, a3)")
    return tuple(parts) + (0.0,) * (4 - len(parts))


def build_model(config: ExperimentConfig) -> ModelSpec:
    """Model with placeholder couplings 1.0 (resolve_couplings fills in
    the real values; mu0/mu_max do not depend on the coupling)."""
    if config.model_name == "reference-cos":
        return make_reference_model(
            ("cos", _coeff_tuple(config.phi1, (1.0, 0.0, 0.0, 0.0))),
            ("cos", _coeff_tuple(config.phi2, (1.0, 0.0, 0.0, 0.0))),
            1.0, 1.0, name="reference-cos")
    if config.model_name == "reference-sin":
        a1 = float(config.phi1) if config.phi1 else 1.0
        a2 = float(config.phi2) if config.phi2 else 1.0
        return make_reference_model(("sin", a1), ("sin", a2), 1.0, 1.0,
                                     name="reference-sin")

    u_f = compile_expression(config.custom["u"],
                             ("p1", "p2", "p3", "q1", "q2", "q3"))

    def dispersion(p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        p, q = np.broadcast_arrays(p, q)
        return u_f(p1=p[..., 0], p2=p[..., 1], p3=p[..., 2],
                   q1=q[..., 0], q2=q[..., 1], q3=q[..., 2])

    factors = []
    for key in ("phi1", "phi2"):
        f = compile_expression(config.custom[key], ("p1", "p2", "p3"))

        def ev(x, _f=f):
            x = np.asarray(x, dtype=float)
            return _f(p1=x[..., 0], p2=x[..., 1], p3=x[..., 2])

        factors.append(make_form_factor(ev, config.custom[f"{key}_parity"]))
    return ModelSpec(dispersion, factors[0], factors[1], 1.0, 1.0, name="custom")


def resolve_couplings(config: ExperimentConfig, model: ModelSpec,
                      quad_grid, p_grid_n: int):
    """Resolve symbolic couplings against the config's own grids and
    return (model with final couplings, {name: value} table)."""
    from .friedrichs import mu_max, mu_zero
    resolved = {}
    for alpha, spec in ((1, config.mu1), (2, config.mu2)):
        if spec.symbol is None:
            value = spec.value
        elif spec.symbol == "mu0":
            value = spec.scale * mu_zero(model, alpha, quad_grid)
        else:
            value = spec.scale * mu_max(model, alpha, p_grid_n, quad_grid)
        if value is None or value <= 0:
            raise DomainError(f"coupling mu{alpha} = {spec.raw} resolves to "
                              f"{value}, which is not positive")
        resolved[f"mu{alpha}"] = float(value)
    return model.with_couplings(resolved["mu1"], resolved["mu2"]), resolved
