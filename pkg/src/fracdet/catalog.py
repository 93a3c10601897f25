"""Built-in fractal families and the declarative family config format.

Config files are JSON documents; every exact rational is written as a
``"p/q"`` string so nothing passes through a float.  ``dump_family`` emits a
canonical layout, and ``dump_family(load_family(text)) == text`` for any text
it produced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Any, Callable

from . import graphs
from .decimation import (
    Case,
    DecimationSystem,
    MultiplicityRule,
    Seed,
    SeedKind,
    VertexCountLaw,
    validate,
)
from .errors import ParameterOutOfRange, ParseError, ValidationError
from .logs import as_fraction, log_of
from .poly import Polynomial

PQ_NOTE = (
    "pq-model uses the cubic R(z) = z(z^2 + 3z + 2 + pq)/(pq); the quadratic display "
    "R(z) = (z^2 + 3z + 2 + pq)/(pq) does not satisfy R(0) = 0"
)


@dataclass(frozen=True)
class FamilyDescriptor:
    name: str
    parameters: dict[str, Fraction]
    system: DecimationSystem
    closed_forms: dict[str, Any] = field(default_factory=dict)
    graph_builder: Callable[[int], "graphs.FractalGraph"] | None = field(default=None, compare=False)
    regular_degree: int | None = None
    notes: tuple[str, ...] = ()

    @property
    def label(self) -> str:
        if not self.parameters:
            return self.name
        params = ",".join(f"{k}={v}" for k, v in self.parameters.items())
        return f"{self.name}({params})"


def _checked(desc: FamilyDescriptor) -> FamilyDescriptor:
    violations = validate(desc.system)
    if violations:
        raise ValidationError(violations)
    return desc


def _unit_interval_p(p) -> tuple[Fraction, Fraction]:
    p = as_fraction(p)
    if not 0 < p < 1:
        raise ParameterOutOfRange(f"p must lie in (0, 1), got {p}")
    return p, 1 - p


def circle() -> FamilyDescriptor:
    """Double unit interval: the cycle on ``2^(n+1)`` vertices."""
    system = DecimationSystem(
        R=Polynomial.of(0, 4, 2),
        m=2,
        case=Case.ONE_DIMENSIONAL,
        vertex_count=VertexCountLaw(2, 2),
        declared_B0=(Fraction(-2),),
        g0=Fraction(2),
        name="circle",
    )
    closed = {
        "log_det_regularized": log_of(8),
        "c_constant": log_of(2, -2),
        "j": 1,
        "lambda": Fraction(4),
    }
    return _checked(FamilyDescriptor(
        "circle", {}, system, closed,
        graph_builder=graphs.build_cycle_double_interval, regular_degree=2,
        notes=("coefficient of 2^n is -2 log 2; the closed form -2^(n+1) lacks the log 2 factor",),
    ))


def double_pq(p) -> FamilyDescriptor:
    p, q = _unit_interval_p(p)
    pq = p * q
    system = DecimationSystem(
        R=Polynomial.of(0, (2 + pq) / pq, 3 / pq, 1 / pq),
        m=3,
        case=Case.ONE_DIMENSIONAL,
        vertex_count=VertexCountLaw(2, 3),
        declared_B0=tuple(sorted((-1 - p, -1 - q))),
        g0=Fraction(2),
        name="double_pq",
    )
    closed = {
        "log_det_regularized": log_of(2 / pq),
        "c_constant": log_of(pq),
        "j": 1,
        "lambda": 1 + 2 / pq,
    }
    builder = None
    if p == Fraction(1, 2):
        # symmetric walk: the double pq graph is the plain cycle on 2*3^n vertices
        builder = partial(_pq_half_cycle)
    return _checked(FamilyDescriptor(
        "double_pq", {"p": p}, system, closed,
        graph_builder=builder, regular_degree=2 if builder else None,
        notes=(PQ_NOTE,),
    ))


def _pq_half_cycle(n: int) -> "graphs.FractalGraph":
    return graphs.cycle_graph(2 * 3**n, level=n)


def double_sg(N: int) -> FamilyDescriptor:
    """Two level-n SG_N graphs glued along their N corners."""
    if not isinstance(N, int) or N < 3:
        raise ParameterOutOfRange(f"N must be an integer >= 3, got {N!r}")
    F = Fraction
    system = DecimationSystem(
        R=Polynomial.of(0, N + 2, 2 * N - 2),
        m=N,
        case=Case.GENERIC,
        vertex_count=VertexCountLaw(N, N),
        set_A=(Seed(F(-N, N - 1), MultiplicityRule(SeedKind.A, F(N - 2), c0=N - 1, c1=(N - 2) * N)),),
        set_B1=(
            Seed(F(-1, N - 1), MultiplicityRule(SeedKind.B1, F(0), c0=0, c1=1)),
            Seed(F(-N, 2 * N - 2), MultiplicityRule(SeedKind.B1, F(N - 2, N), c0=0, c1=N - 1)),
        ),
        b0_rule=MultiplicityRule(SeedKind.B0, F(N - 2, N), j=1),
        declared_B0=(F(-(N + 2), 2 * N - 2),),
        name="double_sg",
    )
    log_det = (log_of(2, 2) + log_of(N, F(1, N - 1)) - log_of(N + 2, F(N - 2, N - 1))
               + log_of(N - 1))
    c = (log_of(2, -2) + log_of(N, F(N * (N - 2), N - 1)) - log_of(N - 1, N)
         + log_of(N + 2, F(N - 2, N - 1)))
    closed = {"log_det_regularized": log_det, "c_constant": c, "j": 1, "lambda": F(N + 2)}
    return _checked(FamilyDescriptor(
        "double_sg", {"N": F(N)}, system, closed,
        graph_builder=partial(graphs.build_double_sg, N), regular_degree=2 * (N - 1),
    ))


def basilica(p) -> FamilyDescriptor:
    p, q = _unit_interval_p(p)
    F = Fraction
    system = DecimationSystem(
        R=Polynomial.of(0, (2 * p + 1) / p, 1 / p),
        m=3,
        case=Case.GENERIC,
        vertex_count=VertexCountLaw(2, 3),
        set_B1=(
            Seed(-2 * q, MultiplicityRule(SeedKind.B1, F(0), c0=1, c1=0)),
            Seed(-2 * p, MultiplicityRule(SeedKind.B1, F(2, 3), c0=0, c1=2)),
        ),
        b0_rule=MultiplicityRule(SeedKind.B0, F(0), j=1),
        declared_B0=(-(2 * p + 1),),
        name="basilica",
    )
    closed = {
        "log_det_regularized": log_of(q / p**2),
        "c_constant": log_of(2 * p**2),
        "j": 1,
        "lambda": (2 * p + 1) / p,
    }
    notes = ("m = 3 is the vertex-growth base only",)
    if p > F(1, 2):
        notes += ("for p > 1/2 the preimages of B0 are complex; no real spectrum exists",)
    return _checked(FamilyDescriptor("basilica", {"p": p}, system, closed, notes=notes))


BUILTIN: dict[str, dict[str, Any]] = {
    "circle": {"factory": circle, "params": {}, "description": "double unit interval (cycle graphs)"},
    "double_pq": {"factory": double_pq, "params": {"p": "rational in (0, 1), q = 1 - p"},
                  "description": "double pq-model (cubic normalization)"},
    "double_sg": {"factory": double_sg, "params": {"N": "integer >= 3"},
                  "description": "double Sierpinski gasket SG_N"},
    "basilica": {"factory": basilica, "params": {"p": "rational in (0, 1), q = 1 - p"},
                 "description": "Basilica Julia set graphs"},
}


def builtin(name: str, **params) -> FamilyDescriptor:
    if name not in BUILTIN:
        raise KeyError(f"unknown family {name!r}; choose from {sorted(BUILTIN)}")
    entry = BUILTIN[name]
    missing = set(entry["params"]) - set(params)
    extra = set(params) - set(entry["params"])
    if missing or extra:
        raise ParameterOutOfRange(f"{name} takes parameters {sorted(entry['params'])}, got {sorted(params)}")
    if name == "double_sg":
        N = as_fraction(params["N"])
        if N.denominator != 1:
            raise ParameterOutOfRange(f"N must be an integer, got {N}")
        return double_sg(int(N))
    return entry["factory"](**{k: as_fraction(v) for k, v in params.items()})


# --- config format ---------------------------------------------------------

def _rule_entry(seed: Seed) -> dict[str, Any]:
    return {
        "w": str(seed.w),
        "c0_override": seed.rule.c0,
        "c1_override": seed.rule.c1,
        "c": str(seed.rule.c),
    }


def family_to_dict(desc: FamilyDescriptor) -> dict[str, Any]:
    s = desc.system
    data: dict[str, Any] = {
        "name": desc.name,
        "parameters": {k: str(v) for k, v in desc.parameters.items()},
        "polynomial": [str(c) for c in s.R.coefficients],
        "m": s.m,
        "case": s.case.value,
        "g0": None if s.g0 is None else str(s.g0),
        "vertex_count": {
            "K": s.vertex_count.K,
            "base": s.vertex_count.base,
            "overrides": {str(n): v for n, v in s.vertex_count.overrides},
        },
        "A": [_rule_entry(x) for x in s.set_A],
        "B1": [_rule_entry(x) for x in s.set_B1],
        "B0": None,
    }
    if s.b0_rule is not None or s.declared_B0 is not None:
        b0: dict[str, Any] = {}
        if s.b0_rule is not None:
            b0["c0"] = str(s.b0_rule.c)
            b0["j"] = s.b0_rule.j
        if s.declared_B0 is not None:
            b0["values"] = [str(v) for v in s.declared_B0]
        data["B0"] = b0
    return data


def dump_family(desc: FamilyDescriptor) -> str:
    return json.dumps(family_to_dict(desc), indent=2, ensure_ascii=False) + "\n"


def _frac(value, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise ParseError("expected an exact rational written as a \"p/q\" string or an integer", field=where)
    try:
        return as_fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"not a rational: {value!r}", field=where) from exc


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError("expected an integer", field=where)
    return value


def _require(data: dict, key: str, where: str = ""):
    if key not in data:
        raise ParseError("missing field", field=f"{where}{key}")
    return data[key]


def _seed(entry, kind: SeedKind, where: str) -> Seed:
    if not isinstance(entry, dict):
        raise ParseError("expected an object", field=where)
    w = _frac(_require(entry, "w", where + "."), where + ".w")
    rule = MultiplicityRule(
        kind,
        _frac(_require(entry, "c", where + "."), where + ".c"),
        c0=_int(entry.get("c0_override", 0), where + ".c0_override"),
        c1=_int(entry.get("c1_override", 0), where + ".c1_override"),
    )
    return Seed(w, rule)


def family_from_dict(data: dict[str, Any], check: bool = True) -> FamilyDescriptor:
    if not isinstance(data, dict):
        raise ParseError("top level must be an object")
    name = _require(data, "name")
    if not isinstance(name, str):
        raise ParseError("expected a string", field="name")
    coeffs = _require(data, "polynomial")
    if not isinstance(coeffs, list) or len(coeffs) < 3:
        raise ParseError("expected a list of at least 3 coefficients (ascending)", field="polynomial")
    R = Polynomial(tuple(_frac(c, f"polynomial[{i}]") for i, c in enumerate(coeffs)))
    m = _int(_require(data, "m"), "m")
    try:
        case = Case(_require(data, "case"))
    except ValueError as exc:
        raise ParseError("case must be 'generic' or 'one_dimensional'", field="case") from exc
    g0 = data.get("g0")
    g0 = None if g0 is None else _frac(g0, "g0")
    vc = _require(data, "vertex_count")
    if not isinstance(vc, dict):
        raise ParseError("expected an object", field="vertex_count")
    overrides = vc.get("overrides", {}) or {}
    law = VertexCountLaw(
        _int(_require(vc, "K", "vertex_count."), "vertex_count.K"),
        _int(_require(vc, "base", "vertex_count."), "vertex_count.base"),
        tuple(sorted((int(k), _int(v, f"vertex_count.overrides.{k}")) for k, v in overrides.items())),
    )
    set_A = tuple(_seed(e, SeedKind.A, f"A[{i}]") for i, e in enumerate(data.get("A", []) or []))
    set_B1 = tuple(_seed(e, SeedKind.B1, f"B1[{i}]") for i, e in enumerate(data.get("B1", []) or []))
    b0 = data.get("B0")
    b0_rule = None
    declared = None
    if b0 is not None:
        if not isinstance(b0, dict):
            raise ParseError("expected an object", field="B0")
        if "c0" in b0 or "j" in b0:
            b0_rule = MultiplicityRule(SeedKind.B0, _frac(_require(b0, "c0", "B0."), "B0.c0"),
                                       j=_int(_require(b0, "j", "B0."), "B0.j"))
        if "values" in b0:
            declared = tuple(_frac(v, f"B0.values[{i}]") for i, v in enumerate(b0["values"]))
    system = DecimationSystem(
        R=R, m=m, case=case, vertex_count=law, set_A=set_A, set_B1=set_B1,
        b0_rule=b0_rule, declared_B0=declared, g0=g0, name=name,
    )
    params = {k: _frac(v, f"parameters.{k}") for k, v in (data.get("parameters") or {}).items()}
    desc = FamilyDescriptor(name, params, system)
    return _checked(desc) if check else desc


def loads_family(text: str, check: bool = True) -> FamilyDescriptor:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    return family_from_dict(data, check=check)


def load_family(path: str | Path, check: bool = True) -> FamilyDescriptor:
    """Read a family config file and build (and validate) its system.

    Raises ``ParseError`` for malformed input and ``ValidationError`` when the
    described system violates a structural invariant.
    """
    return loads_family(Path(path).read_text(encoding="utf-8"), check=check)


def closed_form_summary(desc: FamilyDescriptor) -> dict[str, str]:
    out = {}
    for key, value in desc.closed_forms.items():
        out[key] = str(value)
    return out

