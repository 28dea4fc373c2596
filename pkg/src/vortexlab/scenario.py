"""Scenario documents: parsing, validation and initial-condition generation.

A scenario is a YAML mapping (UTF-8, ``schema: 1``)::

    schema: 1
    name: sphere-n4
    geometry: sphere
    n: 4
    seed: 7
    strengths: random            # or an explicit list
    positions: random            # or a list of coordinate lists
    constraints: [zero_momentum] # and/or zero_circulation
    integrator:
      method: spherical_midpoint
      dt: 0.01
      t_final: 100
      solver_tol: 1.0e-12
      solver_max_iter: 100
      record_stride: 10
    torus_truncation: 10
    outputs: [trajectory_csv, conserved_csv, classification_json, figure_svg]
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .conserved import project_constraints
from .errors import ConfigError, Infeasible, IncompatibleMethod
from .geometry import Geometry, project_to_manifold, sample_points
from .integrators import IntegratorSpec, Method, check_compatible, DEFAULT_DT, DEFAULT_METHOD
from .models import DEFAULT_TRUNCATION, TorusKernel, VortexState

SCHEMA_VERSION = 1
CONSTRAINTS = ("zero_momentum", "zero_circulation")
OUTPUTS = ("trajectory_csv", "conserved_csv", "classification_json", "figure_svg")
DEFAULT_OUTPUTS = ("trajectory_csv", "conserved_csv", "classification_json")
TOP_KEYS = {
    "schema",
    "name",
    "geometry",
    "n",
    "seed",
    "strengths",
    "positions",
    "constraints",
    "integrator",
    "torus_truncation",
    "outputs",
}
INTEGRATOR_KEYS = {"method", "dt", "t_final", "solver_tol", "solver_max_iter", "record_stride"}
MAX_DRAWS = 64

# independent random streams derived from the scenario seed
STREAM_STRENGTHS = 0
STREAM_POSITIONS = 1
STREAM_PERTURBATION = 2


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the sub-stream ``key`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    geometry: Geometry
    n: int
    seed: int = 0
    strengths: tuple[float, ...] | None = None
    positions: tuple[tuple[float, ...], ...] | None = None
    constraints: frozenset[str] = frozenset()
    integrator: IntegratorSpec | None = None
    torus_truncation: int = DEFAULT_TRUNCATION
    outputs: tuple[str, ...] = DEFAULT_OUTPUTS
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry.parse(self.geometry))
        if self.integrator is None:
            object.__setattr__(self, "integrator", IntegratorSpec.default_for(self.geometry))
        object.__setattr__(self, "constraints", frozenset(self.constraints))

    @property
    def zero_momentum(self) -> bool:
        return "zero_momentum" in self.constraints

    @property
    def zero_circulation(self) -> bool:
        return "zero_circulation" in self.constraints

    @property
    def kernel(self) -> TorusKernel:
        return TorusKernel(self.torus_truncation)

    def with_seed(self, seed: int) -> ScenarioSpec:
        return replace(self, seed=int(seed))

    def to_document(self) -> dict:
        doc = {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "geometry": self.geometry.value,
            "n": self.n,
            "seed": self.seed,
            "strengths": list(self.strengths) if self.strengths is not None else "random",
            "positions": [list(p) for p in self.positions] if self.positions is not None else "random",
            "constraints": sorted(self.constraints),
            "integrator": {
                "method": self.integrator.method.value,
                "dt": self.integrator.dt,
                "t_final": self.integrator.t_final,
                "solver_tol": self.integrator.solver_tol,
                "solver_max_iter": self.integrator.solver_max_iter,
                "record_stride": self.integrator.record_stride,
            },
            "torus_truncation": self.torus_truncation,
            "outputs": list(self.outputs),
        }
        return doc


def check_feasibility(spec: ScenarioSpec):
    """Reject constraint combinations that admit no valid configuration."""
    g, n = spec.geometry, spec.n
    zm, zc = spec.zero_momentum, spec.zero_circulation
    gam = np.array(spec.strengths) if spec.strengths is not None else None
    if zc and n == 1:
        raise Infeasible("a single vortex cannot have zero circulation")
    if gam is not None and zc and np.allclose(gam, gam.mean()):
        raise Infeasible("zero-circulation projection of equal strengths gives all-zero strengths")
    if not zm:
        return
    if g.curved and n == 1:
        raise Infeasible(f"a single vortex on the {g.value} has nonzero momentum")
    if n != 2:
        return
    if g is Geometry.PLANE or g is Geometry.TORUS:
        if zc or (gam is not None and abs(gam.sum()) <= 1e-12 * np.abs(gam).max()):
            raise Infeasible(f"two vortices with zero circulation and zero momentum coincide ({g.value})")
    elif g is Geometry.HYPERBOLIC:
        raise Infeasible("two vortices on the hyperbolic plane cannot have zero momentum")
    else:
        # zero momentum forces an antipodal pair, which needs equal strengths
        if zc or gam is None or not np.isclose(gam[0], gam[1], rtol=1e-12, atol=0):
            raise Infeasible("two vortices on the sphere with zero momentum must be antipodal with equal strengths")


def build_initial_state(spec: ScenarioSpec) -> VortexState:
    """Draw (or read) the initial state and project it onto the requested constraints.

    Random components are redrawn from fresh sub-streams of the seed when a
    draw cannot be projected (for example a zero-momentum request on the
    hyperboloid with all strengths of one sign); this keeps runs deterministic.
    """
    check_feasibility(spec)
    explicit = spec.strengths is not None and spec.positions is not None
    last_exc = None
    for attempt in range(1 if explicit else MAX_DRAWS):
        if spec.strengths is not None:
            gam = np.array(spec.strengths, dtype=float)
        else:
            gam = make_rng(spec.seed, STREAM_STRENGTHS, attempt).standard_normal(spec.n)
        if spec.positions is not None:
            pos = np.array(spec.positions, dtype=float)
            if spec.geometry.curved:
                pos = project_to_manifold(spec.geometry, pos)
        else:
            pos = sample_points(spec.geometry, spec.n, make_rng(spec.seed, STREAM_POSITIONS, attempt))
        state = VortexState(spec.geometry, pos, gam)
        try:
            return project_constraints(state, spec.zero_circulation, spec.zero_momentum)
        except Infeasible as exc:
            last_exc = exc
    raise Infeasible(f"no feasible initial state: {last_exc}")


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _key_lines(node) -> dict:
    """Map top-level and ``integrator.*`` keys to 1-based line numbers."""
    lines = {}
    if not isinstance(node, yaml.MappingNode):
        return lines
    for k, v in node.value:
        lines[k.value] = k.start_mark.line + 1
        if k.value == "integrator" and isinstance(v, yaml.MappingNode):
            for k2, _ in v.value:
                lines[f"integrator.{k2.value}"] = k2.start_mark.line + 1
    return lines


def _float_list(value, key, line):
    try:
        return tuple(float(x) for x in value)
    except (TypeError, ValueError):
        raise ConfigError("expected a list of numbers", line=line, key=key) from None


def parse_scenario(text: str | bytes) -> ScenarioSpec:
    """Parse and validate a scenario document, filling defaults."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"scenario must be UTF-8: {exc}") from None
    try:
        node = yaml.compose(text)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed document: {exc}", line=mark.line + 1 if mark else None) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a mapping")
    lines = _key_lines(node)

    # accept dotted integrator keys (integrator.method: ...) as a shorthand
    integ = doc.get("integrator", {}) or {}
    for key in [k for k in doc if isinstance(k, str) and k.startswith("integrator.")]:
        if not isinstance(integ, dict):
            raise ConfigError("integrator must be a mapping", line=lines.get("integrator"), key="integrator")
        sub = key.split(".", 1)[1]
        integ[sub] = doc.pop(key)
        lines[key] = lines.get(key)
        lines.setdefault(f"integrator.{sub}", lines.get(key))

    unknown = sorted(set(map(str, doc)) - TOP_KEYS)
    if unknown:
        raise ConfigError("unknown key", line=lines.get(unknown[0]), key=unknown[0])

    def err(msg, key, reason="ConfigError"):
        return ConfigError(msg, reason=reason, line=lines.get(key), key=key)

    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise err(f"unsupported schema version {schema!r}", "schema")
    if "geometry" not in doc:
        raise ConfigError("missing required key", key="geometry")
    try:
        geometry = Geometry.parse(doc["geometry"])
    except ValueError as exc:
        raise err(str(exc), "geometry") from None

    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise err("n must be a positive integer", "n")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise err("seed must be an unsigned 64-bit integer", "seed")

    strengths = doc.get("strengths", "random")
    if isinstance(strengths, dict):
        dist = str(strengths.get("distribution", "normal(0,1)")).replace(" ", "")
        if strengths.get("random", True) is not True or dist not in ("normal", "normal(0,1)"):
            raise err("only random normal(0,1) strengths are supported", "strengths")
        strengths = None
    elif strengths == "random":
        strengths = None
    else:
        strengths = _float_list(strengths, "strengths", lines.get("strengths"))
        if len(strengths) != n:
            raise err(f"expected {n} strengths", "strengths")
        if any(s == 0.0 or not np.isfinite(s) for s in strengths):
            raise err("strengths must be finite and nonzero", "strengths")

    positions = doc.get("positions", "random")
    if positions == "random":
        positions = None
    else:
        if not isinstance(positions, list) or len(positions) != n:
            raise err(f"expected {n} positions", "positions")
        positions = tuple(_float_list(p, "positions", lines.get("positions")) for p in positions)
        if any(len(p) != geometry.dim for p in positions):
            raise err(f"{geometry.value} positions need {geometry.dim} coordinates", "positions")

    constraints = doc.get("constraints", []) or []
    if isinstance(constraints, str):
        constraints = [constraints]
    bad = [c for c in constraints if c not in CONSTRAINTS]
    if bad:
        raise err(f"unknown constraint {bad[0]!r}", "constraints")

    if not isinstance(integ, dict):
        raise err("integrator must be a mapping", "integrator")
    bad = sorted(set(integ) - INTEGRATOR_KEYS)
    if bad:
        raise err("unknown key", f"integrator.{bad[0]}")
    try:
        method = Method.parse(integ.get("method", DEFAULT_METHOD[geometry]))
    except ValueError as exc:
        raise err(str(exc), "integrator.method") from None
    try:
        check_compatible(method, geometry)
    except IncompatibleMethod as exc:
        raise err(str(exc), "integrator.method", reason="IncompatibleMethod") from None
    try:
        integrator = IntegratorSpec(
            method=method,
            dt=float(integ.get("dt", DEFAULT_DT[geometry])),
            t_final=float(integ.get("t_final", 100.0)),
            solver_tol=float(integ.get("solver_tol", 1e-12)),
            solver_max_iter=int(integ.get("solver_max_iter", 100)),
            record_stride=int(integ.get("record_stride", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise err(str(exc), "integrator") from None

    trunc = doc.get("torus_truncation", DEFAULT_TRUNCATION)
    if isinstance(trunc, bool) or not isinstance(trunc, int) or trunc < 1:
        raise err("torus_truncation must be a positive integer", "torus_truncation")

    outputs = doc.get("outputs", list(DEFAULT_OUTPUTS))
    if isinstance(outputs, str):
        outputs = [outputs]
    bad = [o for o in outputs if o not in OUTPUTS]
    if bad:
        raise err(f"unknown output {bad[0]!r}", "outputs")

    name = str(doc.get("name", f"{geometry.value}-n{n}"))
    spec = ScenarioSpec(
        name=name,
        geometry=geometry,
        n=n,
        seed=seed,
        strengths=strengths,
        positions=positions,
        constraints=frozenset(constraints),
        integrator=integrator,
        torus_truncation=trunc,
        outputs=tuple(outputs),
    )
    try:
        check_feasibility(spec)
    except Infeasible as exc:
        raise err(str(exc), "constraints", reason="Infeasible") from None
    return spec


def load_scenario(path) -> ScenarioSpec:
    with open(path, "rb") as fh:
        return parse_scenario(fh.read())
