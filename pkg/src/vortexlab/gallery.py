"""The regime gallery: sixteen panel classes, four per geometry.

Each panel is a (geometry, N, constraints) class together with the regime the
integrability results predict for it.  ``run_panel`` integrates one random
member of the class, classifies it and renders its SVG.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import ClassificationReport, classify, regime_exponent, Verdict
from .geometry import Geometry
from .integrators import IntegratorSpec, Trajectory, integrate
from .output import atomic_write, classification_json, render_svg
from .scenario import STREAM_PERTURBATION, ScenarioSpec, build_initial_state, make_rng

GALLERY_T_FINAL = 200.0
GALLERY_DT = 1e-2

RELATIVE_EQUILIBRIUM = "relative_equilibrium"
INTEGRABLE = "integrable"
CHAOTIC = "chaotic"


@dataclass(frozen=True)
class Panel:
    key: str
    geometry: Geometry
    n: int
    constraints: frozenset[str] = field(default_factory=frozenset)
    expected: str = INTEGRABLE

    @property
    def regular(self) -> bool:
        return self.expected != CHAOTIC

    def scenario(self, seed: int, t_final: float = GALLERY_T_FINAL, dt: float = GALLERY_DT) -> ScenarioSpec:
        return ScenarioSpec(
            name=self.key,
            geometry=self.geometry,
            n=self.n,
            seed=seed,
            constraints=self.constraints,
            integrator=IntegratorSpec.default_for(self.geometry, dt=dt, t_final=t_final),
        )


def _panel(key, geometry, n, constraints=(), expected=INTEGRABLE):
    return Panel(key, Geometry.parse(geometry), n, frozenset(constraints), expected)


ZM, ZC = "zero_momentum", "zero_circulation"

PANELS = (
    _panel("sphere-a", "sphere", 3, [ZM], RELATIVE_EQUILIBRIUM),
    _panel("sphere-b", "sphere", 3),
    _panel("sphere-c", "sphere", 4, [ZM]),
    _panel("sphere-d", "sphere", 4, expected=CHAOTIC),
    _panel("plane-a", "plane", 3),
    _panel("plane-b", "plane", 4, [ZM, ZC]),
    _panel("plane-c", "plane", 4, [ZC], CHAOTIC),
    _panel("plane-d", "plane", 4, [ZM], CHAOTIC),
    _panel("hyperbolic-a", "hyperbolic", 3, [ZM], RELATIVE_EQUILIBRIUM),
    _panel("hyperbolic-b", "hyperbolic", 3),
    _panel("hyperbolic-c", "hyperbolic", 4, [ZM]),
    _panel("hyperbolic-d", "hyperbolic", 4, expected=CHAOTIC),
    _panel("torus-a", "torus", 2, [ZC], RELATIVE_EQUILIBRIUM),
    _panel("torus-b", "torus", 2),
    _panel("torus-c", "torus", 3, [ZC]),
    _panel("torus-d", "torus", 3, expected=CHAOTIC),
)


def panel(key: str) -> Panel:
    for p in PANELS:
        if p.key == key:
            return p
    raise KeyError(key)


def worker_count(default: int | None = None) -> int:
    """Scenario-level parallelism, capped by ``VORTEXLAB_THREADS`` when set."""
    n = default or os.cpu_count() or 1
    cap = os.environ.get("VORTEXLAB_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


@dataclass
class PanelResult:
    panel: Panel
    seed: int
    trajectory: Trajectory
    report: ClassificationReport
    runtime: float
    path: Path | None = None


def panel_exponent(p: Panel, seed: int) -> float:
    """Separation exponent of the panel's initial state for ``seed``."""
    state = build_initial_state(p.scenario(seed))
    lam, _ = regime_exponent(state, zero_momentum=ZM in p.constraints, rng=make_rng(seed, STREAM_PERTURBATION))
    return lam


def run_panel(p: Panel, seed: int, out_dir=None, *, classify_regime: bool = True) -> PanelResult:
    t0 = time.perf_counter()
    spec = p.scenario(seed)
    state = build_initial_state(spec)
    traj = integrate(state, spec.integrator, spec.kernel)
    lam, horizon = float("nan"), 0.0
    if classify_regime:
        lam, horizon = regime_exponent(state, zero_momentum=spec.zero_momentum, rng=make_rng(seed, STREAM_PERTURBATION))
    report = classify(traj, lam, horizon)
    result = PanelResult(p, seed, traj, report, time.perf_counter() - t0)
    if out_dir is not None:
        meta = {
            "panel": p.key,
            "expected": p.expected,
            "verdict": report.verdict.value,
            "exponent": report.exponent,
            "seed": seed,
            "t_final": spec.integrator.t_final,
            "dt": spec.integrator.dt,
            "method": spec.integrator.method.value,
            "constraints": sorted(p.constraints),
            "strengths": np.round(state.strengths, 6).tolist(),
            "strength_law": "normal(0,1)",
        }
        title = f"{p.key}: N={p.n} {'+'.join(sorted(p.constraints)) or 'unconstrained'} [{report.verdict.value}]"
        path = Path(out_dir) / f"{p.key}.svg"
        atomic_write(path, render_svg(traj, title=title, metadata=meta))
        atomic_write(Path(out_dir) / f"{p.key}.json", classification_json(report, panel=p.key, expected=p.expected, seed=seed))
        result.path = path
    return result


def run_gallery(out_dir, seed: int = 0, *, panels=PANELS, workers: int | None = None, classify_regime: bool = True):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(worker_count(workers)) as ex:
        futures = [ex.submit(run_panel, p, seed, out_dir, classify_regime=classify_regime) for p in panels]
        return [f.result() for f in futures]


def matches_expectation(p: Panel, verdict: Verdict) -> bool:
    if p.expected == CHAOTIC:
        return verdict is Verdict.CHAOTIC
    if p.expected == RELATIVE_EQUILIBRIUM:
        return verdict in (Verdict.RELATIVE_EQUILIBRIUM, Verdict.EQUILIBRIUM)
    return verdict in (Verdict.QUASI_PERIODIC, Verdict.RELATIVE_EQUILIBRIUM)
