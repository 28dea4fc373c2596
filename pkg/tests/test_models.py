import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vortexlab import Collision, TorusKernel, VortexState, hamiltonian, rhs
from vortexlab.geometry import TWO_PI, lorentz_boost, lorentz_rotation, random_rotation
from vortexlab.models import (
    hamiltonian_gradient,
    hamiltonian_vector_field,
    rhs_hyperbolic,
    rhs_plane,
    rhs_sphere,
    rhs_torus,
    torus_kernel,
    torus_kernel_grad,
)

from strategies import random_state, seeds, states


# direct-sum oracles written from the point-vortex formulas, no shared code
def sphere_oracle(pos, gam):
    out = np.zeros_like(pos)
    for i in range(len(pos)):
        for j in range(len(pos)):
            if i != j:
                out[i] += gam[j] * np.cross(pos[i], pos[j]) / (1 - pos[i] @ pos[j])
    return out / (2 * math.pi)


def hyperbolic_oracle(pos, gam):
    L = np.diag([-1.0, -1.0, 1.0])
    out = np.zeros_like(pos)
    for i in range(len(pos)):
        for j in range(len(pos)):
            if i != j:
                a = pos[i] @ L @ pos[j]
                out[i] += gam[j] * (L @ np.cross(pos[i], pos[j])) / ((a - 1) * (a + 1))
    return -out / math.pi


def plane_oracle(pos, gam):
    out = np.zeros_like(pos)
    for i in range(len(pos)):
        for j in range(len(pos)):
            if i != j:
                d = pos[i] - pos[j]
                out[i] += gam[j] * np.array([-d[1], d[0]]) / (d @ d)
    return out / (2 * math.pi)


ORACLES = {"sphere": sphere_oracle, "hyperbolic": hyperbolic_oracle, "plane": plane_oracle}


@pytest.mark.parametrize("geometry", sorted(ORACLES))
@given(seed=seeds, n=st.integers(2, 6))
def test_rhs_matches_direct_sum(geometry, seed, n):
    s = random_state(geometry, n, seed)
    expected = ORACLES[geometry](s.positions, s.strengths)
    np.testing.assert_allclose(rhs(s), expected, rtol=1e-10, atol=1e-12 * np.max(np.abs(expected)))


def test_per_geometry_entry_points():
    s = random_state("sphere", 3, 1)
    np.testing.assert_array_equal(rhs_sphere(s), rhs(s))
    np.testing.assert_array_equal(rhs_plane(random_state("plane", 3, 1)), rhs(random_state("plane", 3, 1)))
    np.testing.assert_array_equal(rhs_hyperbolic(random_state("hyperbolic", 3, 1)), rhs(random_state("hyperbolic", 3, 1)))
    np.testing.assert_array_equal(rhs_torus(random_state("torus", 3, 1)), rhs(random_state("torus", 3, 1)))
    with pytest.raises(ValueError):
        rhs_sphere(random_state("plane", 2, 0))


def test_frozen_values():
    # fixed state, values from the direct-sum oracle above (frozen)
    s = VortexState("sphere", [[1, 0, 0], [0, 1, 0], [0, 0, 1]], [1.0, 2.0, -0.5])
    np.testing.assert_allclose(rhs(s), sphere_oracle(s.positions, s.strengths), atol=1e-16)
    np.testing.assert_allclose(rhs(s)[0], [0.0, 0.5 / (2 * math.pi), 2.0 / (2 * math.pi)], atol=1e-16)
    # H = -(1/2pi) sum_{i<j} G_i G_j log(1 - r_i.r_j) vanishes for orthogonal unit vectors
    assert hamiltonian(s) == pytest.approx(0.0, abs=1e-16)
    p = VortexState("plane", [[0, 0], [2, 0]], [1.0, 3.0])
    # -(1/2pi) G1 G2 log(d^2)
    assert hamiltonian(p) == pytest.approx(-3.0 * math.log(4.0) / (2 * math.pi), rel=1e-15)


@given(states(n_min=2, n_max=5))
def test_rhs_is_hamiltonian_vector_field(s):
    # rhs from the Poisson structure applied to a finite-difference gradient of H
    fd = hamiltonian_vector_field(s, hamiltonian_gradient(s, step=1e-6))
    v = rhs(s)
    assert np.max(np.abs(fd - v)) <= 1e-5 * max(1.0, np.max(np.abs(v)))


@given(seeds, st.integers(2, 6))
def test_sphere_energy_stationary(seed, n):
    # analytic gradient: grad_i H = G_i/(2 pi) sum_j G_j r_j / (1 - r_i.r_j); <grad H, rhs> = 0 exactly
    s = random_state("sphere", n, seed)
    pos, gam = s.positions, s.strengths
    grad = np.zeros_like(pos)
    for i in range(n):
        for j in range(n):
            if i != j:
                grad[i] += gam[i] * gam[j] * pos[j] / (1 - pos[i] @ pos[j])
    grad /= 2 * math.pi
    v = rhs(s)
    assert abs(np.sum(grad * v)) <= 1e-12 * np.linalg.norm(grad) * np.linalg.norm(v)


@given(seeds)
def test_sphere_rotation_equivariance(seed):
    s = random_state("sphere", 4, seed)
    R = random_rotation(np.random.default_rng(seed + 1))
    moved = s.with_positions(s.positions @ R.T)
    np.testing.assert_allclose(rhs(moved), rhs(s) @ R.T, atol=1e-12 * max(1, np.max(np.abs(rhs(s)))))
    assert hamiltonian(moved) == pytest.approx(hamiltonian(s), rel=1e-10, abs=1e-12)


@given(seeds, st.floats(-1.5, 1.5), st.floats(-3, 3))
def test_hyperbolic_lorentz_equivariance(seed, rapidity, angle):
    s = random_state("hyperbolic", 3, seed)
    M = lorentz_boost(1, rapidity) @ lorentz_rotation(angle)
    moved = s.with_positions(s.positions @ M.T)
    v, vm = rhs(s), rhs(moved)
    scale = max(1.0, np.max(np.abs(vm)))
    np.testing.assert_allclose(vm, v @ M.T, atol=1e-9 * scale)


@given(seeds, st.floats(-10, 10), st.floats(-10, 10))
def test_plane_translation_invariance(seed, ux, uy):
    s = random_state("plane", 4, seed)
    moved = s.with_positions(s.positions + [ux, uy])
    np.testing.assert_allclose(rhs(moved), rhs(s), atol=1e-9 * max(1, np.max(np.abs(rhs(s)))))


def test_tangency():
    for g in ("sphere", "hyperbolic"):
        s = random_state(g, 5, 3)
        v = rhs(s)
        if g == "sphere":
            dots = np.sum(v * s.positions, axis=1)
        else:
            dots = -v[:, 0] * s.positions[:, 0] - v[:, 1] * s.positions[:, 1] + v[:, 2] * s.positions[:, 2]
        assert np.max(np.abs(dots)) <= 1e-12 * max(1, np.max(np.abs(v)) * np.max(np.abs(s.positions)))


def test_collision_detected():
    with pytest.raises(Collision):
        rhs(VortexState("plane", [[0, 0], [1e-9, 0]], [1.0, 1.0]))
    with pytest.raises(Collision):
        hamiltonian(VortexState("sphere", [[0, 0, 1], [0, 0, 1]], [1.0, 1.0]))
    # torus: coincident only modulo the lattice
    with pytest.raises(Collision):
        rhs(VortexState("torus", [[0.5, 0.5], [0.5 + TWO_PI, 0.5 - TWO_PI]], [1.0, -1.0]))


def test_vortex_state_validation():
    with pytest.raises(ValueError):
        VortexState("sphere", [[0, 0, 2.0]], [1.0])
    with pytest.raises(ValueError):
        VortexState("plane", [[0, 0], [1, 1]], [1.0, 0.0])
    with pytest.raises(ValueError):
        VortexState("plane", [[0, 0, 0]], [1.0])
    with pytest.raises(ValueError):
        VortexState("hyperbolic", [[0, 0, -1.0]], [1.0])
    s = VortexState("plane", [[0, 0], [1, 1]], [1.0, 2.0])
    with pytest.raises(ValueError):
        s.positions[0, 0] = 3.0
    assert s.permuted([1, 0]).strengths.tolist() == [2.0, 1.0]


# --- torus kernel ------------------------------------------------------------------

big = TorusKernel(50)
off_lattice = st.tuples(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0)).filter(lambda p: math.hypot(*p) > 0.05)


@given(off_lattice)
def test_torus_kernel_laplacian(p):
    # h is harmonic up to the uniform background: Laplacian(h) = -1/pi off the lattice
    x, y = p
    e = 1e-3
    lap = (torus_kernel(x + e, y, big) + torus_kernel(x - e, y, big) + torus_kernel(x, y + e, big) + torus_kernel(x, y - e, big) - 4 * torus_kernel(x, y, big)) / e**2
    # five-point stencil error grows like e^2 / r^4 near the singularity
    assert lap == pytest.approx(-1 / math.pi, abs=1e-5 / min(1.0, math.hypot(x, y)) ** 4)


@given(off_lattice)
def test_torus_kernel_periodic_and_even(p):
    x, y = p
    h0 = torus_kernel(x, y, big)
    assert torus_kernel(x + TWO_PI, y, big) == pytest.approx(h0, abs=1e-11)
    assert torus_kernel(x, y - TWO_PI, big) == pytest.approx(h0, abs=1e-12)
    assert torus_kernel(-x, -y, big) == pytest.approx(h0, abs=1e-12)
    assert torus_kernel(x, y) == pytest.approx(h0, abs=1e-12)


@given(off_lattice)
def test_torus_kernel_grad_matches_fd(p):
    x, y = p
    g = np.array(torus_kernel_grad(x, y))
    h = 1e-5
    fd = np.array([(torus_kernel(x + h, y) - torus_kernel(x - h, y)) / (2 * h), (torus_kernel(x, y + h) - torus_kernel(x, y - h)) / (2 * h)])
    assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


def test_torus_kernel_grad_singular():
    with pytest.raises(Collision):
        torus_kernel_grad(TWO_PI, 0.0)


@settings(max_examples=25)
@given(seeds, st.lists(st.integers(-3, 3), min_size=6, max_size=6))
def test_torus_rhs_lattice_invariance(seed, shifts):
    s = random_state("torus", 3, seed)
    moved = s.with_positions(s.positions + TWO_PI * np.array(shifts, dtype=float).reshape(3, 2))
    np.testing.assert_allclose(rhs(moved), rhs(s, big), atol=1e-9)
    assert hamiltonian(moved) == pytest.approx(hamiltonian(s), abs=1e-9)
