"""Eigenvalue counting via the antidiagonal block operator."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import trispec as ts
from trispec.counting import (MAX_KERNEL_GRID_N, assemble_block,
                              count_above_one, resolution_flagged)
from trispec.errors import DomainError, NumericalError
from trispec.torus import TWO_PI, UniformGrid


def test_antidiagonal_spectrum_is_plus_minus_singular_values():
    rng = np.random.default_rng(42)
    for _ in range(20):
        K = rng.normal(size=(20, 20))
        T = np.block([[np.zeros((20, 20)), K],
                      [K.T, np.zeros((20, 20))]])
        eig = np.sort(np.linalg.eigvalsh(T))
        sv = np.linalg.svd(K, compute_uv=False)
        expect = np.sort(np.concatenate([sv, -sv]))
        assert np.max(np.abs(eig - expect)) < 1e-10 * (1.0 + sv[0])


def test_assembled_blocks_are_transposes(cos_model_critical, quad32):
    b12 = assemble_block(cos_model_critical, -0.5, UniformGrid(8), quad32)
    # swapping the roles of the two subsystems transposes the kernel; for
    # the symmetric reference model this is literally the matrix transpose
    swapped = ts.ModelSpec(cos_model_critical.dispersion,
                           cos_model_critical.phi2, cos_model_critical.phi1,
                           cos_model_critical.mu2, cos_model_critical.mu1)
    b21 = assemble_block(swapped, -0.5, UniformGrid(8), quad32)
    assert np.max(np.abs(b21.matrix - b12.matrix.T)) < 1e-10


def test_count_requires_negative_z(cos_model_critical, quad32):
    with pytest.raises(DomainError):
        assemble_block(cos_model_critical, 0.0, UniformGrid(8), quad32)
    with pytest.raises(DomainError):
        assemble_block(cos_model_critical, -0.1,
                       UniformGrid(MAX_KERNEL_GRID_N + 4), quad32)


def test_count_faults_inside_essential_spectrum(quad32):
    m = ts.reference_cos_model(1.0, 1.0)
    mu = 2.0 * ts.mu_max(m, 1, 8, quad32)
    # z = -1 lies inside the two-particle band at this coupling
    with pytest.raises(NumericalError):
        assemble_block(m.with_couplings(mu, mu), -1.0, UniformGrid(8), quad32)


def test_count_result_fields(cos_model_critical, quad32):
    res = ts.eigenvalue_count_N(cos_model_critical, -0.5, 8, quad32)
    assert res.z == -0.5 and res.grid_n == 8
    assert res.count == len([s for s in res.top_singular_values
                             if s > 1.0 + res.count_tolerance])
    assert res.resolution_flag == (TWO_PI / 8 > np.sqrt(0.5))


def test_count_stable_across_kernel_grids(cos_model_critical, quad32):
    a = ts.eigenvalue_count_N(cos_model_critical, -1.0, 10, quad32)
    b = ts.eigenvalue_count_N(cos_model_critical, -1.0, 14, quad32)
    assert a.count == b.count


@given(st.floats(-10.0, -1e-6), st.integers(8, 24))
def test_resolution_flag_rule(z, n):
    assert resolution_flagged(z, n) == (TWO_PI / n > np.sqrt(abs(z)))


def test_schedule_validation(cos_model_critical, quad32):
    with pytest.raises(DomainError):
        ts.count_schedule(cos_model_critical, (-1.0, 0.5), 8, quad32)
    with pytest.raises(DomainError):
        ts.count_schedule(cos_model_critical, (-0.1, -1.0), 8, quad32)
    res = ts.count_schedule(cos_model_critical, (-1.0, -0.5), 8, quad32)
    assert [r.z for r in res] == [-1.0, -0.5]
