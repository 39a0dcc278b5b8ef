import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from liouvex.errors import ConfigError, DegenerateDataError
from liouvex.gedmd import (
    SnapshotBlock,
    WindowSpec,
    assemble_block,
    fit_liouvillian,
    liouvillian_trace,
    max_dissipation_pole,
    n_null_eigenvalues,
    reconstruct,
    spectrum,
    steps_of,
    window_centers,
    window_start,
)
from liouvex.propagator import TrajectoryRecord


def linear_flow(a, n_traj=3, n_samples=50, dt=0.02, seed=0):
    rng = np.random.default_rng(seed)
    recs = []
    times = np.arange(n_samples) * dt
    for _ in range(n_traj):
        x0 = rng.standard_normal(a.shape[0])
        x = np.array([sla.expm(a * t) @ x0 for t in times])
        recs.append(TrajectoryRecord(times, x, x @ a.T))
    return recs


def block_of(recs):
    x = np.concatenate([r.x for r in recs]).T
    xd = np.concatenate([r.xdot for r in recs]).T
    m = x.shape[1]
    return SnapshotBlock(x, xd, 0.0, np.zeros(m), np.zeros(m, dtype=int))


def test_window_spec_validation():
    assert WindowSpec().n_samples(0.002) == 300
    assert WindowSpec().finite(0.04).lag_steps(0.002) == 20
    assert WindowSpec().finite(0).deriv_mode == "exact"
    with pytest.raises(ValueError):
        WindowSpec(deriv_mode="finite", dt_cg=0.6)
    with pytest.raises(ConfigError):
        WindowSpec().finite(0.003).lag_steps(0.002)


def test_steps_of():
    assert steps_of(0.6, 0.002) == 300
    assert steps_of(4.0, 0.001) == 4000
    with pytest.raises(ConfigError):
        steps_of(0.025, 0.002)


def test_window_centres_and_start():
    cs = window_centers(0.6, 0.1, 1.0, 0.002)
    assert cs == [0.3, 0.4, 0.5, 0.6, 0.7]
    assert window_start(0.5, 0.6, 0.002) == 100
    assert window_centers(0.6, 0.1, 3.0, 0.002, 1.0, 2.5)[0] == 1.0


def test_assemble_exact_and_finite():
    a = np.array([[0.0, 1.0], [-1.0, 0.0]])
    recs = linear_flow(a, n_traj=2, n_samples=31, dt=0.02)
    w = WindowSpec(0.6, 0.1)
    blk = assemble_block(recs, w, 0.3)
    assert blk.x.shape == (2, 60)
    np.testing.assert_array_equal(blk.ensemble_ids[:30], 0)
    fd = assemble_block(recs, w.finite(0.04), 0.3)
    # forward difference paired with the left sample loses lag samples per member
    assert fd.m_samples == 2 * (30 - 2)
    np.testing.assert_allclose(fd.xdot[:, 0], (recs[0].x[2] - recs[0].x[0]) / 0.04)
    with pytest.raises(ValueError):
        assemble_block(recs, w, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_fit_recovers_generator(dim, seed):
    a = np.random.default_rng(seed).standard_normal((dim, dim)) / np.sqrt(dim)
    est = fit_liouvillian(block_of(linear_flow(a, seed=seed)))
    assert not est.economy
    np.testing.assert_allclose(est.dense(), a, atol=1e-8)
    np.testing.assert_allclose(np.sort_complex(spectrum(est)),
                               np.sort_complex(np.linalg.eigvals(a)), atol=1e-8)
    assert abs(liouvillian_trace(est) - np.trace(a)) < 1e-8


def test_economy_path_matches_dense_spectrum():
    # 40 observables driven by a 5-dimensional latent flow: rank-deficient data
    rng = np.random.default_rng(3)
    lat = rng.standard_normal((5, 5))
    lat = lat - lat.T
    emb = np.linalg.qr(rng.standard_normal((40, 5)))[0]
    recs = linear_flow(lat, n_traj=1, n_samples=30)
    x = emb @ np.concatenate([r.x for r in recs]).T
    xd = emb @ np.concatenate([r.xdot for r in recs]).T
    est = fit_liouvillian(SnapshotBlock(x, xd, 0.0, np.zeros(30), np.zeros(30, dtype=int)))
    assert est.economy and est.rank == 5
    assert n_null_eigenvalues(est) == 35
    np.testing.assert_allclose(np.sort(spectrum(est).imag), np.sort(np.linalg.eigvals(lat).imag),
                               atol=1e-9)
    assert max_dissipation_pole(est) < 1e-9


def test_reconstruct_methods_agree():
    a = np.array([[-0.1, 2.0, 0.0], [-2.0, -0.1, 0.3], [0.0, -0.3, 0.05]])
    est = fit_liouvillian(block_of(linear_flow(a)))
    x0 = np.array([1.0, -0.5, 0.2])
    times = np.linspace(0, 3, 7)
    ref = np.array([sla.expm(a * t) @ x0 for t in times])
    np.testing.assert_allclose(reconstruct(est, x0, times, method="eig"), ref, atol=1e-8)
    np.testing.assert_allclose(reconstruct(est, x0, times, method="expm"), ref, atol=1e-8)
    np.testing.assert_allclose(reconstruct(est, x0, times, rows=[2])[:, 0], ref[:, 2], atol=1e-8)


def test_degenerate_block():
    z = np.zeros((3, 4))
    with pytest.raises(DegenerateDataError):
        fit_liouvillian(SnapshotBlock(z, z, 0.0, np.zeros(4), np.zeros(4, dtype=int)))


def test_finite_difference_moves_oscillator_into_left_half_plane():
    w = 3.0
    a = np.array([[0.0, w], [-w, 0.0]])
    recs = linear_flow(a, n_traj=2, n_samples=61, dt=0.01)
    est = fit_liouvillian(assemble_block(recs, WindowSpec(0.6, 0.1).finite(0.1), 0.3))
    lam = spectrum(est)
    # forward difference of exp(i w t) gives (exp(i w h) - 1) / h
    ref = (np.exp(1j * w * 0.1) - 1) / 0.1
    np.testing.assert_allclose(np.sort(lam.real), [ref.real, ref.real], atol=1e-8)
