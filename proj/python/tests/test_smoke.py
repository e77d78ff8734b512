import math

import numpy as np
import pytest

import mmdq


def test_kernel_is_a_density():
    k = mmdq.KernelSpec.gaussian(0.5)
    assert mmdq.kernel(k, 0.0, 0.0) == pytest.approx(1 / (math.sqrt(2 * math.pi) * 0.5))
    laplace = mmdq.KernelSpec.matern(0.5, 0.3)
    assert mmdq.kernel(laplace, 0.0, 0.6) == pytest.approx(math.exp(-2) / 0.6, rel=1e-14)


def test_sum_to_one_weights_solve_the_bordered_system():
    k = mmdq.KernelSpec.gaussian(0.5)
    x = np.array([-1.0, 0.0, 1.2])
    model = mmdq.EmbeddingModel(mmdq.TargetDistribution.normal(), k)
    m = model.embedding(x)
    p = mmdq.sum_to_one_weights(k, x, m)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    # K p - m is constant across points at the optimum
    r = mmdq.gram(k, x) @ p - m
    assert np.ptp(r) < 1e-12


def test_simplex_weights_are_a_probability_vector():
    k = mmdq.KernelSpec.gaussian(0.5)
    x = np.linspace(0.05, 0.95, 7)
    model = mmdq.EmbeddingModel(mmdq.TargetDistribution.uniform(), k)
    p = mmdq.simplex_weights(k, x, model.embedding(x))
    assert p.min() >= 0.0
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_projection():
    p = mmdq.project_simplex(np.array([0.3, -1.0, 2.0]))
    np.testing.assert_allclose(p, [0.0, 0.0, 1.0], atol=1e-15)


def test_closed_form_optimum_is_symmetric():
    r = mmdq.deterministic_optimize(5)
    assert r["converged"]
    x = np.sort(r["points"])
    np.testing.assert_allclose(x, -x[::-1], atol=1e-6)
    assert r["mmd"] == pytest.approx(math.sqrt(mmdq.closed_mmd_sq(r["points"])), rel=1e-12)


def test_quantize_runs_and_is_reproducible(tmp_path):
    a = mmdq.quantize(n=4, iters=3000, seed=3, output_dir=tmp_path)
    b = mmdq.quantize(n=4, iters=3000, seed=3)
    assert a["status"] == "ok"
    np.testing.assert_array_equal(a["points"], b["points"])
    assert a["mmd"] > 0.0
    header = (tmp_path / "points.csv").read_text().splitlines()[0]
    assert header == "index,x,p"


def test_quadrature_embedding_without_closed_form():
    model = mmdq.EmbeddingModel(mmdq.TargetDistribution.exponential(), mmdq.KernelSpec.matern(2.5, 0.5))
    assert model.source == "quadrature"
    assert model.self_energy > 0.0


def test_invalid_input_raises_value_error():
    with pytest.raises(ValueError):
        mmdq.KernelSpec.gaussian(-1.0)
    with pytest.raises(ValueError):
        mmdq.quantize(target="cauchy")


def test_coincident_points_raise_numerical_error():
    k = mmdq.KernelSpec.gaussian(0.5)
    with pytest.raises(RuntimeError):
        mmdq.sum_to_one_weights(k, np.array([0.2, 0.2]), np.array([0.5, 0.5]))


def test_self_checks_pass():
    results = mmdq.check(7)
    assert len(results) == 10
    assert all(passed for _, passed, _ in results)
