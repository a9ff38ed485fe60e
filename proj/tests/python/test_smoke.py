import math
import os

import numpy as np
import pytest

import lossscape as ls

DATA = os.environ.get(
    "LOSSSCAPE_DATA_DIR",
    os.path.join(os.path.dirname(__file__), "..", "..", "data", "mnist5k"),
)


def test_parameter_counts():
    assert ls.NetworkSpec.fcp().num_params == 42200
    assert ls.NetworkSpec.autoencoder().num_params == 52224


def test_zero_params_give_ln10():
    spec = ls.NetworkSpec.fcp()
    x = np.random.default_rng(0).random((5, 784))
    assert ls.loss(spec, np.zeros(spec.num_params), x, [0, 1, 2, 3, 4]) == pytest.approx(math.log(10), rel=1e-14)


def test_gradient_matches_finite_difference():
    spec = ls.NetworkSpec.fcp()
    rng = np.random.default_rng(1)
    x = rng.random((4, 784))
    y = [3, 1, 4, 1]
    w = ls.init_params(spec, 3)
    value, grad = ls.loss_and_grad(spec, w, x, y)
    assert value == pytest.approx(ls.loss(spec, w, x, y))
    for i in rng.integers(0, spec.num_params, 5):
        e = np.zeros_like(w)
        e[i] = 1e-5
        fd = (ls.loss(spec, w + e, x, y) - ls.loss(spec, w - e, x, y)) / 2e-5
        assert grad[i] == pytest.approx(fd, rel=1e-4, abs=1e-9)


def test_bundled_mnist():
    xtr, ytr, xte, yte = ls.load_mnist(DATA, 100)
    assert xtr.shape == (100, 784)
    assert len(ytr) == 100
    assert xte.shape[1] == 784
    assert 0.0 <= xtr.min() and xtr.max() <= 1.0


def test_synthetic_path_lowers_barrier():
    result = ls.synthetic_path(10.0)
    assert result["straight"]["height"] == pytest.approx(1.102, abs=0.005)
    assert result["height"] < result["straight"]["height"]
    assert len(result["losses"]) == 100
    assert result["coefficients"].shape == (2, 10)


def test_linear_kpca_matches_svd():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(20, 30)) / (1 + np.arange(30))
    scores, eig = ls.kpca(pts, kernel="linear", components=3)
    c = pts - pts.mean(axis=0)
    u, s, _ = np.linalg.svd(c, full_matrices=False)
    ref = u[:, :3] * s[:3]
    for k in range(3):
        assert min(np.abs(scores[:, k] - ref[:, k]).max(), np.abs(scores[:, k] + ref[:, k]).max()) < 1e-8
    assert np.all(np.diff(eig) <= 0)


def test_shell_and_component_stats():
    a = np.array([[1.0, 2.0, 2.0]])
    b = np.array([[-1.0, 0.0, 4.0]])
    s = ls.shell_stats(a, b)
    half = 0.5 * np.linalg.norm(a - b)
    assert s["distances_a"][0] == pytest.approx(half)
    assert ls.component_stats(np.array([[-1.0, 1.0], [1.0, -1.0]])) == (0.0, 1.0)


def test_solution_round_trip(tmp_path):
    spec = ls.NetworkSpec.fcp()
    vs = np.random.default_rng(3).normal(size=(2, spec.num_params))
    path = tmp_path / "s.bin"
    ls.write_solutions(path, spec, vs)
    spec_back, back = ls.read_solutions(path)
    assert spec_back == spec
    assert np.array_equal(back, vs)
    path.write_bytes(b"junk" + path.read_bytes()[4:])
    with pytest.raises(ls.Error):
        ls.read_solutions(path)


def test_config_and_synth(tmp_path):
    text = ls.normalize_config("synth.iterations = 5\nseed = 2\n")
    assert "synth.iterations = 5" in text
    with pytest.raises(ls.Error):
        ls.normalize_config("nonsense = 1\n")
    heights = ls.run_synth(text, tmp_path)
    assert set(heights) == {"straight", 10.0, 100.0, 1000.0}
    assert (tmp_path / "manifest.json").exists()
