import os
import subprocess
import sys

import numpy as np
import pytest

from retailrank import _kernels
from retailrank._kernels import _pykernels

backends = [pytest.param(_pykernels, id="python")]
if _kernels.compiled is not None:
    backends.append(pytest.param(_kernels.compiled, id="cython"))


def _points(seed, n, span=0.01):
    rng = np.random.default_rng(seed)
    lats = 40.7 + rng.uniform(0, span, n)
    lons = -74.0 + rng.uniform(0, span, n)
    codes = rng.integers(0, 4, n).astype(np.int64)
    return lats, lons, codes


def _brute_counts(lats, lons, codes, k, r):
    n = len(lats)
    out = np.zeros((n, k), dtype=np.int64)
    for i in range(n):
        d = _pykernels.haversine_many(lats[i], lons[i], lats, lons)
        for j in np.nonzero(d < r)[0]:
            if j != i:
                out[i, codes[j]] += 1
    return out


@pytest.mark.parametrize("mod", backends)
def test_counts_match_brute_force(mod):
    for seed in range(5):
        lats, lons, codes = _points(seed, 300)
        got = mod.neighbor_category_counts(lats, lons, codes, 4, 150.0)
        assert np.array_equal(got, _brute_counts(lats, lons, codes, 4, 150.0))


@pytest.mark.parametrize("mod", backends)
def test_haversine_many(mod):
    lats, lons, _ = _points(3, 50, span=10)
    d = mod.haversine_many(0.0, 0.0, lats, lons)
    ref = _pykernels.haversine_many(0.0, 0.0, lats, lons)
    np.testing.assert_allclose(d, ref, rtol=1e-13)


def test_backends_agree_bitwise():
    if _kernels.compiled is None:
        pytest.skip("compiled extension not built")
    lats, lons, codes = _points(11, 2000, span=0.03)
    a = _kernels.compiled.neighbor_category_counts(lats, lons, codes, 4, 200.0)
    b = _pykernels.neighbor_category_counts(lats, lons, codes, 4, 200.0)
    assert np.array_equal(a, b)
    assert np.array_equal(
        _kernels.compiled.haversine_many(40.7, -74.0, lats, lons), _pykernels.haversine_many(40.7, -74.0, lats, lons)
    )


@pytest.mark.parametrize("mod", backends)
def test_empty_input(mod):
    e = np.zeros(0)
    assert mod.neighbor_category_counts(e, e, np.zeros(0, dtype=np.int64), 2, 100.0).shape == (0, 2)


def test_backend_selection_env():
    code = "import retailrank; print(retailrank.KERNEL_BACKEND)"
    env = dict(os.environ, RETAILRANK_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert _kernels.BACKEND in ("cython", "python")


def test_benchmark_script_runs(capsys):
    if _kernels.compiled is None:
        pytest.skip("compiled extension not built")
    import importlib.util
    from pathlib import Path

    path = Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    assert mod.main(["--sizes", "300", "--repeat", "1"]) == 0
    assert "neighbor_category_counts" in capsys.readouterr().out
