import math

import numpy as np
import pytest

from qmmpc import linalg
from qmmpc._kernels import BACKEND, _py

try:
    from qmmpc._kernels import _native
except ImportError:
    _native = None

BACKENDS = [("numpy", _py)] + ([("native", _native)] if _native else [])


def random_block(rng, definite=True):
    m = int(rng.integers(1, 9))
    k = int(rng.integers(0, 7))
    n = k + int(rng.integers(1, 4))
    ids = np.sort(rng.permutation(n)[:k]).astype(np.int64)
    r = rng.uniform(-1, 1, (m, m))
    f0 = r @ r.T + (0.5 if definite else -2.0) * np.eye(m)
    coeffs = np.ascontiguousarray(
        [linalg.symmetrize(rng.uniform(-1, 1, (m, m))) for _ in range(k)]
    ).reshape(k, m, m)
    z = rng.uniform(-0.3, 0.3, n)
    return f0, coeffs, ids, z, m, k, n


def test_backend_selected():
    assert BACKEND in ("native", "numpy")


@pytest.mark.parametrize("name,mod", BACKENDS)
class TestKernelSemantics:
    def test_eval_affine_matches_reference(self, name, mod, seed=0):
        rng = np.random.default_rng(seed)
        for _ in range(30):
            f0, coeffs, ids, z, m, k, n = random_block(rng)
            out = np.empty((m, m))
            mod.eval_affine(f0, coeffs, ids, z, out)
            expected = f0 + np.tensordot(z[ids], coeffs, axes=1) if k else f0
            np.testing.assert_allclose(out, expected, atol=1e-13)

    def test_logdet_matches_eigenvalues(self, name, mod):
        rng = np.random.default_rng(1)
        for _ in range(30):
            f0, coeffs, ids, z, m, k, n = random_block(rng)
            fwork = np.empty((m, m))
            got = mod.block_logdet(f0, coeffs, ids, z, fwork)
            evald = f0 + (np.tensordot(z[ids], coeffs, axes=1) if k else 0)
            lam = np.linalg.eigvalsh(evald)
            if lam[0] <= 0:
                assert math.isnan(got)
            else:
                assert got == pytest.approx(float(np.sum(np.log(lam))), rel=1e-10)

    def test_not_pd_returns_nan_untouched(self, name, mod):
        rng = np.random.default_rng(2)
        f0, coeffs, ids, z, m, k, n = random_block(rng, definite=False)
        grad = np.full(n, 7.0)
        hess = np.full((n, n), 7.0)
        fwork = np.empty((m, m))
        gwork = np.empty((k, m, m))
        got = mod.block_grad_hess(f0, coeffs, ids, z, grad, hess, fwork, gwork)
        assert math.isnan(got)
        np.testing.assert_array_equal(grad, np.full(n, 7.0))
        np.testing.assert_array_equal(hess, np.full((n, n), 7.0))

    def test_grad_hess_matches_finite_differences(self, name, mod):
        rng = np.random.default_rng(3)
        f0, coeffs, ids, z, m, k, n = random_block(rng)
        fwork = np.empty((m, m))
        gwork = np.empty((k, m, m))
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        got = mod.block_grad_hess(f0, coeffs, ids, z, grad, hess, fwork, gwork)
        assert not math.isnan(got)

        def neg_logdet(zz):
            return -mod.block_logdet(f0, coeffs, ids, zz, fwork)

        h = 1e-6
        for i in range(n):
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            fd = (neg_logdet(zp) - neg_logdet(zm)) / (2 * h)
            assert grad[i] == pytest.approx(fd, abs=1e-5)


@pytest.mark.skipif(_native is None, reason="compiled kernels not built")
class TestBackendEquivalence:
    def test_agree_on_random_blocks(self):
        rng = np.random.default_rng(42)
        for _ in range(150):
            f0, coeffs, ids, z, m, k, n = random_block(rng)
            g1, g2 = np.zeros(n), np.zeros(n)
            h1, h2 = np.zeros((n, n)), np.zeros((n, n))
            fw = np.empty((m, m))
            gw = np.empty((k, m, m))
            ld1 = _py.block_grad_hess(f0, coeffs, ids, z, g1, h1, fw.copy(), gw.copy())
            ld2 = _native.block_grad_hess(f0, coeffs, ids, z, g2, h2, fw, gw)
            assert math.isnan(ld1) == math.isnan(ld2)
            if not math.isnan(ld1):
                assert ld1 == pytest.approx(ld2, rel=1e-10)
                np.testing.assert_allclose(g1, g2, rtol=1e-8, atol=1e-10)
                np.testing.assert_allclose(h1, h2, rtol=1e-7, atol=1e-9)
