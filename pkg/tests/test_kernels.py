import os
import subprocess
import sys

import numpy as np
import pytest

from boxscout import _kernels
from boxscout._kernels import _fallback

try:
    from boxscout._kernels import _native
except ImportError:
    _native = None

needs_native = pytest.mark.skipif(_native is None,
                                  reason="compiled kernels unavailable")


def random_scores(rng, n, k):
    return rng.dirichlet(np.ones(k), size=n)


class TestFallbackCorrectness:
    def test_margin_argmax_brute_force(self):
        rng = np.random.default_rng(1)
        scores = random_scores(rng, 64, 6)
        margins, args = _fallback.margin_argmax(scores)
        for i, row in enumerate(scores):
            ordered = sorted(row, reverse=True)
            assert margins[i] == pytest.approx(
                (1.0 - (ordered[0] - ordered[1])) ** 2)
            assert row[args[i]] == max(row)
            assert args[i] == int(np.argmax(row))

    def test_margin_needs_two_classes(self):
        with pytest.raises(ValueError):
            _fallback.margin_argmax(np.ones((3, 1)))

    def test_iou_matrix_brute_force(self):
        rng = np.random.default_rng(2)
        def boxes(n):
            x1 = rng.uniform(0, 5, n); y1 = rng.uniform(0, 5, n)
            return np.stack([x1, y1, x1 + rng.uniform(0.1, 5, n),
                             y1 + rng.uniform(0.1, 5, n)], axis=1)
        a, b = boxes(7), boxes(9)
        m = _fallback.iou_matrix(a, b)
        for i in range(7):
            for j in range(9):
                ix = max(0.0, min(a[i, 2], b[j, 2]) - max(a[i, 0], b[j, 0]))
                iy = max(0.0, min(a[i, 3], b[j, 3]) - max(a[i, 1], b[j, 1]))
                inter = ix * iy
                union = ((a[i, 2] - a[i, 0]) * (a[i, 3] - a[i, 1])
                         + (b[j, 2] - b[j, 0]) * (b[j, 3] - b[j, 1]) - inter)
                assert m[i, j] == pytest.approx(inter / union)

    def test_iou_empty_inputs(self):
        assert _fallback.iou_matrix(np.zeros((0, 4)), np.zeros((3, 4))).shape \
            == (0, 3)

    def test_ap_simple_cases(self):
        assert _fallback.ap_from_flags(np.array([1.0]), 1) == 1.0
        assert _fallback.ap_from_flags(np.array([]), 2) == 0.0
        assert _fallback.ap_from_flags(np.array([1.0, 0.0, 1.0]), 2) == \
            pytest.approx(0.5 + 0.5 * 2 / 3)


@needs_native
class TestBackendParity:
    def test_margin_argmax_parity(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            scores = random_scores(rng, int(rng.integers(1, 50)),
                                   int(rng.integers(2, 21)))
            m_py, a_py = _fallback.margin_argmax(scores)
            m_nat, a_nat = _native.margin_argmax(scores)
            np.testing.assert_allclose(m_nat, m_py, rtol=0, atol=1e-14)
            np.testing.assert_array_equal(a_nat, a_py)

    def test_iou_matrix_parity(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a = rng.uniform(0, 10, size=(int(rng.integers(1, 30)), 4))
            b = rng.uniform(0, 10, size=(int(rng.integers(1, 30)), 4))
            a[:, 2:] += a[:, :2]; b[:, 2:] += b[:, :2]
            np.testing.assert_allclose(_native.iou_matrix(a, b),
                                       _fallback.iou_matrix(a, b),
                                       rtol=0, atol=1e-14)

    def test_ap_parity(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(0, 40))
            flags = (rng.random(n) < 0.4).astype(np.float64)
            n_pos = int(rng.integers(1, 8))
            assert _native.ap_from_flags(flags, n_pos) == \
                pytest.approx(_fallback.ap_from_flags(flags, n_pos), abs=1e-12)


def test_pure_env_selects_fallback():
    code = ("import boxscout._kernels as k; print(k.BACKEND)")
    env = dict(os.environ, BOXSCOUT_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_active_backend_exports():
    assert _kernels.BACKEND in ("native", "python")
    assert callable(_kernels.margin_argmax)
    assert callable(_kernels.iou_matrix)
    assert callable(_kernels.ap_from_flags)
