"""
测试 S 上的标量运算：块绝对值、cholU、Loewner序、截断伪逆
"""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from app.core.salgebra import (
    LoewnerOrder,
    block_abs,
    chol_upper,
    is_upper_tri_nonneg,
    loewner_cmp,
    loewner_cmp_gram,
    pinv
)
from app.helper.exceptions import DimensionMismatchError, NotPSDError


def _complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.mark.salgebra
class TestBlockAbs:
    """测试块绝对值"""

    @given(seed=st.integers(0, 2**32 - 1), s=st.integers(1, 4), extra=st.integers(0, 3))
    def test_gram_and_form(self, seed, s, extra):
        """测试 |A|*|A| = A*A 且 |A| ∈ S₀⁺"""
        A = _complex(np.random.default_rng(seed), (s + extra, s))
        R = block_abs(A)
        assert is_upper_tri_nonneg(R)
        assert np.allclose(R.conj().T @ R, A.conj().T @ A, atol=1e-10 * max(1.0, np.linalg.norm(A) ** 2))

    def test_unitary_invariance(self, rng):
        """测试 |QA| = |A|"""
        A = _complex(rng, (5, 3))
        Q, _ = np.linalg.qr(_complex(rng, (5, 5)))
        assert np.allclose(block_abs(Q @ A), block_abs(A), atol=1e-12)

    def test_zero_matrix(self):
        """测试零矩阵"""
        assert np.array_equal(block_abs(np.zeros((4, 2))), np.zeros((2, 2)))

    def test_wide_matrix_is_padded(self, rng):
        """测试行数少于列数"""
        A = _complex(rng, (1, 3))
        R = block_abs(A)
        assert R.shape == (3, 3)
        assert np.allclose(R.conj().T @ R, A.conj().T @ A, atol=1e-12)

    def test_rank_deficient_has_zero_diagonal(self):
        """测试奇异矩阵得到确定的代表元"""
        A = np.array([[1.0, 1.0], [1.0, 1.0]])
        R = block_abs(A)
        assert is_upper_tri_nonneg(R)
        assert R[1, 1] == 0.0
        assert np.allclose(R.conj().T @ R, A.T @ A)

    def test_multiplicative(self):
        """测试 |A|B|| = |A||B|"""
        for seed in range(10):
            rng = np.random.default_rng(seed)
            A, B = _complex(rng, (3, 3)), _complex(rng, (3, 3))
            expected = block_abs(A) @ block_abs(B)
            assert np.linalg.norm(block_abs(A @ block_abs(B)) - expected) <= 1e-10 * np.linalg.norm(expected)

    def test_diagonal_examples(self):
        """测试 |I| = I 与 |diag(2, −3)| = diag(2, 3)"""
        assert np.allclose(block_abs(np.eye(2)), np.eye(2))
        assert np.allclose(block_abs(np.diag([2.0, -3.0])), np.diag([2.0, 3.0]))

    def test_invalid_dimension(self):
        """测试一维输入"""
        with pytest.raises(DimensionMismatchError):
            block_abs(np.ones(3))


@pytest.mark.salgebra
class TestCholUpper:
    """测试上三角平方根"""

    def test_positive_definite(self, rng):
        """测试正定矩阵"""
        X = _complex(rng, (3, 3))
        P = X.conj().T @ X + np.eye(3)
        R = chol_upper(P)
        assert is_upper_tri_nonneg(R, strict=True)
        assert np.allclose(R.conj().T @ R, P)

    def test_semidefinite_fallback(self):
        """测试半正定矩阵退回特征分解"""
        v = np.array([[1.0], [2.0j]])
        P = v @ v.conj().T
        R = chol_upper(P)
        assert is_upper_tri_nonneg(R)
        assert np.allclose(R.conj().T @ R, P, atol=1e-12)

    def test_round_trip(self):
        """测试 R ∈ S⁺ 时 cholU(R*R) = R"""
        for seed in range(10):
            R = block_abs(_complex(np.random.default_rng(seed), (4, 4)))
            assert np.linalg.norm(chol_upper(R.conj().T @ R) - R) <= 1e-10 * np.linalg.norm(R)

    def test_examples(self):
        """测试 diag(4, 9) 与 [[2, 1], [1, 2]]"""
        assert np.allclose(chol_upper(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
        R = chol_upper(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert R[0, 0] == pytest.approx(np.sqrt(2.0))
        assert np.allclose(R.conj().T @ R, [[2.0, 1.0], [1.0, 2.0]])

    def test_not_psd(self):
        """测试不定矩阵"""
        with pytest.raises(NotPSDError, match="不是半正定的"):
            chol_upper(np.diag([1.0, -1.0]))

    def test_zero(self):
        """测试零矩阵"""
        assert np.array_equal(chol_upper(np.zeros((2, 2))), np.zeros((2, 2)))

    def test_non_square(self):
        """测试非方阵"""
        with pytest.raises(DimensionMismatchError):
            chol_upper(np.zeros((2, 3)))


@pytest.mark.salgebra
class TestLoewner:
    """测试广义Loewner序"""

    def test_strict_less(self):
        """测试 I ≺ 2I"""
        assert loewner_cmp(np.eye(2), 2 * np.eye(2)) is LoewnerOrder.LESS
        assert loewner_cmp(2 * np.eye(2), np.eye(2)) is LoewnerOrder.GREATER

    def test_equal_up_to_unitary(self, rng):
        """测试只比较Gram矩阵"""
        N = block_abs(_complex(rng, (2, 2)))
        Q, _ = np.linalg.qr(_complex(rng, (2, 2)))
        assert loewner_cmp(N, Q @ N) is LoewnerOrder.EQUAL

    def test_semidefinite_relation(self):
        """测试只在一个方向上减小"""
        assert loewner_cmp(np.diag([1.0, 0.5]), np.eye(2)) is LoewnerOrder.LESS_EQ
        assert loewner_cmp(np.eye(2), np.diag([1.0, 0.5])) is LoewnerOrder.GREATER_EQ

    def test_incomparable(self):
        """测试不可比较"""
        assert loewner_cmp(np.diag([2.0, 0.5]), np.eye(2)) is LoewnerOrder.INCOMPARABLE

    def test_nonincreasing_flag(self):
        """测试单调不增判定"""
        assert LoewnerOrder.EQUAL.is_nonincreasing
        assert LoewnerOrder.LESS_EQ.is_nonincreasing
        assert not LoewnerOrder.GREATER.is_nonincreasing
        assert not LoewnerOrder.INCOMPARABLE.is_nonincreasing

    def test_gram_tolerance(self):
        """测试舍入量级的差异视为相等"""
        P = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert loewner_cmp_gram(P + 1e-15 * np.eye(2), P) is LoewnerOrder.EQUAL

    def test_shape_mismatch(self):
        """测试块大小不一致"""
        with pytest.raises(DimensionMismatchError):
            loewner_cmp(np.eye(2), np.eye(3))


@pytest.mark.salgebra
class TestPinvAndForm:
    """测试截断伪逆与 S₀⁺ 判定"""

    def test_pinv_nonsingular(self, rng):
        """测试非奇异矩阵的伪逆即逆"""
        M = _complex(rng, (3, 3))
        assert np.allclose(pinv(M) @ M, np.eye(3))

    def test_pinv_truncates(self):
        """测试舍入量级的奇异值被截断"""
        M = np.diag([1.0, 1e-18])
        assert np.allclose(pinv(M), np.diag([1.0, 0.0]))

    def test_pinv_absolute_scale(self):
        """测试绝对尺度：相对σ_max不小但相对1很小的奇异值被截断"""
        M = np.diag([1e-17, 1e-17])
        assert np.allclose(pinv(M), 1e17 * np.eye(2))
        assert np.array_equal(pinv(M, scale=1.0), np.zeros((2, 2)))

    def test_is_upper_tri_nonneg(self):
        """测试 S₀⁺ 与 S⁺"""
        R = np.array([[1.0, 2j], [0.0, 0.0]])
        assert is_upper_tri_nonneg(R)
        assert not is_upper_tri_nonneg(R, strict=True)
        assert not is_upper_tri_nonneg(np.array([[1.0, 0.0], [1e-20, 1.0]]))
        assert not is_upper_tri_nonneg(np.array([[1j]]))
        assert not is_upper_tri_nonneg(np.zeros((2, 3)))
