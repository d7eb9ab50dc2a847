"""
测试块Arnoldi过程与块Hessenberg矩阵
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.arnoldi import BlockHessenberg, block_arnoldi
from app.core.blockvec import BlockMatrix, BlockVector
from app.core.salgebra import is_upper_tri_nonneg
from app.helper.exceptions import BreakdownError, DimensionMismatchError, InvalidParameterError
from app.helper.helper import random_complex


def _problem(seed, n, s):
    rng = np.random.default_rng(seed)
    return BlockMatrix(random_complex((n * s, n * s), rng), s), BlockVector(random_complex((n * s, s), rng), s)


@pytest.mark.arnoldi
class TestBlockArnoldi:
    """测试块Arnoldi分解"""

    @settings(max_examples=20)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), s=st.integers(1, 3))
    def test_relation_and_orthogonality(self, seed, n, s):
        """测试 𝒜V = VH 与 V*V = I"""
        A, B = _problem(seed, n, s)
        arnoldi = block_arnoldi(A, B)
        assert arnoldi.steps == n
        assert arnoldi.complete
        assert arnoldi.orthogonality_loss() < 1e-10
        scale = max(np.linalg.norm(A.data), 1.0)
        assert arnoldi.relation_residual(A) < 1e-10 * scale

    def test_scalar_oracle(self):
        """测试 s=1 时 V、H 与标量Arnoldi（改进Gram-Schmidt，二次正交化）一致"""
        for seed in range(20):
            rng = np.random.default_rng(seed)
            m = 6
            A = random_complex((m, m), rng) + 2 * np.eye(m)
            b = random_complex((m, 1), rng)

            V = np.zeros((m, m), dtype=complex)
            H = np.zeros((m, m), dtype=complex)
            V[:, 0] = b[:, 0] / np.linalg.norm(b)
            for j in range(m):
                w = A @ V[:, j]
                for _ in range(2):
                    for i in range(j + 1):
                        h = np.vdot(V[:, i], w)
                        H[i, j] += h
                        w = w - h * V[:, i]
                if j + 1 < m:
                    H[j + 1, j] = np.linalg.norm(w)
                    V[:, j + 1] = w / H[j + 1, j]

            arnoldi = block_arnoldi(BlockMatrix(A, 1), BlockVector(b, 1))
            scale = np.linalg.norm(A)
            assert np.allclose(arnoldi.V, V, atol=1e-10)
            assert np.linalg.norm(arnoldi.H - H) <= 1e-10 * scale
            assert arnoldi.B_norm[0, 0] == pytest.approx(np.linalg.norm(b))

    def test_subdiagonal_blocks_in_splus(self, random_problem):
        """测试次对角块属于 S⁺"""
        A, B = random_problem
        arnoldi = block_arnoldi(A, B)
        for k in range(1, arnoldi.steps):
            assert is_upper_tri_nonneg(arnoldi.subdiagonal(k), strict=True)
        assert arnoldi.subdiagonal(arnoldi.steps) is None

    def test_first_basis_block(self, random_problem):
        """测试 B = V_1‖B‖"""
        A, B = random_problem
        arnoldi = block_arnoldi(A, B)
        assert np.allclose(arnoldi.basis(1) @ arnoldi.B_norm, B.data)

    def test_partial_run(self, random_problem):
        """测试提前停止时为 (k+1)×k 的slab"""
        A, B = random_problem
        arnoldi = block_arnoldi(A, B, k_max=2)
        s = A.s
        assert arnoldi.steps == 2
        assert not arnoldi.complete
        assert arnoldi.H.shape == (3 * s, 2 * s)
        assert arnoldi.V.shape == (A.n * s, 3 * s)
        assert arnoldi.relation_residual(A) < 1e-10 * np.linalg.norm(A.data)

    def test_slab_zero_padded(self, random_problem):
        """测试最后一步的slab补零行"""
        A, B = random_problem
        arnoldi = block_arnoldi(A, B)
        slab = arnoldi.slab(arnoldi.steps)
        assert slab.shape == ((A.n + 1) * A.s, A.n * A.s)
        assert np.all(slab[-A.s:] == 0)

    def test_rank_deficient_rhs(self):
        """测试右端项列秩不足时在第1步breakdown"""
        A = BlockMatrix(np.eye(4), 2)
        B = BlockVector(np.ones((4, 2)), 2)
        with pytest.raises(BreakdownError) as info:
            block_arnoldi(A, B)
        assert info.value.step == 1

    def test_breakdown_step(self):
        """测试候选块部分秩亏"""
        # 𝒜 = diag(1, 2, 3, 3)，B 的第二列在 𝒜 的特征空间中：第2步候选块秩为1
        A = BlockMatrix(np.diag([1.0, 2.0, 3.0, 3.0]).astype(complex), 2)
        B = BlockVector(np.array([[1, 0], [1, 0], [1, 1], [0, 1]], dtype=complex), 2)
        with pytest.raises(BreakdownError) as info:
            block_arnoldi(A, B)
        assert info.value.step == 2

    def test_complete_deficient_block(self):
        """测试秩亏候选块的补全：分解关系成立，次对角块奇异"""
        A = BlockMatrix(np.diag([1.0, 2.0, 3.0, 3.0]).astype(complex), 2)
        B = BlockVector(np.array([[1, 0], [1, 0], [1, 1], [0, 1]], dtype=complex), 2)
        arnoldi = block_arnoldi(A, B, complete_deficient=True)
        assert arnoldi.steps == 2
        assert arnoldi.orthogonality_loss() < 1e-10
        assert arnoldi.relation_residual(A) < 1e-10 * np.linalg.norm(A.data)
        assert np.min(np.abs(np.diag(arnoldi.subdiagonal(1)))) < 1e-10

    def test_invariant_subspace(self):
        """测试Krylov子空间不变时截断"""
        A = BlockMatrix(np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex), 2)
        B = BlockVector(np.eye(4)[:, :2], 2)
        arnoldi = block_arnoldi(A, B, stop_on_invariant=True)
        assert arnoldi.invariant
        assert arnoldi.steps == 1
        assert arnoldi.complete
        with pytest.raises(BreakdownError):
            block_arnoldi(A, B)

    def test_dimension_mismatch(self):
        """测试维度不匹配"""
        with pytest.raises(DimensionMismatchError):
            block_arnoldi(BlockMatrix(np.eye(4), 2), BlockVector(np.ones((6, 2)), 2))


@pytest.mark.arnoldi
class TestBlockHessenberg:
    """测试块Hessenberg结构"""

    def test_from_arnoldi(self, random_problem):
        """测试Arnoldi得到的方阵满足结构"""
        A, B = random_problem
        H = block_arnoldi(A, B).hessenberg()
        assert H.n == A.n
        assert np.all(np.tril(H.data, -A.s - 1) == 0)
        assert np.all(np.imag(np.diagonal(H.data, -A.s)) == 0)
        assert H.principal(2).data.shape == (4, 4)
        assert H.slab(2).shape == (6, 4)

    def test_rejects_below_band(self):
        """测试次对角块以下存在非零元"""
        H = np.triu(np.ones((4, 4)), -2)
        with pytest.raises(InvalidParameterError, match="不是块上Hessenberg矩阵"):
            BlockHessenberg.from_array(H, 1)

    def test_rejects_nonpositive_subdiagonal(self):
        """测试次对角块对角线不是正实数"""
        H = np.triu(np.ones((4, 4)), -1)
        H[2, 1] = -1.0
        with pytest.raises(InvalidParameterError, match="S⁺"):
            BlockHessenberg.from_array(H, 1)

    def test_cleans_rounding(self):
        """测试舍入量级的带外元素被置零"""
        H = np.triu(np.ones((4, 4)), -2).astype(complex)
        H[3, 0] = 1e-14
        H[2, 0] += 1e-14j
        cleaned = BlockHessenberg.from_array(H, 2)
        assert cleaned.data[3, 0] == 0
        assert cleaned.data[2, 0] == 1.0
        assert cleaned.to_block_matrix().n == 2

    def test_not_block_multiple(self):
        """测试阶数不是块大小的倍数"""
        with pytest.raises(DimensionMismatchError):
            BlockHessenberg.from_array(np.eye(3), 2)
