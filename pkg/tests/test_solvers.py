"""
测试blGMRES、blFOM、正弦递推与峰-平台关系
"""
import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.blockvec import BlockMatrix, BlockVector, pad_problem
from app.core.lambda_matrix import LambdaMatrix, ResidualPolynomial, krylov_columns
from app.core.prescribe import construct, random_prescription
from app.core.salgebra import LoewnerOrder, is_upper_tri_nonneg, pinv
from app.core.solvers import blfom, blgmres, peak_plateau_residual_check, residual_poly_apply
from app.helper.exceptions import BreakdownError, DimensionMismatchError, InvalidParameterError
from app.helper.helper import random_complex


def _problem(seed, n, s):
    rng = np.random.default_rng(seed)
    A = random_complex((n * s, n * s), rng) + 2 * np.eye(n * s)
    return BlockMatrix(A, s), BlockVector(random_complex((n * s, s), rng), s)


def _least_squares_gram(A, B, basis):
    """直接最小二乘：min_Y ‖B − 𝒜V_kY‖ 的残差Gram矩阵"""
    AV = A.data @ basis
    Y, *_ = np.linalg.lstsq(AV, B.data, rcond=None)
    residual = B.data - AV @ Y
    return residual.conj().T @ residual


def _constructed(p):
    inst = construct(p)
    return inst.A, inst.B


def _shift_problem(n):
    """循环移位矩阵与 e_1：blGMRES 在前 n−1 步完全停滞"""
    A = np.roll(np.eye(n), 1, axis=0).astype(complex)
    return BlockMatrix(A, 1), BlockVector(np.eye(n)[:, :1], 1)


@pytest.mark.solvers
class TestBlockGmres:
    """测试blGMRES"""

    @settings(max_examples=15)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5), s=st.integers(1, 3))
    def test_matches_least_squares(self, seed, n, s):
        """测试残差Gram与直接最小二乘一致，且递推范数与显式残差一致"""
        A, B = _problem(seed, n, s)
        trace = blgmres(A, B, conv_tol=0.0)
        reference = np.linalg.norm(B.data) ** 2
        for step in trace.steps[1:]:
            expected = _least_squares_gram(A, B, trace.arnoldi.basis(step.k))
            assert np.linalg.norm(step.gram - expected) < 1e-8 * reference
            recurrence = step.norm.conj().T @ step.norm
            assert np.linalg.norm(recurrence - step.gram) < 1e-8 * reference

    @pytest.mark.parametrize("seed", range(20))
    def test_scalar_case(self, seed):
        """测试 s=1 时与标量GMRES的残差范数一致"""
        A, B = _problem(seed, 6, 1)
        trace = blgmres(A, B, conv_tol=0.0)
        scale = np.linalg.norm(B.data)
        for step in trace.steps[1:]:
            expected = np.sqrt(_least_squares_gram(A, B, trace.arnoldi.basis(step.k))[0, 0].real)
            assert abs(step.norm[0, 0]) == pytest.approx(expected, rel=1e-9, abs=1e-12 * scale)

    def test_monotone_and_exact_at_end(self, random_problem):
        """测试Loewner单调、列范数单调且第n步残差为零"""
        A, B = random_problem
        trace = blgmres(A, B)
        assert len(trace.steps) == A.n + 1
        assert trace.is_loewner_monotone()
        assert trace.columns_monotone()
        assert all(rel.is_nonincreasing for rel in trace.loewner_relations())
        assert np.linalg.norm(trace.last.norm) < 1e-8 * np.linalg.norm(B.data)
        assert trace.converged

    def test_norms_in_s0plus(self, random_problem):
        """测试残差块范数属于 S₀⁺，初值为 ‖B‖"""
        A, B = random_problem
        trace = blgmres(A, B)
        assert np.allclose(trace.steps[0].norm, trace.arnoldi.B_norm)
        for norm in trace.norms():
            assert is_upper_tri_nonneg(norm)

    def test_kmax(self, random_problem):
        """测试最大步数"""
        A, B = random_problem
        trace = blgmres(A, B, k_max=2)
        assert [step.k for step in trace.steps] == [0, 1, 2]
        assert not trace.converged

    def test_early_exit(self):
        """测试达到收敛容差后提前结束"""
        s, n = 2, 6
        rng = np.random.default_rng(3)
        Q, _ = np.linalg.qr(random_complex((n * s, n * s), rng))
        A = BlockMatrix(Q @ np.diag(1.0 + 1e-3 * np.arange(n * s)) @ Q.conj().T, s)
        B = BlockVector(random_complex((n * s, s), rng), s)
        trace = blgmres(A, B, conv_tol=1e-6)
        assert trace.converged
        assert trace.last.k < n

    def test_invariant_subspace(self):
        """测试Krylov子空间不变时一步收敛"""
        A = BlockMatrix(np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex), 2)
        B = BlockVector(np.eye(4)[:, :2], 2)
        trace = blgmres(A, B)
        assert trace.arnoldi.invariant
        assert trace.last.k == 1
        assert trace.converged

    def test_total_stagnation(self):
        """测试循环移位问题的完全停滞"""
        A, B = _shift_problem(4)
        trace = blgmres(A, B)
        for step in trace.steps[:-1]:
            assert np.isclose(step.norm[0, 0], 1.0)
        assert trace.loewner_relations()[:3] == [LoewnerOrder.EQUAL] * 3
        assert abs(trace.last.norm[0, 0]) < 1e-12

    def test_padded_problem(self, rng):
        """测试 m=5, s=2 补零后的迭代与原问题在Krylov子空间上的最小二乘一致"""
        A = random_complex((5, 5), rng) + 2 * np.eye(5)
        B = random_complex((5, 2), rng)
        A_hat, B_hat, n = pad_problem(A, B)
        with pytest.raises(BreakdownError):
            blgmres(A_hat, B_hat, conv_tol=0.0)

        trace = blgmres(A_hat, B_hat, conv_tol=0.0, complete_deficient=True)
        assert trace.last.k == n
        reference = np.linalg.norm(B) ** 2
        for step in trace.steps[1:]:
            AK = A @ np.hstack(krylov_columns(A, B, step.k))
            Y, *_ = np.linalg.lstsq(AK, B, rcond=None)
            residual = B - AK @ Y
            expected = residual.conj().T @ residual
            assert np.linalg.norm(step.gram - expected) < 1e-8 * reference
            assert np.linalg.norm(step.norm.conj().T @ step.norm - step.gram) < 1e-8 * reference
        assert trace.converged

    def test_loewner_monotone_on_random_runs(self):
        """测试100个随机问题上 Gram(R_k) ⪯ Gram(R_{k−1})"""
        for seed in range(100):
            n, s = 2 + seed % 4, 1 + (seed // 4) % 4
            rng = np.random.default_rng(seed)
            A = BlockMatrix(random_complex((n * s, n * s), rng), s)
            B = BlockVector(random_complex((n * s, s), rng), s)
            trace = blgmres(A, B, conv_tol=0.0)
            reference = np.linalg.norm(trace.steps[0].gram, 2)
            for prev, curr in zip(trace.steps, trace.steps[1:]):
                slack = np.linalg.eigvalsh(prev.gram - curr.gram)[0]
                assert slack >= -1e-10 * reference, f"seed={seed}, k={curr.k}"
            assert trace.is_loewner_monotone()

    @pytest.mark.parametrize("seed", range(3))
    def test_polynomial_optimality(self, seed):
        """测试残差不大于任何次数为k、常数项为I的残差多项式给出的残差（每步200个）"""
        A, B = _problem(seed, 4, 2)
        trace = blgmres(A, B, conv_tol=0.0)
        rng = np.random.default_rng(seed + 1000)
        reference = np.linalg.norm(B.data) ** 2
        for step in trace.steps[1:]:
            assert np.linalg.norm(step.norm.conj().T @ step.norm - step.gram) <= 1e-9 * reference
            for _ in range(200):
                P = ResidualPolynomial.random(step.k, A.s, rng, scale=rng.uniform(0.01, 1.0))
                R = residual_poly_apply(P, A, B).data
                gram = R.conj().T @ R
                slack = np.linalg.eigvalsh(gram - step.gram)[0]
                assert slack >= -1e-10 * max(reference, np.linalg.norm(gram, 2))

    def test_outputs(self, random_problem):
        """测试输出格式"""
        A, B = random_problem
        trace = blgmres(A, B)
        frame = trace.to_frame()
        assert list(frame.columns) == ["step", "frobenius", "col_1", "col_2"]
        assert len(frame) == A.n + 1
        payload = trace.to_dict()
        assert payload["n"] == A.n and payload["s"] == A.s
        assert len(payload["steps"]) == A.n + 1
        assert len(payload["steps"][0]["norm_upper"]) == 3

    def test_dimension_mismatch(self):
        """测试维度不匹配"""
        with pytest.raises(DimensionMismatchError):
            blgmres(BlockMatrix(np.eye(4), 2), BlockVector(np.ones((6, 2)), 2))

    def test_kmax_too_large(self, random_problem):
        """测试最大步数超过块长度"""
        A, B = random_problem
        with pytest.raises(InvalidParameterError):
            blgmres(A, B, k_max=A.n + 1)


@pytest.mark.solvers
class TestBlockFom:
    """测试blFOM与Givens余弦公式"""

    def test_formula_matches_residual(self, random_problem):
        """测试 |C_k^†‖R_k^G‖| 与FOM残差的Gram一致"""
        A, B = random_problem
        trace = blfom(A, B)
        reference = np.linalg.norm(B.data) ** 2
        for fom in trace.fom[:-1]:
            assert not fom.singular
            galerkin = fom.galerkin_norm.conj().T @ fom.galerkin_norm
            assert np.linalg.norm(fom.residual_gram - galerkin) < 1e-7 * reference
            assert np.linalg.norm(fom.formula_gram - galerkin) < 1e-7 * max(reference, np.linalg.norm(galerkin))

    def test_final_step_exact(self, random_problem):
        """测试第n步FOM与GMRES都给出精确解"""
        A, B = random_problem
        trace = blfom(A, B)
        last = trace.fom[-1]
        assert last.cosine is None
        assert np.linalg.norm(last.residual_gram) < 1e-8 * np.linalg.norm(B.data) ** 2

    def test_generalized_fom_on_stagnation(self):
        """测试 ℋ^(k) 奇异时取广义FOM解"""
        A, B = _shift_problem(4)
        trace = blfom(A, B)
        assert all(fom.singular for fom in trace.fom[:-1])
        assert np.all(np.isfinite(trace.fom[0].Y))


@pytest.mark.solvers
class TestPeakPlateau:
    """测试峰-平台关系"""

    def test_relation_holds(self, random_problem):
        """测试逐步与累加形式"""
        A, B = random_problem
        report = peak_plateau_residual_check(blfom(A, B))
        assert len(report.step_deviations) == A.n - 1
        assert report.max_deviation < 1e-8
        assert report.plateau_steps == []

    def test_plateau_steps(self):
        """测试完全停滞的步为平台（FOM残差无穷大）"""
        A, B = _shift_problem(4)
        report = peak_plateau_residual_check(blfom(A, B))
        assert report.plateau_steps == [1, 2, 3]
        assert report.max_deviation < 1e-10

    def test_uses_galerkin_residual(self, random_problem):
        """测试FOM一侧取真实的Galerkin残差，而不是余弦公式"""
        A, B = random_problem
        trace = blfom(A, B)
        report = peak_plateau_residual_check(trace)
        terms = []
        for fom, deviation in zip(trace.fom, report.step_deviations):
            galerkin = fom.galerkin_norm.conj().T @ fom.galerkin_norm
            expected = np.linalg.inv(trace.steps[fom.k].gram) - np.linalg.inv(trace.steps[fom.k - 1].gram)
            terms.append(np.linalg.inv(galerkin))
            assert np.linalg.norm(terms[-1] - expected) < 1e-8
            assert deviation < 1e-8

        skewed_formula = dataclasses.replace(
            trace, fom=[dataclasses.replace(f, formula_norm=2.0 * f.formula_norm) for f in trace.fom]
        )
        assert peak_plateau_residual_check(skewed_formula).step_deviations == report.step_deviations

        skewed_galerkin = dataclasses.replace(
            trace, fom=[dataclasses.replace(f, galerkin_norm=2.0 * f.galerkin_norm) for f in trace.fom]
        )
        largest = max(float(np.linalg.norm(term)) for term in terms)
        assert peak_plateau_residual_check(skewed_galerkin).max_deviation >= 0.5 * largest

    @pytest.mark.parametrize("seed", range(45))
    def test_relation_on_random_instances(self, seed):
        """测试随机问题上逐步与累加形式的偏差（Frobenius范数，绝对量）"""
        A, B = _problem(seed, 3 + seed % 3, 1 + seed % 3)
        report = peak_plateau_residual_check(blfom(A, B))
        assert report.max_deviation <= 1e-8
        assert report.plateau_steps == []

    @pytest.mark.parametrize("seed", range(5))
    def test_relation_with_stagnation(self, seed):
        """测试构造出的停滞实例：停滞步为平台，FOM项为零"""
        k = 1 + seed % 3
        p = random_prescription(4, 2, seed=seed, stagnation=(k,))
        trace = blfom(*_constructed(p))
        report = peak_plateau_residual_check(trace)
        assert k in report.plateau_steps
        assert report.max_deviation <= 1e-8
        reference = np.linalg.norm(trace.steps[k].gram, 2)
        galerkin = next(f for f in trace.fom if f.k == k).galerkin_norm
        assert np.linalg.norm(pinv(galerkin.conj().T @ galerkin, scale=reference)) < 1e-8

    def test_requires_fom(self, random_problem):
        """测试没有FOM数据时报错"""
        A, B = random_problem
        with pytest.raises(InvalidParameterError, match="峰-平台检查"):
            peak_plateau_residual_check(blgmres(A, B))


@pytest.mark.solvers
class TestResidualPolynomial:
    """测试残差多项式的 ∘ 作用"""

    def test_apply(self, random_problem, rng):
        """测试 P(𝒜)∘B = Σ𝒜ʲBP_j"""
        A, B = random_problem
        P = ResidualPolynomial.random(2, 2, rng)
        expected = B.data @ P.coeffs[0] + A.data @ B.data @ P.coeffs[1] + A.data @ A.data @ B.data @ P.coeffs[2]
        assert np.allclose(residual_poly_apply(P, A, B).data, expected)

    def test_lambda_matrix_with_unit_constant(self, random_problem):
        """测试 M(0) = I 的λ-矩阵"""
        A, B = random_problem
        M = LambdaMatrix((-np.eye(2),), 2)
        assert np.allclose(residual_poly_apply(M, A, B).data, A.data @ B.data + B.data)

    def test_lambda_matrix_rejected(self, random_problem):
        """测试 M(0) ≠ I"""
        A, B = random_problem
        with pytest.raises(InvalidParameterError, match="单位矩阵"):
            residual_poly_apply(LambdaMatrix.zero(1, 2), A, B)

    def test_block_size_mismatch(self, random_problem, rng):
        """测试块大小不一致"""
        A, B = random_problem
        with pytest.raises(DimensionMismatchError):
            residual_poly_apply(ResidualPolynomial.random(1, 1, rng), A, B)
