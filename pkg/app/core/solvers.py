"""
块GMRES与块FOM（含广义FOM）、Givens正弦递推以及峰-平台关系
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
import scipy.linalg as sla
from loguru import logger

from ..helper import config
from ..helper.exceptions import DimensionMismatchError, InvalidParameterError
from ..helper.validators import Validator
from .arnoldi import ArnoldiDecomposition, block_arnoldi
from .blockvec import BlockMatrix, BlockVector, rank_threshold
from .givens import hessenberg_qr
from .lambda_matrix import (
    LambdaMatrix,
    ResidualPolynomial,
    circ_action,
    eval_lambda,
    poly_circ_action
)
from .salgebra import LoewnerOrder, block_abs, loewner_cmp_gram, pinv


def _upper_entries(R: np.ndarray) -> List[List[float]]:
    rows, cols = np.triu_indices(R.shape[0])
    return [[float(R[i, j].real), float(R[i, j].imag)] for i, j in zip(rows, cols)]


def _gram(R: np.ndarray) -> np.ndarray:
    return R.conj().T @ R


@dataclass(frozen=True, eq=False)
class SolveStep:
    """
    第 k 步的blGMRES数据

    norm 为Givens递推得到的 ‖R_k‖；direct_norm 与 gram 由显式残差 B − 𝒜X_k 计算。
    """

    k: int
    Y: np.ndarray
    norm: np.ndarray
    direct_norm: np.ndarray
    gram: np.ndarray
    column_norms: np.ndarray
    sine: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "norm_upper": _upper_entries(self.norm),
            "gram": [[[float(z.real), float(z.imag)] for z in row] for row in self.gram],
            "frobenius": float(np.linalg.norm(self.norm)),
            "column_norms": [float(x) for x in self.column_norms],
        }


@dataclass(frozen=True, eq=False)
class FomStep:
    """
    第 k 步的（广义）blFOM数据

    formula_norm = |C_k^†|·‖R_k^G‖；galerkin_norm 为 V_{k+1}V_{k+1}*(B − 𝒜X_k^F) 的块范数；
    residual_gram 为完整残差的Gram矩阵。
    """

    k: int
    Y: np.ndarray
    cosine: Optional[np.ndarray]
    formula_norm: np.ndarray
    galerkin_norm: np.ndarray
    residual_gram: np.ndarray
    singular: bool

    @property
    def formula_gram(self) -> np.ndarray:
        return _gram(self.formula_norm)


@dataclass(frozen=True, eq=False)
class SolveTrace:
    """一次求解的完整记录，steps[0] 对应 k = 0"""

    n: int
    s: int
    steps: List[SolveStep]
    arnoldi: ArnoldiDecomposition
    fom: List[FomStep] = field(default_factory=list)
    converged: bool = False

    @property
    def last(self) -> SolveStep:
        return self.steps[-1]

    def norms(self) -> List[np.ndarray]:
        return [step.norm for step in self.steps]

    def grams(self) -> List[np.ndarray]:
        return [step.gram for step in self.steps]

    def is_loewner_monotone(self, tol: float = 1e-10) -> bool:
        """Gram(R_k) ⪯ Gram(R_{k−1})，松弛量相对 ‖Gram(R_0)‖"""
        reference = max(float(np.linalg.norm(self.steps[0].gram, 2)), np.finfo(float).tiny)
        for prev, curr in zip(self.steps, self.steps[1:]):
            w = np.linalg.eigvalsh(0.5 * ((prev.gram - curr.gram) + (prev.gram - curr.gram).conj().T))
            if w[0] < -tol * reference:
                logger.warning(f"第{curr.k}步违反Loewner单调性: λ_min={w[0]:.3e}")
                return False
        return True

    def loewner_relations(self) -> List[LoewnerOrder]:
        """相邻两步 (‖R_k‖, ‖R_{k−1}‖) 的比较结果"""
        return [loewner_cmp_gram(curr.gram, prev.gram, tol=1e-10)
                for prev, curr in zip(self.steps, self.steps[1:])]

    def columns_monotone(self, tol: float = 1e-10) -> bool:
        """每一列的欧氏残差范数单调不增"""
        reference = max(float(np.max(self.steps[0].column_norms)), np.finfo(float).tiny)
        for prev, curr in zip(self.steps, self.steps[1:]):
            if np.any(curr.column_norms > prev.column_norms + tol * reference):
                return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "s": self.s,
            "converged": self.converged,
            "steps": [step.to_dict() for step in self.steps],
        }

    def to_frame(self) -> pd.DataFrame:
        """绘图用的表格：step, frobenius, col_1..col_s"""
        rows = []
        for step in self.steps:
            row = {"step": step.k, "frobenius": float(np.linalg.norm(step.direct_norm))}
            for index, value in enumerate(step.column_norms, start=1):
                row[f"col_{index}"] = float(value)
            rows.append(row)
        return pd.DataFrame(rows, columns=["step", "frobenius"] + [f"col_{i}" for i in range(1, self.s + 1)])


@dataclass(frozen=True, eq=False)
class PeakPlateauReport:
    """峰-平台关系的偏差（Frobenius范数，绝对量）"""

    step_deviations: List[float]
    cumulative_deviations: List[float]
    plateau_steps: List[int]

    @property
    def max_deviation(self) -> float:
        values = self.step_deviations + self.cumulative_deviations
        return max(values) if values else 0.0


def _check_problem(A: BlockMatrix, B: BlockVector) -> None:
    if A.n != B.n or A.s != B.s:
        raise DimensionMismatchError(f"系数矩阵与右端项维度不匹配: (n={A.n}, s={A.s}) vs (n={B.n}, s={B.s})")


def _generalized_fom(Hk: np.ndarray, rhs: np.ndarray, s: int, scale: float):
    """
    广义FOM解：在投影方程的最小二乘解集中取 ‖E_k^T Y‖_F 最小者

    Returns:
        (Y, singular)
    """
    U, sv, Vh = np.linalg.svd(Hk)
    cutoff = max(float(sv[0]), scale) * np.finfo(float).eps * Hk.shape[0] * config.rank_factor
    null = Vh[sv <= cutoff].conj().T
    Yp = pinv(Hk, scale=scale) @ rhs
    if null.shape[1] == 0:
        return Yp, False

    N_last = null[-s:, :]
    Zc = -pinv(N_last, scale=1.0) @ Yp[-s:, :]
    return Yp + null @ Zc, True


def _givens_limit(arnoldi: ArnoldiDecomposition, scale: float) -> int:
    """次对角块 H_{k+1,k} 都非奇异的最大步数"""
    for k in range(1, arnoldi.steps + 1):
        subdiag = arnoldi.subdiagonal(k)
        if subdiag is None:
            break
        sv = np.linalg.svd(subdiag, compute_uv=False)
        if sv[-1] <= rank_threshold(sv[0], subdiag.shape, scale):
            return k - 1
    return arnoldi.steps


def blgmres(A: BlockMatrix, B: BlockVector, k_max: Optional[int] = None,
            conv_tol: Optional[float] = None, with_fom: bool = False,
            complete_deficient: bool = False) -> SolveTrace:
    """
    块GMRES（X_0 = 0）

    Y_k 取投影slab问题的伪逆解。‖R_k‖ 由正弦递推 ‖R_k‖ = S_k‖R_{k−1}‖ 给出，
    同时记录显式残差的Gram矩阵和各列欧氏范数。

    Args:
        A: 系数矩阵
        B: 右端项
        k_max: 最大步数，None 时取配置默认值（0 表示运行到底）
        conv_tol: ‖R_k‖_F ≤ conv_tol·‖R_0‖_F 时提前结束，0 表示关闭
        with_fom: 是否同时记录blFOM数据
        complete_deficient: 候选块部分秩亏时补全继续（补零后的问题）。此后的步不再有Givens正弦，
            ‖R_k‖ 直接取投影残差的块范数

    Returns:
        SolveTrace: 求解记录

    Raises:
        BreakdownError: 块Arnoldi breakdown
    """
    _check_problem(A, B)
    n, s = A.n, A.s
    k_max = Validator.validate_kmax(config.default_kmax if k_max is None else k_max, n)
    conv_tol = Validator.validate_tolerance(
        config.default_conv_tol if conv_tol is None else conv_tol, "收敛容差", allow_zero=True
    )

    arnoldi = block_arnoldi(A, B, k_max, stop_on_invariant=True, complete_deficient=complete_deficient)
    K = arnoldi.steps
    F0 = arnoldi.B_norm
    scale = max(float(np.linalg.norm(arnoldi.H, 2)), np.finfo(float).tiny)

    # 运行到底或遇到不变子空间时 H 为方阵，最后一步无需消元；次对角块奇异时只消元到它之前
    limit = _givens_limit(arnoldi, scale)
    qr = hessenberg_qr(arnoldi.H if limit == K else arnoldi.H[:(limit + 1) * s, :limit * s], s)

    b_data = B.data
    steps = [SolveStep(
        k=0, Y=np.zeros((0, s), dtype=complex), norm=F0, direct_norm=block_abs(b_data),
        gram=_gram(b_data), column_norms=np.linalg.norm(b_data, axis=0)
    )]
    fom_steps: List[FomStep] = []
    reference = float(np.linalg.norm(F0))

    for k in range(1, K + 1):
        slab = arnoldi.slab(k)
        rhs = np.zeros(((k + 1) * s, s), dtype=complex)
        rhs[:s, :] = F0
        Y = pinv(slab, scale=scale) @ rhs

        residual = b_data - A.data @ (arnoldi.basis(k) @ Y)
        direct = block_abs(residual)

        if k <= len(qr.sines):
            sine = qr.sines[k - 1]
            norm = np.triu(sine @ steps[-1].norm)
        else:
            sine = None
            projected = rhs - slab @ Y
            norm = block_abs(projected)

        steps.append(SolveStep(
            k=k, Y=Y, norm=norm, direct_norm=direct, gram=_gram(residual),
            column_norms=np.linalg.norm(residual, axis=0), sine=sine
        ))

        if with_fom:
            fom_steps.append(_fom_step(arnoldi, A, B, F0, k, qr, norm, scale))

        frob = float(np.linalg.norm(norm))
        logger.debug(f"blGMRES第{k}步: ‖R_k‖_F = {frob:.6e}")
        if conv_tol > 0 and frob <= conv_tol * reference:
            logger.info(f"blGMRES在第{k}步达到收敛容差 {conv_tol:.1e}")
            break

    converged = float(np.linalg.norm(steps[-1].norm)) <= max(conv_tol, config.verify_tol) * reference
    return SolveTrace(n=n, s=s, steps=steps, arnoldi=arnoldi, fom=fom_steps, converged=converged)


def _fom_step(arnoldi: ArnoldiDecomposition, A: BlockMatrix, B: BlockVector, F0: np.ndarray,
              k: int, qr, gmres_norm: np.ndarray, scale: float) -> FomStep:
    s = arnoldi.s
    Hk = arnoldi.principal(k)
    rhs = np.zeros((k * s, s), dtype=complex)
    rhs[:s, :] = F0
    Y, singular = _generalized_fom(Hk, rhs, s, scale)

    subdiag = arnoldi.subdiagonal(k)
    if subdiag is None:
        cosine = None
        formula = np.zeros((s, s), dtype=complex)
        galerkin = np.zeros((s, s), dtype=complex)
    elif k > len(qr.transforms):
        cosine = None
        galerkin = block_abs(subdiag @ Y[-s:, :])
        formula = galerkin
    else:
        cosine = qr.transforms[k - 1].C
        # C_k 是酉矩阵的子块，伪逆取绝对截断
        formula = block_abs(pinv(cosine, scale=1.0) @ gmres_norm)
        galerkin = block_abs(subdiag @ Y[-s:, :])

    residual = B.data - A.data @ (arnoldi.basis(k) @ Y)
    return FomStep(k=k, Y=Y, cosine=cosine, formula_norm=formula, galerkin_norm=galerkin,
                   residual_gram=_gram(residual), singular=singular)


def blfom(A: BlockMatrix, B: BlockVector, k_max: Optional[int] = None) -> SolveTrace:
    """
    块FOM：ℋ^(k) 非奇异时 Y_k = (ℋ^(k))⁻¹E_1‖R_0‖，否则取广义FOM解

    返回的记录同时带有blGMRES数据（Givens公式需要）。
    """
    return blgmres(A, B, k_max=k_max, conv_tol=0.0, with_fom=True)


def _inverse_gram(N: np.ndarray) -> np.ndarray:
    """(N*N)⁻¹ = N⁻¹N⁻*，N ∈ S⁺"""
    identity = np.eye(N.shape[0], dtype=complex)
    Ninv = sla.solve_triangular(N, identity, lower=False)
    return Ninv @ Ninv.conj().T


def peak_plateau_residual_check(trace: SolveTrace) -> PeakPlateauReport:
    """
    峰-平台关系：⟨R_k^F⟩^† = ⟨R_k^G⟩⁻¹ − ⟨R_{k−1}^G⟩⁻¹ 及其累加形式

    FOM一侧取真实的Galerkin残差 |H_{k+1,k}E_k^TY_k^F|，而不是由Givens余弦推出的公式值。
    伪逆的截断尺度取 ‖⟨R_k^G⟩‖，停滞步上舍入量级的Galerkin残差因此贡献零。
    只检查 ‖R_k^G‖ 非奇异的步（最后收敛的一步除外）。

    Raises:
        InvalidParameterError: 记录中没有blFOM数据
    """
    if not trace.fom:
        raise InvalidParameterError("峰-平台检查需要同时包含blGMRES与blFOM数据的记录")

    inv_prev = _inverse_gram(trace.steps[0].norm)
    inv_first = inv_prev
    accumulated = np.zeros_like(inv_prev)
    step_dev, cumulative_dev, plateaus = [], [], []

    for fom in trace.fom:
        step = trace.steps[fom.k]
        if step.sine is None:
            break
        inv_curr = _inverse_gram(step.norm)
        fom_term = pinv(_gram(fom.galerkin_norm), scale=float(np.linalg.norm(step.gram, 2)))
        accumulated = accumulated + fom_term

        step_dev.append(float(np.linalg.norm(fom_term - (inv_curr - inv_prev))))
        cumulative_dev.append(float(np.linalg.norm(inv_curr - inv_first - accumulated)))
        denominator = max(1.0, float(np.linalg.norm(inv_curr)))
        if float(np.linalg.norm(fom_term)) <= config.verify_tol * denominator:
            plateaus.append(fom.k)
        inv_prev = inv_curr

    return PeakPlateauReport(step_deviations=step_dev, cumulative_deviations=cumulative_dev,
                             plateau_steps=plateaus)


def residual_poly_apply(P: Union[ResidualPolynomial, LambdaMatrix], A: BlockMatrix, B: BlockVector) -> BlockVector:
    """
    P(𝒜)∘B，要求 P(0) = I

    Args:
        P: 残差多项式；也可以是满足 M(0) = I 的λ-矩阵

    Raises:
        DimensionMismatchError: 块大小不一致
        InvalidParameterError: 常数项不是单位矩阵
    """
    _check_problem(A, B)
    if P.s != B.s:
        raise DimensionMismatchError(f"多项式块大小 {P.s} 与右端项块大小 {B.s} 不一致")

    if isinstance(P, LambdaMatrix):
        if not np.allclose(eval_lambda(P, 0.0), np.eye(P.s), rtol=0.0, atol=1e-12):
            raise InvalidParameterError("λ-矩阵在 0 处的值必须是单位矩阵")
        return circ_action(P, A, B)

    return BlockVector(poly_circ_action(list(P.coeffs), A, B), B.s)


