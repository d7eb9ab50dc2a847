"""
*-代数 S ≅ C^{s×s} 上的"标量"运算：块绝对值、上三角Cholesky平方根、广义Loewner序比较
"""
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg as sla
from loguru import logger

from ..helper import config
from ..helper.exceptions import DimensionMismatchError, NotPSDError

EPS = float(np.finfo(float).eps)


class LoewnerOrder(str, Enum):
    """广义Loewner序的比较结果（以 Na 相对 Nb 表述）"""

    EQUAL = "Equal"
    LESS = "Less"
    LESS_EQ = "LessEq"
    GREATER = "Greater"
    GREATER_EQ = "GreaterEq"
    INCOMPARABLE = "Incomparable"

    @property
    def is_nonincreasing(self) -> bool:
        """Na ⪯ Nb 是否成立"""
        return self in (LoewnerOrder.EQUAL, LoewnerOrder.LESS, LoewnerOrder.LESS_EQ)


def hermitize(P: np.ndarray) -> np.ndarray:
    P = np.asarray(P, dtype=complex)
    return 0.5 * (P + P.conj().T)


def psd_tolerance(P: np.ndarray) -> float:
    """半正定判定的绝对阈值 ε·s·‖P‖₂"""
    P = np.asarray(P, dtype=complex)
    if P.size == 0:
        return 0.0
    return EPS * P.shape[0] * float(np.linalg.norm(P, 2))


def _finalize_upper(R: np.ndarray, scale: float) -> np.ndarray:
    """截成上三角，对角线取实部，并把小于阈值的对角元置零"""
    R = np.triu(np.asarray(R, dtype=complex))
    diag = np.abs(np.diag(R))
    cutoff = EPS * R.shape[0] * scale
    diag = np.where(diag <= cutoff, 0.0, diag)
    np.fill_diagonal(R, diag)
    return R


def block_abs(A: np.ndarray) -> np.ndarray:
    """
    块绝对值 |A| = cholU(A*A)

    通过Householder QR计算，再用对角相位把R的对角线变为非负实数，
    奇异的A也能得到确定的代表元。

    Args:
        A: m×s 复矩阵（m ≥ s；m < s 时补零行）

    Returns:
        np.ndarray: s×s 上三角矩阵 R，满足 R*R = A*A，对角线为非负实数
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise DimensionMismatchError(f"块绝对值需要二维矩阵，当前维数: {A.ndim}")

    m, s = A.shape
    if s == 0:
        return np.zeros((0, 0), dtype=complex)
    if m < s:
        A = np.vstack([A, np.zeros((s - m, s), dtype=complex)])

    scale = float(np.linalg.norm(A, 2)) if A.size else 0.0
    if scale == 0.0:
        return np.zeros((s, s), dtype=complex)

    R = np.linalg.qr(A, mode='r')[:s, :]
    diag = np.diag(R)
    magnitude = np.abs(diag)
    phases = np.where(magnitude > 0, diag.conj() / np.where(magnitude > 0, magnitude, 1.0), 1.0)
    R = phases[:, np.newaxis] * R

    return _finalize_upper(R, scale * max(A.shape) / s)


def chol_upper(P: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """
    Hermite半正定矩阵的上三角平方根 cholU(P)

    正定时直接用Cholesky分解；失败时退回到特征分解，把微小的负特征值截成零。

    Args:
        P: s×s Hermite矩阵
        tol: 相对容差，默认 ε·s

    Returns:
        np.ndarray: 上三角 R，R*R = P

    Raises:
        NotPSDError: 最小特征值小于 −tol·‖P‖₂
    """
    P = hermitize(P)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionMismatchError(f"cholU需要方阵，当前形状: {P.shape}")

    s = P.shape[0]
    norm = float(np.linalg.norm(P, 2)) if P.size else 0.0
    if norm == 0.0:
        return np.zeros((s, s), dtype=complex)

    try:
        R = sla.cholesky(P, lower=False)
        return _finalize_upper(R, np.sqrt(norm))
    except np.linalg.LinAlgError:
        pass

    w, W = np.linalg.eigh(P)
    relative = tol if tol is not None else EPS * s
    if w[0] < -relative * norm:
        raise NotPSDError(f"矩阵不是半正定的: 最小特征值 {w[0]:.3e}，阈值 {-relative * norm:.3e}")

    logger.debug(f"Cholesky分解失败，改用特征分解 (λ_min={w[0]:.3e})")
    root = np.sqrt(np.clip(w, 0.0, None))[:, np.newaxis] * W.conj().T
    return block_abs(root)


def loewner_cmp_gram(Pa: np.ndarray, Pb: np.ndarray, tol: Optional[float] = None) -> LoewnerOrder:
    """
    直接比较两个Hermite Gram矩阵：根据 Pb − Pa 的特征值判定 Pa 与 Pb 的Loewner序

    Args:
        Pa, Pb: s×s Hermite矩阵
        tol: 相对容差（乘以 max(‖Pa‖₂, ‖Pb‖₂)），默认 rank_factor·ε·s
    """
    Pa = hermitize(Pa)
    Pb = hermitize(Pb)
    if Pa.shape != Pb.shape:
        raise DimensionMismatchError(f"块大小不一致: {Pa.shape} vs {Pb.shape}")

    s = Pa.shape[0]
    scale = max(float(np.linalg.norm(Pa, 2)), float(np.linalg.norm(Pb, 2)))
    relative = tol if tol is not None else config.rank_factor * EPS * s
    threshold = relative * scale

    w = np.linalg.eigvalsh(Pb - Pa)
    lo, hi = float(w[0]), float(w[-1])

    if max(abs(lo), abs(hi)) <= threshold:
        return LoewnerOrder.EQUAL
    if lo >= -threshold:
        return LoewnerOrder.LESS if lo > threshold else LoewnerOrder.LESS_EQ
    if hi <= threshold:
        return LoewnerOrder.GREATER if hi < -threshold else LoewnerOrder.GREATER_EQ
    return LoewnerOrder.INCOMPARABLE


def loewner_cmp(Na: np.ndarray, Nb: np.ndarray, tol: Optional[float] = None) -> LoewnerOrder:
    """
    广义Loewner序：Na ⪯ Nb 当且仅当 Nb*Nb − Na*Na 半正定

    Examples:
        >>> loewner_cmp(np.eye(2), 2 * np.eye(2))
        <LoewnerOrder.LESS: 'Less'>
    """
    Na = np.asarray(Na, dtype=complex)
    Nb = np.asarray(Nb, dtype=complex)
    if Na.shape != Nb.shape:
        raise DimensionMismatchError(f"块大小不一致: {Na.shape} vs {Nb.shape}")
    return loewner_cmp_gram(Na.conj().T @ Na, Nb.conj().T @ Nb, tol)


def pinv(M: np.ndarray, scale: Optional[float] = None) -> np.ndarray:
    """
    截断伪逆：奇异值低于 max(σ_max, scale)·ε·dim·rank_factor 的部分被舍去

    Args:
        M: 矩阵
        scale: 绝对尺度，例如酉矩阵的子块传 1
    """
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return np.zeros(M.shape[::-1], dtype=complex)

    U, sv, Vh = np.linalg.svd(M, full_matrices=False)
    reference = max(float(sv[0]) if sv.size else 0.0, scale or 0.0)
    cutoff = reference * EPS * max(M.shape) * config.rank_factor
    keep = sv > cutoff
    if not np.any(keep):
        return np.zeros(M.shape[::-1], dtype=complex)

    return (Vh[keep].conj().T / sv[keep]) @ U[:, keep].conj().T


def is_upper_tri_nonneg(R: np.ndarray, strict: bool = False) -> bool:
    """是否属于 S₀⁺（strict=True 时为 S⁺）：严格下三角为零，对角线为（正）非负实数"""
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        return False
    if np.any(np.tril(R, -1) != 0):
        return False
    diag = np.diag(R)
    if np.any(np.imag(diag) != 0):
        return False
    real = np.real(diag)
    return bool(np.all(real > 0)) if strict else bool(np.all(real >= 0))
