"""
块Givens变换与块Hessenberg矩阵的QR分解
"""
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import scipy.linalg as sla
from loguru import logger

from ..helper.exceptions import DimensionMismatchError, SingularPivotError
from .blockvec import rank_threshold
from .salgebra import block_abs


@dataclass(frozen=True, eq=False)
class BlockGivens:
    """2×2 块酉矩阵 [[C̄, S̄], [−S, C]]，用于消去块 V₂"""

    Cbar: np.ndarray
    Sbar: np.ndarray
    S: np.ndarray
    C: np.ndarray
    Z: np.ndarray

    @property
    def s(self) -> int:
        return self.C.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.Cbar, self.Sbar], [-self.S, self.C]])

    def apply(self, top: np.ndarray, bottom: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """作用在两个块行上"""
        return (self.Cbar @ top + self.Sbar @ bottom,
                -self.S @ top + self.C @ bottom)

    def embed(self, k: int, n: int) -> np.ndarray:
        """G^(k)：只在第 k、k+1 块行/列上与块单位矩阵不同"""
        if not 1 <= k < n:
            raise DimensionMismatchError(f"嵌入位置越界: k={k}, n={n}")
        s = self.s
        G = np.eye(n * s, dtype=complex)
        rows = slice((k - 1) * s, (k + 1) * s)
        G[rows, rows] = self.matrix
        return G


def block_givens(V1: np.ndarray, V2: np.ndarray) -> BlockGivens:
    """
    构造消去 V₂ 的块Givens变换

    Z = V₁V₂⁻¹，X = cholU(I + Z*Z)⁻*，Y = cholU((I + ZZ*)⁻¹)，
    C̄ = XZ*，S̄ = X，S = Y，C = YZ。

    Args:
        V1: 上方块
        V2: 被消去的块，必须非奇异

    Returns:
        BlockGivens: 块Givens变换

    Raises:
        SingularPivotError: V₂ 奇异
    """
    V1 = np.asarray(V1, dtype=complex)
    V2 = np.asarray(V2, dtype=complex)
    if V1.shape != V2.shape or V1.ndim != 2 or V1.shape[0] != V1.shape[1]:
        raise DimensionMismatchError(f"块形状不一致: {V1.shape} vs {V2.shape}")

    s = V1.shape[0]
    sv = np.linalg.svd(V2, compute_uv=False)
    if sv[-1] <= rank_threshold(sv[0], V2.shape):
        raise SingularPivotError(f"块Givens主元块奇异: σ_min={sv[-1]:.3e}")

    # Z V2 = V1
    Z = sla.solve(V2.T, V1.T).T
    identity = np.eye(s, dtype=complex)

    R1 = block_abs(np.vstack([identity, Z]))
    X = sla.solve_triangular(R1, identity, lower=False).conj().T
    R2 = block_abs(np.vstack([identity, Z.conj().T]))
    Y = block_abs(sla.solve_triangular(R2, identity, lower=False).conj().T)

    return BlockGivens(Cbar=X @ Z.conj().T, Sbar=X, S=Y, C=Y @ Z, Z=Z)


@dataclass(frozen=True, eq=False)
class HessenbergQR:
    """块Hessenberg矩阵QR分解的结果：Q·H = R"""

    Q: np.ndarray
    R: np.ndarray
    s: int
    sines: List[np.ndarray] = field(default_factory=list)
    transforms: List[BlockGivens] = field(default_factory=list)


def _normalize_last_block(block: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """返回酉矩阵 W 与 W·block ∈ S₀⁺"""
    q, r = np.linalg.qr(block)
    diag = np.diag(r)
    magnitude = np.abs(diag)
    phases = np.where(magnitude > 0, diag.conj() / np.where(magnitude > 0, magnitude, 1.0), 1.0)
    W = phases[:, np.newaxis] * q.conj().T
    return W, block_abs(block)


def hessenberg_qr(H: np.ndarray, s: int, normalize_last: bool = True) -> HessenbergQR:
    """
    用块Givens变换对块Hessenberg矩阵做QR分解

    主元 Z_k = H^{(k-1)}_{k,k}·H_{k+1,k}⁻¹。新的对角块取 S̄_k⁻*H_{k+1,k}，属于 S⁺。
    对方阵情形，最后一个对角块再乘一个酉矩阵归一化到 S₀⁺，并计入 Q。

    Args:
        H: (k+1)s×ks 的slab或 ks×ks 的方阵
        s: 块大小
        normalize_last: 方阵情形是否归一化最后一个对角块

    Returns:
        HessenbergQR: Q 酉，R = QH 块上三角，sines 为各步的 S_k
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] % s or H.shape[1] % s:
        raise DimensionMismatchError(f"Hessenberg矩阵形状与块大小 {s} 不匹配: {H.shape}")

    m, k = H.shape[0] // s, H.shape[1] // s
    if m not in (k, k + 1):
        raise DimensionMismatchError(f"需要 (k+1)×k 或 k×k 的块矩阵，当前 {m}×{k}")

    R = H.copy()
    Q = np.eye(m * s, dtype=complex)
    sines, transforms = [], []

    for j in range(1, min(k, m - 1) + 1):
        top_rows = slice((j - 1) * s, j * s)
        bottom_rows = slice(j * s, (j + 1) * s)
        col = slice((j - 1) * s, j * s)

        subdiag = R[bottom_rows, col].copy()
        G = block_givens(R[top_rows, col], subdiag)

        new_top, new_bottom = G.apply(R[top_rows, (j - 1) * s:], R[bottom_rows, (j - 1) * s:])
        R[top_rows, (j - 1) * s:] = new_top
        R[bottom_rows, (j - 1) * s:] = new_bottom

        # Ξ = S̄⁻* H_{j+1,j}
        xi = np.triu(sla.solve_triangular(G.Sbar.conj().T, subdiag, lower=False))
        np.fill_diagonal(xi, np.real(np.diag(xi)))
        R[top_rows, col] = xi
        R[bottom_rows, col] = 0.0

        q_top, q_bottom = G.apply(Q[top_rows, :], Q[bottom_rows, :])
        Q[top_rows, :] = q_top
        Q[bottom_rows, :] = q_bottom

        sines.append(G.S)
        transforms.append(G)
        logger.debug(f"块Givens第{j}步完成")

    if m == k and normalize_last:
        last = slice((k - 1) * s, k * s)
        W, normalized = _normalize_last_block(R[last, last])
        R[last, last] = normalized
        Q[last, :] = W @ Q[last, :]

    return HessenbergQR(Q=Q, R=R, s=s, sines=sines, transforms=transforms)
