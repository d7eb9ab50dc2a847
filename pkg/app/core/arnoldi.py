"""
块Arnoldi过程：𝒜𝒱 = 𝒱ℋ，ℋ 为块上Hessenberg矩阵
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from ..helper import config
from ..helper.exceptions import (
    BreakdownError,
    DimensionMismatchError,
    InvalidParameterError,
    RankDeficientError
)
from ..helper.validators import Validator
from .blockvec import BlockMatrix, BlockVector, block_normalize, rank_threshold


@dataclass(frozen=True, eq=False)
class BlockHessenberg:
    """
    块上Hessenberg矩阵：i > j+1 的块为零，次对角块 H_{k+1,k} ∈ S⁺

    等价地，作为 ks×ks 复矩阵恰有 s 条次对角线，最外一条为正实数。
    """

    data: np.ndarray
    s: int

    @classmethod
    def from_array(cls, H: np.ndarray, s: int, tol: float = 1e-10) -> "BlockHessenberg":
        """
        校验并清理块Hessenberg结构

        超出 s 条次对角线的元素（相对 ‖H‖ 不超过 tol）被置为精确零，
        最外次对角线取实部。

        Raises:
            DimensionMismatchError: 形状不是块方阵
            InvalidParameterError: 不满足块Hessenberg结构或次对角块不在 S⁺ 中
        """
        s = Validator.validate_block_size(s)
        H = Validator.validate_square(H, "Hessenberg矩阵")
        if H.shape[0] % s != 0:
            raise DimensionMismatchError(f"Hessenberg矩阵阶数 {H.shape[0]} 不是块大小 {s} 的倍数")

        scale = max(float(np.linalg.norm(H)), 1.0)
        below = np.tril(H, -s - 1)
        if np.max(np.abs(below), initial=0.0) > tol * scale:
            raise InvalidParameterError("矩阵不是块上Hessenberg矩阵: 次对角块以下存在非零元")

        outer = np.diagonal(H, -s)
        if outer.size and (np.any(np.real(outer) <= 0) or np.max(np.abs(np.imag(outer))) > tol * scale):
            raise InvalidParameterError("次对角块不在 S⁺ 中: 对角线必须为正实数")

        cleaned = np.triu(H, -s)
        idx = np.arange(outer.size)
        cleaned[idx + s, idx] = np.real(outer)
        return cls(cleaned, s)

    @property
    def n(self) -> int:
        return self.data.shape[0] // self.s

    def block(self, i: int, j: int) -> np.ndarray:
        s = self.s
        return self.data[(i - 1) * s:i * s, (j - 1) * s:j * s]

    def subdiagonal(self, k: int) -> np.ndarray:
        """次对角块 H_{k+1,k}"""
        if not 1 <= k < self.n:
            raise DimensionMismatchError(f"次对角块下标越界: {k}")
        return self.block(k + 1, k)

    def principal(self, k: int) -> "BlockHessenberg":
        """前 k×k 块主子矩阵 ℋ^(k)"""
        if not 1 <= k <= self.n:
            raise DimensionMismatchError(f"主子矩阵阶数越界: {k}")
        return BlockHessenberg(self.data[:k * self.s, :k * self.s], self.s)

    def slab(self, k: int) -> np.ndarray:
        """(k+1)×k 块矩阵 H̲^(k)；k = n 时最后一个块行为零"""
        if not 1 <= k <= self.n:
            raise DimensionMismatchError(f"slab阶数越界: {k}")
        s = self.s
        rows = min(k + 1, self.n) * s
        out = np.zeros(((k + 1) * s, k * s), dtype=complex)
        out[:rows, :] = self.data[:rows, :k * s]
        return out

    def to_block_matrix(self) -> BlockMatrix:
        return BlockMatrix(self.data, self.s)


@dataclass(frozen=True, eq=False)
class ArnoldiDecomposition:
    """
    块Arnoldi分解的结果

    V 的列为已生成的正交基；H 在未完成时为 (steps+1)×steps 的块矩阵，
    运行到底（steps = n）或遇到不变子空间时为 steps×steps 的方阵。
    """

    V: np.ndarray
    H: np.ndarray
    s: int
    n: int
    steps: int
    B_norm: np.ndarray
    invariant: bool = False

    @property
    def complete(self) -> bool:
        return self.H.shape[0] == self.H.shape[1]

    def basis(self, k: int) -> np.ndarray:
        """V_1..V_k 组成的 ns×ks 矩阵"""
        if not 1 <= k <= self.V.shape[1] // self.s:
            raise DimensionMismatchError(f"基向量个数越界: {k}")
        return self.V[:, :k * self.s]

    def slab(self, k: int) -> np.ndarray:
        """H̲^(k)，(k+1)s×ks；在已无后继块时最后块行为零"""
        if not 1 <= k <= self.steps:
            raise DimensionMismatchError(f"slab阶数越界: {k}，已完成 {self.steps} 步")
        s = self.s
        rows = min((k + 1) * s, self.H.shape[0])
        out = np.zeros(((k + 1) * s, k * s), dtype=complex)
        out[:rows, :] = self.H[:rows, :k * s]
        return out

    def principal(self, k: int) -> np.ndarray:
        """ℋ^(k)，ks×ks"""
        if not 1 <= k <= self.steps:
            raise DimensionMismatchError(f"主子矩阵阶数越界: {k}，已完成 {self.steps} 步")
        return self.H[:k * self.s, :k * self.s]

    def subdiagonal(self, k: int) -> Optional[np.ndarray]:
        """H_{k+1,k}；不存在时返回 None"""
        s = self.s
        if (k + 1) * s > self.H.shape[0]:
            return None
        return self.H[k * s:(k + 1) * s, (k - 1) * s:k * s]

    def hessenberg(self) -> BlockHessenberg:
        return BlockHessenberg.from_array(self.principal(self.steps), self.s)

    def orthogonality_loss(self) -> float:
        """‖V*V − I‖_F"""
        gram = self.V.conj().T @ self.V
        return float(np.linalg.norm(gram - np.eye(gram.shape[0])))

    def relation_residual(self, A: BlockMatrix) -> float:
        """‖𝒜V_{1..k} − V_{1..k+1}H̲^(k)‖_F"""
        k = self.steps
        return float(np.linalg.norm(A.data @ self.basis(k) - self.V @ self.H))


def _complete_block(W: np.ndarray, basis: np.ndarray, scale: float):
    """
    秩亏候选块的补全：W = QR，Q 的列与已有基正交，R ∈ S₀⁺ 奇异

    秩部分取自 W 的左奇异向量，缺少的方向取已有基与秩部分的正交补。
    """
    s = W.shape[1]
    U, sv, _ = np.linalg.svd(W, full_matrices=False)
    r = int(np.sum(sv > rank_threshold(sv[0], W.shape, scale)))
    known = np.hstack([basis, U[:, :r]])
    projector = np.eye(W.shape[0]) - known @ known.conj().T
    complement, _, _ = np.linalg.svd(projector)
    frame = np.hstack([U[:, :r], complement[:, :s - r]])

    M = frame.conj().T @ W
    M[r:, :] = 0
    q, R = np.linalg.qr(M)
    diag = np.diag(R)
    mag = np.abs(diag)
    phases = np.ones_like(diag)
    nonzero = mag > 0
    phases[nonzero] = diag[nonzero] / mag[nonzero]
    Q = (frame @ q) * phases[np.newaxis, :]
    R = np.triu(phases.conj()[:, np.newaxis] * R)
    np.fill_diagonal(R, mag)
    return Q, R


def block_arnoldi(A: BlockMatrix, B: BlockVector, k_max: Optional[int] = None,
                  stop_on_invariant: bool = False, complete_deficient: bool = False) -> ArnoldiDecomposition:
    """
    块Arnoldi过程（改进Gram-Schmidt，每步无条件再正交化一次）

    Args:
        A: 系数矩阵
        B: 右端项，需要列满秩
        k_max: 最大步数，None 表示运行到底
        stop_on_invariant: 候选块整体消失（Krylov子空间不变）时截断而不是报错
        complete_deficient: 候选块部分秩亏时用正交补方向补全（次对角块奇异），用于补零后的问题

    Returns:
        ArnoldiDecomposition: 块Arnoldi分解

    Raises:
        BreakdownError: 候选块秩亏，step 为无法生成的基块下标
    """
    if A.n != B.n or A.s != B.s:
        raise DimensionMismatchError(f"系数矩阵与右端项维度不匹配: (n={A.n}, s={A.s}) vs (n={B.n}, s={B.s})")

    n, s = A.n, A.s
    k_max = Validator.validate_kmax(k_max, n)

    try:
        V1, B_norm = block_normalize(B)
    except RankDeficientError as e:
        logger.error(f"右端项列秩不足，无法启动块Arnoldi: {e}")
        raise BreakdownError(f"第1步breakdown: 右端项列秩不足 ({e})", step=1)

    A_data = A.data
    scale = float(np.linalg.norm(A_data, 2))
    V = np.zeros((n * s, (k_max + 1) * s), dtype=complex)
    H = np.zeros(((k_max + 1) * s, k_max * s), dtype=complex)
    V[:, :s] = V1.data

    steps = k_max
    invariant = False
    for j in range(1, k_max + 1):
        cols = slice((j - 1) * s, j * s)
        W = A_data @ V[:, cols]
        for _ in range(2):
            for i in range(1, j + 1):
                Vi = V[:, (i - 1) * s:i * s]
                coeff = Vi.conj().T @ W
                H[(i - 1) * s:i * s, cols] += coeff
                W = W - Vi @ coeff

        if j == n:
            break

        sigma_max = np.linalg.norm(W, 2)
        if stop_on_invariant and sigma_max <= rank_threshold(sigma_max, W.shape, scale):
            logger.debug(f"第{j}步后Krylov子空间不变，块Arnoldi提前结束")
            steps, invariant = j, True
            break

        try:
            Vnext, Hsub = block_normalize(W, scale=scale)
        except RankDeficientError as e:
            if complete_deficient:
                logger.warning(f"第{j + 1}步候选块秩亏，用正交补方向补全: {e}")
                Vnext, Hsub = _complete_block(W, V[:, :j * s], scale)
                V[:, j * s:(j + 1) * s] = Vnext
                H[j * s:(j + 1) * s, cols] = Hsub
                continue
            logger.error(f"块Arnoldi在第{j + 1}步发生breakdown: {e}")
            raise BreakdownError(f"第{j + 1}步breakdown: 候选块秩亏 ({e})", step=j + 1)

        V[:, j * s:(j + 1) * s] = Vnext.data
        H[j * s:(j + 1) * s, cols] = Hsub
        logger.debug(f"块Arnoldi第{j}步完成，H_{{{j + 1},{j}}} 对角线最小值 {np.min(np.real(np.diag(Hsub))):.3e}")

    if steps == n or invariant:
        V = V[:, :steps * s]
        H = H[:steps * s, :steps * s]
    else:
        V = V[:, :(steps + 1) * s]
        H = H[:(steps + 1) * s, :steps * s]

    decomposition = ArnoldiDecomposition(V=V, H=H, s=s, n=n, steps=steps, B_norm=B_norm, invariant=invariant)
    loss = decomposition.orthogonality_loss()
    if loss > config.orthogonality_tol:
        logger.warning(f"块Arnoldi正交性损失 {loss:.3e} 超过阈值 {config.orthogonality_tol:.1e}")

    return decomposition
