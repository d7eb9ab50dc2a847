"""
S 上的块向量与块矩阵：块内积、块范数、规范化以及问题补零
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger

from ..helper import config
from ..helper.exceptions import (
    DimensionMismatchError,
    RankDeficientError,
    SerializationError
)
from ..helper.validators import Validator
from .salgebra import EPS, block_abs


def _encode_entries(data: np.ndarray):
    return [[float(z.real), float(z.imag)] for z in data.reshape(-1)]


def _decode_entries(entries, rows: int, cols: int) -> np.ndarray:
    if len(entries) != rows * cols:
        raise SerializationError(f"数据长度不匹配: 需要 {rows * cols}，实际 {len(entries)}")
    try:
        values = np.array([complex(float(re), float(im)) for re, im in entries], dtype=complex)
    except (TypeError, ValueError) as e:
        raise SerializationError(f"元素必须是[re, im]数对: {e}")
    return values.reshape(rows, cols)


@dataclass(frozen=True, eq=False)
class BlockVector:
    """S^n 中的块向量，同时视作 ns×s 复矩阵"""

    data: np.ndarray
    s: int

    def __post_init__(self):
        s = Validator.validate_block_size(self.s)
        data = Validator.validate_block_shape(self.data, s)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "data", np.array(data, dtype=complex))

    @property
    def n(self) -> int:
        return self.data.shape[0] // self.s

    def block(self, k: int) -> np.ndarray:
        """第 k 块（从1开始计数）"""
        if not 1 <= k <= self.n:
            raise DimensionMismatchError(f"块下标越界: {k}，块长度 {self.n}")
        return self.data[(k - 1) * self.s:k * self.s, :]

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "s": self.s, "data": _encode_entries(self.data)}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "BlockVector":
        try:
            n, s = int(payload["n"]), int(payload["s"])
            entries = payload["data"]
        except (KeyError, TypeError, ValueError) as e:
            raise SerializationError(f"块向量格式错误，需要n/s/data字段: {e}")
        return cls(_decode_entries(entries, n * s, s), s)


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """S^{n×n} 中的块矩阵，同时视作 ns×ns 复矩阵"""

    data: np.ndarray
    s: int

    def __post_init__(self):
        s = Validator.validate_block_size(self.s)
        data = Validator.validate_square(self.data, "块矩阵")
        if data.shape[0] % s != 0:
            raise DimensionMismatchError(f"块矩阵阶数 {data.shape[0]} 不是块大小 {s} 的倍数")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "data", np.array(data, dtype=complex))

    @property
    def n(self) -> int:
        return self.data.shape[0] // self.s

    def block(self, i: int, j: int) -> np.ndarray:
        """第 (i, j) 块（从1开始计数）"""
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise DimensionMismatchError(f"块下标越界: ({i}, {j})，块阶数 {self.n}")
        s = self.s
        return self.data[(i - 1) * s:i * s, (j - 1) * s:j * s]

    def __matmul__(self, other):
        if isinstance(other, BlockMatrix):
            _check_same(self, other)
            return BlockMatrix(self.data @ other.data, self.s)
        if isinstance(other, BlockVector):
            _check_same(self, other)
            return BlockVector(self.data @ other.data, self.s)
        return NotImplemented

    @classmethod
    def identity(cls, n: int, s: int) -> "BlockMatrix":
        return cls(np.eye(n * s, dtype=complex), s)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "s": self.s, "data": _encode_entries(self.data)}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "BlockMatrix":
        try:
            n, s = int(payload["n"]), int(payload["s"])
            entries = payload["data"]
        except (KeyError, TypeError, ValueError) as e:
            raise SerializationError(f"块矩阵格式错误，需要n/s/data字段: {e}")
        return cls(_decode_entries(entries, n * s, n * s), s)


def _check_same(a, b) -> None:
    if a.s != b.s or a.n != b.n:
        raise DimensionMismatchError(f"维度不匹配: (n={a.n}, s={a.s}) vs (n={b.n}, s={b.s})")


def block_unit(k: int, n: int, s: int) -> BlockVector:
    """块单位向量 E_k：块单位矩阵的第 k 个块列（从1开始计数）"""
    n = Validator.validate_positive_int(n, "块长度")
    s = Validator.validate_block_size(s)
    if not 1 <= k <= n:
        raise DimensionMismatchError(f"块下标越界: {k}，块长度 {n}")
    data = np.zeros((n * s, s), dtype=complex)
    data[(k - 1) * s:k * s, :] = np.eye(s)
    return BlockVector(data, s)


def block_inner(X: BlockVector, Y: BlockVector) -> np.ndarray:
    """
    块内积 ⟨⟨X, Y⟩⟩ = Y*X ∈ S

    Raises:
        DimensionMismatchError: n 或 s 不一致
    """
    _check_same(X, Y)
    return Y.data.conj().T @ X.data


def block_norm(X: Union[BlockVector, np.ndarray]) -> np.ndarray:
    """块范数 ‖X‖ = |X|，即 cholU(X*X)"""
    data = X.data if isinstance(X, BlockVector) else np.asarray(X, dtype=complex)
    return block_abs(data)


def rank_threshold(sigma_max: float, shape: Tuple[int, int], scale: Optional[float] = None) -> float:
    """秩判定阈值 max(σ_max, scale)·ε·max(行, 列)·rank_factor"""
    reference = max(float(sigma_max), float(scale or 0.0))
    return reference * EPS * max(shape) * config.rank_factor


def block_normalize(X: Union[BlockVector, np.ndarray],
                    scale: Optional[float] = None) -> Tuple[BlockVector, np.ndarray]:
    """
    块规范化 X = Q·N，Q 列正交，N = ‖X‖ ∈ S⁺

    Args:
        X: 块向量（或 ns×s 数组）
        scale: 外部尺度。候选块整体都是舍入误差量级时也能判为秩亏

    Returns:
        Tuple[BlockVector, np.ndarray]: (Q, N)

    Raises:
        RankDeficientError: 最小奇异值不超过阈值
    """
    if not isinstance(X, BlockVector):
        X = np.asarray(X, dtype=complex)
        X = BlockVector(X, X.shape[1])

    data = X.data
    sv = np.linalg.svd(data, compute_uv=False)
    threshold = rank_threshold(sv[0], data.shape, scale)
    if sv[-1] <= threshold:
        raise RankDeficientError(
            f"块向量列秩不足: σ_min={sv[-1]:.3e}，阈值 {threshold:.3e}"
        )

    Q, R = np.linalg.qr(data)
    diag = np.diag(R)
    phases = diag / np.abs(diag)
    Q = Q * phases[np.newaxis, :]
    R = np.triu(phases.conj()[:, np.newaxis] * R)
    np.fill_diagonal(R, np.abs(diag))

    return BlockVector(Q, X.s), R


def pad_problem(A: np.ndarray, B: np.ndarray) -> Tuple[BlockMatrix, BlockVector, int]:
    """
    把一般的 (m, s) 问题补零为 n = ⌈m/s⌉ 个块：Â = diag(A, I)，B̂ = [B; 0]

    Args:
        A: m×m 矩阵
        B: m×s 右端项

    Returns:
        Tuple[BlockMatrix, BlockVector, int]: (Â, B̂, n)
    """
    A = Validator.validate_square(A, "系数矩阵")
    B = np.asarray(B, dtype=complex)
    if B.ndim == 1:
        B = B[:, np.newaxis]
    m = A.shape[0]
    if B.ndim != 2 or B.shape[0] != m or B.shape[1] < 1:
        raise DimensionMismatchError(f"右端项形状必须是 ({m}, s)，当前形状: {B.shape}")

    s = B.shape[1]
    n = -(-m // s)
    size = n * s

    A_hat = np.eye(size, dtype=complex)
    A_hat[:m, :m] = A
    B_hat = np.zeros((size, s), dtype=complex)
    B_hat[:m, :] = B

    if size != m:
        logger.info(f"问题维数 m={m} 不是块大小 s={s} 的倍数，补零到 {size} 维")

    return BlockMatrix(A_hat, s), BlockVector(B_hat, s), n
