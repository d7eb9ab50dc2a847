"""
λ-矩阵、矩阵多项式、解链、块友矩阵与 ∘ 作用
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..helper.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    SerializationError
)
from ..helper.helper import decode_matrix, encode_matrix
from ..helper.validators import Validator
from .blockvec import BlockMatrix, BlockVector

ArrayLike = Union[np.ndarray, BlockMatrix, BlockVector]


def _as_array(value: ArrayLike) -> np.ndarray:
    if isinstance(value, (BlockMatrix, BlockVector)):
        return value.data
    return np.asarray(value, dtype=complex)


def _as_blocks(coeffs: Sequence[np.ndarray], s: int, name: str) -> Tuple[np.ndarray, ...]:
    blocks = []
    for index, C in enumerate(coeffs):
        C = np.asarray(C, dtype=complex)
        if C.shape != (s, s):
            raise DimensionMismatchError(f"{name}第{index}个系数的形状必须是 ({s}, {s})，当前形状: {C.shape}")
        blocks.append(C.copy())
    return tuple(blocks)


@dataclass(frozen=True, eq=False)
class LambdaMatrix:
    """
    首一λ-矩阵 M(λ) = λⁿI − Σ_{k<n} λᵏC_k

    coeffs 依次为 C_0..C_{n−1}，首项系数 I 不存储。
    """

    coeffs: Tuple[np.ndarray, ...]
    s: int

    def __post_init__(self):
        s = Validator.validate_block_size(self.s)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "coeffs", _as_blocks(self.coeffs, s, "λ-矩阵"))

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @classmethod
    def zero(cls, n: int, s: int) -> "LambdaMatrix":
        """M(λ) = λⁿI"""
        return cls(tuple(np.zeros((s, s), dtype=complex) for _ in range(n)), s)

    def polynomial_coeffs(self) -> List[np.ndarray]:
        """按升幂排列的完整系数 [−C_0, ..., −C_{n−1}, I]"""
        return [-C for C in self.coeffs] + [np.eye(self.s, dtype=complex)]

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.degree, "s": self.s, "coeffs": [encode_matrix(C) for C in self.coeffs]}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "LambdaMatrix":
        try:
            n, s = int(payload["n"]), int(payload["s"])
            coeffs = [decode_matrix(item) for item in payload["coeffs"]]
        except (KeyError, TypeError, ValueError) as e:
            raise SerializationError(f"λ-矩阵格式错误，需要n/s/coeffs字段: {e}")
        if len(coeffs) != n:
            raise SerializationError(f"λ-矩阵次数 {n} 与系数个数 {len(coeffs)} 不一致")
        return cls(tuple(coeffs), s)


@dataclass(frozen=True, eq=False)
class SolventChain:
    """解链 S_1..S_n，M(λ) = (λI − S_1)(λI − S_2)⋯(λI − S_n)"""

    solvents: Tuple[np.ndarray, ...]
    s: int

    def __post_init__(self):
        s = Validator.validate_block_size(self.s)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "solvents", _as_blocks(self.solvents, s, "解链"))

    @property
    def length(self) -> int:
        return len(self.solvents)

    def to_list(self) -> List[Dict[str, Any]]:
        return [encode_matrix(S) for S in self.solvents]

    @classmethod
    def from_list(cls, items: Sequence[Dict[str, Any]], s: int) -> "SolventChain":
        return cls(tuple(decode_matrix(item) for item in items), s)


@dataclass(frozen=True, eq=False)
class ResidualPolynomial:
    """残差多项式 P(λ) = Σ λʲP_j，P_0 = I"""

    coeffs: Tuple[np.ndarray, ...]
    s: int

    def __post_init__(self):
        s = Validator.validate_block_size(self.s)
        coeffs = _as_blocks(self.coeffs, s, "残差多项式")
        if not coeffs or not np.allclose(coeffs[0], np.eye(s), rtol=0.0, atol=1e-12):
            raise InvalidParameterError("残差多项式的常数项必须是单位矩阵")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def random(cls, degree: int, s: int, rng: np.random.Generator, scale: float = 1.0) -> "ResidualPolynomial":
        coeffs = [np.eye(s, dtype=complex)]
        for _ in range(degree):
            coeffs.append(scale * (rng.standard_normal((s, s)) + 1j * rng.standard_normal((s, s))))
        return cls(tuple(coeffs), s)


class CompanionMatrix(BlockMatrix):
    """块友矩阵：次对角为单位块，最后一个块列为 C_0..C_{n−1}"""

    @property
    def lambda_matrix(self) -> LambdaMatrix:
        s, n = self.s, self.n
        last = self.data[:, (n - 1) * s:]
        return LambdaMatrix(tuple(last[k * s:(k + 1) * s, :] for k in range(n)), s)


def eval_lambda(M: LambdaMatrix, lam: complex) -> np.ndarray:
    """M(λ) = λⁿI − Σ λᵏC_k（Horner格式）"""
    result = np.eye(M.s, dtype=complex)
    for C in reversed(M.coeffs):
        result = lam * result - C
    return result


def eval_matrix_poly(M: LambdaMatrix, X: np.ndarray) -> np.ndarray:
    """
    矩阵多项式 M(X) = Xⁿ − Σ C_kXᵏ，系数在左

    Examples:
        >>> M = LambdaMatrix((np.array([[2.0]]),), 1)
        >>> eval_matrix_poly(M, np.array([[2.0]]))
        array([[0.+0.j]])
    """
    X = np.asarray(X, dtype=complex)
    if X.shape != (M.s, M.s):
        raise DimensionMismatchError(f"X 的形状必须是 ({M.s}, {M.s})，当前形状: {X.shape}")

    power = np.eye(M.s, dtype=complex)
    result = np.zeros((M.s, M.s), dtype=complex)
    for C in M.coeffs:
        result -= C @ power
        power = power @ X
    return result + power


def poly_circ_action(coeffs: Sequence[np.ndarray], A: ArrayLike, V: ArrayLike) -> np.ndarray:
    """
    Σ AʲVP_j，系数在右（右Horner格式）

    Args:
        coeffs: 升幂系数 P_0..P_d
        A: ns×ns 矩阵
        V: ns×s 块向量
    """
    A = _as_array(A)
    V = _as_array(V)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or V.ndim != 2 or V.shape[0] != A.shape[0]:
        raise DimensionMismatchError(f"维度不匹配: A {A.shape}, V {V.shape}")
    if not coeffs:
        return np.zeros_like(V)

    s = V.shape[1]
    for P in coeffs:
        if np.shape(P) != (s, s):
            raise DimensionMismatchError(f"系数形状必须是 ({s}, {s})，当前形状: {np.shape(P)}")

    result = V @ coeffs[-1]
    for P in reversed(coeffs[:-1]):
        result = A @ result + V @ P
    return result


def circ_action(M: LambdaMatrix, A: ArrayLike, V: ArrayLike) -> BlockVector:
    """M(A)∘V = AⁿV − Σ AᵏVC_k"""
    V_data = _as_array(V)
    if V_data.ndim != 2 or V_data.shape[1] != M.s:
        raise DimensionMismatchError(f"块向量列数必须是 {M.s}，当前形状: {V_data.shape}")
    return BlockVector(poly_circ_action(M.polynomial_coeffs(), A, V_data), M.s)


def companion(M: LambdaMatrix) -> CompanionMatrix:
    """块友矩阵 𝒞"""
    n, s = M.degree, M.s
    if n < 1:
        raise InvalidParameterError("块友矩阵需要次数至少为1的λ-矩阵")

    C = np.zeros((n * s, n * s), dtype=complex)
    for k in range(1, n):
        C[k * s:(k + 1) * s, (k - 1) * s:k * s] = np.eye(s)
    for k, coeff in enumerate(M.coeffs):
        C[k * s:(k + 1) * s, (n - 1) * s:] = coeff
    return CompanionMatrix(C, s)


def latent_roots(M: LambdaMatrix) -> np.ndarray:
    """ns 个隐根，即块友矩阵的特征值"""
    if M.degree == 0:
        return np.zeros(0, dtype=complex)
    return np.linalg.eigvals(companion(M).data)


def from_solvent_chain(chain: SolventChain) -> LambdaMatrix:
    """
    展开有序乘积 (λI − S_1)⋯(λI − S_n)（非交换）

    C_{n−1} = ΣS_i，C_0 = (−1)^{n−1}S_1⋯S_n，S_n 是右解。
    """
    s = chain.s
    poly = [np.eye(s, dtype=complex)]
    for S in chain.solvents:
        # 右乘 (λI − S)
        shifted = [np.zeros((s, s), dtype=complex)] + poly
        product = [P - (poly[j] @ S if j < len(poly) else 0.0) for j, P in enumerate(shifted)]
        poly = product
    return LambdaMatrix(tuple(-P for P in poly[:-1]), s)


def match_spectra(a: Sequence[complex], b: Sequence[complex]) -> float:
    """
    两个特征值多重集之间的距离：最优指派（总距离最小）后的最大配对距离

    Raises:
        DimensionMismatchError: 多重集大小不同
    """
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if a.size != b.size:
        raise DimensionMismatchError(f"多重集大小不同: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0

    cost = np.abs(a[:, np.newaxis] - b[np.newaxis, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def krylov_columns(A: ArrayLike, B: ArrayLike, n: int) -> List[np.ndarray]:
    """[B, AB, ..., A^{n−1}B]"""
    A = _as_array(A)
    current = _as_array(B)
    columns = []
    for _ in range(n):
        columns.append(current)
        current = A @ current
    return columns
