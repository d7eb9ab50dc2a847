"""
收敛曲线预设（逆问题）：可容许性与一致性检查、构造 𝒜、B，以及正向验证
"""
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg as sla
from loguru import logger
from tqdm import tqdm

from ..helper import config
from ..helper.exceptions import (
    DimensionMismatchError,
    InadmissiblePrescriptionError,
    InconsistentPrescriptionError,
    InvalidParameterError,
    NumericalError,
    NumericallyIllConditionedError,
    PrescriptionError,
    SerializationError
)
from ..helper.helper import decode_matrix, encode_matrix, make_rng, random_unitary, resolve_seed
from ..helper.validators import Validator
from .arnoldi import BlockHessenberg
from .blockvec import BlockMatrix, BlockVector, block_unit
from .lambda_matrix import (
    LambdaMatrix,
    SolventChain,
    circ_action,
    companion,
    from_solvent_chain,
    krylov_columns,
    latent_roots,
    match_spectra
)
from .salgebra import (
    EPS,
    block_abs,
    chol_upper,
    hermitize,
    is_upper_tri_nonneg,
    loewner_cmp_gram
)
from .solvers import blgmres

_GENERATOR_ATTEMPTS = 12
_CONDITION_TARGET = 1e6


@dataclass(frozen=True)
class CheckResult:
    """检查结果：ok 为真表示通过；否则 kind 与 k 指出失败的位置"""

    ok: bool
    kind: str = "ok"
    k: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class ConvergencePrescription:
    """
    预设的收敛行为：残差块范数 F_0..F_{n−1} 与Ritz λ-矩阵 M^(1)..M^(n)

    M^(k) 的次数为 k；M^(n) 的特征值即构造出的 𝒜 的特征值。
    """

    F: Tuple[np.ndarray, ...]
    ritz: Tuple[LambdaMatrix, ...]
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.F:
            raise InvalidParameterError("残差序列不能为空")
        F = tuple(np.array(Fk, dtype=complex) for Fk in self.F)
        s = F[0].shape[0] if F[0].ndim == 2 else 0
        for k, Fk in enumerate(F):
            if Fk.shape != (s, s) or s == 0:
                raise DimensionMismatchError(f"F_{k} 的形状必须是 ({s}, {s})，当前形状: {Fk.shape}")

        ritz = tuple(self.ritz)
        if len(ritz) != len(F):
            raise DimensionMismatchError(f"Ritz λ-矩阵个数 {len(ritz)} 必须等于残差个数 {len(F)}")
        for k, M in enumerate(ritz, start=1):
            if M.degree != k or M.s != s:
                raise DimensionMismatchError(f"M^({k}) 的次数必须是 {k}、块大小 {s}，当前 ({M.degree}, {M.s})")

        object.__setattr__(self, "F", F)
        object.__setattr__(self, "ritz", ritz)
        object.__setattr__(self, "seed", Validator.validate_seed(self.seed))

    @property
    def n(self) -> int:
        return len(self.F)

    @property
    def s(self) -> int:
        return self.F[0].shape[0]

    def grams(self) -> List[np.ndarray]:
        return [Fk.conj().T @ Fk for Fk in self.F]

    def g_blocks(self) -> List[np.ndarray]:
        """G_k = cholU(F_{k−1}*F_{k−1} − F_k*F_k)，G_n = F_{n−1}"""
        grams = self.grams()
        blocks = [chol_upper(grams[k - 1] - grams[k], tol=config.range_tol) for k in range(1, self.n)]
        blocks.append(self.F[-1])
        return blocks

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "s": self.s,
            "F": [encode_matrix(Fk) for Fk in self.F],
            "ritz": [M.to_dict() for M in self.ritz],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ConvergencePrescription":
        """
        解析预设文件

        ritz 可以是 n 个λ-矩阵的列表，也可以是
        {"solvent_chain": [...], "ritz_mode": "zero" | "explicit", "intermediate": [...]}：
        zero 表示 M^(k) = λᵏI（k < n），explicit 时 intermediate 给出 M^(1)..M^(n−1)，
        每项为λ-矩阵或 {"solvent_chain": [...]}。
        """
        try:
            n, s = int(payload["n"]), int(payload["s"])
            F = [decode_matrix(item) for item in payload["F"]]
            ritz_payload = payload["ritz"]
        except (KeyError, TypeError, ValueError) as e:
            raise SerializationError(f"预设文件格式错误，需要n/s/F/ritz字段: {e}")

        if len(F) != n:
            raise SerializationError(f"F 的个数 {len(F)} 与 n={n} 不一致")

        if isinstance(ritz_payload, list):
            ritz = [LambdaMatrix.from_dict(item) for item in ritz_payload]
        elif isinstance(ritz_payload, dict):
            ritz = _ritz_from_chain_payload(ritz_payload, n, s)
        else:
            raise SerializationError("ritz 字段必须是列表或对象")

        return cls(tuple(F), tuple(ritz), payload.get("seed"))


def _lambda_entry(entry: Dict[str, Any], s: int) -> LambdaMatrix:
    if "solvent_chain" in entry:
        return from_solvent_chain(SolventChain.from_list(entry["solvent_chain"], s))
    return LambdaMatrix.from_dict(entry)


def _ritz_from_chain_payload(payload: Dict[str, Any], n: int, s: int) -> List[LambdaMatrix]:
    mode = payload.get("ritz_mode", "zero")
    if "solvent_chain" not in payload:
        raise SerializationError("ritz 对象需要 solvent_chain 字段")
    final = from_solvent_chain(SolventChain.from_list(payload["solvent_chain"], s))
    if final.degree != n:
        raise SerializationError(f"解链长度 {final.degree} 与 n={n} 不一致")

    if mode == "zero":
        return [LambdaMatrix.zero(k, s) for k in range(1, n)] + [final]
    if mode == "explicit":
        entries = payload.get("intermediate", [])
        if len(entries) != n - 1:
            raise SerializationError(f"explicit 模式需要 {n - 1} 个中间λ-矩阵，当前 {len(entries)}")
        return [_lambda_entry(entry, s) for entry in entries] + [final]
    raise SerializationError(f"未知的 ritz_mode: {mode}")


@dataclass(frozen=True, eq=False)
class ConstructedInstance:
    """𝒜 = 𝒱𝒟𝒰𝒞𝒰⁻¹𝒟⁻¹𝒱*，B = 𝒱E_1F_0"""

    A: BlockMatrix
    B: BlockVector
    U: BlockMatrix
    D: BlockMatrix
    C: BlockMatrix
    V: BlockMatrix
    H: BlockHessenberg
    seed: int
    cond_U: float
    cond_D: float

    def manifest(self) -> Dict[str, Any]:
        return {
            "n": self.A.n,
            "s": self.A.s,
            "seed": self.seed,
            "cond_U": self.cond_U,
            "cond_D": self.cond_D,
        }


@dataclass(frozen=True)
class VerificationReport:
    """正向验证的三项指标"""

    gram_mismatch: float
    ritz_annihilation: float
    spectrum_distance: float
    gram_per_step: Tuple[float, ...] = ()
    ritz_per_step: Tuple[float, ...] = ()
    verify_tol: float = 1e-8
    spectrum_tol: float = 1e-7
    error: str = ""

    @property
    def gram_passed(self) -> bool:
        return not self.error and self.gram_mismatch <= self.verify_tol

    @property
    def ritz_passed(self) -> bool:
        return not self.error and self.ritz_annihilation <= self.verify_tol

    @property
    def spectrum_passed(self) -> bool:
        return not self.error and self.spectrum_distance <= self.spectrum_tol

    @property
    def passed(self) -> bool:
        return self.gram_passed and self.ritz_passed and self.spectrum_passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "gram_mismatch": {"value": self.gram_mismatch, "passed": self.gram_passed,
                              "per_step": list(self.gram_per_step)},
            "ritz_annihilation": {"value": self.ritz_annihilation, "passed": self.ritz_passed,
                                  "per_step": list(self.ritz_per_step)},
            "spectrum_distance": {"value": self.spectrum_distance, "passed": self.spectrum_passed},
            "verify_tol": self.verify_tol,
            "spectrum_tol": self.spectrum_tol,
            "error": self.error,
        }

    def to_text(self) -> str:
        flag = {True: "通过", False: "未通过"}
        lines = [
            f"残差Gram匹配: {self.gram_mismatch:.3e} ({flag[self.gram_passed]})",
            f"Ritz λ-矩阵零化: {self.ritz_annihilation:.3e} ({flag[self.ritz_passed]})",
            f"谱距离: {self.spectrum_distance:.3e} ({flag[self.spectrum_passed]})",
            f"结论: {flag[self.passed]}",
        ]
        if self.error:
            lines.append(f"错误: {self.error}")
        return "\n".join(lines) + "\n"


def check_admissible_grams(grams: Sequence[np.ndarray], tol: Optional[float] = None) -> CheckResult:
    """
    直接在Gram矩阵 F_k*F_k 上检查广义Loewner单调性

    Gram 可以不定（例如人为给出的反例），此时仍能给出违例位置。
    """
    grams = [hermitize(P) for P in grams]
    if not grams:
        return CheckResult(False, "empty", None, "残差序列为空")

    for k in range(1, len(grams)):
        relation = loewner_cmp_gram(grams[k], grams[k - 1], tol)
        if not relation.is_nonincreasing:
            return CheckResult(False, "violation", k,
                               f"F_{k} 与 F_{k - 1} 不满足 F_{k} ⪯ F_{k - 1}（比较结果 {relation.value}）")

    last = grams[-1]
    w = np.linalg.eigvalsh(last)
    threshold = (tol if tol is not None else config.rank_factor * EPS * last.shape[0]) * float(np.linalg.norm(last, 2))
    if w[0] <= threshold:
        return CheckResult(False, "singular_final", len(grams) - 1, "最后一个残差Gram矩阵不是正定的")

    return CheckResult(True)


def check_admissible(F: Sequence[np.ndarray], tol: Optional[float] = None) -> CheckResult:
    """
    可容许性：F_0 ⪰ F_1 ⪰ ... ⪰ F_{n−1} ≻ 0（广义Loewner序）

    Returns:
        CheckResult: 通过，或在第一个违例处失败（kind = violation / not_splus / singular_final）
    """
    for k, Fk in enumerate(F):
        if not is_upper_tri_nonneg(Fk, strict=True):
            return CheckResult(False, "not_splus", k, f"F_{k} 不在 S⁺ 中（需上三角、对角线为正实数）")
    return check_admissible_grams([np.asarray(Fk).conj().T @ np.asarray(Fk) for Fk in F], tol)


def _inverse_gram(Fk: np.ndarray) -> np.ndarray:
    identity = np.eye(Fk.shape[0], dtype=complex)
    Finv = sla.solve_triangular(np.triu(Fk), identity, lower=False)
    return Finv @ Finv.conj().T


def _gram_decrement(F: Sequence[np.ndarray], k: int) -> np.ndarray:
    """Δ_k = ⟨F_k⟩⁻¹ − ⟨F_{k−1}⟩⁻¹"""
    return hermitize(_inverse_gram(F[k]) - _inverse_gram(F[k - 1]))


def _range_basis_hermitian(P: np.ndarray, reference: float) -> np.ndarray:
    w, W = np.linalg.eigh(P)
    return W[:, w > config.range_tol * reference]


def _range_basis(M: np.ndarray) -> np.ndarray:
    U, sv, _ = np.linalg.svd(M)
    if sv.size == 0 or sv[0] == 0.0:
        return U[:, :0]
    return U[:, sv > config.range_tol * sv[0]]


def _ranges_match(Delta: np.ndarray, C0: np.ndarray, reference: float) -> Tuple[bool, int, int]:
    basis_delta = _range_basis_hermitian(Delta, reference)
    basis_c = _range_basis(C0)
    rank_delta, rank_c = basis_delta.shape[1], basis_c.shape[1]
    if rank_delta != rank_c:
        return False, rank_delta, rank_c
    distance = np.linalg.norm(basis_delta @ basis_delta.conj().T - basis_c @ basis_c.conj().T, 2) if rank_c else 0.0
    return bool(distance <= np.sqrt(config.range_tol)), rank_delta, rank_c


def check_consistency(F: Sequence[np.ndarray], ritz: Sequence[LambdaMatrix]) -> CheckResult:
    """
    值域一致性：Range(⟨F_k⟩⁻¹ − ⟨F_{k−1}⟩⁻¹) = Range(C_0^(k))，k = 1..n−1

    Returns:
        CheckResult: 通过，或 kind = range_mismatch 并给出 k
    """
    F = [np.asarray(Fk, dtype=complex) for Fk in F]
    if len(ritz) != len(F):
        return CheckResult(False, "range_mismatch", None, "Ritz λ-矩阵个数与残差个数不一致")

    for k in range(1, len(F)):
        Delta = _gram_decrement(F, k)
        reference = max(float(np.linalg.norm(_inverse_gram(F[k]), 2)), 1.0)
        C0 = ritz[k - 1].coeffs[0]
        ok, rank_delta, rank_c = _ranges_match(Delta, C0, reference)
        if not ok:
            return CheckResult(False, "range_mismatch", k,
                               f"第{k}步值域不一致: rank(Δ_{k})={rank_delta}, rank(C_0^({k}))={rank_c}")

    C0_final = ritz[-1].coeffs[0]
    sv = np.linalg.svd(C0_final, compute_uv=False)
    if sv[-1] <= config.range_tol * max(float(sv[0]), 1.0):
        return CheckResult(False, "singular_final", len(F), "C_0^(n) 奇异，构造出的矩阵将奇异")

    return CheckResult(True)


def build_U(ritz: Sequence[LambdaMatrix]) -> BlockMatrix:
    """
    由Ritz λ-矩阵唯一确定的单位块上三角矩阵 𝒰

    𝒰⁻¹ 的第 (j, k+1) 块为 −C_{j−1}^(k)。
    """
    n = len(ritz)
    s = ritz[0].s
    T = np.eye(n * s, dtype=complex)
    for k in range(1, n):
        for j, coeff in enumerate(ritz[k - 1].coeffs):
            T[j * s:(j + 1) * s, k * s:(k + 1) * s] = -coeff
    U = sla.solve_triangular(T, np.eye(n * s, dtype=complex), lower=False, unit_diagonal=True)
    return BlockMatrix(U, s)


def _complete_d_block(Delta: np.ndarray, C0: np.ndarray, rank: int,
                      rng: Optional[np.random.Generator], randomize_free: bool) -> np.ndarray:
    """C_0 秩亏时：D*D = V_1(Σ_1⁻¹MΣ_1⁻¹)⁻¹V_1* + V_2KV_2*，M = U_1*ΔU_1"""
    s = C0.shape[0]
    U, sv, Vh = np.linalg.svd(C0)
    V = Vh.conj().T
    U1, V1, V2 = U[:, :rank], V[:, :rank], V[:, rank:]

    free = s - rank
    if randomize_free and rng is not None:
        W = rng.standard_normal((free, free)) + 1j * rng.standard_normal((free, free))
        K = W @ W.conj().T + np.eye(free)
    else:
        K = np.eye(free, dtype=complex)

    gram = V2 @ K @ V2.conj().T
    if rank:
        M = hermitize(U1.conj().T @ Delta @ U1)
        sigma_inv = np.diag(1.0 / sv[:rank])
        N = hermitize(sigma_inv @ M @ sigma_inv)
        gram = gram + V1 @ np.linalg.inv(N) @ V1.conj().T
    return chol_upper(hermitize(gram))


def build_D(F: Sequence[np.ndarray], ritz: Sequence[LambdaMatrix],
            rng: Optional[np.random.Generator] = None, randomize_free: bool = False) -> BlockMatrix:
    """
    块对角矩阵 𝒟，D_1 = F_0，且 C_0^(k)(D_{k+1}*D_{k+1})⁻¹C_0^(k)* = Δ_k

    满秩时 D_{k+1} = |cholU(Δ_k)⁻*C_0^(k)|，唯一确定；
    秩亏时在零空间方向取自由参数（默认单位阵，randomize_free 时取随机正定阵）。

    Raises:
        InconsistentPrescriptionError: 值域不一致
    """
    F = [np.asarray(Fk, dtype=complex) for Fk in F]
    n, s = len(F), F[0].shape[0]
    blocks = [np.triu(F[0])]

    for k in range(1, n):
        Delta = _gram_decrement(F, k)
        reference = max(float(np.linalg.norm(_inverse_gram(F[k]), 2)), 1.0)
        C0 = ritz[k - 1].coeffs[0]
        ok, rank_delta, rank_c = _ranges_match(Delta, C0, reference)
        if not ok:
            logger.error(f"第{k}步值域不一致: rank(Δ)={rank_delta}, rank(C_0)={rank_c}")
            raise InconsistentPrescriptionError(f"第{k}步值域不一致，无法构造 D_{k + 1}", k=k)

        if rank_c == s:
            R_delta = chol_upper(Delta)
            blocks.append(block_abs(sla.solve_triangular(R_delta, C0, trans='C', lower=False)))
        else:
            logger.warning(f"第{k}步残差停滞 (rank {rank_c} < {s})，D_{k + 1} 在零空间方向取自由参数")
            blocks.append(_complete_d_block(Delta, C0, rank_c, rng, randomize_free))

    return BlockMatrix(sla.block_diag(*blocks), s)


def krylov_matrix(A: BlockMatrix, B: BlockVector) -> np.ndarray:
    """𝒦 = [B, 𝒜B, ..., 𝒜^{n−1}B]"""
    return np.hstack(krylov_columns(A, B, A.n))


def construct(p: ConvergencePrescription, seed: Optional[int] = None,
              randomize_free: bool = False) -> ConstructedInstance:
    """
    构造具有预设收敛行为和预设Ritz λ-矩阵的 (𝒜, B)

    Args:
        p: 收敛预设
        seed: 随机种子（𝒱 与自由参数），None 时依次取预设中的种子、环境变量、配置默认值
        randomize_free: 秩亏步的自由参数是否随机化

    Returns:
        ConstructedInstance: 构造结果

    Raises:
        InadmissiblePrescriptionError: 不满足可容许性
        InconsistentPrescriptionError: 不满足值域一致性
        NumericallyIllConditionedError: cond(𝒰) 或 cond(𝒟) 超过上限
    """
    admissible = check_admissible(p.F)
    if not admissible:
        logger.error(f"预设不可容许: {admissible.reason}")
        raise InadmissiblePrescriptionError(admissible.reason, k=admissible.k)

    consistent = check_consistency(p.F, p.ritz)
    if not consistent:
        logger.error(f"预设不一致: {consistent.reason}")
        raise InconsistentPrescriptionError(consistent.reason, k=consistent.k)

    seed = resolve_seed(seed if seed is not None else p.seed)
    rng = make_rng(seed)
    n, s = p.n, p.s

    C = companion(p.ritz[-1])
    U = build_U(p.ritz)
    D = build_D(p.F, p.ritz, rng, randomize_free)

    cond_U = float(np.linalg.cond(U.data))
    cond_D = float(np.linalg.cond(D.data))
    if cond_U > config.cond_limit or cond_D > config.cond_limit:
        logger.error(f"构造条件数过大: cond(U)={cond_U:.3e}, cond(D)={cond_D:.3e}")
        raise NumericallyIllConditionedError(
            f"条件数超过上限 {config.cond_limit:.1e}: cond(U)={cond_U:.3e}, cond(D)={cond_D:.3e}"
        )
    if max(cond_U, cond_D) > config.cond_limit * 1e-3:
        logger.warning(f"构造条件数接近上限: cond(U)={cond_U:.3e}, cond(D)={cond_D:.3e}")

    U_inv = sla.solve_triangular(U.data, np.eye(n * s, dtype=complex), lower=False, unit_diagonal=True)
    D_inv_blocks = [
        sla.solve_triangular(D.block(k, k), np.eye(s, dtype=complex), lower=False) for k in range(1, n + 1)
    ]
    H_raw = np.triu(D.data @ U.data @ C.data @ U_inv @ sla.block_diag(*D_inv_blocks), -s)
    # 次对角块精确等于 D_{k+1}D_k⁻¹
    for k in range(1, n):
        H_raw[k * s:(k + 1) * s, (k - 1) * s:k * s] = np.triu(D.block(k + 1, k + 1) @ D_inv_blocks[k - 1])
    H = BlockHessenberg.from_array(H_raw, s)

    V = random_unitary(n * s, rng)
    A = V @ H.data @ V.conj().T
    B = V[:, :s] @ np.triu(p.F[0])

    logger.debug(f"构造完成: n={n}, s={s}, seed={seed}, cond(U)={cond_U:.3e}, cond(D)={cond_D:.3e}")
    return ConstructedInstance(
        A=BlockMatrix(A, s), B=BlockVector(B, s), U=U, D=D, C=C, V=BlockMatrix(V, s), H=H,
        seed=seed, cond_U=cond_U, cond_D=cond_D
    )


def _ritz_metric(M: LambdaMatrix, Hk: np.ndarray, start: np.ndarray) -> float:
    """‖M(ℋ^(k))∘E_1‖B‖‖_F 相对各项范数之和"""
    value = circ_action(M, Hk, start).data
    terms = [start]
    for _ in range(M.degree):
        terms.append(Hk @ terms[-1])
    scale = float(np.linalg.norm(terms[-1]))
    scale += sum(float(np.linalg.norm(terms[k] @ C)) for k, C in enumerate(M.coeffs))
    return float(np.linalg.norm(value)) / max(scale, np.finfo(float).tiny)


def verify(inst: ConstructedInstance, p: ConvergencePrescription) -> VerificationReport:
    """
    正向验证：对 (𝒜, B) 运行块Arnoldi与blGMRES，比较

    1. max_k ‖Gram(R_k) − F_k*F_k‖_F / ‖F_0‖_F²
    2. max_k ‖M^(k)(ℋ^(k))∘E_1‖B‖‖_F（相对各项范数之和）
    3. eig(𝒜) 与 M^(n) 隐根的最优匹配距离（相对谱半径）

    不抛出异常，失败信息记录在报告中。
    """
    verify_tol, spectrum_tol = config.verify_tol, config.spectrum_tol
    s = p.s
    try:
        trace = blgmres(inst.A, inst.B, k_max=p.n, conv_tol=0.0)
    except NumericalError as e:
        logger.error(f"正向验证时数值计算失败: {e}")
        return VerificationReport(np.inf, np.inf, np.inf, verify_tol=verify_tol,
                                  spectrum_tol=spectrum_tol, error=str(e))

    reference = float(np.linalg.norm(p.F[0])) ** 2
    grams = p.grams()
    gram_per_step = []
    for k in range(p.n):
        if k >= len(trace.steps):
            gram_per_step.append(float(np.inf))
            continue
        gram_per_step.append(float(np.linalg.norm(trace.steps[k].gram - grams[k])) / reference)

    arnoldi = trace.arnoldi
    ritz_per_step = []
    for k in range(1, p.n + 1):
        if k > arnoldi.steps:
            ritz_per_step.append(float(np.inf))
            continue
        start = block_unit(1, k, s).data @ arnoldi.B_norm
        ritz_per_step.append(_ritz_metric(p.ritz[k - 1], arnoldi.principal(k), start))

    eigenvalues = np.linalg.eigvals(inst.A.data)
    roots = latent_roots(p.ritz[-1])
    radius = max(float(np.max(np.abs(roots))), np.finfo(float).tiny)
    spectrum = match_spectra(eigenvalues, roots) / radius

    report = VerificationReport(
        gram_mismatch=max(gram_per_step), ritz_annihilation=max(ritz_per_step),
        spectrum_distance=spectrum, gram_per_step=tuple(gram_per_step), ritz_per_step=tuple(ritz_per_step),
        verify_tol=verify_tol, spectrum_tol=spectrum_tol
    )
    if report.passed:
        logger.success(f"验证通过: Gram {report.gram_mismatch:.2e}, Ritz {report.ritz_annihilation:.2e}, "
                       f"谱 {report.spectrum_distance:.2e}")
    else:
        logger.warning(f"验证未通过: Gram {report.gram_mismatch:.2e}, Ritz {report.ritz_annihilation:.2e}, "
                       f"谱 {report.spectrum_distance:.2e}")
    return report


def aux_lemma_check(Z, j: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    辅助引理的两侧：
    lhs = |E_j^T R_Z⁻*Z|，R_Z = cholU(I − ZZ*)；
    rhs = cholU((I − Z_{1:j}*Z_{1:j})⁻¹ − (I − Z_{1:j−1}*Z_{1:j−1})⁻¹)

    Args:
        Z: S^k 中的块向量（ks×s），要求 I − ZZ* 正定
        j: 块下标，1 ≤ j ≤ k

    Raises:
        NotPSDError: I − ZZ* 不是正定的
    """
    data = Z.data if isinstance(Z, BlockVector) else np.asarray(Z, dtype=complex)
    s = data.shape[1]
    k = data.shape[0] // s
    if data.shape[0] != k * s or not 1 <= j <= k:
        raise DimensionMismatchError(f"块下标 j={j} 越界或形状不合法: {data.shape}")

    R_Z = chol_upper(np.eye(k * s) - data @ data.conj().T)
    W = sla.solve_triangular(R_Z, data, trans='C', lower=False)
    lhs = block_abs(W[(j - 1) * s:j * s, :])

    def inverse_complement(m: int) -> np.ndarray:
        head = data[:m * s, :]
        return np.linalg.inv(np.eye(s) - head.conj().T @ head)

    rhs = chol_upper(inverse_complement(j) - inverse_complement(j - 1), tol=config.range_tol)
    return lhs, rhs


def _random_solvent(s: int, angles: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """正规解：特征值 r·e^{iθ}，r ∈ [0.9, 1.1]，特征向量为随机酉矩阵"""
    radius = rng.uniform(0.9, 1.1, size=s)
    Q = random_unitary(s, rng)
    return (Q * (radius * np.exp(1j * angles))) @ Q.conj().T


def _random_chain(k: int, s: int, rng: np.random.Generator, zero_first: bool = False) -> SolventChain:
    """特征值在单位圆附近等距分布的正规解链，相邻特征值的角距为 2π/(ks)"""
    offset = rng.uniform(0.0, 2 * np.pi)
    angles = offset + 2 * np.pi * np.arange(k * s) / (k * s)
    rng.shuffle(angles)
    solvents = [_random_solvent(s, angles[i * s:(i + 1) * s], rng) for i in range(k)]
    if zero_first:
        solvents[0] = np.zeros((s, s), dtype=complex)
    return SolventChain(tuple(solvents), s)


def _conditioning_score(F: Sequence[np.ndarray], ritz: Sequence[LambdaMatrix]) -> float:
    """
    构造误差的放大估计：cond(𝒰)·cond(𝒟)·max_i κ(λ_i)·‖𝒞‖₂/ρ

    κ(λ_i) = 1/|y_i*x_i| 为 ℋ = (𝒟𝒰)𝒞(𝒟𝒰)⁻¹ 的特征值条件数，ρ 为谱半径。
    """
    U = build_U(ritz).data
    D = build_D(F, ritz).data
    C = companion(ritz[-1]).data
    DU = D @ U
    H = np.linalg.solve(DU.T, (DU @ C).T).T
    eigenvalues, left, right = sla.eig(H, left=True, right=True)
    overlap = float(np.min(np.abs(np.sum(left.conj() * right, axis=0))))
    radius = float(np.max(np.abs(eigenvalues)))
    if overlap <= np.finfo(float).tiny or radius <= np.finfo(float).tiny:
        return float(np.inf)
    return float(np.linalg.cond(U) * np.linalg.cond(D) * np.linalg.norm(C, 2) / (overlap * radius))


def _random_residuals(n: int, s: int, rng: np.random.Generator, stagnation: set) -> List[np.ndarray]:
    F = [block_abs(random_unitary(s, rng) @ np.diag(rng.uniform(1.0, 2.0, size=s)))]
    for k in range(1, n):
        if k in stagnation:
            F.append(F[-1].copy())
            continue
        T = random_unitary(s, rng) @ np.diag(rng.uniform(0.5, 0.9, size=s)) @ random_unitary(s, rng)
        F.append(block_abs(T @ F[-1]))
    return F


def random_prescription(n: int, s: int, seed: Optional[int] = None,
                        stagnation: Iterable[int] = ()) -> ConvergencePrescription:
    """
    生成可容许且一致的随机预设

    F_k = |T_kF_{k−1}|，T_k 的奇异值在 [0.5, 0.9] 内；Ritz λ-矩阵来自正规解链，
    特征值在单位圆附近等距分布。
    stagnation 中的步 k（1 ≤ k ≤ n−1）完全停滞：F_k = F_{k−1}，C_0^(k) = 0。

    同一种子依次抽取至多 _GENERATOR_ATTEMPTS 组候选，取第一个条件数估计不超过
    _CONDITION_TARGET 的候选，否则取估计最小者；结果只依赖种子。

    Raises:
        InvalidParameterError: 停滞步越界
    """
    n = Validator.validate_positive_int(n, "块长度")
    s = Validator.validate_block_size(s)
    stagnation = set(int(k) for k in stagnation)
    if any(not 1 <= k <= n - 1 for k in stagnation):
        raise InvalidParameterError(f"停滞步必须在 1..{n - 1} 之间: {sorted(stagnation)}")

    seed = resolve_seed(seed)
    rng = make_rng(seed)

    best, best_score = None, float(np.inf)
    for attempt in range(1, _GENERATOR_ATTEMPTS + 1):
        F = _random_residuals(n, s, rng, stagnation)
        ritz = [from_solvent_chain(_random_chain(k, s, rng, zero_first=k in stagnation)) for k in range(1, n + 1)]
        score = _conditioning_score(F, ritz)
        if best is None or score < best_score:
            best, best_score = (F, ritz), score
        if score <= _CONDITION_TARGET:
            break
    else:
        logger.debug(f"随机预设未达到条件数目标 {_CONDITION_TARGET:.0e}，取最小估计 {best_score:.3e}")

    logger.debug(f"随机预设: n={n}, s={s}, seed={seed}, 第{attempt}组候选, 条件数估计 {best_score:.3e}")
    F, ritz = best
    return ConvergencePrescription(tuple(F), tuple(ritz), seed)


def _verify_seed(n: int, s: int, seed: int, stagnation: Tuple[int, ...]) -> Dict[str, Any]:
    row = {"seed": seed, "n": n, "s": s}
    try:
        p = random_prescription(n, s, seed, stagnation)
        inst = construct(p, seed)
        report = verify(inst, p)
        row.update(passed=report.passed, gram_mismatch=report.gram_mismatch,
                   ritz_annihilation=report.ritz_annihilation, spectrum_distance=report.spectrum_distance,
                   cond_U=inst.cond_U, cond_D=inst.cond_D, error=report.error)
    except (PrescriptionError, NumericalError) as e:
        row.update(passed=False, gram_mismatch=np.nan, ritz_annihilation=np.nan, spectrum_distance=np.nan,
                   cond_U=np.nan, cond_D=np.nan, error=str(e))
    return row


def verify_batch(n: int, s: int, seeds: Iterable[int], workers: int = 1,
                 stagnation: Iterable[int] = ()) -> pd.DataFrame:
    """
    对一批种子执行 构造 + 验证

    Args:
        n, s: 问题规模
        seeds: 种子序列
        workers: 线程数
        stagnation: 各预设共用的停滞步

    Returns:
        pd.DataFrame: 每个种子一行，按种子排序
    """
    workers = Validator.validate_positive_int(workers, "线程数")
    seeds = [Validator.validate_seed(seed) for seed in seeds]
    stagnation = tuple(stagnation)

    rows = []
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(_verify_seed, n, s, seed, stagnation) for seed in seeds]
        for future in tqdm(as_completed(futures), total=len(futures), desc="批量验证", unit="seed"):
            rows.append(future.result())

    frame = pd.DataFrame(rows)
    if not frame.empty:
        frame = frame.sort_values("seed").reset_index(drop=True)
        failed = int((~frame["passed"].astype(bool)).sum())
        logger.info(f"批量验证完成: {len(frame)} 个种子，失败 {failed} 个")
    return frame
