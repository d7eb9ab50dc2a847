"""
自定义异常类定义
"""
from typing import Optional


class BlockKrylovError(Exception):
    """块Krylov工具箱基础异常类"""
    pass


class ConfigError(BlockKrylovError):
    """配置相关异常"""
    pass


class ValidationError(BlockKrylovError):
    """输入验证异常"""
    pass


class FileOperationError(BlockKrylovError):
    """文件操作异常"""
    pass


class NumericalError(BlockKrylovError):
    """数值计算相关异常"""
    pass


class PrescriptionError(BlockKrylovError):
    """收敛曲线预设（逆问题）相关异常"""

    def __init__(self, message: str, k: Optional[int] = None):
        super().__init__(message)
        self.k = k


class VerificationError(BlockKrylovError):
    """构造验证未通过"""
    pass


class ConfigFileNotFoundError(ConfigError):
    """配置文件未找到异常"""
    pass


class ConfigParseError(ConfigError):
    """配置文件解析错误异常"""
    pass


class InvalidPathError(ValidationError):
    """无效路径异常"""
    pass


class InvalidParameterError(ValidationError):
    """无效参数异常"""
    pass


class DimensionMismatchError(ValidationError):
    """矩阵/块向量维度不匹配"""
    pass


class SerializationError(FileOperationError):
    """JSON格式或内容错误"""
    pass


class NotPSDError(NumericalError):
    """矩阵不是（半）正定的"""
    pass


class RankDeficientError(NumericalError):
    """块向量列秩不足"""
    pass


class SingularPivotError(NumericalError):
    """块Givens变换的主元块奇异"""
    pass


class BreakdownError(NumericalError):
    """块Arnoldi过程在第 step 步发生breakdown"""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class InadmissiblePrescriptionError(PrescriptionError):
    """预设的残差范数序列不满足广义Loewner单调性"""
    pass


class InconsistentPrescriptionError(PrescriptionError):
    """预设的残差序列与Ritz λ-矩阵不满足值域一致性条件"""
    pass


class NumericallyIllConditionedError(PrescriptionError):
    """构造中的U或D条件数过大"""
    pass
