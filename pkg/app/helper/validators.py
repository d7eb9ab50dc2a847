"""
输入验证模块
"""
from typing import Optional, Union
from pathlib import Path

import numpy as np

from .exceptions import (
    InvalidPathError,
    InvalidParameterError,
    DimensionMismatchError
)


class Validator:
    """输入验证器类"""

    @staticmethod
    def validate_positive_int(value: int, name: str = "参数") -> int:
        """验证正整数参数

        Args:
            value: 待验证的值
            name: 参数名称，用于错误信息

        Returns:
            int: 验证后的整数

        Raises:
            InvalidParameterError: 不是正整数
        """
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise InvalidParameterError(f"{name}必须是整数类型，当前类型: {type(value)}")

        if value < 1:
            raise InvalidParameterError(f"{name}必须大于等于1，当前值: {value}")

        return int(value)

    @staticmethod
    def validate_block_size(s: int) -> int:
        """验证块大小 s ≥ 1"""
        return Validator.validate_positive_int(s, "块大小")

    @staticmethod
    def validate_kmax(k_max: Optional[int], n: int) -> int:
        """验证最大迭代步数

        Args:
            k_max: 最大步数，None 或 0 表示运行到底（n 步）
            n: 块长度

        Returns:
            int: 1 ≤ k_max ≤ n

        Raises:
            InvalidParameterError: 步数超出范围
        """
        if k_max is None or k_max == 0:
            return n

        k_max = Validator.validate_positive_int(k_max, "最大步数")
        if k_max > n:
            raise InvalidParameterError(f"最大步数不能超过块长度 n={n}，当前值: {k_max}")

        return k_max

    @staticmethod
    def validate_tolerance(tol: float, name: str = "容差", allow_zero: bool = False) -> float:
        """验证容差参数

        Raises:
            InvalidParameterError: 容差不是有限的非负数
        """
        if isinstance(tol, bool) or not isinstance(tol, (int, float, np.floating)):
            raise InvalidParameterError(f"{name}必须是数字类型，当前类型: {type(tol)}")

        tol = float(tol)
        if not np.isfinite(tol) or tol < 0.0 or (tol == 0.0 and not allow_zero):
            raise InvalidParameterError(f"{name}必须是有限的正数，当前值: {tol}")

        return tol

    @staticmethod
    def validate_seed(seed: Union[int, str, None]) -> Optional[int]:
        """验证随机种子（允许字符串形式，例如来自环境变量）"""
        if seed is None:
            return None

        if isinstance(seed, str):
            seed = seed.strip()
            if not seed:
                return None
            try:
                seed = int(seed)
            except ValueError:
                raise InvalidParameterError(f"随机种子必须是整数: {seed}")

        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise InvalidParameterError(f"随机种子必须是整数类型，当前类型: {type(seed)}")

        if seed < 0:
            raise InvalidParameterError(f"随机种子必须非负，当前值: {seed}")

        return int(seed)

    @staticmethod
    def validate_square(matrix: np.ndarray, name: str = "矩阵") -> np.ndarray:
        """验证二维方阵并转换为复数数组

        Raises:
            DimensionMismatchError: 不是二维方阵
            InvalidParameterError: 含有非有限值
        """
        array = np.asarray(matrix, dtype=complex)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise DimensionMismatchError(f"{name}必须是方阵，当前形状: {array.shape}")

        if not np.all(np.isfinite(array)):
            raise InvalidParameterError(f"{name}包含非有限值")

        return array

    @staticmethod
    def validate_block_shape(matrix: np.ndarray, s: int, name: str = "块向量") -> np.ndarray:
        """验证 ns×s 形状

        Raises:
            DimensionMismatchError: 行数不是 s 的倍数或列数不等于 s
        """
        array = np.asarray(matrix, dtype=complex)
        if array.ndim != 2 or array.shape[1] != s or array.shape[0] == 0 or array.shape[0] % s != 0:
            raise DimensionMismatchError(f"{name}的形状必须是 (n*{s}, {s})，当前形状: {array.shape}")

        if not np.all(np.isfinite(array)):
            raise InvalidParameterError(f"{name}包含非有限值")

        return array

    @staticmethod
    def validate_file_path(file_path: Union[str, Path]) -> Path:
        """验证文件路径

        Args:
            file_path: 文件路径

        Returns:
            Path: 验证后的路径对象

        Raises:
            InvalidPathError: 路径无效
        """
        if not file_path:
            raise InvalidPathError("文件路径不能为空")

        path = Path(file_path)

        if not path.exists():
            raise InvalidPathError(f"文件不存在: {path}")

        if not path.is_file():
            raise InvalidPathError(f"路径不是文件: {path}")

        return path

    @staticmethod
    def validate_directory_path(dir_path: Union[str, Path], create: bool = False) -> Path:
        """验证目录路径

        Args:
            dir_path: 目录路径
            create: 目录不存在时是否创建

        Returns:
            Path: 验证后的路径对象

        Raises:
            InvalidPathError: 路径无效
        """
        if not dir_path:
            raise InvalidPathError("目录路径不能为空")

        path = Path(dir_path)

        if not path.exists():
            if not create:
                raise InvalidPathError(f"目录不存在: {path}")
            try:
                path.mkdir(parents=True, exist_ok=True)
            except OSError as e:
                raise InvalidPathError(f"创建目录失败: {path}, 错误: {e}")

        if not path.is_dir():
            raise InvalidPathError(f"路径不是目录: {path}")

        return path
