"""
辅助函数模块：复数矩阵的JSON编码、文件读写、随机种子与随机酉矩阵
"""
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from . import config
from .exceptions import (
    FileOperationError,
    InvalidParameterError,
    SerializationError
)
from .validators import Validator

SEED_ENV_VAR = "BLKRYLOV_SEED"


def encode_matrix(matrix: np.ndarray) -> Dict[str, Any]:
    """
    将复数矩阵编码为JSON友好的字典

    Args:
        matrix: 二维数组

    Returns:
        Dict: {"rows", "cols", "data": [[re, im], ...]}，按行优先排列

    Examples:
        >>> encode_matrix(np.eye(1))
        {'rows': 1, 'cols': 1, 'data': [[1.0, 0.0]]}
    """
    array = np.atleast_2d(np.asarray(matrix, dtype=complex))
    if array.ndim != 2:
        raise SerializationError(f"只能编码二维矩阵，当前维数: {array.ndim}")

    flat = array.reshape(-1)
    return {
        "rows": int(array.shape[0]),
        "cols": int(array.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def decode_matrix(payload: Dict[str, Any]) -> np.ndarray:
    """
    从字典解码复数矩阵

    Raises:
        SerializationError: 字段缺失或数据长度不匹配
    """
    try:
        rows = int(payload["rows"])
        cols = int(payload["cols"])
        data = payload["data"]
    except (KeyError, TypeError, ValueError) as e:
        raise SerializationError(f"矩阵格式错误，需要rows/cols/data字段: {e}")

    if rows < 0 or cols < 0 or len(data) != rows * cols:
        raise SerializationError(f"矩阵数据长度不匹配: rows={rows}, cols={cols}, len(data)={len(data)}")

    try:
        values = np.array([complex(float(re), float(im)) for re, im in data], dtype=complex)
    except (TypeError, ValueError) as e:
        raise SerializationError(f"矩阵元素必须是[re, im]数对: {e}")

    return values.reshape(rows, cols)


def load_json(file_path: Union[str, Path]) -> Dict[str, Any]:
    """
    读取JSON文件

    Raises:
        InvalidPathError: 文件不存在
        SerializationError: JSON解析失败
        FileOperationError: 读取失败
    """
    path = Validator.validate_file_path(file_path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SerializationError(f"JSON解析失败: {path}, 错误: {e}")
    except OSError as e:
        raise FileOperationError(f"读取文件失败: {path}, 错误: {e}")


def save_json(payload: Dict[str, Any], file_path: Union[str, Path]) -> Path:
    """
    写入JSON文件（sort_keys，固定缩进，输出字节确定）

    Raises:
        FileOperationError: 写入失败
    """
    path = Path(file_path)
    try:
        Validator.validate_directory_path(path.parent, create=True)
        text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
            f.write("\n")
    except FileOperationError:
        raise
    except (TypeError, ValueError) as e:
        raise SerializationError(f"对象无法序列化为JSON: {e}")
    except Exception as e:
        logger.error(f"写入JSON文件失败: {path}")
        raise FileOperationError(f"写入文件失败: {path}, 错误: {e}")

    logger.debug(f"已写入 {path}")
    return path


def write_csv(frame: pd.DataFrame, file_path: Union[str, Path]) -> Path:
    """将残差曲线数据写为CSV"""
    path = Path(file_path)
    try:
        Validator.validate_directory_path(path.parent, create=True)
        frame.to_csv(path, index=False, float_format="%.17g")
    except FileOperationError:
        raise
    except Exception as e:
        raise FileOperationError(f"写入CSV失败: {path}, 错误: {e}")

    logger.debug(f"已写入 {path}")
    return path


def resolve_seed(seed: Optional[int] = None) -> int:
    """
    确定随机种子：显式参数优先，其次环境变量 BLKRYLOV_SEED，最后是配置文件默认值

    Raises:
        InvalidParameterError: 种子无效
    """
    if seed is not None:
        return Validator.validate_seed(seed)

    env_value = os.environ.get(SEED_ENV_VAR)
    if env_value is not None and env_value.strip():
        try:
            return Validator.validate_seed(env_value)
        except InvalidParameterError as e:
            raise InvalidParameterError(f"环境变量{SEED_ENV_VAR}无效: {e}")

    return int(config.default_seed)


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.default_rng(resolve_seed(seed))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """
    生成随机酉矩阵：复高斯矩阵的QR分解，R对角线相位归一化

    Args:
        dim: 矩阵阶数
        rng: numpy随机数生成器

    Returns:
        np.ndarray: dim×dim 酉矩阵
    """
    dim = Validator.validate_positive_int(dim, "矩阵阶数")
    gauss = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(gauss)
    diag = np.diag(r)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phases[np.newaxis, :]


def random_complex(shape, rng: np.random.Generator) -> np.ndarray:
    """复高斯随机矩阵"""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
