"""
pytest配置和通用测试fixtures
"""
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Generator

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from loguru import logger

# 添加项目根目录到sys.path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.helper import helper  # noqa: E402
from app.core.blockvec import BlockMatrix, BlockVector  # noqa: E402

settings.register_profile("dev", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("dev")


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """创建临时目录"""
    temp_path = Path(tempfile.mkdtemp())
    try:
        yield temp_path
    finally:
        shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def rng() -> np.random.Generator:
    """固定种子的随机数生成器"""
    return np.random.default_rng(20240611)


@pytest.fixture
def caplog_loguru():
    """把loguru消息收集到列表中"""
    messages = []
    handler_id = logger.add(lambda message: messages.append(message.record), level="DEBUG")
    try:
        yield messages
    finally:
        logger.remove(handler_id)


@pytest.fixture
def random_problem(rng):
    """随机的 n=4, s=2 问题 (A, B)"""
    n, s = 4, 2
    A = helper.random_complex((n * s, n * s), rng)
    B = helper.random_complex((n * s, s), rng)
    return BlockMatrix(A, s), BlockVector(B, s)


@pytest.fixture
def config_dir(temp_dir: Path) -> Path:
    """创建配置目录和配置文件"""
    conf_dir = temp_dir / "conf"
    conf_dir.mkdir()

    config_content = """[Default]
kmax = 3
conv_tol = 1e-6
seed = 11
emit_csv = true

[Tolerance]
rank_factor = 32
verify_tol = 1e-9
spectrum_tol = 1e-6
range_tol = 1e-8
cond_limit = 1e10
orthogonality_tol = 1e-9

[Output]
trace_file = curve.json
csv_file = curve.csv
report_file = check.json
"""
    (conf_dir / "config.ini").write_text(config_content, encoding="utf-8")
    return conf_dir


@pytest.fixture
def scalar_prescription_payload():
    """s=1, n=3 的预设：残差 1 > 0.5 > 0.25，特征值 1, 2, 3"""
    def scalar(value):
        return {"rows": 1, "cols": 1, "data": [[float(value), 0.0]]}

    return {
        "n": 3,
        "s": 1,
        "F": [scalar(1.0), scalar(0.5), scalar(0.25)],
        "ritz": {
            "solvent_chain": [scalar(1.0), scalar(2.0), scalar(3.0)],
            "ritz_mode": "explicit",
            "intermediate": [
                {"solvent_chain": [scalar(1.5)]},
                {"solvent_chain": [scalar(1.0), scalar(2.5)]},
            ],
        },
        "seed": 5,
    }


@pytest.fixture
def prescription_file(temp_dir: Path, scalar_prescription_payload) -> Path:
    """写入磁盘的预设文件"""
    return helper.save_json(scalar_prescription_payload, temp_dir / "prescription.json")


@pytest.fixture
def problem_file(temp_dir: Path, random_problem) -> Path:
    """写入磁盘的块格式问题文件"""
    A, B = random_problem
    return helper.save_json({"A": A.to_dict(), "B": B.to_dict()}, temp_dir / "problem.json")
