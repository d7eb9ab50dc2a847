"""
配置管理模块
"""
import configparser
from pathlib import Path

from .exceptions import ConfigFileNotFoundError, ConfigParseError
from .validators import Validator

# 使用__file__获取项目根目录，而不是依赖当前工作目录
PROJECT_ROOT = Path(__file__).parent.parent.parent
APP_PATH = PROJECT_ROOT / 'app'

conf_path = APP_PATH / 'conf'
core_path = APP_PATH / 'core'
outputs_path = PROJECT_ROOT / 'outputs'

config_file_path = conf_path / 'config.ini'


class Config:
    """配置管理类"""

    REQUIRED_SECTIONS = ('Default', 'Tolerance', 'Output')

    def __init__(self, path: Path = None):
        self._path = Path(path) if path is not None else config_file_path
        self._config = configparser.ConfigParser()
        self._load_config()

    def _load_config(self) -> None:
        """加载配置文件并检查必要的section"""
        if not self._path.exists():
            raise ConfigFileNotFoundError(f"配置文件不存在: {self._path}")

        try:
            self._config.read(self._path, encoding='utf-8')
        except configparser.Error as e:
            raise ConfigParseError(f"配置文件解析错误: {e}")
        except Exception as e:
            raise ConfigParseError(f"读取配置文件时发生错误: {e}")

        for section in self.REQUIRED_SECTIONS:
            if not self._config.has_section(section):
                raise ConfigParseError(f"配置文件缺少必要的section: {section}")

    def _get_float(self, section: str, option: str, allow_zero: bool = False) -> float:
        try:
            value = self._config.getfloat(section, option)
            return Validator.validate_tolerance(value, option, allow_zero=allow_zero)
        except (configparser.NoOptionError, ValueError) as e:
            raise ConfigParseError(f"无效的{option}配置: {e}")
        except Exception as e:
            raise ConfigParseError(f"{option}配置错误: {e}")

    def _get_str(self, section: str, option: str) -> str:
        try:
            value = self._config.get(section, option).strip()
        except configparser.NoOptionError as e:
            raise ConfigParseError(f"缺少{option}配置: {e}")
        if not value:
            raise ConfigParseError(f"{option}配置不能为空")
        return value

    @property
    def default_kmax(self) -> int:
        """默认最大步数，0 表示运行到底"""
        try:
            value = self._config.getint('Default', 'kmax')
        except (configparser.NoOptionError, ValueError) as e:
            raise ConfigParseError(f"无效的kmax配置: {e}")
        if value < 0:
            raise ConfigParseError(f"kmax必须非负，当前值: {value}")
        return value

    @property
    def default_conv_tol(self) -> float:
        """默认收敛容差，0 表示关闭提前退出"""
        return self._get_float('Default', 'conv_tol', allow_zero=True)

    @property
    def default_seed(self) -> int:
        try:
            return Validator.validate_seed(self._config.get('Default', 'seed'))
        except configparser.NoOptionError as e:
            raise ConfigParseError(f"缺少seed配置: {e}")
        except Exception as e:
            raise ConfigParseError(f"无效的seed配置: {e}")

    @property
    def default_emit_csv(self) -> bool:
        try:
            return self._config.getboolean('Default', 'emit_csv')
        except (configparser.NoOptionError, ValueError) as e:
            raise ConfigParseError(f"无效的emit_csv配置: {e}")

    @property
    def rank_factor(self) -> float:
        """秩判定阈值的放大系数"""
        return self._get_float('Tolerance', 'rank_factor')

    @property
    def verify_tol(self) -> float:
        return self._get_float('Tolerance', 'verify_tol')

    @property
    def spectrum_tol(self) -> float:
        return self._get_float('Tolerance', 'spectrum_tol')

    @property
    def range_tol(self) -> float:
        return self._get_float('Tolerance', 'range_tol')

    @property
    def cond_limit(self) -> float:
        return self._get_float('Tolerance', 'cond_limit')

    @property
    def orthogonality_tol(self) -> float:
        return self._get_float('Tolerance', 'orthogonality_tol')

    @property
    def trace_file(self) -> str:
        return self._get_str('Output', 'trace_file')

    @property
    def csv_file(self) -> str:
        return self._get_str('Output', 'csv_file')

    @property
    def report_file(self) -> str:
        return self._get_str('Output', 'report_file')


# 创建全局配置实例
try:
    _config_instance = Config()

    # 导出配置属性，数值模块在调用时读取，便于命令行参数和测试覆盖
    default_kmax = _config_instance.default_kmax
    default_conv_tol = _config_instance.default_conv_tol
    default_seed = _config_instance.default_seed
    default_emit_csv = _config_instance.default_emit_csv
    rank_factor = _config_instance.rank_factor
    verify_tol = _config_instance.verify_tol
    spectrum_tol = _config_instance.spectrum_tol
    range_tol = _config_instance.range_tol
    cond_limit = _config_instance.cond_limit
    orthogonality_tol = _config_instance.orthogonality_tol
    trace_file = _config_instance.trace_file
    csv_file = _config_instance.csv_file
    report_file = _config_instance.report_file

except Exception as e:
    # 如果配置加载失败，提供默认值但记录错误
    import warnings
    warnings.warn(f"配置加载失败，使用默认配置: {e}")

    default_kmax = 0
    default_conv_tol = 0.0
    default_seed = 0
    default_emit_csv = False
    rank_factor = 64.0
    verify_tol = 1e-8
    spectrum_tol = 1e-7
    range_tol = 1e-8
    cond_limit = 1e12
    orthogonality_tol = 1e-10
    trace_file = 'trace.json'
    csv_file = 'residuals.csv'
    report_file = 'report.json'
