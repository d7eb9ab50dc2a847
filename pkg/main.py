"""
块Krylov工具箱命令行入口：求解、构造预设收敛曲线的问题、验证、隐根、可容许性检查、批量验证
"""
import argparse
import sys
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from app.core.arnoldi import BlockHessenberg
from app.core.blockvec import BlockMatrix, BlockVector, pad_problem
from app.core.lambda_matrix import LambdaMatrix, latent_roots
from app.core.prescribe import (
    ConstructedInstance,
    ConvergencePrescription,
    check_admissible,
    check_consistency,
    construct,
    verify,
    verify_batch
)
from app.core.solvers import blgmres, peak_plateau_residual_check
from app.helper import config, helper
from app.helper.exceptions import (
    BlockKrylovError,
    BreakdownError,
    ConfigError,
    FileOperationError,
    InadmissiblePrescriptionError,
    InvalidParameterError,
    NumericalError,
    PrescriptionError,
    ValidationError,
    VerificationError
)
from app.helper.validators import Validator

LOG_FORMAT = ("<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
              "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>")

EXIT_OK = 0
EXIT_INTERRUPTED = 1
EXIT_PARAMETER = 2
EXIT_BREAKDOWN = 3
EXIT_PRESCRIPTION = 4
EXIT_VERIFICATION = 5
EXIT_CONFIG = 6
EXIT_NUMERICAL = 7
EXIT_UNKNOWN = 99


def create_argument_parser() -> argparse.ArgumentParser:
    """创建命令行参数解析器"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbose', action='store_true', help='输出DEBUG级别日志')
    common.add_argument('--rank-tol', type=float, default=None,
                        help=f'秩判定放大系数，乘以机器精度 (默认: {config.rank_factor})')
    common.add_argument('--verify-tol', type=float, default=None,
                        help=f'验证容差 (默认: {config.verify_tol})')

    parser = argparse.ArgumentParser(
        description='块Krylov工具箱：blGMRES/blFOM 与预设收敛曲线的逆问题',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:
  python main.py solve --input problem.json --output ./outputs --emit-csv
  python main.py prescribe --input prescription.json --output ./instance --seed 7
  python main.py verify --input prescription.json --output ./report
  python main.py batch --n 6 --s 3 --seeds 50 --workers 4 --output ./batch
        """
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    solve = subparsers.add_parser('solve', parents=[common], help='运行blGMRES/blFOM并输出残差曲线')
    solve.add_argument('--input', type=str, required=True, help='包含A和B的JSON文件')
    solve.add_argument('--output', type=str, default=str(config.outputs_path),
                       help=f'输出目录 (默认: {config.outputs_path})')
    solve.add_argument('--kmax', type=int, default=config.default_kmax,
                       help=f'最大步数，0 表示运行到底 (默认: {config.default_kmax})')
    solve.add_argument('--tol', type=float, default=config.default_conv_tol,
                       help=f'相对收敛容差，0 表示关闭提前退出 (默认: {config.default_conv_tol})')
    solve.add_argument('--emit-csv', action='store_true', default=config.default_emit_csv,
                       help='同时输出绘图用的CSV')
    solve.add_argument('--fom', action='store_true', help='同时记录blFOM并检查峰-平台关系')

    prescribe = subparsers.add_parser('prescribe', parents=[common], help='由预设构造 (A, B)')
    prescribe.add_argument('--input', type=str, required=True, help='预设JSON文件')
    prescribe.add_argument('--output', type=str, default=str(config.outputs_path), help='输出目录')
    prescribe.add_argument('--seed', type=int, default=None, help='随机种子（缺省时读取环境变量 BLKRYLOV_SEED）')

    verify_cmd = subparsers.add_parser('verify', parents=[common], help='构造并正向验证')
    verify_cmd.add_argument('--input', type=str, required=True, help='预设JSON文件')
    verify_cmd.add_argument('--instance', type=str, default=None, help='已构造实例目录（含 A.json、B.json）')
    verify_cmd.add_argument('--output', type=str, default=str(config.outputs_path), help='输出目录')
    verify_cmd.add_argument('--seed', type=int, default=None, help='随机种子')

    roots = subparsers.add_parser('roots', parents=[common], help='计算λ-矩阵的隐根')
    roots.add_argument('--input', type=str, required=True, help='λ-矩阵或预设JSON文件')
    roots.add_argument('--output', type=str, default=None, help='输出目录（可选）')

    admissible = subparsers.add_parser('admissible', parents=[common], help='检查预设的可容许性与一致性')
    admissible.add_argument('--input', type=str, required=True, help='预设JSON文件')

    batch = subparsers.add_parser('batch', parents=[common], help='随机预设的批量构造与验证')
    batch.add_argument('--n', type=int, required=True, help='块长度')
    batch.add_argument('--s', type=int, required=True, help='块大小')
    batch.add_argument('--seeds', type=int, default=10, help='种子个数')
    batch.add_argument('--seed-start', type=int, default=0, help='起始种子')
    batch.add_argument('--workers', type=int, default=1, help='线程数')
    batch.add_argument('--stagnation', type=str, default='', help='停滞步，用逗号分隔，例如 "1,3"')
    batch.add_argument('--output', type=str, default=str(config.outputs_path), help='输出目录')

    return parser


def validate_arguments(args: argparse.Namespace) -> None:
    """验证命令行参数并应用容差覆盖"""
    try:
        if args.rank_tol is not None:
            config.rank_factor = Validator.validate_tolerance(args.rank_tol, "秩判定放大系数")
        if args.verify_tol is not None:
            config.verify_tol = Validator.validate_tolerance(args.verify_tol, "验证容差")

        if args.command == 'solve':
            if args.kmax < 0:
                raise InvalidParameterError(f"最大步数必须非负，当前值: {args.kmax}")
            Validator.validate_tolerance(args.tol, "收敛容差", allow_zero=True)
        if args.command in ('solve', 'prescribe', 'verify', 'roots', 'admissible'):
            Validator.validate_file_path(args.input)
        if getattr(args, 'seed', None) is not None:
            Validator.validate_seed(args.seed)
        if args.command == 'batch':
            Validator.validate_positive_int(args.n, "块长度")
            Validator.validate_block_size(args.s)
            Validator.validate_positive_int(args.seeds, "种子个数")
            Validator.validate_seed(args.seed_start)
            Validator.validate_positive_int(args.workers, "线程数")
            parse_stagnation(args.stagnation)
        if getattr(args, 'output', None) is not None and not str(args.output).strip():
            raise InvalidParameterError("输出目录不能为空")

    except ValidationError as e:
        logger.error(f"参数验证失败: {e}")
        raise
    except Exception as e:
        logger.error(f"参数验证失败: {e}")
        raise InvalidParameterError(f"参数验证失败: {e}")


def parse_stagnation(text: str) -> Tuple[int, ...]:
    """把 "1,3" 解析为 (1, 3)"""
    if not text or not text.strip():
        return ()
    try:
        return tuple(int(item) for item in text.split(',') if item.strip())
    except ValueError:
        raise InvalidParameterError(f"停滞步格式错误: {text}，示例: 1,3")


def load_problem(path: str) -> Tuple[BlockMatrix, BlockVector, bool]:
    """
    读取问题文件：块格式 {"A": {n, s, data}, "B": {n, s, data}}，
    或稠密格式 {"A": {rows, cols, data}, "B": {rows, cols, data}}（自动补零）

    Returns:
        Tuple[BlockMatrix, BlockVector, bool]: (A, B, 是否补零)
    """
    payload = helper.load_json(path)
    if "A" not in payload or "B" not in payload:
        raise InvalidParameterError("问题文件必须包含 A 和 B")

    A_payload, B_payload = payload["A"], payload["B"]
    if "n" in A_payload and "s" in A_payload:
        A, B = BlockMatrix.from_dict(A_payload), BlockVector.from_dict(B_payload)
        return A, B, False

    A_dense = helper.decode_matrix(A_payload)
    B_dense = helper.decode_matrix(B_payload)
    A, B, n = pad_problem(A_dense, B_dense)
    return A, B, A_dense.shape[0] != n * B.s


def load_prescription(path: str) -> ConvergencePrescription:
    return ConvergencePrescription.from_dict(helper.load_json(path))


def run_solve(args: argparse.Namespace) -> int:
    """运行blGMRES（可选blFOM）"""
    A, B, padded = load_problem(args.input)
    logger.info(f"问题规模: n={A.n}, s={A.s}{'（已补零）' if padded else ''}")

    trace = blgmres(A, B, k_max=args.kmax, conv_tol=args.tol, with_fom=args.fom, complete_deficient=padded)
    output = Path(args.output)
    payload = trace.to_dict()
    payload["padded"] = padded

    if args.fom:
        report = peak_plateau_residual_check(trace)
        payload["peak_plateau"] = {
            "max_deviation": report.max_deviation,
            "plateau_steps": report.plateau_steps,
        }
        logger.info(f"峰-平台关系最大偏差: {report.max_deviation:.3e}")

    helper.save_json(payload, output / config.trace_file)
    if args.emit_csv:
        helper.write_csv(trace.to_frame(), output / config.csv_file)

    last = trace.last
    logger.success(f"blGMRES完成: {last.k} 步，‖R_k‖_F = {np.linalg.norm(last.norm):.6e}"
                   f"{'，已收敛' if trace.converged else ''}")
    return EXIT_OK


def _write_instance(inst: ConstructedInstance, output: Path) -> None:
    helper.save_json(inst.A.to_dict(), output / 'A.json')
    helper.save_json(inst.B.to_dict(), output / 'B.json')
    helper.save_json(inst.H.to_block_matrix().to_dict(), output / 'H.json')
    helper.save_json({"A": inst.A.to_dict(), "B": inst.B.to_dict()}, output / 'problem.json')
    helper.save_json(inst.manifest(), output / 'manifest.json')


def run_prescribe(args: argparse.Namespace) -> int:
    """由预设构造 (A, B) 并写出文件"""
    p = load_prescription(args.input)
    logger.info(f"读取预设: n={p.n}, s={p.s}")
    inst = construct(p, seed=args.seed)
    _write_instance(inst, Path(args.output))
    logger.success(f"构造完成: seed={inst.seed}, cond(U)={inst.cond_U:.3e}, cond(D)={inst.cond_D:.3e}")
    return EXIT_OK


def _load_instance(directory: str) -> ConstructedInstance:
    """读取 prescribe 写出的实例目录；验证只用到 A、B"""
    folder = Validator.validate_directory_path(directory)
    A = BlockMatrix.from_dict(helper.load_json(folder / 'A.json'))
    B = BlockVector.from_dict(helper.load_json(folder / 'B.json'))
    H = helper.load_json(folder / 'H.json')
    manifest = helper.load_json(folder / 'manifest.json')
    identity = BlockMatrix.identity(A.n, A.s)

    return ConstructedInstance(
        A=A, B=B, U=identity, D=identity, C=identity, V=identity,
        H=BlockHessenberg.from_array(BlockMatrix.from_dict(H).data, A.s),
        seed=int(manifest.get("seed", 0)),
        cond_U=float(manifest.get("cond_U", np.nan)), cond_D=float(manifest.get("cond_D", np.nan))
    )


def run_verify(args: argparse.Namespace) -> int:
    """构造（或读取实例）并正向验证"""
    p = load_prescription(args.input)
    if args.instance:
        inst = _load_instance(args.instance)
    else:
        inst = construct(p, seed=args.seed)

    report = verify(inst, p)
    output = Path(args.output)
    helper.save_json(report.to_dict(), output / config.report_file)
    text_path = output / (Path(config.report_file).stem + '.txt')
    try:
        text_path.parent.mkdir(parents=True, exist_ok=True)
        text_path.write_text(report.to_text(), encoding='utf-8')
    except OSError as e:
        raise FileOperationError(f"写入报告失败: {text_path}, 错误: {e}")

    if not report.passed:
        raise VerificationError(report.to_text().strip())

    logger.success("验证通过")
    return EXIT_OK


def run_roots(args: argparse.Namespace) -> int:
    """输出λ-矩阵（或预设中 M^(n)）的隐根"""
    payload = helper.load_json(args.input)
    if "coeffs" in payload:
        M = LambdaMatrix.from_dict(payload)
    else:
        M = ConvergencePrescription.from_dict(payload).ritz[-1]

    roots = latent_roots(M)
    order = np.lexsort((roots.imag, roots.real))
    roots = roots[order]
    for value in roots:
        logger.info(f"隐根: {value.real:+.12e} {value.imag:+.12e}i")

    if args.output:
        helper.save_json({"roots": [[float(z.real), float(z.imag)] for z in roots]},
                         Path(args.output) / 'roots.json')
    logger.success(f"共 {roots.size} 个隐根")
    return EXIT_OK


def run_admissible(args: argparse.Namespace) -> int:
    """检查可容许性与值域一致性"""
    p = load_prescription(args.input)
    result = check_admissible(p.F)
    if not result:
        raise InadmissiblePrescriptionError(result.reason, k=result.k)
    result = check_consistency(p.F, p.ritz)
    if not result:
        raise PrescriptionError(result.reason, k=result.k)
    logger.success("预设可容许且满足值域一致性")
    return EXIT_OK


def run_batch(args: argparse.Namespace) -> int:
    """随机预设的批量验证"""
    seeds = range(args.seed_start, args.seed_start + args.seeds)
    frame = verify_batch(args.n, args.s, seeds, workers=args.workers,
                         stagnation=parse_stagnation(args.stagnation))
    helper.write_csv(frame, Path(args.output) / 'batch.csv')

    failed = int((~frame["passed"].astype(bool)).sum()) if not frame.empty else 0
    if failed:
        raise VerificationError(f"{failed} 个种子验证未通过")
    logger.success(f"全部 {len(frame)} 个种子验证通过")
    return EXIT_OK


COMMANDS = {
    'solve': run_solve,
    'prescribe': run_prescribe,
    'verify': run_verify,
    'roots': run_roots,
    'admissible': run_admissible,
    'batch': run_batch,
}


def main(argv: Optional[list] = None) -> int:
    """主函数；--rank-tol、--verify-tol 的覆盖只在本次调用内有效"""
    saved_tolerances = (config.rank_factor, config.verify_tol)
    try:
        parser = create_argument_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_OK if e.code in (0, None) else EXIT_PARAMETER

        logger.remove()
        logger.add(sys.stderr, format=LOG_FORMAT, level="DEBUG" if args.verbose else "INFO")
        logger.info(f"块Krylov工具箱启动: {args.command}")

        validate_arguments(args)
        return COMMANDS[args.command](args)

    except KeyboardInterrupt:
        logger.warning("用户中断程序执行")
        return EXIT_INTERRUPTED
    except ConfigError as e:
        logger.error(f"配置错误: {e}")
        logger.error("请检查 app/conf/config.ini")
        return EXIT_CONFIG
    except (ValidationError, FileOperationError) as e:
        logger.error(f"参数或输入文件错误: {e}")
        logger.error("请使用 --help 查看正确的参数格式")
        return EXIT_PARAMETER
    except BreakdownError as e:
        logger.error(f"块Arnoldi breakdown (第{e.step}步): {e}")
        return EXIT_BREAKDOWN
    except PrescriptionError as e:
        location = f"（k={e.k}）" if e.k is not None else ""
        logger.error(f"预设无法构造{location}: {e}")
        return EXIT_PRESCRIPTION
    except VerificationError as e:
        logger.error(f"验证未通过: {e}")
        return EXIT_VERIFICATION
    except NumericalError as e:
        logger.error(f"数值计算错误: {e}")
        return EXIT_NUMERICAL
    except BlockKrylovError as e:
        logger.error(f"运行失败: {e}")
        return EXIT_UNKNOWN
    except Exception as e:
        logger.error(f"未知错误: {e}")
        logger.error("请联系开发者或查看详细日志")
        return EXIT_UNKNOWN
    finally:
        config.rank_factor, config.verify_tol = saved_tolerances


if __name__ == '__main__':
    exit_code = main()
    sys.exit(exit_code)
