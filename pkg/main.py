#!/usr/bin/env python3
"""
Edge GNN 命令行入口
生成数据 → 训练 → 导出 → 校验 → 推理 → 评估 → 基准测试

退出码: 0 成功，2 用法错误，3 数据错误，4 模型/格式错误，5 执行错误
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from config_manager import DEFAULT_CONFIG_FILE, EdgeGnnSettings, get_config_manager
from errors import EdgeGnnError, ExecutionError
from graph_ir import ExecutionMode, create_registry, inspect_model, load_model, save_model
from models import ArchKind, ArchSpec, load_checkpoint, metadata_int, save_checkpoint
from pipeline import (
    ForecastDataset,
    compare_reports,
    comparison_table,
    evaluate,
    generate_synthetic,
    ingest_csv,
    prediction_rows,
    window,
    write_csv,
)
from services import ExportService, format_table, get_log_manager, get_logger, load_report
from services.bench_service import BenchService
from services.inference_service import InferenceService
from training import evaluate_loss, fit

logger = get_logger(__name__)


# ==================== 参数解析 ====================

def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"需要整数，实际 {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"必须 ≥ 1，实际 {value}")
    return value


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="配置文件（默认 config.json）")
    common.add_argument("--json", action="store_true", help="在 stdout 输出机器可读 JSON")
    common.add_argument("--log-level", dest="log_level", default=None)
    common.add_argument("--log-dir", dest="log_dir", default=None)
    common.add_argument("--no-log-file", action="store_true", help="只输出到控制台")
    return common


def _add_data_args(parser: argparse.ArgumentParser):
    parser.add_argument("--data", required=True, help="功率 CSV 文件")
    parser.add_argument("--meta", default=None, help="容量元数据 JSON（默认 <csv>.meta.json）")
    parser.add_argument("--gap-policy", dest="gap_policy", choices=["reject", "ffill"], default=None)


def _add_run_args(parser: argparse.ArgumentParser):
    parser.add_argument("--model", required=True, help=".egir 模型文件")
    parser.add_argument("--mode", choices=[m.value for m in ExecutionMode], default=ExecutionMode.BATCHED.value)
    parser.add_argument("--threads", type=int, default=None, help="并发推理线程数")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="edge-gnn", description="边缘设备光伏功率 GNN 预测运行时")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="生成合成光伏数据 CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--meta", default=None)
    p.add_argument("--n-stations", dest="n_stations", type=int, default=None)
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--capacities", dest="capacities_kw", type=float, nargs="+", default=None)
    p.add_argument("--seed", type=int, default=None)
    weather = p.add_mutually_exclusive_group()
    weather.add_argument("--shared-weather", dest="shared_weather", action="store_true", default=True)
    weather.add_argument("--independent-weather", dest="shared_weather", action="store_false")
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", parents=[common], help="离线训练并写出检查点")
    _add_data_args(p)
    p.add_argument("--arch", choices=[a.value for a in ArchKind], required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--h", type=int, default=None)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", dest="learning_rate", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--optimizer", choices=["sgd", "adam"], default=None)
    p.add_argument("--out", required=True, help="检查点 .npz")
    p.add_argument("--report", default=None, help="逐轮训练报告 .jsonl")
    p.add_argument("--export", default=None, help="同时导出 .egir 模型")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("export", parents=[common], help="把检查点导出为 .egir 模型")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_export)

    p = sub.add_parser("infer", parents=[common], help="对测试集逐样本预测并导出 CSV")
    _add_data_args(p)
    _add_run_args(p)
    p.add_argument("--limit", type=_positive_int, default=None, help="只导出前 N 个样本")
    p.add_argument("--all-samples", action="store_true", help="使用全部样本而非测试集")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_infer)

    p = sub.add_parser("eval", parents=[common], help="在测试集上评估")
    _add_data_args(p)
    _add_run_args(p)
    p.add_argument("--out", default=None, help="报告文件（.json 或 .txt）")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("verify-equivalence", parents=[common], help="比较 Batched 与 Serialized 输出")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--limit", type=_positive_int, default=256, help="参与比较的测试样本数")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(handler=cmd_verify_equivalence)

    p = sub.add_parser("bench", parents=[common], help="推理基准测试")
    _add_data_args(p)
    _add_run_args(p)
    p.add_argument("--repetitions", type=_positive_int, default=5, help="计时重复次数，取中位数")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("inspect", parents=[common], help="查看模型文件")
    p.add_argument("--model", required=True)
    p.set_defaults(handler=cmd_inspect)

    p = sub.add_parser("compare", parents=[common], help="对比两份评估报告")
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(handler=cmd_compare)
    return parser


_OVERRIDE_KEYS = (
    "k", "h", "hidden_dim", "n_stations", "days", "capacities_kw", "seed", "learning_rate",
    "epochs", "batch_size", "optimizer", "gap_policy", "threads", "log_level", "log_dir",
)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, key) for key in _OVERRIDE_KEYS if getattr(args, key, None) is not None}


# ==================== 输出 ====================

def _emit(args: argparse.Namespace, payload: Dict[str, Any], text: str):
    if args.json:
        print(json.dumps(payload, ensure_ascii=False, indent=2, default=str))
    else:
        print(text)


def _export_report(settings: EdgeGnnSettings, kind: str, payload: Dict[str, Any], table: str,
                   out: Optional[str]) -> Optional[str]:
    if out is None:
        return None
    format = "txt" if Path(out).suffix == ".txt" else "json"
    return ExportService(settings.export_path).export_report(kind, payload, format, table, out)


# ==================== 数据 ====================

def _load_dataset(args: argparse.Namespace, settings: EdgeGnnSettings, k: int, h: int) -> ForecastDataset:
    series = ingest_csv(args.data, args.meta, settings.gap_policy, settings.power_tolerance)
    return window(series, k, h)


def _test_split(dataset: ForecastDataset, settings: EdgeGnnSettings) -> ForecastDataset:
    _, _, test = dataset.split_chronological(settings.train_fraction, settings.val_fraction)
    return test


def _model_window(model) -> tuple:
    return metadata_int(model.metadata, "k"), metadata_int(model.metadata, "h")


# ==================== 子命令 ====================

def cmd_gen_data(args: argparse.Namespace, settings: EdgeGnnSettings) -> int:
    capacities = settings.capacities_kw
    if len(capacities) != settings.n_stations:
        capacities = None
    series = generate_synthetic(settings.n_stations, settings.days, capacities, settings.seed,
                                shared_weather=args.shared_weather)
    meta_path = write_csv(series, args.out, args.meta)
    payload = {
        "csv": str(args.out),
        "metadata": str(meta_path),
        "stations": [{"station_id": s.station_id, "capacity_kw": s.capacity_kw} for s in series],
        "rows": len(series[0]),
    }
    _emit(args, payload, f"✅ 已生成 {len(series)} 个站点、{len(series[0])} 行数据: {args.out}（元数据 {meta_path}）")
    return 0


def cmd_train(args: argparse.Namespace, settings: EdgeGnnSettings) -> int:
    dataset = _load_dataset(args, settings, settings.k, settings.h)
    spec = ArchSpec.create(args.arch, n_stations=dataset.n_stations, k=settings.k, h=settings.h,
                           hidden_dim=settings.hidden_dim)
    config = settings.train_config()
    model = fit(dataset, spec, config, report_path=args.report)
    checkpoint = save_checkpoint(model, args.out)

    payload: Dict[str, Any] = {"checkpoint": str(checkpoint), "arch": spec.kind.value,
                               "provenance": dict(model.provenance)}
    test = _test_split(dataset, settings)
    if len(test):
        payload["test_loss"], payload["test_samples"] = evaluate_loss(model, test)
    if args.export:
        payload["model"] = str(save_model(model.to_graph(), args.export))

    lines = [f"✅ 训练完成: {checkpoint}"]
    lines += [f"  {key}: {value}" for key, value in model.provenance.items()]
    if "model" in payload:
        lines.append(f"  模型已导出: {payload['model']}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_export(args: argparse.Namespace, settings: EdgeGnnSettings) -> int:
    model = load_checkpoint(args.checkpoint)
    graph = model.to_graph()
    path = save_model(graph, args.out)
    info = inspect_model(graph, create_registry())
    payload = {"model": str(path), "node_count": info["node_count"], "op_types": info["op_types"],
               "parameter_count": info["parameter_count"]}
    _emit(args, payload, f"✅ 模型已导出: {path}（{info['node_count']} 个节点，算子 {', '.join(info['op_types'])}）")
    return 0


def cmd_infer(args: argparse.Namespace, settings: EdgeGnnSettings) -> int:
    registry = create_registry()
    model = load_model(args.model, registry)
    dataset = _load_dataset(args, settings, *_model_window(model))
    if not args.all_samples:
        dataset = _test_split(dataset, settings)
    if args.limit is not None:
        dataset = dataset.head(args.limit)

    service = InferenceService(model, registry)
    y_hat = service.predict(dataset.x, args.mode, settings.threads)
    rows = prediction_rows(dataset, y_hat)
    path = ExportService(settings.export_path).export_predictions(rows, args.out)
    payload = {"predictions": path, "samples": len(dataset), "rows": len(rows)}
    _emit(args, payload, f"✅ 已写出 {len(dataset)} 个样本的预测: {path}")
    return 0


def cmd_eval(args: argparse.Namespace, settings: EdgeGnnSettings) -> int:
    registry = create_registry()
    model = load_model(args.model, registry)
    test = _test_split(_load_dataset(args, settings, *_model_window(model)), settings)
    report, _ = evaluate(model, test, args.mode, settings.threads, registry,
                         settings.memory_sample_interval_ms)
    payload = report.model_dump(mode="json")
    table = report.to_table()
    _export_report(settings, "eval", payload, table, args.out)
    _emit(args, payload, table)
    return 0


def cmd_verify_equivalence(args: argparse.Namespace, settings: EdgeGnnSettings) -> int:
    registry = create_registry()
    model = load_model(args.model, registry)
    test = _test_split(_load_dataset(args, settings, *_model_window(model)), settings).head(args.limit)
    divergence = InferenceService(model, registry).compare_modes(test.x)
    worst = max(divergence.values())
    payload = {"samples": len(test), "max_abs_divergence": divergence, "tolerance": args.tolerance,
               "equivalent": worst < args.tolerance}
    table = format_table(["output", "max |batched - serialized|"],
                         [(name, f"{value:.3e}") for name, value in divergence.items()])
    _emit(args, payload, table)
    if worst >= args.tolerance:
        raise ExecutionError(f"Batched 与 Serialized 输出差异 {worst:.3e} 超过容差 {args.tolerance}")
    return 0


def cmd_bench(args: argparse.Namespace, settings: EdgeGnnSettings) -> int:
    registry = create_registry()
    model = load_model(args.model, registry)
    test = _test_split(_load_dataset(args, settings, *_model_window(model)), settings)
    bench = BenchService(model, registry, settings.memory_sample_interval_ms)
    report = bench.run(test.x, args.mode, args.repetitions, settings.threads, settings.latency_samples)
    payload = report.model_dump(mode="json")
    table = report.to_table()
    _export_report(settings, "bench", payload, table, args.out)
    _emit(args, payload, table)
    return 0


def cmd_inspect(args: argparse.Namespace, settings: EdgeGnnSettings) -> int:
    registry = create_registry()
    info = inspect_model(load_model(args.model, registry), registry)
    rows = [(key, info[key]) for key in ("version", "node_count", "op_types", "initializer_count",
                                         "parameter_count", "missing_ops")]
    rows += [(f"metadata.{key}", value) for key, value in info["metadata"].items()]
    _emit(args, info, format_table(["field", "value"], rows))
    return 0


def cmd_compare(args: argparse.Namespace, settings: EdgeGnnSettings) -> int:
    labels = (Path(args.left).stem, Path(args.right).stem)
    comparison = compare_reports(load_report(args.left), load_report(args.right), labels)
    _emit(args, comparison, comparison_table(comparison))
    return 0


# ==================== 入口 ====================

def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        manager = get_config_manager(args.config or DEFAULT_CONFIG_FILE)
        settings = manager.update(_overrides(args))
        get_log_manager(log_dir=settings.log_dir, log_level=settings.log_level,
                        log_to_file=not args.no_log_file)
        logger.debug("生效配置", command=args.command, config_file=manager.config_file, **manager.get_all())
        return args.handler(args, settings)
    except EdgeGnnError as e:
        logger.error("命令执行失败", command=args.command, error_type=type(e).__name__, error=str(e))
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
