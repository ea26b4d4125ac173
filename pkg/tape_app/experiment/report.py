from pathlib import Path
from typing import List, Optional, Sequence, Union

from pydantic import ValidationError

from ..errors import DatasetFormatError
from ..io_utils import atomic_write_json, atomic_write_text, read_json
from .schemas import AblationReport, ExperimentReport, MetricSummary, PromptSweepReport, SplitMetrics

PathLike = Union[str, Path]

COLUMNS = (("orig", "h_orig"), ("expl", "h_expl"), ("pred", "h_pred"))


def _cell(metrics: Optional[SplitMetrics], part: str) -> str:
    if metrics is None:
        return "-"
    summary: MetricSummary = getattr(metrics, part)
    return summary.render()


def _table(header: Sequence[str], rows: List[Sequence[str]]) -> str:
    widths = [max(len(str(row[i])) for row in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip() for row in [header] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _method_row(label: str, report: ExperimentReport, part: str) -> List[str]:
    return [label] + [_cell(report.per_source.get(src), part) for src, _ in COLUMNS] + [_cell(report.ensemble, part)]


def render_report(report: ExperimentReport, part: str = "test") -> str:
    """Rows are methods, columns the feature sources and their ensemble"""
    header = ["method"] + [name for _, name in COLUMNS] + ["h_TAPE"]
    rows = [_method_row(report.arch.upper(), report, part)]
    for source, metrics in sorted(report.interpreter.items()):
        rows.append([f"interpreter ({source})"] + ["-"] * len(COLUMNS) + [_cell(metrics, part)])
    if report.llm_zero_shot is not None:
        rows.append(["LLM zero-shot"] + ["-"] * len(COLUMNS) + [_cell(report.llm_zero_shot, part)])
    if report.shallow is not None:
        rows.append([f"{report.arch.upper()} shallow"] + ["-"] * len(COLUMNS) + [_cell(report.shallow, part)])

    lines = [
        f"dataset: {report.dataset}  split: {part}  seeds: {report.seeds}  ensemble: {report.ensemble_mode}",
        f"config: {report.config_hash}",
        "",
        _table(header, rows),
    ]
    if report.improvements:
        lines += ["", "  ".join(f"{k}: {v:+.2%}" for k, v in sorted(report.improvements.items()))]
    if report.timings:
        lines += ["", "timings (s): " + "  ".join(f"{k}={v:.1f}" for k, v in sorted(report.timings.items()))]
    return "\n".join(lines) + "\n"


def render_ablation(ablation: AblationReport, part: str = "test") -> str:
    header = ["variant"] + [name for _, name in COLUMNS] + ["h_TAPE", "delta"]
    rows = [_method_row("full", ablation.full, part) + ["-"]]
    for row in ablation.rows:
        delta = row.deltas.get(f"ensemble_{part}")
        label = "-" + ",".join(row.left_out) if row.left_out else "full"
        rows.append(_method_row(label, row, part) + [f"{delta:+.4f}" if delta is not None else "-"])
    return f"dataset: {ablation.full.dataset}  split: {part}\n\n" + _table(header, rows) + "\n"


def render_prompt_sweep(sweep: PromptSweepReport) -> str:
    header = ["template", "accuracy", "fallback rate", "nodes"]
    rows = [[r.template_id, f"{r.accuracy:.4f}", f"{r.fallback_rate:.4f}", str(r.num_nodes)] for r in sweep.rows]
    return f"dataset: {sweep.dataset}  model: {sweep.model_name}\n\n" + _table(header, rows) + "\n"


def save_report(report: ExperimentReport, path: PathLike) -> Path:
    path = Path(path)
    atomic_write_json(path, report.model_dump(mode="json"))
    atomic_write_text(path.with_suffix(".txt"), render_report(report))
    return path


def load_report(path: PathLike) -> ExperimentReport:
    try:
        return ExperimentReport.model_validate(read_json(path))
    except (OSError, ValueError, ValidationError) as e:
        raise DatasetFormatError(f"{path}: unreadable experiment report ({e.__class__.__name__})")


def save_ablation(ablation: AblationReport, path: PathLike) -> Path:
    path = Path(path)
    atomic_write_json(path, ablation.model_dump(mode="json"))
    atomic_write_text(path.with_suffix(".txt"), render_ablation(ablation))
    return path


def load_ablation(path: PathLike) -> AblationReport:
    try:
        return AblationReport.model_validate(read_json(path))
    except (OSError, ValueError, ValidationError) as e:
        raise DatasetFormatError(f"{path}: unreadable ablation report ({e.__class__.__name__})")


def save_prompt_sweep(sweep: PromptSweepReport, path: PathLike) -> Path:
    path = Path(path)
    atomic_write_json(path, sweep.model_dump(mode="json"))
    atomic_write_text(path.with_suffix(".txt"), render_prompt_sweep(sweep))
    return path
