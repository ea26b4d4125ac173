from ..config import ExperimentConfig
from ..experiment.report import save_ablation
from ..experiment.runner import leave_one_out_sweep
from ..experiment.schemas import AblationReport


def cmd_ablate(config: ExperimentConfig) -> AblationReport:
    """Full run plus one leave-one-out row per source"""
    ablation = leave_one_out_sweep(config)
    save_ablation(ablation, config.out_dir / "ablation.json")
    return ablation
