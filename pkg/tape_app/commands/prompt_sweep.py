from ..config import ExperimentConfig
from ..experiment.prompt_sweep import prompt_sweep
from ..experiment.report import save_prompt_sweep
from ..experiment.schemas import PromptSweepReport


def cmd_prompt_sweep(config: ExperimentConfig) -> PromptSweepReport:
    sweep = prompt_sweep(config)
    save_prompt_sweep(sweep, config.out_dir / "prompt_sweep.json")
    return sweep
