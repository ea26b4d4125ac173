from ..config import ExperimentConfig
from ..experiment.report import save_report
from ..experiment.runner import run_tape_experiment
from ..experiment.schemas import ExperimentReport


def cmd_train_eval(config: ExperimentConfig) -> ExperimentReport:
    report = run_tape_experiment(config)
    save_report(report, config.out_dir / "report.json")
    return report
