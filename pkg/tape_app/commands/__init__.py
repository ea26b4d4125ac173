from .ablate import cmd_ablate
from .build_features import cmd_build_features
from .enrich import cmd_enrich
from .make_synthetic import cmd_make_synthetic
from .prompt_sweep import cmd_prompt_sweep
from .train import cmd_train_eval

__all__ = [
    "cmd_ablate",
    "cmd_build_features",
    "cmd_enrich",
    "cmd_make_synthetic",
    "cmd_prompt_sweep",
    "cmd_train_eval",
]
