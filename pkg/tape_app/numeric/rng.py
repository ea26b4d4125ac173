import numpy as np


def keyed_generator(*key: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by a tuple of non-negative ints.

    The same key always yields the same stream no matter which streams were
    drawn before it, so evaluation order never changes dropout masks.
    """
    if any(int(k) < 0 for k in key):
        raise ValueError(f"RNG key components must be non-negative: {key}")
    seq = np.random.SeedSequence([int(k) for k in key])
    return np.random.Generator(np.random.Philox(seq))


# Fixed per-stage offsets added to the experiment seed
SEED_OFFSETS = {
    "split": 0,
    "mock": 101,
    "projection_orig": 211,
    "projection_expl": 223,
    "projection_shallow": 227,
    "interpreter_orig": 307,
    "interpreter_expl": 311,
    "pred": 401,
    "gnn_orig": 503,
    "gnn_expl": 509,
    "gnn_pred": 521,
    "gnn_shallow": 523,
    "prompt_sweep": 601,
}


def stage_seed(seed: int, stage: str) -> int:
    return int(seed) + SEED_OFFSETS[stage]
