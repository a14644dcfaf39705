import os
from pathlib import Path
from typing import Optional, Union

import numpy as np

# sub-stream purposes, mixed into numpy.random.SeedSequence entropy
PURPOSE_INSTANCE = 1
PURPOSE_PARTITION = 2
PURPOSE_SAMPLING = 3


def atomic_write_text(path: Path, text: str) -> None:
    """Writes to a sibling temporary file, then renames it over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp_path.write_text(text, encoding="utf-8")

    # Atomically write to the output path, so that readers never see partial files
    tmp_path.replace(path)


def derive_seed(trial_seed: int, purpose: int, *key: int) -> np.random.SeedSequence:
    """Independent child stream of a trial, e.g. ``derive_seed(seed, PURPOSE_PARTITION,
    tau_a, tau_b)``."""
    return np.random.SeedSequence([trial_seed, purpose, *key])


def method_label(name: str, tau_a: Optional[int], tau_b: Optional[int]) -> str:
    """``ARBK(50, 50)`` for block methods, the bare name otherwise."""
    if tau_a is None or tau_b is None:
        return name
    return f"{name}({tau_a}, {tau_b})"


def env_flag(name: str, default: str = "0") -> bool:
    return os.getenv(name, default).lower() in ("true", "1")


def default_output_dir() -> Path:
    return Path(os.getenv("KMEQ_OUT") or "kmeq-out")


def format_float(value: Union[float, int]) -> str:
    """Shortest round-trip representation, so rewritten files compare bytewise."""
    return repr(float(value))
