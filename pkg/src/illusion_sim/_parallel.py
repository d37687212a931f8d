import os

ENV_THREADS = "ILLUSION_SIM_THREADS"


def worker_count() -> int:
    """Worker cap from ``ILLUSION_SIM_THREADS``; unset or 0 means all CPUs."""
    raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"{ENV_THREADS} must be >= 0")
    return value if value > 0 else (os.cpu_count() or 1)
