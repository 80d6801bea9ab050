from __future__ import annotations

import multiprocessing


def get_cpu_count() -> int:
    # `multiprocessing` info: https://docs.python.org/3/library/multiprocessing.html
    return multiprocessing.cpu_count()


def resolve_threads(threads: int | None) -> int:
    '''
    Number of environment workers to use

    ``None`` or ``0`` means one worker per CPU; ``1`` is the serial reference mode.
    '''
    if not threads:
        return get_cpu_count()
    if threads < 0:
        raise ValueError(f"threads must be positive, got {threads}")
    return threads
