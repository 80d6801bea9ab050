from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from crosslab.exceptions import InvalidInputError

KINDS = ('exp', 'cosine', 'linear', 'none')
_ALIASES = {'exp': 'exp', 'exponential': 'exp', 'cos': 'cosine', 'cosine': 'cosine',
            'linear': 'linear', 'none': 'none', 'noanneal': 'none'}


@dataclass(frozen=True)
class AnnealSchedule:
    '''
    Probability of feeding the true latent at a training iteration

    ``exp``: ``alpha ** iteration``.  ``cosine``: ``(1 + cos(pi * i / total)) / 2``.
    ``linear``: ``1 - i / total``.  ``none``: always 0.  Values are clamped
    to [0, 1], so cosine and linear stay at 0 past ``total``.
    '''
    kind: str
    alpha: float = 0.9998
    total: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}")
        if self.kind == 'exp' and not 0.0 < self.alpha <= 1.0:
            raise InvalidInputError(f"exponential base must be in (0, 1], got {self.alpha}")
        if self.kind in ('cosine', 'linear') and self.total < 1:
            raise InvalidInputError(f"schedule length must be at least 1, got {self.total}")

    @property
    def label(self) -> str:
        return f"exp:{self.alpha!r}" if self.kind == 'exp' else self.kind


def parse_schedule(text: str, iterations: int = 1) -> AnnealSchedule:
    '''
    Parse ``exp:<alpha>``, ``cosine``, ``linear`` or ``none``

    Cosine and linear schedules span ``iterations``.

    :raises: InvalidInputError (a ValueError) for anything else.
    '''
    name, _, arg = str(text).strip().lower().partition(':')
    kind = _ALIASES.get(name)
    if kind is None:
        raise InvalidInputError(f"unknown schedule {text!r}; expected exp:<alpha>, cosine, linear or none")
    if kind == 'exp':
        try:
            alpha = float(arg) if arg else 0.9998
        except ValueError as exc:
            raise InvalidInputError(f"bad exponential base in schedule {text!r}") from exc
        return AnnealSchedule('exp', alpha=alpha, total=max(int(iterations), 1))
    if arg:
        raise InvalidInputError(f"schedule {kind!r} takes no argument, got {text!r}")
    return AnnealSchedule(kind, total=max(int(iterations), 1))


def anneal_probability(schedule: AnnealSchedule, iteration: int) -> float:
    if iteration < 0:
        raise InvalidInputError(f"iteration must be non-negative, got {iteration}")
    if schedule.kind == 'exp':
        value = schedule.alpha ** iteration
    elif schedule.kind == 'cosine':
        value = 0.5 * (1.0 + math.cos(math.pi * min(iteration, schedule.total) / schedule.total))
    elif schedule.kind == 'linear':
        value = 1.0 - iteration / schedule.total
    else:
        value = 0.0
    return min(max(value, 0.0), 1.0)


def schedule_curve(schedule: AnnealSchedule, iterations: int) -> np.ndarray:
    return np.array([anneal_probability(schedule, i) for i in range(iterations)])
