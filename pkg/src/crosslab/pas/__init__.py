from .anneal import AnnealSchedule, anneal_probability, parse_schedule, schedule_curve  # noqa
from .selection import probability_select, selection_draw  # noqa
