from .records import EpisodeRecord, EPISODE_COLUMNS, tracking_ratios  # noqa
from .metrics import MetricsTable, METRICS_COLUMNS, metrics_row, compare_golden, curve_shape, schedule_curves  # noqa
