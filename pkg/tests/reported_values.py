"""Reported lower bound, method, upper bound and closed-gap rows for two benchmarks.

``None`` in a gap row marks a task where the lower bound exceeds the upper bound.
"""

DAILY_TASKS = ("K-A", "K-H", "K-M", "M-A", "M-H", "M-K", "H-A", "H-M", "H-K", "A-H", "A-M", "A-K")
DAILY = {
    "lb": (26.5, 40.0, 33.5, 35.1, 54.1, 63.6, 22.8, 26.3, 46.2, 15.4, 16.8, 20.7),
    "method": (28.2, 55.8, 47.3, 29.0, 62.5, 78.6, 28.1, 48.0, 77.1, 55.0, 46.0, 77.8),
    "ub": (25.8, 66.3, 57.3, 25.8, 66.3, 88.4, 25.8, 57.3, 88.4, 66.3, 57.3, 88.4),
    "cg": (None, 60.1, 58.0, None, 68.9, 60.5, 100.0, 70.0, 73.2, 77.8, 72.1, 84.3),
}

SPORTS_TASKS = ("K-U", "K-S", "S-U", "S-K", "U-K", "U-S")
SPORTS = {
    "lb": (83.3, 74.3, 83.0, 70.4, 46.7, 44.3),
    "method": (91.2, 80.6, 92.8, 84.6, 84.5, 79.9),
    "ub": (92.0, 91.5, 92.0, 88.0, 88.0, 91.5),
    "cg": (90.8, 36.6, 100.0, 80.7, 91.5, 75.4),
}


def cells():
    """Yield (task, lb, method, ub, reported_cg) for every reported cell."""
    for tasks, table in ((DAILY_TASKS, DAILY), (SPORTS_TASKS, SPORTS)):
        yield from zip(tasks, table["lb"], table["method"], table["ub"], table["cg"])
