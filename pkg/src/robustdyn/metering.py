from collections import Counter


class Meter:
    """Named operation counters. Work is reported in abstract units, never wall-clock."""

    def __init__(self):
        self.counts = Counter()

    def add(self, name, k=1):
        self.counts[name] += k

    def __getitem__(self, name):
        return self.counts.get(name, 0)

    def total(self, *names):
        if not names:
            return sum(self.counts.values())
        return sum(self.counts.get(n, 0) for n in names)

    def snapshot(self):
        return dict(self.counts)

    def reset(self):
        self.counts.clear()
