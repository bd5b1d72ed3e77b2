"""
Step-wise learning rate schedule.
"""
import logging
from dataclasses import dataclass

logger = logging.getLogger(__name__)

# Base rate 3e-4, dropping to 3e-5 after 200 and 3e-6 after 400 of 800 epochs.
_REFERENCE_EPOCHS = 800
_REFERENCE_MILESTONES = ((200, 3e-5), (400, 3e-6))


@dataclass(frozen=True)
class LrSchedule:
    base_rate: float = 3e-4
    milestones: tuple = _REFERENCE_MILESTONES

    def __post_init__(self):
        thresholds = [threshold for threshold, _ in self.milestones]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("Schedule thresholds must increase strictly, got {}.".format(thresholds))
        if self.base_rate <= 0 or any(rate <= 0 for _, rate in self.milestones):
            raise ValueError("Learning rates must be positive.")

    @classmethod
    def from_string(cls, text, base_rate=3e-4):
        """'8:3e-5,15:3e-6' -> milestones ((8, 3e-5), (15, 3e-6))."""
        milestones = []
        for item in filter(None, (part.strip() for part in text.split(','))):
            threshold, rate = item.split(':')
            milestones.append((int(threshold), float(rate)))
        return cls(base_rate, tuple(milestones))

    @classmethod
    def scaled(cls, epochs, base_rate=3e-4):
        """The reference milestones stretched onto an `epochs`-long run."""
        milestones = []
        previous = 0
        for threshold, rate in _REFERENCE_MILESTONES:
            previous = max(previous + 1, round(epochs * threshold / _REFERENCE_EPOCHS))
            milestones.append((previous, rate))
        return cls(base_rate, tuple(milestones))

    def to_string(self):
        return ','.join('{}:{!r}'.format(threshold, rate) for threshold, rate in self.milestones)


def lr_at(schedule, epoch):
    if epoch < 0:
        raise ValueError("Epoch must be >= 0, got {}.".format(epoch))
    rate = schedule.base_rate
    for threshold, milestone_rate in schedule.milestones:
        if epoch >= threshold:
            rate = milestone_rate
    return rate
