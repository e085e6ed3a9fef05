"""Error taxonomy. Exit-code convention matches the companion scoring CLI:
validation problems exit 1, runtime failures exit 2."""

from __future__ import annotations


class LoraError(Exception):
    """Base class for every error this package raises on purpose."""


class SpecError(LoraError):
    """Invalid training specification; collects every problem at once."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DataError(LoraError):
    """A pairs file or one of its records cannot be used for training."""


class CheckpointError(LoraError):
    """A checkpoint directory is missing pieces or inconsistent."""


class TrainingFailure(LoraError):
    """Training diverged (non-finite loss) or could not proceed."""
