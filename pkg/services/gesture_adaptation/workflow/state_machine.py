"""
Stage tracking for experiment runs.

The runner reports every stage change here. When a run raises, the stage it
was in, with the fold and seed once training has started, is attached to the
error as a note so the CLI can say where it stopped.
"""

from enum import Enum


class RunState(str, Enum):
    """Stages of one experiment invocation."""

    INITIALIZED = "initialized"
    DATA_READY = "data_ready"
    TRAINING = "training"
    EVALUATING = "evaluating"
    REPORTED = "reported"
    FAILED = "failed"

    @property
    def activity(self) -> str:
        return _ACTIVITIES[self]


_ACTIVITIES = {
    RunState.INITIALIZED: "preparing the dataset",
    RunState.DATA_READY: "splitting folds",
    RunState.TRAINING: "training",
    RunState.EVALUATING: "evaluating",
    RunState.REPORTED: "writing reports",
    RunState.FAILED: "recovering from an earlier failure",
}


class RunStateMachine:
    """Current stage of a runner plus the stages it has passed through."""

    def __init__(self) -> None:
        self._history: list[tuple[RunState, str | None]] = [(RunState.INITIALIZED, None)]

    def transition(self, new_state: RunState, context: str | None = None) -> None:
        """Enter ``new_state``; ``context`` names the fold and seed being worked on."""
        self._history.append((new_state, context))

    def get_state(self) -> RunState:
        return self._history[-1][0]

    def get_history(self) -> list[RunState]:
        return [state for state, _ in self._history]

    def describe(self) -> str:
        """Current stage in words, e.g. ``training fold 0 seed 1``."""
        state, context = self._history[-1]
        return f"{state.activity} {context}" if context else state.activity

    def fail(self, error: BaseException) -> str:
        """Attach the current stage to ``error`` and move to FAILED; returns the stage text."""
        where = self.describe()
        error.add_note(f"while {where}")
        self.transition(RunState.FAILED)
        return where
