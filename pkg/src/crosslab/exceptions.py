from __future__ import annotations


class CrossLabException(Exception):
    """ Generic crosslab error """


class ConfigurationError(CrossLabException):
    """ Misconfiguration of a run """


class InvalidInputError(CrossLabException, ValueError):
    """ Input outside the domain of an operation """


class CallbackError(CrossLabException):
    """ Exception occurred in a user callback """


class SimulationFault(CrossLabException):
    """ Simulator state became non-finite """

    def __init__(self, message: str, env_id: int | None = None):
        super().__init__(message)
        self.env_id = env_id


class TrainingDivergence(CrossLabException):
    """ Training produced a non-finite loss """

    def __init__(self, message: str, last_good_iteration: int = -1):
        super().__init__(message)
        self.last_good_iteration = last_good_iteration


class NonFiniteGradient(CrossLabException):
    """ Optimizer update rejected because of non-finite gradients """


class TapeConsumedError(CrossLabException):
    """ Backward was already run on this gradient tape """


class CheckpointError(CrossLabException):
    """ Generic checkpoint error """


class CheckpointNotFound(CheckpointError):
    """ Checkpoint file does not exist """


class CheckpointCorrupt(CheckpointError):
    """ Checkpoint file is truncated or unreadable """


class CheckpointIncompatible(CheckpointError):
    """ Checkpoint version, spec hash or stage tag does not match """


class PlannerError(CrossLabException):
    """ Generic planner error """


class PlannerTimeout(PlannerError):
    """ Planner did not answer in time """


class MalformedResponse(PlannerError):
    """ Planner answer does not fit the question kind """


class SkillFault(CrossLabException):
    """ Skill could not derive a sub-goal """


class SubTaskFailure(CrossLabException):
    """ Sub-task exhausted its skill execution budget """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
