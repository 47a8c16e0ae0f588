from enum import Enum


class ExitCode(Enum):
    OK = 0
    UNEXPECTED = 1
    CONFIG_ERROR = 2
    NUMERICAL_FAILURE = 3
