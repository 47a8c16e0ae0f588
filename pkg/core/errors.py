from typing import Any, Optional


class AdaptiveRidgeError(Exception):
    pass


class ConfigError(AdaptiveRidgeError):
    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class NumericalFailure(AdaptiveRidgeError):
    def __init__(self, message: str, last_good: Any = None):
        super().__init__(message)
        self.last_good = last_good
