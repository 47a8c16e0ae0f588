from enum import Enum


class MaskKind(Enum):
    CONSTANT = "constant"
    FILE = "file"
    LOCAL_RESPONSE = "local_response"

    @classmethod
    def from_value(cls, value: str) -> 'MaskKind':
        for kind in cls:
            if kind.value == value:
                return kind
        raise ValueError(f"Unknown mask kind: {value}. Supported kinds: {', '.join(k.value for k in cls)}")

    def __str__(self):
        return self.value
