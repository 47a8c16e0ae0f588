from enum import Enum


class OperatorKind(Enum):
    IDENTITY = "identity"
    BLUR_STRIDE = "blur_stride"
    FOURIER_SUBSAMPLE = "fourier_subsample"
    RADON = "radon"

    @classmethod
    def from_value(cls, value: str) -> 'OperatorKind':
        for kind in cls:
            if kind.value == value:
                return kind
        raise ValueError(f"Unknown operator kind: {value}. Supported kinds: {', '.join(k.value for k in cls)}")

    def __str__(self):
        return self.value
