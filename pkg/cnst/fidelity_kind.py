from enum import Enum


class FidelityKind(Enum):
    SCALED_QUADRATIC = "scaled_quadratic"
    CT_POISSON = "ct_poisson"

    @classmethod
    def from_value(cls, value: str) -> 'FidelityKind':
        for kind in cls:
            if kind.value == value:
                return kind
        raise ValueError(f"Unknown fidelity kind: {value}. Supported kinds: {', '.join(k.value for k in cls)}")

    def __str__(self):
        return self.value


class NoiseKind(Enum):
    GAUSSIAN = "gaussian"
    CT_POISSON = "ct_poisson"

    @classmethod
    def from_value(cls, value: str) -> 'NoiseKind':
        for kind in cls:
            if kind.value == value:
                return kind
        raise ValueError(f"Unknown noise kind: {value}. Supported kinds: {', '.join(k.value for k in cls)}")

    def __str__(self):
        return self.value
