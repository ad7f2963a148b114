import math


class CheckRecord:
    """one verified invariant of an experiment run, as written to summary.json"""

    def __init__(self, name: str, passed: bool, value=None, threshold=None, detail: str = "") -> None:
        self.name = name
        self.passed = bool(passed)
        self.value = value
        self.threshold = threshold
        self.detail = detail
        return

    @classmethod
    def at_most(cls, name: str, value: float, threshold: float, detail: str = "") -> "CheckRecord":
        """passes when value <= threshold (nan never passes)"""
        value = float(value)
        return cls(name, not math.isnan(value) and value <= threshold, value, threshold, detail)

    @classmethod
    def within(cls, name: str, value: float, low: float, high: float, detail: str = "") -> "CheckRecord":
        value = float(value)
        return cls(name, low <= value <= high, value, [low, high], detail)

    @classmethod
    def failed(cls, name: str, ex: Exception) -> "CheckRecord":
        return cls(name, False, None, None, f"{type(ex).__name__}: {ex}")

    def to_dict(self) -> dict:
        value = self.value
        if isinstance(value, float) and not math.isfinite(value):
            value = repr(value)
        return {"name": self.name, "passed": self.passed, "value": value,
                "threshold": self.threshold, "detail": self.detail}

    def __repr__(self) -> str:
        return f"CheckRecord({self.name!r}, passed={self.passed}, value={self.value!r})"
