class IterationReport:
    """per-iteration residuals and observed contraction ratios of a fixed-point loop"""

    def __init__(self, name: str):
        self.name = name
        self.residuals = []
        self.ratios = []
        self.converged = False
        self.final_residual = None
        self.warnings = []

    def add(self, residual: float) -> float:
        """records a residual and returns the ratio to the previous one (nan for the first)"""
        previous = self.residuals[-1] if self.residuals else None
        ratio = residual / previous if previous else float("nan")
        self.residuals.append(float(residual))
        self.ratios.append(float(ratio))
        return ratio

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    @property
    def max_ratio(self) -> float:
        finite = [r for r in self.ratios if r == r]
        return max(finite) if finite else 0.0

    def rows(self) -> list:
        return [{"n": n + 1, "residual": r, "ratio": q} for n, (r, q) in enumerate(zip(self.residuals, self.ratios))]

    def to_dict(self) -> dict:
        return {"name": self.name, "iterations": self.iterations, "converged": self.converged,
                "final_residual": self.final_residual, "max_ratio": self.max_ratio,
                "residuals": self.residuals, "ratios": self.ratios, "warnings": self.warnings}
