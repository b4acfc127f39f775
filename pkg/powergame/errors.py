"""Exceptions raised by powergame.

Everything derives from PowerGameError so the command line can map the whole family to exit code 1.
"""


class PowerGameError(Exception):
    pass


class InvalidEnvironment(PowerGameError, ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InvalidStrategy(PowerGameError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class LabelError(PowerGameError, IndexError):
    pass


class IrrelevantCoordinate(PowerGameError, ValueError):
    pass


class CoordinateAlreadyGood(PowerGameError, ValueError):
    pass


class DimensionMismatch(PowerGameError, ValueError):
    pass


class NotAnEquilibrium(PowerGameError, ValueError):
    pass


class GridError(PowerGameError, ValueError):
    pass


class GridTooLarge(GridError):
    def __init__(self, what, required, cap):
        self.required = required
        self.cap = cap
        super().__init__(f"{what}: {required} grid rows required, cap is {cap}")


class ScenarioSyntaxError(PowerGameError, ValueError):
    def __init__(self, message, line, column=1, source="<text>"):
        self.line = line
        self.column = column
        self.source = source
        super().__init__(f"{source}:{line}:{column}: {message}")
