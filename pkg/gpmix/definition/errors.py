class GpmixError(Exception):
    pass


class RankBoundError(GpmixError, ValueError):
    def __init__(self, d: int, r: int):
        self.d = d
        self.r = r
        super().__init__(
            f'Rank r={r} is outside 1 <= r <= d/2 - 1 = {d / 2 - 1:g} for dimension d={d}'
        )


class LabelError(GpmixError, IndexError, ValueError):
    pass


class EmptyOmegaError(GpmixError, ValueError):
    def __init__(self, d: int):
        self.d = d
        super().__init__(f'Dimension d={d} has no pairwise-distinct label triples (d >= 3 required)')


class InvalidViewError(GpmixError, ValueError):
    pass


class ShapeMismatchError(GpmixError, ValueError):
    pass


class NonFiniteInputError(GpmixError, ValueError):
    pass


class ParseError(GpmixError, ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f'line {line}: {message}')


class DegenerateComponentError(GpmixError, ArithmeticError):
    def __init__(self, message: str, index: int):
        self.index = index
        super().__init__(f'component {index}: {message}')


class RepeatedEigenvalueError(GpmixError, ArithmeticError):
    pass


class InvalidParamsError(GpmixError, ValueError):
    pass
