import typing

import numpy as np
import numpy.typing as npt

RealVector = npt.NDArray[np.float64]
ComplexVector = npt.NDArray[np.complex128]
Matrix = npt.NDArray[typing.Any]

Field = typing.Literal['real', 'complex']
ScoreMode = typing.Literal['likelihood', 'posterior']


class ResidualContract(typing.Protocol):
    def __call__(self, x: RealVector) -> RealVector: ...


class JacobianContract(typing.Protocol):
    def __call__(self, x: RealVector) -> Matrix: ...


class ObjectiveContract(typing.Protocol):
    def __call__(self, x: RealVector) -> float: ...


class GradientContract(typing.Protocol):
    def __call__(self, x: RealVector) -> RealVector: ...


class DecompositionDiagnostics(typing.TypedDict):
    omega_residual: float
    unrefined_residual: float
    xi: list[float]
    flags: list[str]


class FitDiagnostics(typing.TypedDict):
    omega_residual: float
    objective: float
    flags: list[str]
