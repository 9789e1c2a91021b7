from . import contracts
from . import errors
