from . import jsonb
from . import ist3
from . import samples
