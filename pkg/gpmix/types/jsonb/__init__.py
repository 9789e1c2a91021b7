from .encoding import encode, dumps
from .decoding import decode, decode_params
