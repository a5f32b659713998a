from . import tensor
from .tensor import Tensor
