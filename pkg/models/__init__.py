from .oscillator import *
from .drive import *
