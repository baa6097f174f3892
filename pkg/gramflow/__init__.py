from gramflow import numkit
from gramflow import model
from gramflow import constraints
from gramflow import gram
from gramflow import flow
from gramflow import config
from gramflow import experiments

from gramflow.defaults import __version__
from gramflow.model import *
from gramflow.constraints import *
from gramflow.gram import *
from gramflow.flow import *
from gramflow.config import *

__all__ = ["numkit", "model", "constraints", "gram", "flow", "config", "experiments"]
__all__.extend(model.__all__)
__all__.extend(constraints.__all__)
__all__.extend(gram.__all__)
__all__.extend(flow.__all__)
__all__.extend(config.__all__)
