"""Klein-Gordon field on a star graph: junction S-matrix, lattice model and scattering runs."""
from .analytic_smatrix import *  # noqa: F401,F403
from .discrete_smatrix import *  # noqa: F401,F403
from .dynamics import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .graph_model import *  # noqa: F401,F403
from .observables import *  # noqa: F401,F403

__version__ = "0.1.0"
