"""Analysis and simulation of prescribed-time attractive linear time-varying systems."""

from .controller import PtGainParams, SwitchState, control_input, pt_gain, switching_gain
from .linalg import EigSet, eig, induced_norm, log_norm, sym_part, weyl_check
from .systems import LtiPlant, LtvSystem, catalog_get, eval_A, make_closed_loop

__version__ = "0.1.0"
