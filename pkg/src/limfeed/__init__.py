"""Statistics-adapted limited-feedback precoder codebooks for correlated MIMO channels."""

from . import channel, codebook, grassmann, harness, linkperf, numerics
from .channel import CanonicalModel, iid_model, matched_statistics, separable_model, virtual_model
from .codebook import Codebook, build_codebook, select_distance, select_mi
from .errors import *  # noqa: F401,F403
from .grassmann import Codeset, dist, make_root_codeset, rotate, scale
from .harness import Scenario, Scheme, run, scenario_fig3, scenario_fig4
from .linkperf import Precoder, ber_qpsk, mutual_info, sinr, waterfill

__version__ = "0.1.0"
