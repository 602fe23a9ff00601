"""MMSE link metrics for one channel draw: SINR, mutual information and QPSK BER.

Run with ``python3 demos/link_metrics.py``.
"""

import numpy as np

from limfeed.channel import sample
from limfeed.harness import preset_model
from limfeed.linkperf import ber_qpsk, perfect_precoder, statistical_precoder, sinr, mutual_info, waterfill
from limfeed.numerics import make_rng

model = preset_model("fig3")
h = sample(model, make_rng(11))
rho = 10 ** (15 / 10)

# waterfilling may starve the weak stream, which shows up as a poor BER there
for name, f in [("statistical", statistical_precoder(model, 2)), ("perfect CSI", perfect_precoder(h, 2, rho))]:
    ber = ber_qpsk(h, f, rho, make_rng(12), 50_000)
    print(f"{name:<12} SINR {np.round(sinr(h, f, rho), 2)}  MI {mutual_info(h, f, rho):.3f} bit/s/Hz"
          f"  BER {np.round(ber.per_stream, 5)}")

# Waterfilling over two modes with gains 4 and 1 and a total budget of 2.
power, level = waterfill([4.0, 1.0], 2.0)
print(f"waterfilling: power {power}, water level {level:.4f}")
