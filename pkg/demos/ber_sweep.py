"""Uncoded QPSK bit error rate versus SNR with MMSE detection.

Run with ``python3 demos/ber_sweep.py`` (a few seconds).
"""

from limfeed.harness import run, scenario_fig3, snr_at_level

sc = scenario_fig3("ber", trials=400)
sc.snr_grid_db = [float(x) for x in range(0, 41, 4)]
table = run(sc)
print(table.to_csv())
for name in ("statistical", "quantized_B1", "quantized_B4", "perfect"):
    x, y = table.curve(name)
    print(f"{name:<13} BER 1e-2 at {snr_at_level(x, y, 1e-2, decreasing=True):.2f} dB")
