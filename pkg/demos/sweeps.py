"""
Utilization and loss across load and delay
===========================================

Sweep the number of flows (70 to 160) and the round-trip propagation delay
(20 to 140 ms) and write both tables as CSV.
"""
from pathlib import Path

from aqmfluid.scenarios import sweep, write_sweep

out = Path("demo_output")
out.mkdir(exist_ok=True)

rows = []
for name in ("pi", "ared", "irbf"):
    rows += sweep("connections", name)
write_sweep(rows, out / "sweep_connections.csv")

for r in rows:
    if r.controller == "irbf":
        print(f"N = {r.x:5.0f}  utilization = {r.utilization:.4f}  loss = {r.loss_rate:.3f}")

rows = []
for name in ("pi", "ared", "irbf"):
    rows += sweep("delay", name)
path = write_sweep(rows, out / "sweep_delay.csv")
print(path.read_text())
