#!/usr/bin/env python3
"""Regenerate data/case33bw.m from the Baran-Wu 33-bus tables.

Loads are MATPOWER-style MW/Mvar; branch impedances are ohms on the
12.66 kV feeder (the network builder converts to per-unit, so the shipped
file must stay in ohms).
"""

import os

# (from, to, r_ohm, x_ohm)
BRANCHES = [
    (1, 2, 0.0922, 0.0470), (2, 3, 0.4930, 0.2511), (3, 4, 0.3660, 0.1864),
    (4, 5, 0.3811, 0.1941), (5, 6, 0.8190, 0.7070), (6, 7, 0.1872, 0.6188),
    (7, 8, 0.7114, 0.2351), (8, 9, 1.0300, 0.7400), (9, 10, 1.0440, 0.7400),
    (10, 11, 0.1966, 0.0650), (11, 12, 0.3744, 0.1238),
    (12, 13, 1.4680, 1.1550), (13, 14, 0.5416, 0.7129),
    (14, 15, 0.5910, 0.5260), (15, 16, 0.7463, 0.5450),
    (16, 17, 1.2890, 1.7210), (17, 18, 0.7320, 0.5740),
    (2, 19, 0.1640, 0.1565), (19, 20, 1.5042, 1.3554),
    (20, 21, 0.4095, 0.4784), (21, 22, 0.7089, 0.9373),
    (3, 23, 0.4512, 0.3083), (23, 24, 0.8980, 0.7091),
    (24, 25, 0.8960, 0.7011), (6, 26, 0.2030, 0.1034),
    (26, 27, 0.2842, 0.1447), (27, 28, 1.0590, 0.9337),
    (28, 29, 0.8042, 0.7006), (29, 30, 0.5075, 0.2585),
    (30, 31, 0.9744, 0.9630), (31, 32, 0.3105, 0.3619),
    (32, 33, 0.3410, 0.5302),
]

# Normally-open tie switches (status 0), kept for fidelity with the source
# tables; the network builder ignores them.
TIES = [
    (8, 21, 2.0000, 2.0000), (9, 15, 2.0000, 2.0000),
    (12, 22, 2.0000, 2.0000), (18, 33, 0.5000, 0.5000),
    (25, 29, 0.5000, 0.5000),
]

# (bus, Pd_kW, Qd_kvar)
LOADS = [
    (2, 100, 60), (3, 90, 40), (4, 120, 80), (5, 60, 30), (6, 60, 20),
    (7, 200, 100), (8, 200, 100), (9, 60, 20), (10, 60, 20), (11, 45, 30),
    (12, 60, 35), (13, 60, 35), (14, 120, 80), (15, 60, 10), (16, 60, 20),
    (17, 60, 20), (18, 90, 40), (19, 90, 40), (20, 90, 40), (21, 90, 40),
    (22, 90, 40), (23, 90, 50), (24, 420, 200), (25, 420, 200), (26, 60, 25),
    (27, 60, 25), (28, 60, 20), (29, 120, 70), (30, 200, 600), (31, 150, 70),
    (32, 210, 100), (33, 60, 40),
]

BASE_KV = 12.66
BASE_MVA = 100


def main():
    assert sum(p for _, p, _ in LOADS) == 3715
    assert sum(q for _, _, q in LOADS) == 2300
    assert len(BRANCHES) == 32 and len(TIES) == 5 and len(LOADS) == 32

    load_map = {b: (p, q) for b, p, q in LOADS}
    lines = []
    lines.append("function mpc = case33bw")
    lines.append("% 33-bus radial feeder (Baran and Wu). Branch impedances in"
                 " ohms on 12.66 kV;")
    lines.append("% loads in MW/Mvar. Regenerate with"
                 " tools/make_case33bw.py.")
    lines.append("mpc.version = '2';")
    lines.append(f"mpc.baseMVA = {BASE_MVA};")
    lines.append("")
    lines.append("% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin")
    lines.append("mpc.bus = [")
    for bus in range(1, 34):
        p, q = load_map.get(bus, (0, 0))
        btype = 3 if bus == 1 else 1
        lines.append(
            f"\t{bus}\t{btype}\t{p / 1000:.3f}\t{q / 1000:.3f}\t0\t0\t1\t1\t0"
            f"\t{BASE_KV}\t1\t1.1\t0.9;")
    lines.append("];")
    lines.append("")
    lines.append("% fbus tbus r x b rateA rateB rateC ratio angle status"
                 " angmin angmax")
    lines.append("mpc.branch = [")
    for f, t, r, x in BRANCHES:
        lines.append(
            f"\t{f}\t{t}\t{r:.4f}\t{x:.4f}\t0\t0\t0\t0\t0\t0\t1\t-360\t360;")
    for f, t, r, x in TIES:
        lines.append(
            f"\t{f}\t{t}\t{r:.4f}\t{x:.4f}\t0\t0\t0\t0\t0\t0\t0\t-360\t360;")
    lines.append("];")
    out = os.path.join(os.path.dirname(__file__), "..", "data", "case33bw.m")
    with open(out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {os.path.normpath(out)}: 33 buses, 37 branch rows (32 in service), "
          f"{sum(p for _, p, _ in LOADS)} kW / "
          f"{sum(q for _, _, q in LOADS)} kvar total load")


if __name__ == "__main__":
    main()
