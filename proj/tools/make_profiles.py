#!/usr/bin/env python3
"""Regenerate data/profiles.csv (24-hour PV and load shape factors).

pv_scale is a daylight bell centered at 1pm peaking at 0.97 (so the 6pm
value is 0.4833 of nameplate); load_scale_high is an evening-peaked shape
normalized to 1.0; load_scale_low is 60% of the high shape.
"""

import math
import os

LOAD_HIGH = [
    0.62, 0.58, 0.55, 0.53, 0.52, 0.54, 0.60, 0.68, 0.74, 0.77, 0.79, 0.80,
    0.81, 0.80, 0.78, 0.77, 0.80, 0.88, 0.95, 1.00, 1.00, 0.95, 0.84, 0.71,
]


def pv_scale(hour):
    if hour < 6 or hour > 20:
        return 0.0
    return round(0.97 * math.exp(-((hour - 13) ** 2) / 35.88938), 4)


def main():
    assert max(LOAD_HIGH) == 1.0 and len(LOAD_HIGH) == 24
    assert pv_scale(18) == 0.4833
    assert pv_scale(13) == 0.97
    rows = ["hour,pv_scale,load_scale_high,load_scale_low"]
    for h in range(24):
        high = LOAD_HIGH[h]
        rows.append(f"{h},{pv_scale(h):.4f},{high:.4f},{0.6 * high:.4f}")
    out = os.path.join(os.path.dirname(__file__), "..", "data",
                       "profiles.csv")
    with open(out, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {os.path.normpath(out)}")


if __name__ == "__main__":
    main()
