"""Regenerate src/vibfault/daubechies.json (db1..db20 reconstruction low-pass filters).

Spectral factorization of the Daubechies half-band polynomial in high precision,
keeping the minimum-phase root set. Run once; the JSON is committed.
"""
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 80
OUT = Path(__file__).resolve().parents[1] / "src" / "vibfault" / "daubechies.json"


def daubechies_lowpass(p):
    """Minimum-phase db<p> low-pass filter, largest taps first, sum = sqrt(2)."""
    if p == 1:
        return [1 / mp.sqrt(2)] * 2
    # P(y) = sum_k C(p-1+k, k) y^k with y = (1 - (z + 1/z)/2) / 2
    coeffs = [mp.binomial(p - 1 + k, k) for k in range(p)]
    yroots = mp.polyroots(coeffs[::-1], maxsteps=500, extraprec=400)
    zroots = []
    for y in yroots:
        # z + 1/z = 2 - 4y  ->  z^2 - (2 - 4y) z + 1 = 0
        b = 2 - 4 * y
        disc = mp.sqrt(b * b - 4)
        z1, z2 = (b + disc) / 2, (b - disc) / 2
        zroots.append(z1 if abs(z1) < 1 else z2)
    poly = [mp.mpc(1)]
    for r in [-1] * p + zroots:
        nxt = [mp.mpc(0)] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i] += c
            nxt[i + 1] -= c * r
        poly = nxt
    h = [mp.re(c) for c in poly]
    scale = mp.sqrt(2) / mp.fsum(h)
    return [c * scale for c in h]


def main():
    table = {}
    for p in range(1, 21):
        h = daubechies_lowpass(p)
        assert abs(mp.fsum(c * c for c in h) - 1) < mp.mpf(10) ** -40
        table[f"db{p}"] = [float(c) for c in h]
    OUT.write_text(json.dumps(table, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
