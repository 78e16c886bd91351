#!/usr/bin/env python3
"""Plot the CSV files written by `vvlc`.

    python3 scripts/plot.py pathloss vvlc-data/pathloss/pathloss_white.csv
    python3 scripts/plot.py cir vvlc-data/cir/cir_white_4m.csv vvlc-data/cir/cir_white_8m.csv
    python3 scripts/plot.py ber vvlc-data/report/*.ber.csv -o ber.png
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def columns(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    # empty cells (no Lambertian scene, failed FWHM) become NaN
    return {k: [float(r[k] or "nan") for r in rows] for k in rows[0]}


def pathloss(ax, paths):
    for p in paths:
        c = columns(p)
        ax.plot(c["d_m"], c["pl_db"], "o", label=f"{Path(p).stem} measured")
        ax.plot(c["d_m"], c["pl_model_db"], "-", label=f"{Path(p).stem} fit")
        if any(v == v for v in c.get("pl_lambertian_db", [])):
            ax.plot(c["d_m"], c["pl_lambertian_db"], "--", label=f"{Path(p).stem} Lambertian")
    ax.set(xlabel="distance (m)", ylabel="path loss (dB)")


def cir(ax, paths):
    for p in paths:
        c = columns(p)
        h = c["h"]
        peak = max(abs(v) for v in h) or 1.0
        ax.plot([t * 1e9 for t in c["t_s"]], [v / peak for v in h], label=Path(p).stem)
    ax.set(xlabel="time (ns)", ylabel="normalized CIR")


def ber(ax, paths):
    for p in paths:
        c = columns(p)
        pts = [(d, b) for d, b in zip(c["d_m"], c["ber"]) if b > 0]
        ax.semilogy(*zip(*pts), "o-", label=Path(p).name.split(".")[0])
    ax.axhline(1e-3, color="gray", lw=0.8, ls=":")
    ax.set(xlabel="distance (m)", ylabel="BER")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("kind", choices=["pathloss", "cir", "ber"])
    ap.add_argument("files", nargs="+")
    ap.add_argument("-o", "--out", default=None, help="image file [default: <kind>.png]")
    a = ap.parse_args()
    fig, ax = plt.subplots(figsize=(6, 4))
    {"pathloss": pathloss, "cir": cir, "ber": ber}[a.kind](ax, a.files)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(a.out or f"{a.kind}.png", dpi=150)


if __name__ == "__main__":
    main()
