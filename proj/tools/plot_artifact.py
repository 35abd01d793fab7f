#!/usr/bin/env python3
"""Plot a dmoc artifact: configuration, momenta and control against time.

    python3 tools/plot_artifact.py out/bb_case1            # writes out/bb_case1/trajectory.png
    python3 tools/plot_artifact.py out/bb_case1 --show
"""

import argparse
import csv
import json
import math
import pathlib

import matplotlib


def load(path):
    d = pathlib.Path(path)
    if d.is_file():
        d = d.parent
    with open(d / "trajectory.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    cols = {k: [float(r[k]) for r in rows] for k in rows[0]}
    meta_path = d / "metadata.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return d, cols, meta


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("artifact", help="artifact directory or its trajectory.csv")
    ap.add_argument("--out", help="image path (default: <artifact>/trajectory.png)")
    ap.add_argument("--show", action="store_true", help="open a window instead of writing a file")
    args = ap.parse_args()

    if not args.show:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    d, c, meta = load(args.artifact)
    t = c["t"]
    fig, ax = plt.subplots(4, 1, sharex=True, figsize=(7, 9))
    ax[0].plot(t, [math.degrees(v) for v in c["theta"]])
    ax[0].set_ylabel("theta [deg]")
    ax[1].plot(t, c["xi"])
    ax[1].set_ylabel("xi [m]")
    ax[2].plot(t, c["mu_a"], label="mu_a")
    ax[2].plot(t, c["mu_u"], label="mu_u")
    ax[2].set_ylabel("momenta")
    ax[2].legend()
    # u_N only enters the last half step; plot the N controls of the cost
    ax[3].plot(t[:-1], c["u"][:-1])
    ax[3].set_ylabel("control u")
    ax[3].set_xlabel("t [s]")

    result = meta.get("result", {})
    title = meta.get("case") or meta.get("model", {}).get("name", "")
    if "cost" in result:
        title += f"   cost {result['cost']:.6g}   residual {result.get('residual_norm', float('nan')):.1e}"
    fig.suptitle(title)
    fig.tight_layout()
    if args.show:
        plt.show()
    else:
        out = pathlib.Path(args.out) if args.out else d / "trajectory.png"
        fig.savefig(out, dpi=120)
        print(out)


if __name__ == "__main__":
    main()
