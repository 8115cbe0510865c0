#!/usr/bin/env python3
"""Watch domain adaptation close a transfer gap on synthetic disks.

The synthetic benchmark draws two imbalanced 2-class Gaussian domains:
the target is the source pushed through a fixed affine map (mean offset
plus per-axis scaling), the way a newer drive model reports similar but
not identical SMART statistics. A classifier trained only on the source
transfers poorly; adding MMD+CORAL alignment at both network taps
recovers most of the lost G-mean without touching a single target label.

The script trains three variants on one seed, prints the dynamic loss
weights early and late, and shows the layer-1 MMD trajectory that the
adaptive run drives down.

Run:  python3 demos/adaptation_walkthrough.py   (about 20 s)
"""

from diskmda.evaluation import run_single
from diskmda.network import NetworkConfig
from diskmda.synthetic import two_domain_gaussians
from diskmda.training import TrainConfig

NET = NetworkConfig(input_dim=11, fc1_width=48, fc2_width=24, dropout_rate=0.25)
TRAIN = TrainConfig(variant="source_only", epochs=40, batch_size=64,
                    learning_rate=1e-3, discrepancy_cap=256)


def main():
    source, target = two_domain_gaussians(
        seed=0, class_gap=3.0, rotation=0.0, scale_lo=0.8, scale_hi=1.2,
        offset=3.0, align=0.45)
    n_src = len(source.labels)
    n_tgt = len(target.labels)
    print(f"source: {n_src} rows ({int(source.labels.sum())} failures), "
          f"target: {n_tgt} rows ({int(target.labels.sum())} failures)\n")

    results = {}
    for variant in ("target_only", "source_only", "double_coral_mmd"):
        _, history, _, cm, g = run_single(source, target, variant, 0, NET, TRAIN)
        results[variant] = (history, cm, g)
        print(f"{variant:>18}: g-mean {g:.4f}   "
              f"(tp {cm.tp}, fn {cm.fn}, fp {cm.fp}, tn {cm.tn})")

    history = results["double_coral_mmd"][0]
    first, last = history.steps[0], history.steps[-1]
    print("\ndynamic weights, first vs last step (double_coral_mmd):")
    for tag, bd in (("first", first), ("last", last)):
        print(f"  {tag:>5}: n={bd.n:.4f} "
              f"x=({bd.x[0]:.4f}, {bd.x[1]:.4f}) "
              f"y=({bd.y[0]:.6f}, {bd.y[1]:.6f})")
    print("  the class term keeps most of the weight; the mmd terms get")
    print("  more as their losses grow relative to a shrinking class loss\n")

    trace = [rec.mmd[0] for rec in history.discrepancy]
    print("layer-1 mmd at end of epochs 1, 10, 20, 30, 40:")
    picks = [trace[i] for i in (0, 9, 19, 29, 39)]
    print("  " + "  ".join(f"{v:.4f}" for v in picks))
    print("  adaptation pulls the domains together where the classifier reads")


if __name__ == "__main__":
    main()
