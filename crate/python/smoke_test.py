"""Smoke test for the airforge extension module.

Build and install it first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/airforge-*.whl
    python python/smoke_test.py
"""

import json
import os
import sys
import tempfile

import airforge


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    return cond


def main():
    ok = True
    air = airforge.Air.synthetic(0.6, 6.0, sample_rate=16000, seed=1)
    t60, drr = air.t60(), air.drr()
    ok &= check(abs(t60 / 0.6 - 1) < 0.1, f"synthetic T60 {t60:.3f} s")
    ok &= check(abs(drr - 6.0) < 0.5, f"synthetic DRR {drr:.2f} dB")

    model = air.decay()
    ok &= check(abs(model.t60 - t60) < 1e-12, f"decay model tau {model.tau:.4f} s")

    out, report = airforge.augment(air, t60=1.0, drr=3.0, seed=7)
    ok &= check(abs(report.achieved_t60 - 1.0) <= 0.07, f"augment T60 -> {report.achieved_t60:.3f}")
    ok &= check(report.clipped or abs(report.achieved_drr - 3.0) <= 0.1, f"augment DRR -> {report.achieved_drr:.2f}")
    again, _ = airforge.augment(air, t60=1.0, drr=3.0, seed=7)
    ok &= check(out == again, "augment is deterministic")

    try:
        airforge.augment(air, t60=-1.0)
        ok &= check(False, "negative T60 rejected")
    except ValueError:
        ok &= check(True, "negative T60 rejected")

    labels = [0.2, 0.5, 0.9, 1.3]
    estimates = [0.8 * v + 0.1 for v in labels]
    slope, intercept = airforge.fit_calibration(estimates, labels)
    calibrated = [slope * e + intercept for e in estimates]
    stats = airforge.evaluate(calibrated, labels)
    ok &= check(abs(stats.bias) < 1e-12, f"calibrated bias {stats.bias:.1e}")
    ok &= check(stats.report("cal", "csv").startswith("method,bias,mse,pearson,n"), "csv report header")

    with tempfile.TemporaryDirectory() as tmp:
        config = {
            "sources": {"synthetic": {}},
            "master_seed": 3,
            "augmentations_per_air": 4,
            "mixes_per_segment": 2,
        }
        rows = airforge.build_dataset(json.dumps(config), tmp)
        ok &= check(rows == 8, f"dataset rows {rows}")
        with open(os.path.join(tmp, "manifest.jsonl")) as f:
            first = json.loads(f.readline())
        regen = airforge.regenerate_row(tmp, first["row"])
        stored = airforge.Air.read(os.path.join(tmp, first["mixture"]))
        ok &= check(len(regen) == len(stored), "row regenerates at full length")
        ok &= check(abs(stored.level("p56") - regen.level("p56")) < 1e-4, "row regenerates at the stored level")

    print("smoke test", "passed" if ok else "FAILED")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
