"""
Crossing study: what the depth and velocity cost terms buy
==========================================================

Two objects cross at image center, one 10 m behind the other, so their
pixel tracks coincide for a few frames while the near one occludes the
far one. A pixel-only matcher has nothing to tell them apart at the
crossing; the full cost still sees separated depths and opposite
velocities. This runs 100 seeded scenarios both ways, counts identity
switches against the simulator's provenance, and rewrites RESULTS.md
at the repository root with the measured numbers.
"""

from dataclasses import replace
from pathlib import Path

from fusetrack.association import CostWeights
from fusetrack.simulator import crossing_scenario, generate
from fusetrack.tracker import Tracker, TrackerConfig

REPO_ROOT = Path(__file__).resolve().parent.parent
SEEDS = 100


def count_switches(scene, weights) -> int:
    # provenance[k][i] is the scripted object behind detection i of frame k;
    # a track id that follows one object and then matches the other switched.
    # fusion stays off so the association cost is compared in isolation
    # (radar repair is a separate mechanism, shown in 03_radar_fusion.py).
    config = TrackerConfig(weights=weights, fusion_enabled=False)
    tracker = Tracker(config, scene.config.camera, record_association=True)
    owner = {}
    switches = 0
    for frame, prov in zip(scene.frames, scene.provenance):
        tracker.step(frame)
        _, _, assoc = tracker.last_association
        for det_idx, track_id in assoc.matches:
            obj = prov[det_idx]
            if track_id in owner and owner[track_id] != obj:
                switches += 1
            owner[track_id] = obj
    return switches


full = CostWeights()
pixel_only = replace(full, beta=0.0, delta=0.0)

full_total = pixel_total = 0
zero_switch = switching = 0
for seed in range(SEEDS):
    scene = generate(crossing_scenario(depth_gap=10.0, seed=seed))
    f = count_switches(scene, full)
    p = count_switches(scene, pixel_only)
    full_total += f
    pixel_total += p
    zero_switch += f == 0
    switching += p > 0
    if seed < 5 or f > 0:
        print(f"seed {seed:3d}: full={f} pixel-only={p}")

zero_pct = 100.0 * zero_switch / SEEDS
switch_pct = 100.0 * switching / SEEDS
print()
print(f"full cost:       {full_total} switches, {zero_switch}/{SEEDS} seeds clean ({zero_pct:.1f}%)")
print(f"pixel-only cost: {pixel_total} switches, {switching}/{SEEDS} seeds swapped ({switch_pct:.1f}%)")

results = f"""# Measured results

Generated by `python demos/04_crossing_study.py`: {SEEDS} seeded crossing
scenarios (two same-class objects 10 m apart in depth, crossing at image
center under standard detection noise), tracked twice with radar fusion
off so the association cost terms are compared in isolation. Identity
switches are counted against the simulator's provenance record.

## Identity switches at the crossing

- full cost (alpha=4e-4, beta=0.04, delta=0.25): {full_total} switches; zero-switch seeds {zero_switch}/{SEEDS} seeds ({zero_pct:.1f}%)
- pixel-only cost (beta=delta=0): {pixel_total} switches; seeds with at least one switch {switching}/{SEEDS} ({switch_pct:.1f}%)

While the two pixel tracks coincide, the depth gap (about 10 m against a
2.2 m gate at beta=0.04) and the opposed lateral velocities keep the full
cost unambiguous; pixel distance alone is symmetric at the crossing and
hands each track to the wrong object, one swap per seed in both
directions of travel.

`tests/test_acceptance.py` re-measures these numbers on every run and
fails if they drift from what this file records.
"""

(REPO_ROOT / "RESULTS.md").write_text(results)
print(f"\nwrote {REPO_ROOT / 'RESULTS.md'}")
