"""Build the stored reference prediction fixture for the acceptance suite.

Searches for per-class confusion counts over 83 topics whose pooled
(micro) F1 and per-class-averaged (macro) F1 hit the stored reference
scores to two decimals, then materializes a gold/prediction matrix pair
realizing those counts. The metric arithmetic here is written
out longhand on purpose: the fixture must certify the packaged metric
implementation, so it cannot be built with it.

Run from the repository root:  python3 scripts/build_metrics_replay_fixture.py
"""

import json
import random
from pathlib import Path

import numpy as np

TARGETS = {"micro_f1": 53.17, "macro_f1": 34.57}
N_CLASSES = 83
WINDOW = 0.004  # inside the two-decimal rounding window
SEED = 20240501

ROOT = Path(__file__).resolve().parent.parent
COUNTS_PATH = ROOT / "tests" / "data" / "ccs_level2_counts.json"
OUT_PATH = ROOT / "tests" / "data" / "metrics_replay.npz"


def longhand_scores(cells):
    tp_sum = fp_sum = fn_sum = 0
    precisions, recalls, f1s = [], [], []
    for tp, fp, fn in cells:
        tp_sum += tp
        fp_sum += fp
        fn_sum += fn
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        precisions.append(p)
        recalls.append(r)
        f1s.append(f1)
    micro_p = tp_sum / (tp_sum + fp_sum) if tp_sum + fp_sum else 0.0
    micro_r = tp_sum / (tp_sum + fn_sum) if tp_sum + fn_sum else 0.0
    micro_f1 = 2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r else 0.0
    n = len(cells)
    return {
        "precision": 100 * sum(precisions) / n,
        "recall": 100 * sum(recalls) / n,
        "micro_f1": 100 * micro_f1,
        "macro_f1": 100 * sum(f1s) / n,
    }


def error(cells):
    scores = longhand_scores(cells)
    # heavy penalty outside the rounding window, light pull toward center
    # inside it, so satisfied targets can wiggle while others converge
    total = 0.0
    for key in TARGETS:
        deviation = abs(scores[key] - TARGETS[key])
        total += 1000.0 * max(0.0, deviation - 0.8 * WINDOW) + deviation
    return total, scores


def initial_cells(supports, rng):
    """Per-class start: larger classes score better (pulls micro above
    macro) and precision/recall are spread in opposite directions across
    alternating classes (pulls macro F1 below what the P/R means imply)."""
    cells = []
    for index, s in enumerate(supports):
        scale = min(1.0, max(0.0, (np.log10(s + 1) - 0.5) / 3.0))
        recall = 0.10 + 0.55 * scale
        precision = 0.08 + 0.55 * scale
        spread = 1.45
        if index % 2 == 0:
            recall = min(0.95, recall * spread)
            precision = precision / spread
        else:
            recall = recall / spread
            precision = min(0.95, precision * spread)
        tp = max(0, round(s * recall))
        fn = max(0, s - tp)
        fp = round(tp * (1 - precision) / max(precision, 1e-6)) if tp else rng.randint(0, 5)
        cells.append([tp, fp, fn])
    return cells


def _satisfied(scores):
    return all(abs(scores[k] - TARGETS[k]) < WINDOW for k in TARGETS)


def local_search(cells, rng, max_steps=1_500_000):
    best_err, scores = error(cells)
    for _ in range(max_steps):
        if _satisfied(scores):
            break
        i = rng.randrange(len(cells))
        j = rng.randrange(3)
        delta = rng.choice([-16, -8, -4, -2, -1, 1, 2, 4, 8, 16])
        cells[i][j] += delta
        tp, fp, fn = cells[i]
        if tp < 0 or fp < 0 or fn < 0 or tp + fn == 0:
            cells[i][j] -= delta
            continue
        new_err, new_scores = error(cells)
        if new_err <= best_err:
            best_err, scores = new_err, new_scores
        else:
            cells[i][j] -= delta
    return cells, scores


def materialize(cells):
    rows = max(tp + fn + fp for tp, fp, fn in cells)
    gold = np.zeros((rows, len(cells)), dtype=np.uint8)
    pred = np.zeros((rows, len(cells)), dtype=np.uint8)
    for col, (tp, fp, fn) in enumerate(cells):
        gold[: tp + fn, col] = 1
        pred[:tp, col] = 1
        pred[tp + fn : tp + fn + fp, col] = 1
    return gold, pred


def main():
    rng = random.Random(SEED)
    counts = json.loads(COUNTS_PATH.read_text())
    surviving = sorted(t for t, c in counts.items() if c["train"] >= 100)
    assert len(surviving) == N_CLASSES
    supports = [counts[t]["test"] for t in surviving]

    cells, scores = local_search(initial_cells(supports, rng), rng)
    print("achieved:", {k: round(v, 4) for k, v in scores.items()})
    for key, target in TARGETS.items():
        assert round(scores[key], 2) == target, (key, scores[key])

    gold, pred = materialize(cells)
    check = longhand_scores(
        [
            (
                int(((pred[:, c] == 1) & (gold[:, c] == 1)).sum()),
                int(((pred[:, c] == 1) & (gold[:, c] == 0)).sum()),
                int(((pred[:, c] == 0) & (gold[:, c] == 1)).sum()),
            )
            for c in range(gold.shape[1])
        ]
    )
    for key, target in TARGETS.items():
        assert round(check[key], 2) == target, (key, check[key])

    np.savez_compressed(OUT_PATH, gold=gold, pred=pred, topics=np.array(surviving))
    print(f"wrote {OUT_PATH} with shape {gold.shape}")


if __name__ == "__main__":
    main()
