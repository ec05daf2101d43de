"""Independent brute-force re-derivation of the per-sample partition.

Deliberately straight-line pure Python with no imports from the rest of the
package: every statistic is recomputed from raw probabilities with the math
module only. Used to cross-check the vectorized pipeline; any disagreement
is a bug in one of the two.
"""

from __future__ import annotations

import math

CLEAN, ID_HIGH, ID_REST, OOD = "clean", "id-high", "id-rest", "ood"


def assign_sets(
    weak_probs,
    strong_probs,
    labels,
    tau_s: float = 0.75,
    tau_h: float = 0.9,
    tau_p: float = 0.9,
) -> list[str]:
    """One set name per sample: clean, id-high, id-rest, or ood."""
    out = []
    for row_w, row_s, label in zip(weak_probs, strong_probs, labels):
        pw = [float(v) for v in row_w]
        ps = [float(v) for v in row_s]
        y = int(label)
        c = len(pw)

        # base-2 JS divergence between the weak prediction and the one-hot label
        onehot = [1.0 if k == y else 0.0 for k in range(c)]
        js = 0.0
        for k in range(c):
            a = min(max(pw[k], 1e-7), 1.0)
            b = min(max(onehot[k], 1e-7), 1.0)
            m = 0.5 * (a + b)
            js += 0.5 * a * math.log2(a / m) + 0.5 * b * math.log2(b / m)
        p_clean = 1.0 - js

        confidence = pw[y]
        if p_clean > tau_s or confidence > tau_h:
            out.append(CLEAN)
            continue

        # lowest-index argmax per view
        arg_w = 0
        for k in range(1, c):
            if pw[k] > pw[arg_w]:
                arg_w = k
        arg_s = 0
        for k in range(1, c):
            if ps[k] > ps[arg_s]:
                arg_s = k
        if arg_w != arg_s:
            out.append(OOD)
            continue

        # reference class: lowest-index argmax of the mean prediction
        ref = 0
        for k in range(1, c):
            if pw[k] + ps[k] > pw[ref] + ps[ref]:
                ref = k

        best_other_w = -math.inf
        best_other_s = -math.inf
        for k in range(c):
            if k == ref:
                continue
            if pw[k] > best_other_w:
                best_other_w = pw[k]
            if ps[k] > best_other_s:
                best_other_s = ps[k]
        margin = 0.5 * ((pw[ref] - best_other_w) + (ps[ref] - best_other_s))

        out.append(ID_HIGH if margin > tau_p else ID_REST)
    return out
