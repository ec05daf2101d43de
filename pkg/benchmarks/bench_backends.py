#!/usr/bin/env python3
"""Compare the compiled and pure-numpy kernel backends.

Two parts:

* micro: times each kernel on synthetic batches, importing both
  implementations side by side (the public package picks one at import time,
  but the modules themselves can coexist in one process). Outputs are checked
  for agreement before anything is timed.
* end-to-end: runs an identical small training job in subprocesses with
  NOISYLAB_BACKEND forced, and reports wall clock and the run score.

If the compiled extension is missing, the script still runs and reports the
pure-python numbers alone.

Usage: python benchmarks/bench_backends.py [--rows 4096] [--classes 10]
       [--repeats 7] [--skip-e2e]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def load_backends() -> dict:
    from noisylab import _kernels_py

    backends = {"python": _kernels_py}
    try:
        from noisylab import _kernels

        backends["cython"] = _kernels
    except ImportError:
        pass
    return backends


def make_cases(rows: int, classes: int) -> list[tuple[str, tuple]]:
    rng = np.random.default_rng(0)
    dim, width = 64, 32

    def probs(n, c):
        z = rng.normal(size=(n, c))
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    x = rng.normal(size=(rows, dim))
    w = rng.normal(size=(dim, width))
    b = rng.normal(size=width)
    g = rng.normal(size=(rows, width))
    z = rng.normal(size=(rows, dim))
    gz = rng.normal(size=(rows, dim))
    a = np.tanh(z)
    scores = rng.normal(scale=3.0, size=(rows, classes))
    p = probs(rows, classes)
    q = probs(rows, classes)
    t = probs(rows, classes)
    ref = rng.integers(0, classes, size=rows)

    return [
        ("affine", (x, w, b)),
        ("affine_backward", (g, x, w)),
        ("tanh_forward", (z,)),
        ("tanh_backward", (gz, a)),
        ("softmax", (scores,)),
        ("js_divergence_rows", (p, q)),
        ("disagree_rows", (p, q)),
        ("margin_rows", (p, q, ref)),
        ("ce_rows", (t, p)),
        ("entropy_rows", (p,)),
        ("symkl_rows", (p, q)),
    ]


def agree(got, want, name: str) -> None:
    got_list = got if isinstance(got, tuple) else (got,)
    want_list = want if isinstance(want, tuple) else (want,)
    for g_arr, w_arr in zip(got_list, want_list):
        if not np.allclose(np.asarray(g_arr), np.asarray(w_arr), atol=1e-10):
            raise SystemExit(f"backend disagreement in kernel {name!r}")


def time_call(fn, args, repeats: int) -> float:
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_micro(rows: int, classes: int, repeats: int) -> None:
    backends = load_backends()
    names = list(backends)
    print(f"kernels on {rows} rows x {classes} classes, best of {repeats}:\n")
    header = f"{'kernel':<20}" + "".join(f"{n + ' (ms)':>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, args in make_cases(rows, classes):
        timings = {}
        outputs = {}
        for bname, mod in backends.items():
            fn = getattr(mod, name)
            outputs[bname] = fn(*args)
            timings[bname] = time_call(fn, args, repeats)
        if len(names) == 2:
            agree(outputs["cython"], outputs["python"], name)
        row = f"{name:<20}" + "".join(
            f"{1e3 * timings[n]:>14.3f}" for n in names
        )
        if len(names) == 2:
            row += f"{timings['python'] / timings['cython']:>9.1f}x"
        print(row)


_E2E_CHILD = """
import json, time
from noisylab.backend import BACKEND
from noisylab.config import RunConfig
from noisylab.presets import make_dataset
from noisylab.trainer import run_training

cfg = RunConfig(separation=6.0, eta=0.005, t_max=30, warmup_epochs=10,
                clean_mode="ce-only", closed_rate=0.5, seed=0)
train, test = make_dataset(cfg)
result = run_training(train, test, cfg)
print(json.dumps({"backend": BACKEND, "score": result.score,
                  "seconds": result.wall_clock}))
"""


def run_e2e() -> None:
    print("\nend-to-end: full variant, 30 epochs, 2000 train rows\n")
    for backend in ("python", "cython"):
        env = dict(os.environ, NOISYLAB_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, "-c", _E2E_CHILD],
            env=env, capture_output=True, text=True,
        )
        if proc.returncode != 0:
            reason = proc.stderr.strip().splitlines()[-1] if proc.stderr else "?"
            print(f"{backend:<8} unavailable ({reason})")
            continue
        payload = json.loads(proc.stdout.strip().splitlines()[-1])
        assert payload["backend"] == backend
        print(
            f"{backend:<8} {payload['seconds']:6.2f}s  "
            f"last-10 mean test acc {payload['score']:.4f}"
        )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=4096)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--skip-e2e", action="store_true")
    args = parser.parse_args()
    run_micro(args.rows, args.classes, args.repeats)
    if not args.skip_e2e:
        run_e2e()


if __name__ == "__main__":
    main()
