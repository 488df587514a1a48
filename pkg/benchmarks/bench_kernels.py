"""Time the compiled kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat N] [--json]

Each kernel runs on inputs shaped like one training step or one evaluation
chunk; the table reports the best of ``--repeat`` timings per backend.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from kgcontrast.kernels import get_backend


def cases(rng):
    n_ent, width = 20_000, 64

    def adagrad():
        param = rng.standard_normal((n_ent, width))
        acc = rng.random((n_ent, width))
        rows = np.unique(rng.integers(0, n_ent, 1024)).astype(np.int64)
        grad = rng.standard_normal((len(rows), width))
        return lambda k: k.adagrad_rows(param, acc, rows, grad, 0.1, 1e-10)

    def scatter():
        out = np.zeros((2048, width))
        rows = rng.integers(0, 2048, 4096).astype(np.int64)
        vals = rng.standard_normal((4096, width))
        return lambda k: k.scatter_add_rows(out, rows, vals)

    def ranks():
        nq, ne = 256, n_ent
        scores = rng.standard_normal((nq, ne))
        answers = rng.integers(0, ne, nq).astype(np.int64)
        lengths = rng.integers(0, 40, nq)
        fptr = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        fidx = rng.integers(0, ne, fptr[-1]).astype(np.int64)
        slots = np.arange(nq, dtype=np.int64)
        return lambda k: k.filtered_ranks(scores, answers, slots, fptr, fidx)

    def contrastive():
        # 512 anchors plus one appended positive each
        m, n = 512, 1024
        z = rng.standard_normal((n, width)) * 0.1
        sim = np.ascontiguousarray(z[:m] @ z.T)
        pos = (rng.random((m, n)) < 0.005).astype(np.uint8)
        self_col = np.arange(m, dtype=np.int64)
        return lambda k: k.contrastive_coefficients(sim, pos, self_col, 0.5)

    return {
        "adagrad_rows (1024 x 64)": adagrad,
        "scatter_add_rows (4096 x 64)": scatter,
        "filtered_ranks (256 x 20000)": ranks,
        "contrastive_coefficients (512 x 1024)": contrastive,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)

    py = get_backend("python")
    try:
        ext = get_backend("compiled")
    except ImportError:
        print("compiled extension not built; only the numpy backend is available", file=sys.stderr)
        ext = None

    rng = np.random.default_rng(0)
    rows = []
    for name, make in cases(rng).items():
        run = make()
        number = 3
        t_py = min(timeit.repeat(lambda: run(py), number=number, repeat=args.repeat)) / number
        t_ext = None
        if ext is not None:
            t_ext = min(timeit.repeat(lambda: run(ext), number=number, repeat=args.repeat)) / number
        rows.append({"kernel": name, "python_ms": t_py * 1e3,
                     "compiled_ms": None if t_ext is None else t_ext * 1e3,
                     "speedup": None if t_ext is None else t_py / t_ext})

    if args.json:
        print(json.dumps(rows, indent=1))
        return 0
    print(f"{'kernel':<40}{'numpy ms':>10}{'compiled ms':>13}{'speedup':>9}")
    for r in rows:
        c = "-" if r["compiled_ms"] is None else f"{r['compiled_ms']:.3f}"
        s = "-" if r["speedup"] is None else f"{r['speedup']:.1f}x"
        print(f"{r['kernel']:<40}{r['python_ms']:>10.3f}{c:>13}{s:>9}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
