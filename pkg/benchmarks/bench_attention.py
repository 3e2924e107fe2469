"""Compare the compiled fused-attention kernel against the numpy fallback.

Run:  python benchmarks/bench_attention.py
"""
import time

import numpy as np

from configshape import attention
from configshape.masks import effective_mask, manhattan_mask


def bench(fn, *args, repeats=50):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    if attention._attnkernel is None:
        print("compiled kernel not built; only the numpy path is available")
    rng = np.random.default_rng(0)
    print(f"{'case':<34} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for grid, heads, hd, batch in [(4, 4, 8, 16), (4, 4, 12, 64), (16, 12, 64, 8)]:
        tokens = grid * grid + 1
        bh = batch * heads
        q = rng.normal(size=(bh, tokens, hd))
        k = rng.normal(size=(bh, tokens, hd))
        v = rng.normal(size=(bh, tokens, hd))
        allow = effective_mask(manhattan_mask(grid, 1, "inside"))
        scale = 1.0 / np.sqrt(hd)
        t_np = bench(attention.masked_attention_numpy, q, k, v, allow, scale)
        label = f"g={grid} heads={heads} hd={hd} B={batch}"
        if attention._attnkernel is not None:
            kern = attention._attnkernel.masked_attention
            allow_u8 = np.ascontiguousarray(allow.astype(np.uint8))
            qc, kc, vc = (np.ascontiguousarray(a) for a in (q, k, v))
            t_cy = bench(kern, qc, kc, vc, allow_u8, scale)
            out_np = attention.masked_attention_numpy(q, k, v, allow, scale)
            out_cy = kern(qc, kc, vc, allow_u8, scale)
            assert np.max(np.abs(out_np - out_cy)) < 1e-10, "backend mismatch"
            print(f"{label:<34} {t_np * 1e3:>8.3f}ms {t_cy * 1e3:>8.3f}ms {t_np / t_cy:>7.2f}x")
        else:
            print(f"{label:<34} {t_np * 1e3:>8.3f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
