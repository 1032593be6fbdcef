"""Benchmark the compiled kernels against the pure-Python (numpy) fallback.

Run:  python3 benchmarks/bench_kernels.py [N]

Both backends must produce bit-identical outputs; this script asserts that
while timing them, so it doubles as a parity check at benchmark sizes.
"""
import sys
import time

import numpy as np

from bneverify import _kernels_py
try:
    from bneverify import _kernels
except ImportError:
    _kernels = None


def _time(fn, *args, repeat=5):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    k_cand = 201
    m_units = 4
    rng = np.random.Generator(np.random.Philox(12345))

    sorted_max = np.sort(rng.random(n))
    cands = np.linspace(0.0, 1.0, k_cand)
    theta = rng.random(n // 10)
    opp_max = rng.random(n // 10)
    own_rows = np.sort(rng.random((n // 10, m_units)), axis=1)[:, ::-1].copy()
    opp = np.sort(rng.random((n // 10, 2, m_units)), axis=2)[:, :, ::-1].copy()
    senior = np.array([1, 0], dtype=np.uint8)
    cand_vec = np.sort(rng.random(m_units))[::-1].copy()

    cases = [
        ("fpsb_win_counts", "fpsb_win_counts", (sorted_max, cands)),
        ("fpsb_dev_utils", "fpsb_dev_utils", (theta, opp_max, cands)),
        ("multiunit_wins_rows", "multiunit_wins_rows",
         (own_rows, opp, senior, m_units)),
        ("multiunit_wins_fixed", "multiunit_wins_fixed",
         (cand_vec, opp, senior, m_units)),
        ("multiunit_pay_unif_rows", "multiunit_pay_unif_rows",
         (own_rows, opp, None, m_units)),
    ]

    print(f"N={n}, candidates={k_cand}, units={m_units}")
    header = f"{'kernel':28s} {'python':>12s} {'compiled':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    wins = _kernels_py.multiunit_wins_rows(own_rows, opp, senior, m_units)
    for label, name, args in cases:
        if name == "multiunit_pay_unif_rows":
            args = (own_rows, opp, wins, m_units)
        t_py, out_py = _time(getattr(_kernels_py, name), *args)
        if _kernels is None:
            print(f"{label:28s} {t_py * 1e3:10.2f}ms {'n/a':>12s} {'n/a':>9s}")
            continue
        t_c, out_c = _time(getattr(_kernels, name), *args)
        assert np.array_equal(np.asarray(out_py), np.asarray(out_c)), label
        print(f"{label:28s} {t_py * 1e3:10.2f}ms {t_c * 1e3:10.2f}ms "
              f"{t_py / t_c:8.2f}x")
    if _kernels is None:
        print("compiled backend unavailable; showing fallback timings only")


if __name__ == "__main__":
    main()
