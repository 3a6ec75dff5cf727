"""Compare the compiled kernels against the pure-Python fallback.

Runs the two hot kernels (character edit distance, longest common run) on
synthetic workloads sized like the fuzz suite, in-process for the active
implementation and in a subprocess with EDITGLOSS_PURE=1 for the fallback.

Usage: python benchmarks/bench_kernels.py [repeats]
"""
import json
import os
import random
import subprocess
import sys
import time


def make_workload(seed=42):
    rng = random.Random(seed)
    words = []
    for _ in range(2000):
        n = rng.randint(2, 12)
        words.append("".join(rng.choice("abcdefghijklmnoprstuvz") for _ in range(n)))
    string_pairs = [(rng.choice(words), rng.choice(words)) for _ in range(5000)]
    seq_pairs = []
    for _ in range(2000):
        a = [rng.randrange(30) for _ in range(rng.randint(5, 50))]
        b = list(a)
        for _ in range(rng.randint(1, 5)):
            if b and rng.random() < 0.5:
                b.pop(rng.randrange(len(b)))
            else:
                b.insert(rng.randint(0, len(b)), rng.randrange(30))
        seq_pairs.append((a, b))
    return string_pairs, seq_pairs


def run_benchmark(repeats=3):
    from editgloss import kernels

    string_pairs, seq_pairs = make_workload()
    dist_time = match_time = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for a, b in string_pairs:
            kernels.char_edit_distance(a, b)
        dist_time = min(dist_time, time.perf_counter() - t0)
        t0 = time.perf_counter()
        for a, b in seq_pairs:
            kernels.longest_match(a, b, 0, len(a), 0, len(b))
        match_time = min(match_time, time.perf_counter() - t0)
    return {
        "native": kernels.NATIVE,
        "char_edit_distance_s": round(dist_time, 4),
        "longest_match_s": round(match_time, 4),
    }


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 3
    if os.environ.get("_BENCH_CHILD"):
        print(json.dumps(run_benchmark(repeats)))
        return
    here = run_benchmark(repeats)
    env = dict(os.environ, EDITGLOSS_PURE="1", _BENCH_CHILD="1")
    out = subprocess.run([sys.executable, __file__, str(repeats)],
                         env=env, capture_output=True, text=True, check=True)
    pure = json.loads(out.stdout.strip().splitlines()[-1])
    label_here = "compiled" if here["native"] else "pure"
    print("%-22s %12s %12s %9s" % ("kernel", label_here, "pure", "speedup"))
    for key in ("char_edit_distance_s", "longest_match_s"):
        speed = pure[key] / here[key] if here[key] else float("inf")
        print("%-22s %11.4fs %11.4fs %8.1fx"
              % (key[:-2], here[key], pure[key], speed))
    if not here["native"]:
        print("note: compiled extension unavailable; compared pure against pure")


if __name__ == "__main__":
    main()
