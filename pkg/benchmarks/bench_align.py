"""Benchmark the two EM kernels on a synthetic bitext.

Builds a seeded random parallel corpus, trains the same model with the
pure-Python kernel and the compiled one, reports wall time for each, and
checks that the resulting tables are bit-identical.

Usage: python3 benchmarks/bench_align.py [--pairs 2000] [--iterations 5]
"""

from __future__ import annotations

import argparse
import random
import time

from corefmt.align import get_kernel, train_model1


def synthetic_bitext(n_pairs: int, vocab: int = 500, seed: int = 13):
    """Parallel corpus where target word i usually translates source word i."""
    rng = random.Random(seed)
    src_vocab = [f"s{i}" for i in range(vocab)]
    tgt_vocab = [f"t{i}" for i in range(vocab)]
    pairs = []
    for _ in range(n_pairs):
        length = rng.randint(4, 12)
        ids = [rng.randrange(vocab) for _ in range(length)]
        src = [src_vocab[i] for i in ids]
        tgt = [
            tgt_vocab[i] if rng.random() > 0.1 else tgt_vocab[rng.randrange(vocab)]
            for i in ids
        ]
        pairs.append((src, tgt))
    return pairs


def run(backend: str, bitext, iterations: int):
    start = time.perf_counter()
    table = train_model1(bitext, iterations=iterations, backend=backend)
    return time.perf_counter() - start, table


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=2000)
    parser.add_argument("--iterations", type=int, default=5)
    parser.add_argument("--vocab", type=int, default=500)
    parser.add_argument("--seed", type=int, default=13)
    args = parser.parse_args()

    try:
        get_kernel("compiled")
    except ImportError:
        print("compiled kernel not built; benchmark needs both backends")
        return 1

    bitext = synthetic_bitext(args.pairs, vocab=args.vocab, seed=args.seed)
    n_tokens = sum(len(s) + len(t) for s, t in bitext)
    print(
        f"{args.pairs} pairs, {n_tokens} tokens, vocab {args.vocab}, "
        f"{args.iterations} EM iterations"
    )

    t_pure, tab_pure = run("pure", bitext, args.iterations)
    t_comp, tab_comp = run("compiled", bitext, args.iterations)

    identical = (
        tab_pure.probs == tab_comp.probs
        and tab_pure.log_likelihoods == tab_comp.log_likelihoods
    )
    print(f"pure:     {t_pure:8.3f} s")
    print(f"compiled: {t_comp:8.3f} s  ({t_pure / t_comp:.1f}x faster)")
    print(f"tables bit-identical: {identical}")
    return 0 if identical else 1


if __name__ == "__main__":
    raise SystemExit(main())
