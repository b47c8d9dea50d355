"""Brute-force IBM Model 1 reference implementation.

Used by tests as an independent cross-check of the package aligner.  Keep
this file free of imports from corefmt: it is the oracle, not the product.
Dict-of-dicts throughout, no shared code with the package kernels.
"""

from __future__ import annotations

import math


def oracle_train(bitext, iterations):
    """Train t(f|e) by plain EM with a NULL source word.

    bitext: list of (source tokens, target tokens), already lowercased.
    Returns (t, log_likelihoods) where t is {source: {target: prob}} with
    "" standing for NULL, and log_likelihoods[k] is the corpus
    log-likelihood under the parameters entering iteration k.
    """
    null = ""
    cooc = {}
    for src, tgt in bitext:
        for e in list(src) + [null]:
            bucket = cooc.setdefault(e, set())
            bucket.update(tgt)
    t = {}
    for e, fs in cooc.items():
        u = 1.0 / len(fs)
        t[e] = {f: u for f in sorted(fs)}

    lls = []
    for _ in range(iterations):
        count = {e: {f: 0.0 for f in row} for e, row in t.items()}
        total = {e: 0.0 for e in t}
        ll = 0.0
        for src, tgt in bitext:
            ext = [null] + list(src)
            for f in tgt:
                denom = 0.0
                for e in ext:
                    denom += t[e].get(f, 0.0)
                ll += math.log(denom) - math.log(len(ext))
                for e in ext:
                    c = t[e].get(f, 0.0) / denom
                    count[e][f] += c
                    total[e] += c
        lls.append(ll)
        for e, row in count.items():
            if total[e] > 0.0:
                for f in row:
                    t[e][f] = row[f] / total[e]
    return t, lls


def oracle_align_forward(t, src, tgt):
    """Per-target-token argmax over NULL + source tokens; NULL wins ties.

    Candidates are ordered NULL first, then source positions left to right,
    and a candidate replaces the incumbent only on a strictly larger score,
    so ties resolve to the earliest candidate.
    """
    null = ""
    links = set()
    for j, f in enumerate(tgt):
        best_i = -1
        best = t.get(null, {}).get(f, 0.0)
        for i, e in enumerate(src):
            score = t.get(e, {}).get(f, 0.0)
            if score > best:
                best = score
                best_i = i
        if best_i >= 0:
            links.add((best_i, j))
    return links


if __name__ == "__main__":
    toy = [
        (["the", "house"], ["das", "haus"]),
        (["the", "book"], ["das", "buch"]),
        (["a", "house"], ["ein", "haus"]),
    ]
    t, lls = oracle_train(toy, 10)
    print("t(haus|house) =", t["house"]["haus"])
    print("row sums:", {e: sum(row.values()) for e, row in t.items()})
    print("LL monotone:", all(a <= b + 1e-12 for a, b in zip(lls, lls[1:])))
    print("LLs:", [round(x, 6) for x in lls])
    fwd = oracle_align_forward(t, ["the", "house"], ["das", "haus"])
    print("fwd align (the house ~ das haus):", sorted(fwd))

    rev_bitext = [(tgt, src) for src, tgt in toy]
    t_rev, _ = oracle_train(rev_bitext, 10)
    rev = oracle_align_forward(t_rev, ["das", "haus"], ["the", "house"])
    print("rev align (src<->tgt swapped):", sorted(rev))
    inter = fwd & {(i, j) for j, i in rev}
    print("intersection:", sorted(inter))

    single = [(["a"], ["b"])]
    t1, _ = oracle_train(single, 1)
    print("single pair t(b|a) =", t1["a"]["b"], " t(b|NULL) =", t1[""]["b"])
