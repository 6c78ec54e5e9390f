"""Generate the bundled citation benchmark in .content/.cites text format.

Produces a deterministic synthetic corpus whose headline statistics match the
published Cora benchmark: 2708 papers, 1433 binary bag-of-words features,
seven classes with the canonical class sizes, and exactly 5429 unique
undirected citation pairs at ~0.81 label homophily. Documents draw most words
from a class-specific vocabulary block plus a shared pool; a small fraction
of "hard" documents draw heavily from foreign vocabularies. Citations favor
hub papers via a heavy-tailed weight per node.

Usage: python scripts/make_cora_like.py [--out data] [--seed 20260814]
"""

from __future__ import annotations

import argparse
import os

import numpy as np

CLASSES = [
    ("Case_Based", 298),
    ("Genetic_Algorithms", 418),
    ("Neural_Networks", 818),
    ("Probabilistic_Methods", 426),
    ("Reinforcement_Learning", 217),
    ("Rule_Learning", 180),
    ("Theory", 351),
]
N = sum(size for _, size in CLASSES)  # 2708
D = 1433
EDGES = 5429
INTRA_EDGES = 4398  # homophily 4398/5429 = 0.810
BLOCK = 140  # class-vocabulary width; 7*140 = 980, shared pool = 453

# word-source mixture (class block / shared pool / foreign blocks)
CLEAN_MIX = (0.48, 0.34, 0.18)
HARD_MIX = (0.18, 0.42, 0.40)
HARD_FRACTION = 0.26
NEIGHBOR_SPILL = 0.52  # class words drawn from an adjacent class's block
WORDS_PER_DOC = 19


def _class_block_word(rng, c):
    # vocabulary blocks of adjacent classes overlap in usage, which makes
    # specific class pairs genuinely confusable rather than diffusely noisy
    u = rng.random()
    if u < NEIGHBOR_SPILL / 2:
        c = (c + 1) % len(CLASSES)
    elif u < NEIGHBOR_SPILL:
        c = (c - 1) % len(CLASSES)
    return rng.integers(c * BLOCK, (c + 1) * BLOCK)


def _sample_words(rng, c, mix, count):
    shared_lo = len(CLASSES) * BLOCK
    words = []
    for _ in range(count):
        u = rng.random()
        if u < mix[0]:
            words.append(_class_block_word(rng, c))
        elif u < mix[0] + mix[1]:
            words.append(rng.integers(shared_lo, D))
        else:
            other = (c + 1 + rng.integers(0, len(CLASSES) - 1)) % len(CLASSES)
            words.append(rng.integers(other * BLOCK, (other + 1) * BLOCK))
    return words


def make_features(rng, labels):
    features = np.zeros((N, D), dtype=np.int8)
    hard = rng.random(N) < HARD_FRACTION
    for i in range(N):
        mix = HARD_MIX if hard[i] else CLEAN_MIX
        count = max(6, int(rng.poisson(WORDS_PER_DOC)))
        features[i, _sample_words(rng, labels[i], mix, count)] = 1
    return features


def _weighted_pick(rng, members, weights, size):
    probs = weights[members]
    return rng.choice(members, size=size, p=probs / probs.sum())


def make_citations(rng, labels):
    """Exactly EDGES unique undirected pairs, INTRA_EDGES of them intra-class."""
    members = [np.nonzero(labels == c)[0] for c in range(len(CLASSES))]
    hub_weight = (1.0 - rng.random(N)) ** (-0.55)  # heavy-tailed hubs
    sizes = np.array([m.size for m in members], dtype=np.float64)

    chosen: set[tuple[int, int]] = set()
    intra = 0
    inter = 0
    while intra < INTRA_EDGES or inter < EDGES - INTRA_EDGES:
        want_intra = intra < INTRA_EDGES and (
            inter >= EDGES - INTRA_EDGES or rng.random() < INTRA_EDGES / EDGES
        )
        if want_intra:
            c = rng.choice(len(CLASSES), p=sizes / sizes.sum())
            p, q = _weighted_pick(rng, members[c], hub_weight, 2)
        else:
            c, d = rng.choice(len(CLASSES), size=2, replace=False, p=sizes / sizes.sum())
            p = _weighted_pick(rng, members[c], hub_weight, 1)[0]
            q = _weighted_pick(rng, members[d], hub_weight, 1)[0]
        if p == q:
            continue
        pair = (min(p, q), max(p, q))
        if pair in chosen:
            continue
        chosen.add(pair)
        if want_intra:
            intra += 1
        else:
            inter += 1

    # every node must participate: swap in an intra edge per isolated node,
    # removing a surplus intra edge between well-connected nodes
    degree = np.zeros(N, dtype=np.int64)
    for p, q in chosen:
        degree[p] += 1
        degree[q] += 1
    for node in np.nonzero(degree == 0)[0]:
        c = labels[node]
        while True:
            other = _weighted_pick(rng, members[c], hub_weight, 1)[0]
            pair = (min(node, other), max(node, other))
            if other != node and pair not in chosen:
                break
        candidates = [
            e
            for e in chosen
            if labels[e[0]] == labels[e[1]] and degree[e[0]] > 2 and degree[e[1]] > 2
        ]
        victim = candidates[rng.integers(0, len(candidates))]
        chosen.remove(victim)
        degree[victim[0]] -= 1
        degree[victim[1]] -= 1
        chosen.add(pair)
        degree[pair[0]] += 1
        degree[pair[1]] += 1

    assert len(chosen) == EDGES
    return sorted(chosen)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data")
    parser.add_argument("--seed", type=int, default=20260814)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)

    labels = np.repeat(
        np.arange(len(CLASSES)), [size for _, size in CLASSES]
    ).astype(np.int64)
    labels = labels[rng.permutation(N)]
    class_names = [name for name, _ in CLASSES]

    paper_ids = rng.choice(np.arange(10000, 10000000), size=N, replace=False)
    features = make_features(rng, labels)
    edges = make_citations(rng, labels)

    os.makedirs(args.out, exist_ok=True)
    content_path = os.path.join(args.out, "cora.content")
    with open(content_path, "w", encoding="utf-8") as fh:
        for i in range(N):
            row = "\t".join(str(v) for v in features[i])
            fh.write(f"{paper_ids[i]}\t{row}\t{class_names[labels[i]]}\n")

    cites_path = os.path.join(args.out, "cora.cites")
    order = rng.permutation(len(edges))
    with open(cites_path, "w", encoding="utf-8") as fh:
        for idx in order:
            p, q = edges[idx]
            if rng.random() < 0.5:
                p, q = q, p
            fh.write(f"{paper_ids[p]}\t{paper_ids[q]}\n")

    intra = sum(1 for p, q in edges if labels[p] == labels[q])
    print(f"wrote {content_path} ({N} nodes, {D} features)")
    print(f"wrote {cites_path} ({len(edges)} edges, homophily {intra/len(edges):.3f})")


if __name__ == "__main__":
    main()
