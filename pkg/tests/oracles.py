"""Brute-force reference implementations used only by the tests.

Plain Python loops and ``math``; nothing here imports the package's numeric
code, so agreement with the library is a real cross-check.
"""
import math


def cosine(a, b):
    dot = math.fsum(x * y for x, y in zip(a, b))
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    return max(-1.0, min(1.0, dot / (na * nb)))


def matrix(rows, cols):
    return [[cosine(r, c) for c in cols] for r in rows]


def consensus(mat, e):
    flat = [x for row in mat for x in row]
    mu = math.fsum(flat) / len(flat)
    mu_prime = mu - e
    kept = []
    for row in mat:
        for x in row:
            if x >= mu_prime:
                kept.append(x)
    return kept, mu_prime, mu


def threshold(kept, alpha, e):
    m = len(kept)
    mu = math.fsum(kept) / m
    var = math.fsum((x - mu) ** 2 for x in kept) / m
    f = (math.sqrt(var) / math.sqrt(m)) * alpha
    return (mu - f) - e


def ci_threshold(mat, alpha):
    flat = [x for row in mat for x in row]
    m = len(flat)
    mu = math.fsum(flat) / m
    var = math.fsum((x - mu) ** 2 for x in flat) / m
    return mu - (math.sqrt(var) / math.sqrt(m)) * alpha


def mean_score(probe, refs):
    return math.fsum(cosine(probe, r) for r in refs) / len(refs)


def counts(decisions, is_genuine):
    tp = sum(1 for d, g in zip(decisions, is_genuine) if d and g)
    tn = sum(1 for d, g in zip(decisions, is_genuine) if not d and not g)
    fp = sum(1 for d, g in zip(decisions, is_genuine) if d and not g)
    fn = sum(1 for d, g in zip(decisions, is_genuine) if not d and g)
    return tp, tn, fp, fn


def replay_protocol(groups, split, alpha, e_consensus, e_threshold, master_seed, trials, derive_seed):
    """Re-run the whole writer-dependent protocol with the brute-force pieces above.

    ``groups`` maps writer -> (genuine, forged) sample lists. Only the seed
    derivation and the numpy permutation/choice draws are shared with the
    library, because they define *which* samples are used, not how they are
    scored.
    """
    import numpy as np

    totals = [0, 0, 0, 0]
    separation = {}
    for writer_id, (gen, forg) in groups.items():
        for trial in range(trials):
            seed = derive_seed(master_seed, writer_id, trial, 0)
            order = np.random.default_rng(seed).permutation(len(gen))
            a, b, p = split.n_gallery_a, split.n_gallery_b, split.n_probe_genuine
            ga = [gen[i].feature.tolist() for i in order[:a]]
            gb = [gen[i].feature.tolist() for i in order[a:a + b]]
            probes_g = [gen[i].feature.tolist() for i in order[a + b:a + b + p]]
            k = min(split.n_probe_forge, len(forg))
            rng = np.random.default_rng(derive_seed(master_seed, writer_id, trial, 1))
            probes_f = [forg[i].feature.tolist() for i in rng.choice(len(forg), size=k, replace=False)]
            kept, _, _ = consensus(matrix(gb, ga), e_consensus)
            tau = threshold(kept, alpha, e_threshold)
            refs = ga + gb
            gs = [mean_score(x, refs) for x in probes_g]
            fs = [mean_score(x, refs) for x in probes_f]
            separation[(writer_id, trial)] = (min(gs), max(fs), tau)
            dec = [s >= tau for s in gs + fs]
            c = counts(dec, [True] * len(gs) + [False] * len(fs))
            totals = [t + x for t, x in zip(totals, c)]
    return tuple(totals), separation
