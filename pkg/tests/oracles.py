"""Independent reference implementations used to cross-check the package.

Everything here is written in the most literal style possible (nested loops,
dense enumeration, third-party numerics) and must never import from the
modules it checks beyond plain data types.
"""

import itertools

import numpy as np


def conv2d_loop_oracle(x, w, b=None, stride=1, pad=1):
    """Direct nested-loop cross-correlation."""
    x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    bsz, cin, h, wd = x.shape
    f, _, kh, kw = w.shape
    oh = (h - kh) // stride + 1
    ow = (wd - kw) // stride + 1
    out = np.zeros((bsz, f, oh, ow), dtype=np.float64)
    for n in range(bsz):
        for oc in range(f):
            for oy in range(oh):
                for ox in range(ow):
                    acc = 0.0
                    for ic in range(cin):
                        for ky in range(kh):
                            for kx in range(kw):
                                acc += (x[n, ic, oy * stride + ky, ox * stride + kx]
                                        * w[oc, ic, ky, kx])
                    out[n, oc, oy, ox] = acc + (b[oc] if b is not None else 0.0)
    return out


def cosine_distance_matrix(vectors):
    vecs = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    unit = vecs / np.maximum(norms, 1e-12)
    return np.clip(1.0 - unit @ unit.T, 0.0, None)


def average_linkage_oracle(dist, k_target):
    """Agglomerative average linkage by exhaustive recomputation.

    Clusters are frozensets of original indices; at each step the pair with
    the smallest mean pairwise distance merges, ties broken by the smallest
    member index of the combined cluster (then by the second cluster's).
    """
    clusters = [frozenset([i]) for i in range(len(dist))]
    while len(clusters) > k_target:
        best = None
        for ia, ib in itertools.combinations(range(len(clusters)), 2):
            a, b = clusters[ia], clusters[ib]
            d = np.mean([dist[i, j] for i in a for j in b])
            key = (d, min(min(a), min(b)), max(min(a), min(b)))
            if best is None or key < best[0]:
                best = (key, ia, ib)
        _, ia, ib = best
        merged = clusters[ia] | clusters[ib]
        clusters = [c for idx, c in enumerate(clusters) if idx not in (ia, ib)]
        clusters.append(merged)
    labels = np.empty(len(dist), dtype=int)
    # Deterministic label order: by smallest member index.
    for label, cluster in enumerate(sorted(clusters, key=min)):
        for i in cluster:
            labels[i] = label
    return labels


def partition_as_sets(labels):
    """Label-invariant view of a clustering: frozenset of frozensets."""
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, set()).add(i)
    return frozenset(frozenset(g) for g in groups.values())


def frechet_oracle(emb_a, emb_b):
    """FID formula via scipy's general matrix square root."""
    import scipy.linalg

    mu_a, mu_b = emb_a.mean(axis=0), emb_b.mean(axis=0)
    cov_a = np.cov(emb_a, rowvar=False)
    cov_b = np.cov(emb_b, rowvar=False)
    covmean = scipy.linalg.sqrtm(cov_a @ cov_b)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    diff = mu_a - mu_b
    return float(diff @ diff + np.trace(cov_a + cov_b - 2.0 * covmean))


def softmax_oracle(x, axis):
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def contextual_oracle(gen, real, band_width=0.5, eps=1e-5):
    """Loop transliteration of the set-matching feature loss.

    gen/real: [C, N] and [C, M] column-feature matrices.
    """
    gen = np.asarray(gen, dtype=np.float64)
    real = np.asarray(real, dtype=np.float64)
    mu = real.mean(axis=1, keepdims=True)
    g = gen - mu
    r = real - mu
    n, m = g.shape[1], r.shape[1]
    d = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            gi, rj = g[:, i], r[:, j]
            denom = max(np.linalg.norm(gi) * np.linalg.norm(rj), 1e-12)
            d[i, j] = 1.0 - float(gi @ rj) / denom
    dt = d / (d.min(axis=1, keepdims=True) + eps)
    w = np.exp((1.0 - dt) / band_width)
    cx = w / w.sum(axis=1, keepdims=True)
    score = cx.max(axis=0).mean()
    return -np.log(score)


def adam_oracle_step(theta, grad, m, v, t, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One textbook Adam update on plain floats/arrays."""
    m = beta1 * m + (1 - beta1) * grad
    v = beta2 * v + (1 - beta2) * grad * grad
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
    return theta, m, v
