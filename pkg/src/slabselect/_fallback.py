"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Arithmetic is ordered exactly as in the Cython source, so both backends
produce bit-identical results; keep them in lockstep when editing.
"""
import numpy as np


def sweep(mu, wt, dx, sigma_t, q, phi, psi_edge):
    ncell = q.shape[0]
    a = np.abs(mu) / dx
    half = 0.5 * sigma_t
    num = a - half
    den = a + half
    pos = mu > 0
    neg = ~pos
    psi_cell = np.empty((ncell, mu.shape[0]))

    pin = np.zeros(int(pos.sum()))
    psi_edge[0, pos] = 0.0
    num_p, den_p = num[pos], den[pos]
    for i in range(ncell):
        pout = (num_p * pin + q[i]) / den_p
        psi_cell[i, pos] = 0.5 * (pin + pout)
        psi_edge[i + 1, pos] = pout
        pin = pout

    pin = np.zeros(int(neg.sum()))
    psi_edge[ncell, neg] = 0.0
    num_n, den_n = num[neg], den[neg]
    for i in range(ncell - 1, -1, -1):
        pout = (num_n * pin + q[i]) / den_n
        psi_cell[i, neg] = 0.5 * (pin + pout)
        psi_edge[i, neg] = pout
        pin = pout

    phi[:] = 0.0
    for n in range(mu.shape[0]):
        phi[:] = phi + wt[n] * psi_cell[:, n]


def thomas(lower, diag, upper, rhs):
    n = diag.shape[0]
    x = np.empty(n)
    d = np.empty(n)
    r = np.empty(n)
    d[0] = diag[0]
    r[0] = rhs[0]
    if abs(d[0]) < 1e-300:
        return x, False
    for k in range(1, n):
        m = lower[k - 1] / d[k - 1]
        d[k] = diag[k] - m * upper[k - 1]
        r[k] = rhs[k] - m * r[k - 1]
        if abs(d[k]) < 1e-300:
            return x, False
    x[n - 1] = r[n - 1] / d[n - 1]
    for k in range(n - 2, -1, -1):
        x[k] = (r[k] - upper[k] * x[k + 1]) / d[k]
    return x, True


def _best_split_on(values, labels, parent_counts, n_classes, min_leaf):
    """Scan sorted ``values``; return (score, pos, sl, sr, threshold) or None."""
    m = values.shape[0]
    onehot = np.zeros((m, n_classes), dtype=np.intp)
    onehot[np.arange(m), labels] = 1
    lcount = np.cumsum(onehot, axis=0)[:-1]  # row pos-1 -> left counts for split at pos
    rcount = parent_counts[None, :] - lcount
    pos = np.arange(1, m)
    ok = (values[:-1] < values[1:]) & (pos >= min_leaf) & (m - pos >= min_leaf)
    if not ok.any():
        return None
    sl = np.zeros(m - 1, dtype=np.int64)
    sr = np.zeros(m - 1, dtype=np.int64)
    for k in range(n_classes):
        sl = sl + lcount[:, k] * lcount[:, k]
        sr = sr + rcount[:, k] * rcount[:, k]
    score = sl / pos + sr / (m - pos)
    score = np.where(ok, score, -1.0)
    j = int(np.argmax(score))
    near = np.flatnonzero(ok & (score >= score[j] - 1e-9 * abs(score[j])))
    for t in near:
        if _beats(score[t], sl[t], sr[t], t + 1, m - t - 1,
                  score[j], sl[j], sr[j], j + 1, m - j - 1):
            j = int(t)
    thr = 0.5 * (values[j] + values[j + 1])
    return float(score[j]), j + 1, int(sl[j]), int(sr[j]), float(thr)


def _beats(score, sl, sr, nl, nr, best, bsl, bsr, bnl, bnr):
    # float scores decide clear cases; near-ties compare (sl*nr + sr*nl)/(nl*nr) exactly
    window = 1e-9 * abs(best)
    if score > best + window:
        return True
    if score < best - window:
        return False
    sl, sr, nl, nr = int(sl), int(sr), int(nl), int(nr)
    bsl, bsr, bnl, bnr = int(bsl), int(bsr), int(bnl), int(bnr)
    return (sl * nr + sr * nl) * (bnl * bnr) > (bsl * bnr + bsr * bnl) * (nl * nr)


def grow_tree(X, y, sample, n_classes, mtry, min_leaf, keys):
    n = sample.shape[0]
    p = X.shape[1]
    max_nodes = 2 * n - 1 if n > 0 else 1
    feature = np.full(max_nodes, -1, dtype=np.intp)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.intp)
    right = np.full(max_nodes, -1, dtype=np.intp)
    counts = np.zeros((max_nodes, n_classes), dtype=np.intp)
    decrease = np.zeros(max_nodes)
    if n == 0:
        return feature[:1], threshold[:1], left[:1], right[:1], counts[:1], decrease[:1]

    idx = np.array(sample, dtype=np.intp)
    node_count = 1
    stack = [(0, 0, n)]
    while stack:
        node, start, end = stack.pop()
        m = end - start
        seg = idx[start:end]
        c = np.bincount(y[seg], minlength=n_classes)
        counts[node] = c
        sp = int(np.sum(c.astype(np.int64) ** 2))
        if np.count_nonzero(c) <= 1 or m < 2 * min_leaf:
            continue

        sub = X[seg]
        cand = [f for f in range(p) if sub[:, f].max() > sub[:, f].min()]
        if not cand:
            continue
        cand.sort(key=lambda f: (keys[node, f], f))
        chosen = cand[:min(mtry, len(cand))]

        best = None
        best_f = -1
        for f in chosen:
            order = np.argsort(X[seg, f], kind="stable")
            found = _best_split_on(X[seg[order], f], y[seg[order]], c, n_classes, min_leaf)
            if found is not None and (best is None or _beats(
                    found[0], found[2], found[3], found[1], m - found[1],
                    best[0], best[2], best[3], best[1], m - best[1])):
                best, best_f = found, f
        if best is None:
            continue
        score, nl, sl, sr, thr = best
        nr = m - nl
        if not ((sl * nr + sr * nl) * m > sp * nl * nr):
            continue
        order = np.argsort(X[seg, best_f], kind="stable")
        idx[start:end] = seg[order]

        feature[node] = best_f
        threshold[node] = thr
        decrease[node] = score - sp / m
        left[node] = node_count
        right[node] = node_count + 1
        node_count += 2
        stack.append((right[node], start + nl, end))
        stack.append((left[node], start, start + nl))

    k = node_count
    return feature[:k], threshold[:k], left[:k], right[:k], counts[:k], decrease[:k]


def apply_tree(X, feature, threshold, left, right):
    node = np.zeros(X.shape[0], dtype=np.intp)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node
