"""Hot inner loops: strengths, modularity, incremental moves, successor sweep.

Every kernel exists in two builds that share one source:

* ``numba_backend`` -- the loop code compiled with ``numba.njit``;
* ``numpy_backend`` -- vectorized numpy replacements where the loop is
  data-parallel, and the same loop code interpreted where it is inherently
  sequential (the move operators).

Sums that feed fitness values run in a fixed row-major sequential order in
both builds (``np.cumsum`` is sequential), so the two backends produce
bitwise identical modularity values and therefore identical search traces.

``active`` is the backend chosen at import time, see :mod:`covns._accel`.
"""

from types import SimpleNamespace

import numpy as np

from covns import _accel

# Operator codes used inside kernels. Bit 0 selects arity 3, bit 1 selects CC.
CE1, CE3, CC1, CC3 = 0, 1, 2, 3

# Uniform draws consumed per successor: operator, three node picks, three label picks.
UNIFORMS_PER_MOVE = 7


# ---------------------------------------------------------------------------
# loop sources (compiled by numba, or run as-is)


def _strengths_loop(w):
    n = w.shape[0]
    s_in = np.zeros(n)
    s_out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += w[i, j]
        s_out[i] = acc
    for j in range(n):
        acc = 0.0
        for i in range(n):
            acc += w[i, j]
        s_in[j] = acc
    total = 0.0
    for i in range(n):
        total += s_out[i]
    return s_in, s_out, total


def _modularity_loop(b, total, labels):
    n = labels.shape[0]
    acc = 0.0
    for i in range(n):
        li = labels[i]
        for j in range(n):
            if labels[j] == li:
                acc += b[i, j]
    return acc / total


def _delta_loop(b, total, labels, node, new_label):
    old = labels[node]
    if new_label == old:
        return 0.0
    gain = 0.0
    loss = 0.0
    for u in range(labels.shape[0]):
        if u == node:
            continue
        if labels[u] == new_label:
            gain += b[node, u] + b[u, node]
        elif labels[u] == old:
            loss += b[node, u] + b[u, node]
    return (gain - loss) / total


def _repair_loop(labels):
    top = 0
    for v in range(labels.shape[0]):
        if labels[v] > top:
            top = labels[v]
    mapping = np.zeros(top + 1, dtype=np.int64)
    nxt = 1
    for v in range(labels.shape[0]):
        lab = labels[v]
        if mapping[lab] == 0:
            mapping[lab] = nxt
            nxt += 1
        labels[v] = mapping[lab]
    return nxt - 1


def _make_successor(repair):
    def successor(labels, arity, is_cc, u):
        # u[1:4] pick nodes, u[4:7] pick labels; labels is canonical on entry
        n = labels.shape[0]
        a = min(arity, n)
        counts = np.zeros(n + a + 2, dtype=np.int64)
        top = 0
        for v in range(n):
            counts[labels[v]] += 1
            if labels[v] > top:
                top = labels[v]
        perm = np.arange(n)
        for i in range(a):
            j = i + int(u[1 + i] * (n - i))
            if j > n - 1:
                j = n - 1
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
        for i in range(a):
            node = perm[i]
            prev = labels[node]
            counts[prev] -= 1
            n_exist = 0
            for lab in range(1, top + 1):
                if counts[lab] > 0:
                    n_exist += 1
            skip = 0
            if is_cc:
                n_cand = n_exist + 1
            else:
                if n_exist > 1 and counts[prev] > 0:
                    skip = prev
                n_cand = n_exist - (1 if skip > 0 else 0)
            new = prev
            if n_cand > 0:
                idx = int(u[4 + i] * n_cand)
                if idx > n_cand - 1:
                    idx = n_cand - 1
                if is_cc and idx == n_exist:
                    top += 1
                    new = top
                else:
                    seen = 0
                    for lab in range(1, top + 1):
                        if counts[lab] > 0 and lab != skip:
                            if seen == idx:
                                new = lab
                                break
                            seen += 1
            labels[node] = new
            counts[new] += 1
        repair(labels)

    return successor


def _make_sweep(successor, modularity):
    def sweep(b, total, pop, fitness, uniforms, ops, out):
        # one successor per slot for the first uniforms.shape[0] slots
        n_ops = ops.shape[0]
        buf = np.empty(pop.shape[1], dtype=np.int64)
        for i in range(uniforms.shape[0]):
            for v in range(pop.shape[1]):
                buf[v] = pop[i, v]
            k = int(uniforms[i, 0] * n_ops)
            if k > n_ops - 1:
                k = n_ops - 1
            code = ops[k]
            arity = 3 if (code & 1) else 1
            successor(buf, arity, code >= 2, uniforms[i])
            q = modularity(b, total, buf)
            out[i] = q
            if q > fitness[i]:
                for v in range(pop.shape[1]):
                    pop[i, v] = buf[v]
                fitness[i] = q

    return sweep


# ---------------------------------------------------------------------------
# vectorized numpy replacements


def _strengths_np(w):
    w = np.asarray(w, dtype=np.float64)
    if w.shape[0] == 0:
        return np.zeros(0), np.zeros(0), 0.0
    s_out = np.cumsum(w, axis=1)[:, -1].copy()
    s_in = np.cumsum(w, axis=0)[-1].copy()
    total = float(np.cumsum(s_out)[-1])
    return s_in, s_out, total


def _modularity_np(b, total, labels):
    same = labels[:, None] == labels[None, :]
    # adding 0.0 leaves a running sum unchanged, so this matches the loop bitwise
    return float(np.cumsum(np.where(same, b, 0.0).ravel())[-1]) / total


def _delta_np(b, total, labels, node, new_label):
    old = labels[node]
    if new_label == old:
        return 0.0
    sym = b[node, :] + b[:, node]
    mask = np.ones(labels.shape[0], dtype=bool)
    mask[node] = False
    gain = sym[mask & (labels == new_label)].sum()
    loss = sym[mask & (labels == old)].sum()
    return float(gain - loss) / total


def _repair_np(labels):
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.shape[0], dtype=np.int64)
    rank[np.argsort(first)] = np.arange(1, first.shape[0] + 1)
    labels[:] = rank[inverse.ravel()]
    return first.shape[0]


def _build_numpy():
    successor = _make_successor(_repair_np)
    return SimpleNamespace(
        name="numpy",
        strengths=_strengths_np,
        modularity=_modularity_np,
        delta=_delta_np,
        repair=_repair_np,
        successor=successor,
        sweep=_make_sweep(successor, _modularity_np),
    )


def _build_numba():
    jit = _accel.njit
    repair = jit(_repair_loop)
    modularity = jit(_modularity_loop)
    successor = jit(_make_successor(repair))
    return SimpleNamespace(
        name="numba",
        strengths=jit(_strengths_loop),
        modularity=modularity,
        delta=jit(_delta_loop),
        repair=repair,
        successor=successor,
        sweep=jit(_make_sweep(successor, modularity)),
    )


numpy_backend = _build_numpy()
numba_backend = _build_numba() if _accel.NUMBA_AVAILABLE else None
active = numba_backend if _accel.USE_NUMBA else numpy_backend


def backend(name=None):
    """Return the kernel namespace ``name`` ("numba" or "numpy"), default active."""
    if name is None:
        return active
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        if numba_backend is None:
            raise RuntimeError("numba backend requested but numba is not installed")
        return numba_backend
    raise ValueError(f"unknown backend {name!r}")
