"""Pure-Python neighbour-sampling kernel.

Bit-for-bit twin of ``_ext.pyx``: both consume the supplied uniforms in the
same fixed pattern, so the backends produce identical draws.
"""

from __future__ import annotations


def _closure(parents, n):
    children = [0] * n
    for v in range(n):
        pm = parents[v]
        while pm:
            low = pm & -pm
            children[low.bit_length() - 1] |= 1 << v
            pm ^= low
    desc = [0] * n
    done = 0
    # repeated sweeps in index order until every node is placed bottom-up
    while done != (1 << n) - 1:
        for v in range(n):
            if (done >> v) & 1:
                continue
            ch = children[v]
            if ch & ~done:
                continue
            d = ch
            c = ch
            while c:
                low = c & -c
                d |= desc[low.bit_length() - 1]
                c ^= low
            desc[v] = d
            done |= 1 << v
    return desc


def _car(parents, n, u):
    count = 0
    for h in range(n):
        ph = parents[h]
        pm = ph
        while pm:
            low = pm & -pm
            t = low.bit_length() - 1
            if ph == parents[t] | low:
                count += 1
            pm ^= low
    if count == 0:
        return
    pick = int(u * count)
    if pick >= count:
        pick = count - 1
    for h in range(n):
        ph = parents[h]
        pm = ph
        while pm:
            low = pm & -pm
            t = low.bit_length() - 1
            if ph == parents[t] | low:
                if pick == 0:
                    parents[h] = ph & ~low
                    parents[t] |= 1 << h
                    return
                pick -= 1
            pm ^= low


def sample_batch(parents, uniforms, n_pre, n_draws, cars):
    """Walk the equivalence class by covered arc reversals and draw neighbours.

    Returns ``(heads, old_masks, new_masks, neighbours)`` where draw ``i``
    changed the parent set of ``heads[i]`` from ``old_masks[i]`` to
    ``new_masks[i]`` and ``neighbours[i]`` is the full parent-mask tuple.
    """
    n = len(parents)
    w = [int(p) for p in parents]
    full = (1 << n) - 1
    ui = 0
    for _ in range(n_pre):
        _car(w, n, uniforms[ui])
        ui += 1
    heads, olds, news, nbrs = [], [], [], []
    for _ in range(n_draws):
        for _ in range(cars):
            _car(w, n, uniforms[ui])
            ui += 1
        desc = _closure(w, n)
        children = [0] * n
        anc = [0] * n
        for v in range(n):
            pm = w[v]
            while pm:
                low = pm & -pm
                children[low.bit_length() - 1] |= 1 << v
                pm ^= low
            dm = desc[v]
            while dm:
                low = dm & -dm
                anc[low.bit_length() - 1] |= 1 << v
                dm ^= low
        legal = [0] * n
        total = 0
        for x in range(n):
            ch = children[x]
            m = ch | (full & ~ch & ~w[x] & ~anc[x] & ~(1 << x))
            legal[x] = m
            total += m.bit_count()
        u = uniforms[ui]
        ui += 1
        if total == 0:
            raise RuntimeError("no legal arc move")
        pick = int(u * total)
        if pick >= total:
            pick = total - 1
        for x in range(n):
            c = legal[x].bit_count()
            if pick < c:
                m = legal[x]
                for _ in range(pick):
                    m &= m - 1
                y = (m & -m).bit_length() - 1
                break
            pick -= c
        old = w[y]
        new = old ^ (1 << x)
        nb = list(w)
        nb[y] = new
        heads.append(y)
        olds.append(old)
        news.append(new)
        nbrs.append(tuple(nb))
    return heads, olds, news, nbrs


def uniforms_needed(n_pre, n_draws, cars):
    return n_pre + n_draws * (cars + 1)
