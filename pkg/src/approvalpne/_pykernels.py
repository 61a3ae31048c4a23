"""Pure-Python kernels; same contract as the compiled ``_kernels`` module.

All inputs are integers. Candidate ``c`` is bit ``c`` of a ballot or
committee mask. Ballots whose size exceeds ``max_size`` get ``INVALID``.
"""

import itertools

INVALID = -(1 << 63)


def elect_mask(counts, weights, prio_rank, k):
    m = len(counts)
    keys = sorted(((counts[c] * weights[c], -prio_rank[c], c) for c in range(m)), reverse=True)
    mask = 0
    for _, _, c in keys[:k]:
        mask |= 1 << c
    return mask


def committee_utility(mask, util, owa, pref_order):
    total = 0
    j = 0
    top = len(owa)
    for c in pref_order:
        if mask >> c & 1:
            total += owa[j] * util[c]
            j += 1
            if j == top:
                break
    return total


def scan_ballots(base_counts, weights, prio_rank, k, util, owa, pref_order, max_size):
    m = len(base_counts)
    out = [INVALID] * (1 << m)
    counts = list(base_counts)
    for ballot in range(1 << m):
        if bin(ballot).count("1") > max_size:
            continue
        for c in range(m):
            counts[c] = base_counts[c] + (ballot >> c & 1)
        out[ballot] = committee_utility(elect_mask(counts, weights, prio_rank, k), util, owa, pref_order)
    return out


def profile_filter(accept, code, n, ncodes):
    """Profiles (tuples of ballot masks, in ``itertools.product`` order) in which
    every voter's ballot is accepted against the others.

    ``code[b]`` packs ballot ``b``'s approvals as a base ``n+1`` count vector
    and ``accept[i * ncodes + x]`` is the bitset of ballots voter ``i`` accepts
    when the others' packed counts are ``x``.
    """
    found = []
    for masks in itertools.product(range(len(code)), repeat=n):
        total = sum(code[b] for b in masks)
        for i, own in enumerate(masks):
            if not accept[i * ncodes + total - code[own]] >> own & 1:
                break
        else:
            found.append(masks)
    return found


PLAIN, LAZY, SINCERE = 0, 1, 2


def accept_table(max_count, base, weights, prio_rank, k, util, owa, pref_order, kind, sincere_bits):
    """Bitset of accepted ballots for every others-count vector with entries ``<= max_count``.

    Entry ``x`` of the result is indexed by the vector packed base ``base``;
    unreachable codes hold 0. ``kind`` is ``PLAIN`` (utility-maximal),
    ``LAZY`` (also of minimal size) or ``SINCERE`` (also in ``sincere_bits``).
    """
    m = len(weights)
    out = [0] * base**m
    place = [base**c for c in range(m)]
    for counts in itertools.product(range(max_count + 1), repeat=m):
        values = scan_ballots(counts, weights, prio_rank, k, util, owa, pref_order, m)
        best = max(values)
        ok = [b for b, u in enumerate(values) if u == best]
        if kind == LAZY:
            size = min(b.bit_count() for b in ok)
            ok = [b for b in ok if b.bit_count() == size]
        elif kind == SINCERE:
            ok = [b for b in ok if sincere_bits >> b & 1]
        bits = 0
        for b in ok:
            bits |= 1 << b
        out[sum(s * p for s, p in zip(counts, place))] = bits
    return out
