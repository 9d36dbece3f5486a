"""Decoders: exact minimum-weight perfect matching and BP-OSD.

Two decoding problems appear in the pipeline. Point-like defects
(violated metacheck nodes, violated X cells, violated 2D checks) are
paired up by ``mwpm`` on a :class:`MatchingGraph`; the correction is the
XOR of the edge supports along the matched paths, and virtual boundary
nodes absorb unpaired defects. Loop-like syndromes from qubit errors are
handled by ``bposd``: belief propagation with a serial product-sum
schedule, then ordered-statistics post-processing that always returns an
exact solution of ``H x = s``.

The matching core is an exact primal-dual blossom algorithm (maximum
cardinality first, then maximum weight) compiled with numba; it is fed a
dense defect-to-defect graph built from precomputed all-pairs shortest
paths. Ties between equal-weight matchings are resolved by fixed
ascending scan order, so decoding is deterministic.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.sparse.csgraph import dijkstra

from . import gf2
from .pauli import Syndrome, X_CHECKS, Z_CHECKS

_INF = np.int64(1) << np.int64(40)


# ---------------------------------------------------------------------------
# blossom kernel
#
# Primal-dual method with dual variables on vertices and blossoms.
# Weights are doubled on entry so every dual update stays integral.
# Labels: 0 free, 1 = S (even), 2 = T (odd), 5 = S marked during the
# lowest-common-ancestor scan, -1 recycled blossom slot. mate_ep stores
# remote edge endpoints (2k or 2k+1), not vertex ids.


@njit(cache=True)
def _assign_label(nv, endpoint, mate_ep, label, labelend, inblossom, bbase,
                  childs, childs_len, bestedge, queue, qh, stackbuf,
                  w0, t0, p0):
    # label w0's blossom t0; a T label chains an S label onto the mate
    aw = w0
    at = t0
    ap = p0
    while True:
        ab = inblossom[aw]
        label[aw] = at
        label[ab] = at
        labelend[aw] = ap
        labelend[ab] = ap
        bestedge[aw] = -1
        bestedge[ab] = -1
        if at == 1:
            # queue every leaf vertex of ab, left to right
            sn = 0
            stackbuf[sn] = ab
            sn += 1
            while sn > 0:
                sn -= 1
                x = stackbuf[sn]
                if x < nv:
                    queue[qh[0]] = x
                    qh[0] += 1
                else:
                    for ci in range(childs_len[x] - 1, -1, -1):
                        stackbuf[sn] = childs[x, ci]
                        sn += 1
            return
        base = bbase[ab]
        aw = endpoint[mate_ep[base]]
        at = 1
        ap = mate_ep[base] ^ 1


@njit(cache=True)
def _add_blossom(nv, ei, ej, w2, endpoint, nbp, nbl, mate_ep, label,
                 labelend, inblossom, bparent, bbase, bestedge, dualvar,
                 childs, childs_len, endps, bbe, bbe_len, queue, qh,
                 stackbuf, bestto, base, k):
    nb = 2 * nv
    v = ei[k]
    w = ej[k]
    bb = inblossom[base]
    bv = inblossom[v]
    bw = inblossom[w]
    b = np.int64(-1)
    for cand in range(nv, nb):
        if bbase[cand] < 0:
            b = cand
            break
    bbase[b] = base
    bparent[b] = -1
    bparent[bb] = b

    # trace both tree paths down to the base; children alternate S and T
    cl = 0
    el = 0
    while bv != bb:
        bparent[bv] = b
        childs[b, cl] = bv
        cl += 1
        endps[b, el] = labelend[bv]
        el += 1
        v = endpoint[labelend[bv]]
        bv = inblossom[v]
    childs[b, cl] = bb
    cl += 1
    for i in range(cl // 2):
        t = childs[b, i]
        childs[b, i] = childs[b, cl - 1 - i]
        childs[b, cl - 1 - i] = t
    for i in range(el // 2):
        t = endps[b, i]
        endps[b, i] = endps[b, el - 1 - i]
        endps[b, el - 1 - i] = t
    endps[b, el] = 2 * k
    el += 1
    while bw != bb:
        bparent[bw] = b
        childs[b, cl] = bw
        cl += 1
        endps[b, el] = labelend[bw] ^ 1
        el += 1
        w = endpoint[labelend[bw]]
        bw = inblossom[w]
    childs_len[b] = cl
    label[b] = 1
    labelend[b] = labelend[bb]
    dualvar[b] = 0

    # leaves move into the new blossom; former T-vertices re-enter the
    # queue as S-vertices
    sn = 0
    stackbuf[sn] = b
    sn += 1
    while sn > 0:
        sn -= 1
        x = stackbuf[sn]
        if x < nv:
            if label[inblossom[x]] == 2:
                queue[qh[0]] = x
                qh[0] += 1
            inblossom[x] = b
        else:
            for ci in range(childs_len[x] - 1, -1, -1):
                stackbuf[sn] = childs[x, ci]
                sn += 1

    # merge the children's least-slack edge lists
    for t in range(nb):
        bestto[t] = -1
    for cidx in range(cl):
        cb = childs[b, cidx]
        if bbe_len[cb] < 0:
            # no cached list: scan all edges of all leaves of cb
            sn = 0
            stackbuf[sn] = cb
            sn += 1
            while sn > 0:
                sn -= 1
                x = stackbuf[sn]
                if x < nv:
                    for pi in range(nbp[x], nbp[x + 1]):
                        kk = nbl[pi] >> 1
                        jj = ej[kk]
                        if inblossom[jj] == b:
                            jj = ei[kk]
                        bj = inblossom[jj]
                        if bj != b and label[bj] == 1:
                            if bestto[bj] == -1 or (
                                    dualvar[ei[kk]] + dualvar[ej[kk]]
                                    - w2[kk]) < (
                                    dualvar[ei[bestto[bj]]]
                                    + dualvar[ej[bestto[bj]]]
                                    - w2[bestto[bj]]):
                                bestto[bj] = kk
                else:
                    for ci in range(childs_len[x] - 1, -1, -1):
                        stackbuf[sn] = childs[x, ci]
                        sn += 1
        else:
            for li in range(bbe_len[cb]):
                kk = bbe[cb, li]
                jj = ej[kk]
                if inblossom[jj] == b:
                    jj = ei[kk]
                bj = inblossom[jj]
                if bj != b and label[bj] == 1:
                    if bestto[bj] == -1 or (
                            dualvar[ei[kk]] + dualvar[ej[kk]] - w2[kk]) < (
                            dualvar[ei[bestto[bj]]]
                            + dualvar[ej[bestto[bj]]] - w2[bestto[bj]]):
                        bestto[bj] = kk
        bbe_len[cb] = -1
        bestedge[cb] = -1
    ln = 0
    for t in range(nb):
        if bestto[t] != -1:
            bbe[b, ln] = bestto[t]
            ln += 1
    bbe_len[b] = ln
    bestedge[b] = -1
    for li in range(ln):
        kk = bbe[b, li]
        if bestedge[b] == -1 or (
                dualvar[ei[kk]] + dualvar[ej[kk]] - w2[kk]) < (
                dualvar[ei[bestedge[b]]] + dualvar[ej[bestedge[b]]]
                - w2[bestedge[b]]):
            bestedge[b] = kk


@njit(cache=True)
def _expand_blossom(nv, endpoint, mate_ep, label, labelend, inblossom,
                    bparent, bbase, bestedge, dualvar, childs, childs_len,
                    endps, bbe, bbe_len, allowedge, queue, qh, stackbuf, b):
    # mid-stage expansion of a T-blossom whose dual reached zero
    clen = childs_len[b]
    for ci in range(clen):
        s = childs[b, ci]
        bparent[s] = -1
        if s < nv:
            inblossom[s] = s
        else:
            sn = 0
            stackbuf[sn] = s
            sn += 1
            while sn > 0:
                sn -= 1
                x = stackbuf[sn]
                if x < nv:
                    inblossom[x] = s
                else:
                    for cj in range(childs_len[x] - 1, -1, -1):
                        stackbuf[sn] = childs[x, cj]
                        sn += 1

    # relabel along the path from the entry child to the base child,
    # then scan the far side for sub-blossoms reached from outside
    entrychild = inblossom[endpoint[labelend[b] ^ 1]]
    j = np.int64(0)
    for ci in range(clen):
        if childs[b, ci] == entrychild:
            j = ci
            break
    if j & 1:
        j -= clen
        jstep = np.int64(1)
        ept = np.int64(0)
    else:
        jstep = np.int64(-1)
        ept = np.int64(1)
    p = labelend[b]
    while j != 0:
        label[endpoint[p ^ 1]] = 0
        label[endpoint[endps[b, (j - ept) % clen] ^ ept ^ 1]] = 0
        _assign_label(nv, endpoint, mate_ep, label, labelend, inblossom,
                      bbase, childs, childs_len, bestedge, queue, qh,
                      stackbuf, endpoint[p ^ 1], 2, p)
        allowedge[endps[b, (j - ept) % clen] >> 1] = 1
        j += jstep
        p = endps[b, (j - ept) % clen] ^ ept
        allowedge[p >> 1] = 1
        j += jstep
    bv = childs[b, 0]
    label[endpoint[p ^ 1]] = 2
    label[bv] = 2
    labelend[endpoint[p ^ 1]] = p
    labelend[bv] = p
    bestedge[bv] = -1
    j += jstep
    while childs[b, j % clen] != entrychild:
        bv = childs[b, j % clen]
        if label[bv] == 1:
            j += jstep
            continue
        found = np.int64(-1)
        sn = 0
        stackbuf[sn] = bv
        sn += 1
        while sn > 0:
            sn -= 1
            x = stackbuf[sn]
            if x < nv:
                if label[x] != 0:
                    found = x
                    break
            else:
                for cj in range(childs_len[x] - 1, -1, -1):
                    stackbuf[sn] = childs[x, cj]
                    sn += 1
        if found >= 0:
            label[found] = 0
            label[endpoint[mate_ep[bbase[bv]]]] = 0
            _assign_label(nv, endpoint, mate_ep, label, labelend, inblossom,
                          bbase, childs, childs_len, bestedge, queue, qh,
                          stackbuf, found, 2, labelend[found])
        j += jstep

    label[b] = -1
    labelend[b] = -1
    childs_len[b] = 0
    bbase[b] = -1
    bbe_len[b] = -1
    bestedge[b] = -1


@njit(cache=True)
def _expand_endstage(nv, label, labelend, inblossom, bparent, bbase,
                     bestedge, dualvar, childs, childs_len, bbe_len,
                     stackbuf, work, b0):
    # between stages, S-blossoms with zero dual unwrap; zero-dual
    # children unwrap recursively
    wn = 0
    work[wn] = b0
    wn += 1
    while wn > 0:
        wn -= 1
        b = work[wn]
        clen = childs_len[b]
        for ci in range(clen):
            s = childs[b, ci]
            bparent[s] = -1
            if s < nv:
                inblossom[s] = s
            elif dualvar[s] == 0:
                work[wn] = s
                wn += 1
            else:
                sn = 0
                stackbuf[sn] = s
                sn += 1
                while sn > 0:
                    sn -= 1
                    x = stackbuf[sn]
                    if x < nv:
                        inblossom[x] = s
                    else:
                        for cj in range(childs_len[x] - 1, -1, -1):
                            stackbuf[sn] = childs[x, cj]
                            sn += 1
        label[b] = -1
        labelend[b] = -1
        childs_len[b] = 0
        bbase[b] = -1
        bbe_len[b] = -1
        bestedge[b] = -1


@njit(cache=True)
def _augment_blossom(nv, endpoint, mate_ep, bparent, bbase, childs,
                     childs_len, endps, jobs, rot, b0, v0):
    # re-pair the interior of blossom b0 so that v0 becomes its base;
    # sub-blossom jobs touch disjoint subtrees, so a stack replaces
    # recursion
    jn = 0
    jobs[jn] = b0
    jobs[jn + 1] = v0
    jn += 2
    while jn > 0:
        jn -= 2
        b = jobs[jn]
        v = jobs[jn + 1]
        t = v
        while bparent[t] != b:
            t = bparent[t]
        if t >= nv:
            jobs[jn] = t
            jobs[jn + 1] = v
            jn += 2
        clen = childs_len[b]
        i = np.int64(0)
        for ci in range(clen):
            if childs[b, ci] == t:
                i = ci
                break
        if i & 1:
            j = i - clen
            jstep = np.int64(1)
            ept = np.int64(0)
        else:
            j = i
            jstep = np.int64(-1)
            ept = np.int64(1)
        while j != 0:
            j += jstep
            t2 = childs[b, j % clen]
            p = endps[b, (j - ept) % clen] ^ ept
            if t2 >= nv:
                jobs[jn] = t2
                jobs[jn + 1] = endpoint[p]
                jn += 2
            j += jstep
            t2 = childs[b, j % clen]
            if t2 >= nv:
                jobs[jn] = t2
                jobs[jn + 1] = endpoint[p ^ 1]
                jn += 2
            mate_ep[endpoint[p]] = p ^ 1
            mate_ep[endpoint[p ^ 1]] = p
        for ci in range(clen):
            rot[ci] = childs[b, (i + ci) % clen]
        for ci in range(clen):
            childs[b, ci] = rot[ci]
        for ci in range(clen):
            rot[ci] = endps[b, (i + ci) % clen]
        for ci in range(clen):
            endps[b, ci] = rot[ci]
        bbase[b] = v


@njit(cache=True)
def _augment_matching(nv, ei, ej, endpoint, mate_ep, labelend, inblossom,
                      bparent, bbase, childs, childs_len, endps, jobs, rot,
                      k):
    # swap matched and unmatched edges along both alternating paths
    for side in range(2):
        if side == 0:
            s = ei[k]
            p = 2 * k + 1
        else:
            s = ej[k]
            p = 2 * k
        while True:
            bs = inblossom[s]
            if bs >= nv:
                _augment_blossom(nv, endpoint, mate_ep, bparent, bbase,
                                 childs, childs_len, endps, jobs, rot, bs, s)
            mate_ep[s] = p
            if labelend[bs] == -1:
                break
            t = endpoint[labelend[bs]]
            bt = inblossom[t]
            s = endpoint[labelend[bt]]
            j = endpoint[labelend[bt] ^ 1]
            if bt >= nv:
                _augment_blossom(nv, endpoint, mate_ep, bparent, bbase,
                                 childs, childs_len, endps, jobs, rot, bt, j)
            mate_ep[j] = labelend[bt]
            p = labelend[bt] ^ 1


@njit(cache=True)
def _mwpm_core(nv, ei, ej, ew, mate):
    ne = ei.shape[0]
    nb = 2 * nv

    endpoint = np.empty(2 * ne, np.int64)
    for k in range(ne):
        endpoint[2 * k] = ei[k]
        endpoint[2 * k + 1] = ej[k]
    deg = np.zeros(nv + 1, np.int64)
    for k in range(ne):
        deg[ei[k] + 1] += 1
        deg[ej[k] + 1] += 1
    nbp = np.empty(nv + 1, np.int64)
    nbp[0] = 0
    for v in range(nv):
        nbp[v + 1] = nbp[v] + deg[v + 1]
    fill = nbp[:nv].copy()
    nbl = np.empty(2 * ne, np.int64)
    for k in range(ne):
        i = ei[k]
        j = ej[k]
        nbl[fill[i]] = 2 * k + 1
        fill[i] += 1
        nbl[fill[j]] = 2 * k
        fill[j] += 1

    w2 = np.empty(ne, np.int64)
    maxw = np.int64(0)
    for k in range(ne):
        w2[k] = 2 * ew[k]
        if w2[k] > maxw:
            maxw = w2[k]

    mate_ep = np.full(nv, -1, np.int64)
    label = np.zeros(nb, np.int64)
    labelend = np.full(nb, -1, np.int64)
    inblossom = np.empty(nv, np.int64)
    for v in range(nv):
        inblossom[v] = v
    bparent = np.full(nb, -1, np.int64)
    bbase = np.full(nb, -1, np.int64)
    for v in range(nv):
        bbase[v] = v
    bestedge = np.full(nb, -1, np.int64)
    dualvar = np.zeros(nb, np.int64)
    for v in range(nv):
        dualvar[v] = maxw
    allowedge = np.zeros(ne, np.uint8)

    childs = np.empty((nb, nv + 2), np.int64)
    childs_len = np.zeros(nb, np.int64)
    endps = np.empty((nb, nv + 2), np.int64)
    bbe = np.empty((nb, nb), np.int64)
    bbe_len = np.full(nb, -1, np.int64)

    qcap = nv * nv + 8 * nv + 64
    queue = np.empty(qcap, np.int64)
    qh = np.zeros(1, np.int64)
    pathbuf = np.empty(nb, np.int64)
    stackbuf = np.empty(nb + 2, np.int64)
    bestto = np.empty(nb, np.int64)
    jobs = np.empty(2 * nb + 4, np.int64)
    rot = np.empty(nv + 2, np.int64)
    work = np.empty(2 * nv + 2, np.int64)

    for _stage in range(nv):
        for b in range(nb):
            label[b] = 0
            bestedge[b] = -1
            bbe_len[b] = -1
        for k in range(ne):
            allowedge[k] = 0
        qh[0] = 0

        for v in range(nv):
            if mate_ep[v] == -1 and label[inblossom[v]] == 0:
                _assign_label(nv, endpoint, mate_ep, label, labelend,
                              inblossom, bbase, childs, childs_len,
                              bestedge, queue, qh, stackbuf, v, 1, -1)

        augmented = False
        guard = 0
        while True:
            guard += 1
            if guard > 64 * nb + 64:
                return 4
            while qh[0] > 0 and not augmented:
                qh[0] -= 1
                v = queue[qh[0]]
                for pi in range(nbp[v], nbp[v + 1]):
                    p = nbl[pi]
                    k = p >> 1
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    kslack = np.int64(0)
                    if allowedge[k] == 0:
                        kslack = dualvar[ei[k]] + dualvar[ej[k]] - w2[k]
                        if kslack <= 0:
                            allowedge[k] = 1
                    if allowedge[k] == 1:
                        bw = inblossom[w]
                        if label[bw] == 0:
                            _assign_label(nv, endpoint, mate_ep, label,
                                          labelend, inblossom, bbase, childs,
                                          childs_len, bestedge, queue, qh,
                                          stackbuf, w, 2, p ^ 1)
                        elif label[bw] == 1:
                            # trace both trees; a common base closes a
                            # blossom, no common base augments
                            pv = v
                            pw = w
                            pn = 0
                            lcabase = np.int64(-1)
                            while pv != -1 or pw != -1:
                                bvx = inblossom[pv]
                                if label[bvx] & 4:
                                    lcabase = bbase[bvx]
                                    break
                                pathbuf[pn] = bvx
                                pn += 1
                                label[bvx] = 5
                                if labelend[bvx] == -1:
                                    pv = -1
                                else:
                                    pv = endpoint[labelend[bvx]]
                                    bvx = inblossom[pv]
                                    pv = endpoint[labelend[bvx]]
                                if pw != -1:
                                    tmpv = pv
                                    pv = pw
                                    pw = tmpv
                            for bi in range(pn):
                                label[pathbuf[bi]] = 1
                            if lcabase >= 0:
                                _add_blossom(nv, ei, ej, w2, endpoint, nbp,
                                             nbl, mate_ep, label, labelend,
                                             inblossom, bparent, bbase,
                                             bestedge, dualvar, childs,
                                             childs_len, endps, bbe,
                                             bbe_len, queue, qh, stackbuf,
                                             bestto, lcabase, k)
                            else:
                                _augment_matching(nv, ei, ej, endpoint,
                                                  mate_ep, labelend,
                                                  inblossom, bparent, bbase,
                                                  childs, childs_len, endps,
                                                  jobs, rot, k)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < (
                                dualvar[ei[bestedge[b]]]
                                + dualvar[ej[bestedge[b]]]
                                - w2[bestedge[b]]):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < (
                                dualvar[ei[bestedge[w]]]
                                + dualvar[ej[bestedge[w]]]
                                - w2[bestedge[w]]):
                            bestedge[w] = k
            if augmented:
                break

            # dual update; type 1 means no further progress is possible
            deltatype = -1
            delta = np.int64(0)
            deltaedge = np.int64(-1)
            deltablossom = np.int64(-1)
            for v in range(nv):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    d = (dualvar[ei[bestedge[v]]] + dualvar[ej[bestedge[v]]]
                         - w2[bestedge[v]])
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 2
                        deltaedge = bestedge[v]
            for b in range(nb):
                if bparent[b] == -1 and label[b] == 1 and bestedge[b] != -1:
                    kslack = (dualvar[ei[bestedge[b]]]
                              + dualvar[ej[bestedge[b]]] - w2[bestedge[b]])
                    if kslack % 2 != 0:
                        return 2
                    d = kslack // 2
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 3
                        deltaedge = bestedge[b]
            for b in range(nv, nb):
                if (bbase[b] >= 0 and bparent[b] == -1 and label[b] == 2
                        and (deltatype == -1 or dualvar[b] < delta)):
                    delta = dualvar[b]
                    deltatype = 4
                    deltablossom = b
            if deltatype == -1:
                deltatype = 1
                dmin = dualvar[0]
                for v in range(1, nv):
                    if dualvar[v] < dmin:
                        dmin = dualvar[v]
                delta = dmin if dmin > 0 else np.int64(0)

            for v in range(nv):
                lbl = label[inblossom[v]]
                if lbl == 1:
                    dualvar[v] -= delta
                elif lbl == 2:
                    dualvar[v] += delta
            for b in range(nv, nb):
                if bbase[b] >= 0 and bparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta

            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge] = 1
                i = ei[deltaedge]
                if label[inblossom[i]] == 0:
                    i = ej[deltaedge]
                queue[qh[0]] = i
                qh[0] += 1
            elif deltatype == 3:
                allowedge[deltaedge] = 1
                queue[qh[0]] = ei[deltaedge]
                qh[0] += 1
            else:
                _expand_blossom(nv, endpoint, mate_ep, label, labelend,
                                inblossom, bparent, bbase, bestedge,
                                dualvar, childs, childs_len, endps, bbe,
                                bbe_len, allowedge, queue, qh, stackbuf,
                                deltablossom)
            if qh[0] > qcap - 4 * nv - 8:
                return 1

        if not augmented:
            break

        for b in range(nv, nb):
            if (bparent[b] == -1 and bbase[b] >= 0 and label[b] == 1
                    and dualvar[b] == 0):
                _expand_endstage(nv, label, labelend, inblossom, bparent,
                                 bbase, bestedge, dualvar, childs,
                                 childs_len, bbe_len, stackbuf, work, b)

    for v in range(nv):
        if mate_ep[v] >= 0:
            mate[v] = endpoint[mate_ep[v]]
        else:
            mate[v] = -1
    return 0


def _blossom_perfect(weights: np.ndarray) -> np.ndarray:
    """Exact minimum-weight perfect matching on a dense weight matrix.

    Entries >= _INF mark forbidden pairs. Returns the mate array; raises
    ValueError when no perfect matching avoids every forbidden pair.
    """
    size = weights.shape[0]
    if size % 2:
        raise ValueError("perfect matching needs an even node count")
    if size == 0:
        return np.empty(0, dtype=np.int64)
    iu, ju = np.triu_indices(size, 1)
    w = weights[iu, ju].astype(np.int64)
    finite = w < _INF
    wmax = int(w[finite].max()) if finite.any() else 0
    big = (size // 2) * wmax + 1
    # forbidden pairs become weight 0 under maximisation, so any
    # matching that can avoid them will
    tw = np.where(finite, big + (wmax - w), 0).astype(np.int64)
    mate = np.full(size, -1, dtype=np.int64)
    rc = _mwpm_core(size, iu.astype(np.int64), ju.astype(np.int64), tw, mate)
    if rc != 0:
        raise RuntimeError(f"matching kernel failed with code {rc}")
    if np.any(mate < 0):
        raise ValueError("unmatchable defect set")
    if np.any(weights[np.arange(size), mate] >= _INF):
        raise ValueError("unmatchable defect set")
    return mate


# ---------------------------------------------------------------------------
# matching graphs


class MatchingGraph:
    """Weighted defect graph with virtual boundary nodes.

    Edges carry a non-negative integer weight and a correction support:
    the bit indices flipped when a matched path runs through the edge.
    Parallel edges are allowed; shortest paths use the lightest one.
    """

    def __init__(self, n_nodes, virtual, edges, n_bits):
        self.n_nodes = int(n_nodes)
        self.n_bits = int(n_bits)
        isv = np.zeros(self.n_nodes, dtype=bool)
        for u in virtual:
            isv[int(u)] = True
        self.is_virtual = isv
        eu, ev, ew = [], [], []
        sup_ptr = [0]
        sup_idx = []
        for (u, v, w, sup) in edges:
            u = int(u)
            v = int(v)
            w = int(w)
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValueError("edge endpoint out of range")
            if u == v:
                raise ValueError("self loops are not allowed")
            if w < 0:
                raise ValueError("edge weights must be non-negative")
            eu.append(u)
            ev.append(v)
            ew.append(w)
            bits = sorted(int(q) for q in sup)
            if bits and not (0 <= bits[0] and bits[-1] < self.n_bits):
                raise ValueError("support bit out of range")
            sup_idx.extend(bits)
            sup_ptr.append(len(sup_idx))
        self.eu = np.asarray(eu, dtype=np.int64)
        self.ev = np.asarray(ev, dtype=np.int64)
        self.ew = np.asarray(ew, dtype=np.int64)
        self.sup_ptr = np.asarray(sup_ptr, dtype=np.int64)
        self.sup_idx = np.asarray(sup_idx, dtype=np.int64)
        self._matcher = None

    @property
    def n_edges(self) -> int:
        return int(self.eu.size)

    def matcher(self) -> "StaticMatcher":
        if self._matcher is None:
            self._matcher = StaticMatcher(self)
        return self._matcher


def _min_weight_csr(us, vs, ws, n):
    ded = {}
    for a, b, wv in zip(us, vs, ws):
        kk = (int(a), int(b)) if a < b else (int(b), int(a))
        if kk not in ded or wv < ded[kk]:
            ded[kk] = float(wv)
    if not ded:
        return sp.csr_matrix((n, n))
    rows = np.fromiter((kk[0] for kk in ded), dtype=np.int64, count=len(ded))
    cols = np.fromiter((kk[1] for kk in ded), dtype=np.int64, count=len(ded))
    vals = np.fromiter(ded.values(), dtype=np.float64, count=len(ded))
    return sp.csr_matrix((np.concatenate([vals, vals]),
                          (np.concatenate([rows, cols]),
                           np.concatenate([cols, rows]))), shape=(n, n))


class StaticMatcher:
    """Shortest-path tables plus the blossom kernel for one graph.

    Built once per code structure; each decode only gathers a dense
    defect-to-defect weight matrix and runs the matching.
    """

    def __init__(self, graph: MatchingGraph):
        g = graph
        self.graph = g
        n = g.n_nodes
        self.real = np.flatnonzero(~g.is_virtual)
        self.virt = np.flatnonzero(g.is_virtual)
        self.pos = np.full(n, -1, dtype=np.int64)
        self.pos[self.real] = np.arange(self.real.size)

        # lightest edge per unordered node pair, for path recovery
        best = {}
        for k in range(g.n_edges):
            key = (min(g.eu[k], g.ev[k]), max(g.eu[k], g.ev[k]))
            if key not in best or g.ew[k] < g.ew[best[key]]:
                best[key] = k
        self._edge_of = best

        rmask = ~g.is_virtual
        both = rmask[g.eu] & rmask[g.ev]
        nr = self.real.size
        adj = _min_weight_csr(self.pos[g.eu[both]], self.pos[g.ev[both]],
                              g.ew[both], nr)
        if nr:
            dist, pred = dijkstra(adj, directed=False,
                                  return_predecessors=True)
        else:
            dist = np.zeros((0, 0))
            pred = np.zeros((0, 0), dtype=np.int32)
        self.dist = np.where(np.isinf(dist), np.float64(_INF),
                             dist).astype(np.int64)
        self.pred = pred

        # boundary distances: multi-source over the full graph
        if self.virt.size:
            full = _min_weight_csr(g.eu, g.ev, g.ew, n)
            bdist, bpred = dijkstra(full, directed=False, indices=self.virt,
                                    return_predecessors=True)
            self.bsrc = np.argmin(bdist, axis=0)
            bmin = bdist.min(axis=0)
            self.bdist = np.where(np.isinf(bmin), np.float64(_INF),
                                  bmin).astype(np.int64)
            self.bpred = bpred
        else:
            self.bdist = np.full(n, _INF, dtype=np.int64)
            self.bsrc = None
            self.bpred = None

    def _xor_edge(self, out: np.ndarray, u: int, v: int) -> None:
        k = self._edge_of[(min(u, v), max(u, v))]
        g = self.graph
        out[g.sup_idx[g.sup_ptr[k]:g.sup_ptr[k + 1]]] ^= 1

    def _xor_path(self, out: np.ndarray, a: int, b: int) -> None:
        pa = self.pos[a]
        cur = self.pos[b]
        while cur != pa:
            prv = self.pred[pa, cur]
            self._xor_edge(out, int(self.real[prv]), int(self.real[cur]))
            cur = prv

    def _xor_boundary(self, out: np.ndarray, a: int) -> None:
        row = self.bsrc[a]
        cur = a
        while not self.graph.is_virtual[cur]:
            prv = self.bpred[row, cur]
            self._xor_edge(out, int(prv), int(cur))
            cur = prv

    def decode(self, defects) -> np.ndarray:
        support, _, _ = self.decode_detail(defects)
        return support

    def decode_detail(self, defects):
        """Match the defects; returns (support, pairs, total weight).

        Pairs are (node, node) for defect-to-defect matches and
        (node, -1) for defects routed to the boundary.
        """
        d = np.asarray(sorted(int(x) for x in defects), dtype=np.int64)
        out = np.zeros(self.graph.n_bits, dtype=np.uint8)
        if d.size == 0:
            return out, [], 0
        if np.unique(d).size != d.size:
            raise ValueError("duplicate defect nodes")
        if self.graph.is_virtual[d].any():
            raise ValueError("virtual nodes cannot be defects")
        D = int(d.size)
        rp = self.pos[d]
        dd = self.dist[np.ix_(rp, rp)]
        bd = self.bdist[d]
        via = np.minimum(bd[:, None] + bd[None, :], _INF)
        W = np.minimum(dd, via)
        # one extra node soaks up the odd defect; every defect pair also
        # has the option of separate paths through the boundary
        size = D + (D % 2)
        Wfull = np.full((size, size), _INF, dtype=np.int64)
        Wfull[:D, :D] = W
        if size > D:
            Wfull[:D, D] = bd
            Wfull[D, :D] = bd
        mate = _blossom_perfect(Wfull)

        pairs = []
        total = 0
        for i in range(D):
            j = int(mate[i])
            if j < i and j < D:
                continue
            if j >= D:
                if bd[i] >= _INF:
                    raise ValueError("unmatchable defect set")
                self._xor_boundary(out, int(d[i]))
                pairs.append((int(d[i]), -1))
                total += int(bd[i])
            else:
                direct = dd[i, j]
                through = bd[i] + bd[j]
                if direct >= _INF and through >= _INF:
                    raise ValueError("unmatchable defect set")
                if direct <= through:
                    self._xor_path(out, int(d[i]), int(d[j]))
                    total += int(direct)
                else:
                    self._xor_boundary(out, int(d[i]))
                    self._xor_boundary(out, int(d[j]))
                    total += int(through)
                pairs.append((int(d[i]), int(d[j])))
        return out, pairs, total


def mwpm(graph: MatchingGraph, defects) -> np.ndarray:
    """Minimum-weight perfect matching correction for the given defects.

    Boundary (virtual) nodes match for free. The result is the XOR of
    the correction supports along every matched path.
    """
    return graph.matcher().decode(defects)


# -- graph builders ----------------------------------------------------------


def graph_from_node_pairs(pair_rows, n_bits, n_nodes=None,
                          weights=None) -> MatchingGraph:
    """Defect graph from an (E, 2) node table, -1 meaning boundary.

    Row index e is the correction bit toggled by edge e; rows with both
    entries negative produce no edge.
    """
    pair_rows = np.asarray(pair_rows)
    m = pair_rows.shape[0]
    n_real = int(pair_rows.max()) + 1 if m else 0
    if n_nodes is not None:
        n_real = max(n_real, int(n_nodes))
    virt = n_real
    edges = []
    for e in range(m):
        ends = [int(x) for x in pair_rows[e] if x >= 0]
        w = 1 if weights is None else int(weights[e])
        if len(ends) == 2:
            edges.append((ends[0], ends[1], w, [e]))
        elif len(ends) == 1:
            edges.append((ends[0], virt, w, [e]))
    return MatchingGraph(n_real + 1, [virt], edges, n_bits)


def metacheck_graph(code) -> MatchingGraph:
    """Single-shot metacheck defect graph: nodes are metacheck rows,
    edges are Z-check faces, supports are the faces themselves."""
    return graph_from_node_pairs(code.row_nodes, code.hz.shape[0],
                                 n_nodes=code.metachecks.shape[0])


def cell_graph(code) -> MatchingGraph:
    """X-cell defect graph: edges are qubits shared by two cells, qubits
    in a single cell lead to the boundary."""
    return graph_from_node_pairs(code.qubit_cells, code.n,
                                 n_nodes=code.hx.shape[0])


def check_graph(h) -> MatchingGraph:
    """Defect graph for a check matrix whose columns all have weight at
    most two, e.g. the 2D codes after collapse."""
    h = np.asarray(h) % 2
    m, n = h.shape
    if h.sum(axis=0).max(initial=0) > 2:
        raise ValueError("not matchable: some qubit sits in >2 checks")
    rows = np.full((n, 2), -1, dtype=np.int64)
    for q in range(n):
        cs = np.flatnonzero(h[:, q])
        for i, c in enumerate(cs):
            rows[q, i] = c
    return graph_from_node_pairs(rows, n, n_nodes=m)


# ---------------------------------------------------------------------------
# belief propagation + ordered statistics


@njit(cache=True)
def _bp_serial(cp, ci, llr0, syn, max_iters):
    m = cp.shape[0] - 1
    nnz = ci.shape[0]
    R = np.zeros(nnz)
    Q = llr0.copy()
    maxdeg = 0
    for c in range(m):
        dgr = cp[c + 1] - cp[c]
        if dgr > maxdeg:
            maxdeg = dgr
    tb = np.empty(maxdeg)
    fw = np.empty(maxdeg)
    bw = np.empty(maxdeg)
    iters = 0
    for it in range(max_iters):
        iters = it + 1
        for c in range(m):
            s0 = cp[c]
            dgr = cp[c + 1] - s0
            for a in range(dgr):
                q = Q[ci[s0 + a]] - R[s0 + a]
                if q > 40.0:
                    q = 40.0
                elif q < -40.0:
                    q = -40.0
                tb[a] = math.tanh(0.5 * q)
            acc = 1.0
            for a in range(dgr):
                fw[a] = acc
                acc *= tb[a]
            acc = 1.0
            for a in range(dgr - 1, -1, -1):
                bw[a] = acc
                acc *= tb[a]
            sgn = -1.0 if syn[c] else 1.0
            for a in range(dgr):
                prod = sgn * fw[a] * bw[a]
                if prod > 0.9999999999999:
                    prod = 0.9999999999999
                elif prod < -0.9999999999999:
                    prod = -0.9999999999999
                rn = 2.0 * math.atanh(prod)
                vtx = ci[s0 + a]
                Q[vtx] += rn - R[s0 + a]
                R[s0 + a] = rn
        ok = True
        for c in range(m):
            par = 0
            for e in range(cp[c], cp[c + 1]):
                if Q[ci[e]] < 0.0:
                    par ^= 1
            if par != syn[c]:
                ok = False
                break
        if ok:
            return Q, iters, True
    return Q, iters, False


@dataclass(frozen=True)
class SparseCheck:
    """Binary check matrix plus per-qubit prior error probabilities."""

    h: sp.csr_matrix
    priors: np.ndarray

    def __post_init__(self):
        h = sp.csr_matrix(self.h, dtype=np.uint8)
        h.data %= 2
        h.eliminate_zeros()
        object.__setattr__(self, "h", h)
        p = np.asarray(self.priors, dtype=np.float64)
        if p.shape != (h.shape[1],):
            raise ValueError("priors must give one probability per column")
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise ValueError("priors must lie strictly between 0 and 1")
        object.__setattr__(self, "priors", p)

    @classmethod
    def from_dense(cls, h, priors) -> "SparseCheck":
        h = np.asarray(h)
        priors = np.broadcast_to(np.asarray(priors, dtype=np.float64),
                                 (h.shape[1],)).copy()
        return cls(sp.csr_matrix(h % 2), priors)

    @property
    def m(self) -> int:
        return int(self.h.shape[0])

    @property
    def n(self) -> int:
        return int(self.h.shape[1])


class Gf2Solver:
    """Cached RREF factorisation of a binary matrix.

    solve() returns the pivot-column solution of H x = s, or None when s
    falls outside the column space. One elimination at construction,
    then every solve is a packed parity product.
    """

    def __init__(self, h):
        h = np.asarray(h, dtype=np.uint8) % 2
        m, n = h.shape
        aug = np.concatenate([h, np.eye(m, dtype=np.uint8)], axis=1)
        rows, piv = gf2._eliminate(gf2.pack_rows(aug), n)
        dense = gf2.unpack_vec(rows, n + m)
        r = len(piv)
        self.m = m
        self.n = n
        self.pivots = np.asarray(piv, dtype=np.int64)
        self.transform = gf2.pack_rows(dense[:r, n:])
        self.hp = gf2.pack_rows(h)

    def solve(self, s):
        s = np.asarray(s, dtype=np.uint8) % 2
        spk = gf2.pack_vec(s)
        bits = (gf2.popcount_words(self.transform & spk[None, :]).sum(axis=1)
                & 1).astype(np.uint8)
        x = np.zeros(self.n, dtype=np.uint8)
        x[self.pivots] = bits
        if not np.array_equal(
                gf2.syndrome_packed(self.hp, gf2.pack_vec(x)), s):
            return None
        return x


def _osd_candidates(h_dense, syndrome, order_perm, osd_order):
    """Ordered-statistics solutions: the pivot solution, plus every free
    pattern over the osd_order most suspect non-pivot columns."""
    m, n = h_dense.shape
    hp = h_dense[:, order_perm]
    aug = np.concatenate([hp, syndrome[:, None].astype(np.uint8)], axis=1)
    rows, piv = gf2._eliminate(gf2.pack_rows(aug), n)
    dense = gf2.unpack_vec(rows, n + 1)
    r = len(piv)
    for j in range(r, dense.shape[0]):
        if dense[j, n]:
            return None
    x0 = np.zeros(n, dtype=np.uint8)
    for j in range(r):
        x0[piv[j]] = dense[j, n]
    cands = [x0]
    if osd_order > 0:
        in_piv = np.zeros(n, dtype=bool)
        in_piv[list(piv)] = True
        free = [c for c in range(n) if not in_piv[c]][:osd_order]
        for mask in range(1, 1 << len(free)):
            xc = np.zeros(n, dtype=np.uint8)
            rhs = dense[:r, n].copy()
            for bi, c in enumerate(free):
                if (mask >> bi) & 1:
                    xc[c] = 1
                    rhs ^= dense[:r, c]
            for j in range(r):
                xc[piv[j]] = rhs[j]
            cands.append(xc)
    inv = np.empty(n, dtype=np.int64)
    inv[order_perm] = np.arange(n)
    return [c[inv] for c in cands]


class Bposd:
    """Belief propagation with ordered-statistics completion.

    decode() always returns an exact solution of H x = s. Among the OSD
    candidates (and the BP hard decision, when it already satisfies the
    syndrome) the most probable pattern under the priors wins; ties keep
    the earliest candidate, so a converged BP answer is never replaced
    by anything worse.
    """

    def __init__(self, check: SparseCheck, max_bp_iters: int = 30,
                 osd_order: int = 0):
        if max_bp_iters < 0:
            raise ValueError("max_bp_iters must be non-negative")
        if not (0 <= osd_order <= 10):
            raise ValueError("osd_order must lie in 0..10")
        self.check = check
        self.max_bp_iters = int(max_bp_iters)
        self.osd_order = int(osd_order)
        h = check.h
        self._cp = h.indptr.astype(np.int64)
        self._ci = h.indices.astype(np.int64)
        self._dense = h.toarray().astype(np.uint8)
        self._llr0 = np.log((1.0 - check.priors) / check.priors)
        # flat priors carry no information: BP is inert and the OSD
        # ordering is the identity, so one cached factorisation serves
        # every syndrome
        self._flat = bool(np.all(self._llr0 == 0.0))
        self._solver = Gf2Solver(self._dense) if self._flat else None

    def decode(self, syndrome) -> np.ndarray:
        s = np.asarray(syndrome, dtype=np.uint8) % 2
        if s.shape != (self.check.m,):
            raise ValueError("syndrome length mismatch")
        if not s.any():
            return np.zeros(self.check.n, dtype=np.uint8)
        if self._flat and self.osd_order == 0:
            x = self._solver.solve(s)
            if x is None:
                raise ValueError("syndrome outside the check column space")
            return x
        Q, _, converged = _bp_serial(self._cp, self._ci, self._llr0, s,
                                     self.max_bp_iters)
        perr = 1.0 / (1.0 + np.exp(np.clip(Q, -60.0, 60.0)))
        order = np.argsort(-perr, kind="stable")
        cands = _osd_candidates(self._dense, s, order, self.osd_order)
        if cands is None:
            raise ValueError("syndrome outside the check column space")
        if converged:
            cands.insert(0, (Q < 0.0).astype(np.uint8))
        best = None
        best_cost = math.inf
        for c in cands:
            cost = float(self._llr0[c.astype(bool)].sum())
            if cost < best_cost:
                best = c
                best_cost = cost
        return best


def bposd(check: SparseCheck, syndrome, max_bp_iters: int = 30,
          osd_order: int = 0) -> np.ndarray:
    """One-shot BP-OSD decode; see :class:`Bposd`."""
    return Bposd(check, max_bp_iters, osd_order).decode(syndrome)


# ---------------------------------------------------------------------------
# code-level entry points

_per_code = weakref.WeakKeyDictionary()


def _cached(obj, key, build):
    store = _per_code.get(obj)
    if store is None:
        store = {}
        _per_code[obj] = store
    if key not in store:
        store[key] = build()
    return store[key]


def metacheck_matcher(code) -> StaticMatcher:
    return _cached(code, "meta", lambda: metacheck_graph(code).matcher())


def cell_matcher(code) -> StaticMatcher:
    return _cached(code, "cell", lambda: cell_graph(code).matcher())


def check_matcher(code2d, family: str) -> StaticMatcher:
    h = code2d.hz if family == Z_CHECKS else code2d.hx
    return _cached(code2d, family, lambda: check_graph(h).matcher())


def _meta_packed(code):
    return _cached(code, "metap", lambda: gf2.pack_rows(code.metachecks))


def repair_measured_syndrome(code, noisy: Syndrome) -> Syndrome:
    """Close a noisy Z-check syndrome so every metacheck is satisfied.

    Violated metacheck nodes are matched pairwise or to the boundary;
    the faces along the matched paths are flipped, so the output differs
    from the input on a minimum-weight face set.
    """
    if noisy.family != Z_CHECKS:
        raise ValueError("metacheck repair expects a Z-check syndrome")
    meta = gf2.syndrome_packed(_meta_packed(code), gf2.pack_vec(noisy.bits))
    defects = np.flatnonzero(meta)
    if defects.size == 0:
        return Syndrome(Z_CHECKS, noisy.bits.copy())
    flips = metacheck_matcher(code).decode(defects)
    repaired = noisy.bits ^ flips
    left = gf2.syndrome_packed(_meta_packed(code), gf2.pack_vec(repaired))
    if left.any():
        raise RuntimeError("metacheck repair left violated metachecks")
    return Syndrome(Z_CHECKS, repaired)


def boundary_modified_decode(code, recon: Syndrome) -> np.ndarray:
    """Z-error correction from a reconstructed X-cell syndrome.

    Matching runs on the full cell graph, where qubits on the collapse
    boundary provide weight-one escape paths; those outer bits are then
    discarded, so the returned support acts on measured-out qubits only.
    """
    if recon.family != X_CHECKS:
        raise ValueError("cell decoding expects an X-check syndrome")
    defects = np.flatnonzero(recon.bits)
    support = cell_matcher(code).decode(defects)
    support &= code.inner_mask.astype(np.uint8)
    return support
