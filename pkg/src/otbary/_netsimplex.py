"""Transportation simplex on the dense bipartite polytope (numba kernels).

Solves  min <C, P>  s.t.  P @ 1 = a,  P.T @ 1 = b,  P >= 0  for probability
vectors a, b.  Classical network simplex specialized to the transportation
tableau: northwest-corner initial basis, block pricing on the most negative
reduced cost, Bland's rule as anti-cycling fallback, and a deterministic
1e-12-scale weight perturbation that breaks degenerate ties.  Final flows
are re-solved on the optimal basis tree from the *unperturbed* marginals, so
the returned plan satisfies the marginal constraints to float accuracy.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_PIVOT_LIMIT = 1

_GOLD = 0.6180339887498949
_SILVER = 0.41421356237309515


@njit(cache=True, nogil=True, inline="always")
def _detach(node, parent, first_child, next_sib, prev_sib):
    # remove `node` from its current parent's child list (parent[] untouched)
    p = parent[node]
    ns = next_sib[node]
    ps = prev_sib[node]
    if ps == -1:
        first_child[p] = ns
    else:
        next_sib[ps] = ns
    if ns != -1:
        prev_sib[ns] = ps
    next_sib[node] = -1
    prev_sib[node] = -1


@njit(cache=True, nogil=True, inline="always")
def _attach(node, par, first_child, next_sib, prev_sib):
    fc = first_child[par]
    next_sib[node] = fc
    prev_sib[node] = -1
    if fc != -1:
        prev_sib[fc] = node
    first_child[par] = node


@njit(cache=True, nogil=True)
def transport_simplex(C, a, b, pert, max_pivots):
    """Solve the transportation problem; returns
    (status, plan, u, v, value, pivots).

    Sign conventions: u[i] + v[j] = C[i, j] on basic cells and the reduced
    cost C - u - v is >= -tol everywhere at termination.
    """
    m, k = C.shape
    n_nodes = m + k
    n_arcs = m * k

    cmax = 0.0
    for i in range(m):
        for j in range(k):
            c = abs(C[i, j])
            if c > cmax:
                cmax = c
    tol = 1e-11 * (1.0 + cmax)

    # Perturbed marginals guide pivoting only; they are balanced so the two
    # sides keep equal total mass.
    ap = np.empty(m)
    ta = 0.0
    for i in range(m):
        d = pert * (1.0 + (i * _GOLD) % 1.0) / m
        ap[i] = a[i] + d
        ta += d
    bp = np.empty(k)
    tb = 0.0
    for j in range(k):
        bp[j] = 1.0 + ((j + 7) * _SILVER) % 1.0
        tb += bp[j]
    for j in range(k):
        bp[j] = b[j] + ta * bp[j] / tb

    parent = np.full(n_nodes, -1, np.int64)
    pred_flow = np.zeros(n_nodes)
    depth = np.zeros(n_nodes, np.int64)
    first_child = np.full(n_nodes, -1, np.int64)
    next_sib = np.full(n_nodes, -1, np.int64)
    prev_sib = np.full(n_nodes, -1, np.int64)
    pi = np.zeros(n_nodes)

    # ---- northwest-corner initial basis (a path-shaped spanning tree) ----
    i = 0
    j = 0
    new_is_sink = True
    for step in range(n_nodes - 1):
        f = ap[i] if ap[i] < bp[j] else bp[j]
        if new_is_sink:
            child = m + j
            par = i
        else:
            child = i
            par = m + j
        parent[child] = par
        pred_flow[child] = f
        depth[child] = depth[par] + 1
        _attach(child, par, first_child, next_sib, prev_sib)
        if child >= m:
            pi[child] = pi[par] - C[par, child - m]
        else:
            pi[child] = pi[par] + C[child, par - m]
        ap[i] -= f
        bp[j] -= f
        if step == n_nodes - 2:
            break
        if i == m - 1:
            j += 1
            new_is_sink = True
        elif j == k - 1:
            i += 1
            new_is_sink = False
        elif ap[i] <= bp[j]:
            i += 1
            new_is_sink = False
        else:
            j += 1
            new_is_sink = True

    block = int(np.sqrt(n_arcs)) + 1
    if block < 64:
        block = 64
    if block > n_arcs:
        block = n_arcs

    stack = np.empty(n_nodes, np.int64)
    bland = False
    bland_trigger = 20 * n_nodes + 1000
    stall = 0
    stall_trigger = 2 * n_nodes + 100
    next_arc = 0
    pivots = 0
    status = STATUS_OK

    while True:
        # ---- pricing ----
        enter = -1
        if bland:
            for e in range(n_arcs):
                i3 = e // k
                j3 = e - i3 * k
                if C[i3, j3] - pi[i3] + pi[m + j3] < -tol:
                    enter = e
                    break
        else:
            best = -tol
            scanned = 0
            in_block = 0
            e = next_arc
            while scanned < n_arcs:
                i3 = e // k
                j3 = e - i3 * k
                r = C[i3, j3] - pi[i3] + pi[m + j3]
                if r < best:
                    best = r
                    enter = e
                e += 1
                if e == n_arcs:
                    e = 0
                scanned += 1
                in_block += 1
                if in_block == block:
                    if enter >= 0:
                        break
                    in_block = 0
            next_arc = e
        if enter < 0:
            break  # optimal

        pivots += 1
        if pivots > max_pivots:
            status = STATUS_PIVOT_LIMIT
            break
        if not bland and pivots > bland_trigger:
            bland = True

        i_star = enter // k
        j_node = m + (enter - i_star * k)
        r_enter = C[i_star, j_node - m] - pi[i_star] + pi[j_node]

        # ---- cycle: tree path between the two endpoints ----
        u_n = i_star
        v_n = j_node
        while depth[u_n] > depth[v_n]:
            u_n = parent[u_n]
        while depth[v_n] > depth[u_n]:
            v_n = parent[v_n]
        while u_n != v_n:
            u_n = parent[u_n]
            v_n = parent[v_n]
        join = u_n

        # Arcs losing flow: on the entering-source side every source-type
        # pred arc, on the entering-sink side every sink-type pred arc.
        delta = np.inf
        leave = -1
        leave_arc_id = -1
        leave_on_i_side = True
        cur = i_star
        while cur != join:
            if cur < m:
                f = pred_flow[cur]
                aid = cur * k + (parent[cur] - m)
                if f < delta or (bland and f == delta and aid < leave_arc_id):
                    delta = f
                    leave = cur
                    leave_arc_id = aid
                    leave_on_i_side = True
            cur = parent[cur]
        cur = j_node
        while cur != join:
            if cur >= m:
                f = pred_flow[cur]
                aid = parent[cur] * k + (cur - m)
                if f < delta or (bland and f == delta and aid < leave_arc_id):
                    delta = f
                    leave = cur
                    leave_arc_id = aid
                    leave_on_i_side = False
            cur = parent[cur]

        if delta <= 1e-14:
            stall += 1
            if stall > stall_trigger:
                bland = True
        else:
            stall = 0

        # ---- push delta around the cycle ----
        cur = i_star
        while cur != join:
            if cur < m:
                pred_flow[cur] -= delta
            else:
                pred_flow[cur] += delta
            cur = parent[cur]
        cur = j_node
        while cur != join:
            if cur < m:
                pred_flow[cur] += delta
            else:
                pred_flow[cur] -= delta
            cur = parent[cur]

        # ---- swap leaving arc for entering arc: re-root the cut subtree ----
        if leave_on_i_side:
            q = i_star
            o = j_node
            shift = r_enter
        else:
            q = j_node
            o = i_star
            shift = -r_enter

        node = q
        npar = o
        nflow = delta
        while True:
            op = parent[node]
            of = pred_flow[node]
            _detach(node, parent, first_child, next_sib, prev_sib)
            parent[node] = npar
            pred_flow[node] = nflow
            _attach(node, npar, first_child, next_sib, prev_sib)
            if node == leave:
                break
            npar = node
            nflow = of
            node = op

        # depth and potential refresh over the moved subtree
        top = 0
        stack[top] = q
        top += 1
        while top > 0:
            top -= 1
            nd = stack[top]
            depth[nd] = depth[parent[nd]] + 1
            pi[nd] += shift
            ch = first_child[nd]
            while ch != -1:
                stack[top] = ch
                top += 1
                ch = next_sib[ch]

    # ---- finalize: preorder, fresh potentials, exact flows ----
    order = np.empty(n_nodes, np.int64)
    top = 0
    stack[top] = 0
    top += 1
    cnt = 0
    while top > 0:
        top -= 1
        nd = stack[top]
        order[cnt] = nd
        cnt += 1
        ch = first_child[nd]
        while ch != -1:
            stack[top] = ch
            top += 1
            ch = next_sib[ch]

    pi[0] = 0.0
    for t in range(1, n_nodes):
        nd = order[t]
        par = parent[nd]
        if nd >= m:
            pi[nd] = pi[par] - C[par, nd - m]
        else:
            pi[nd] = pi[par] + C[nd, par - m]

    ex = np.empty(n_nodes)
    for i2 in range(m):
        ex[i2] = a[i2]
    for j2 in range(k):
        ex[m + j2] = -b[j2]
    plan = np.zeros((m, k))
    value = 0.0
    for t in range(n_nodes - 1, 0, -1):
        nd = order[t]
        par = parent[nd]
        if nd < m:
            f = ex[nd]
            ii = nd
            jj = par - m
        else:
            f = -ex[nd]
            ii = par
            jj = nd - m
        if f < 0.0:
            f = 0.0
        plan[ii, jj] = f
        value += f * C[ii, jj]
        ex[par] += ex[nd]

    u = np.empty(m)
    v = np.empty(k)
    for i2 in range(m):
        u[i2] = pi[i2]
    for j2 in range(k):
        v[j2] = -pi[m + j2]
    return status, plan, u, v, value, pivots
