# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled step loop for the SyncMap dynamics.

Mirrors ``dynamics._python_block`` step for step.  The positive set is read
straight off the state sequence: a state is active while fewer than ``span``
encoded steps have passed since its latest activation.
"""

from libc.math cimport sqrt
from libc.string cimport memcpy

DEF MAXSET = 256

cdef double SINGULAR_EPS = 1e-12


cdef inline Py_ssize_t _pick(double r, Py_ssize_t size) nogil:
    cdef Py_ssize_t i = <Py_ssize_t>(r * size)
    if i > size - 1:
        i = size - 1
    return i


cdef inline void _insort(Py_ssize_t* arr, Py_ssize_t* length, Py_ssize_t v) nogil:
    cdef Py_ssize_t i = length[0]
    while i > 0 and arr[i - 1] > v:
        arr[i] = arr[i - 1]
        i -= 1
    arr[i] = v
    length[0] += 1


cdef inline void _move(double[:, ::1] w, Py_ssize_t i, double* c, double alpha,
                       double sign, Py_ssize_t k) nogil:
    cdef double d[MAXSET]
    cdef double dist = 0.0
    cdef Py_ssize_t j
    for j in range(k):
        d[j] = sign * (c[j] - w[i, j])
        dist += d[j] * d[j]
    dist = sqrt(dist)
    if dist < SINGULAR_EPS:
        return
    for j in range(k):
        w[i, j] += alpha * d[j] / dist


cdef void _normalize(double[:, ::1] w, double radius, int project) nogil:
    cdef Py_ssize_t n = w.shape[0], k = w.shape[1], i, j
    cdef double mean[MAXSET]
    cdef double nrm, biggest = 0.0, s
    for j in range(k):
        mean[j] = 0.0
    for i in range(n):
        for j in range(k):
            mean[j] += w[i, j]
    for j in range(k):
        mean[j] /= n
    for i in range(n):
        nrm = 0.0
        for j in range(k):
            w[i, j] -= mean[j]
            nrm += w[i, j] * w[i, j]
        nrm = sqrt(nrm)
        if project:
            if nrm > radius:
                s = radius / nrm
                for j in range(k):
                    w[i, j] *= s
        elif nrm > biggest:
            biggest = nrm
    if not project and biggest > radius:
        s = radius / biggest
        for i in range(n):
            for j in range(k):
                w[i, j] *= s


def run_block(double[:, ::1] w, double[:, :, ::1] ring, Py_ssize_t ring_pos,
              Py_ssize_t ring_count, const long long[::1] states, int tstep, int span,
              long long start, long long nsteps, int symmetrical, int m, double pr,
              double alpha, double radius, int project, const double[:, ::1] draws,
              long long[::1] stats, long long fold_every=1):
    """Advance the map by ``nsteps`` encoded steps starting at ``start``.

    Returns the new ``(ring_pos, ring_count)`` of the moving-average ring.
    """
    cdef Py_ssize_t n = w.shape[0], k = w.shape[1], window = ring.shape[0]
    cdef Py_ssize_t ps_temp[MAXSET]
    cdef Py_ssize_t ps[MAXSET]
    cdef Py_ssize_t ns[MAXSET]
    cdef Py_ssize_t excluded[2 * MAXSET]
    cdef unsigned char mark[4096]
    cdef double cp[MAXSET]
    cdef double cn[MAXSET]
    cdef Py_ssize_t n_pt, n_ps, n_ns, n_ex, m_neg, i, j, q, e, node, size, first, second
    cdef long long t, jj, age, s
    cdef long long nseq = states.shape[0]
    cdef long long updates = 0, skipped = 0
    cdef int dup
    cdef const double* u

    if k > MAXSET or m > MAXSET // 2 or n > 4096:
        raise ValueError("map too large for the compiled kernel")
    if symmetrical and draws.shape[0] < nsteps:
        raise ValueError("not enough uniform draws for the block")

    with nogil:
        for i in range(n):
            mark[i] = 0
        for t in range(start, start + nsteps):
            # positive candidates, deduplicated, sorted ascending
            n_pt = 0
            jj = t // tstep
            while jj >= 0 and jj < nseq:
                age = t - jj * tstep
                if age >= span:
                    break
                s = states[jj]
                dup = 0
                for i in range(n_pt):
                    if ps_temp[i] == s:
                        dup = 1
                        break
                if not dup:
                    _insort(ps_temp, &n_pt, <Py_ssize_t>s)
                jj -= 1

            if symmetrical:
                n_ps = 0
                n_ns = 0
                if n_pt >= 2:
                    u = &draws[t - start, 0]
                    if m > 2 and u[0] < pr:
                        size = n_pt
                        first = _pick(u[1], size)
                        second = _pick(u[2], size - 1)
                        # pop-based selection, matching the reference
                        ps[0] = ps_temp[first]
                        if second >= first:
                            second += 1
                        ps[1] = ps_temp[second]
                        if ps[0] > ps[1]:
                            e = ps[0]
                            ps[0] = ps[1]
                            ps[1] = e
                        n_ps = 2
                        m_neg = 2
                    else:
                        for i in range(n_pt):
                            ps[i] = ps_temp[i]
                        n_ps = n_pt
                        m_neg = n_pt
                    if m_neg > n - n_ps:
                        m_neg = n - n_ps
                    n_ex = 0
                    for i in range(n_ps):
                        excluded[i] = ps[i]
                    n_ex = n_ps
                    for q in range(m_neg):
                        node = _pick(u[3 + q], n - n_ps - q)
                        for i in range(n_ex):
                            if excluded[i] <= node:
                                node += 1
                            else:
                                break
                        ns[n_ns] = node
                        n_ns += 1
                        _insort(excluded, &n_ex, node)
                if n_ps <= 1 or n_ns <= 1:
                    skipped += 1
                else:
                    for j in range(k):
                        cp[j] = 0.0
                        cn[j] = 0.0
                    for i in range(n_ps):
                        for j in range(k):
                            cp[j] += w[ps[i], j]
                    for i in range(n_ns):
                        for j in range(k):
                            cn[j] += w[ns[i], j]
                    for j in range(k):
                        cp[j] /= n_ps
                        cn[j] /= n_ns
                    for i in range(n_ps):
                        _move(w, ps[i], cp, alpha, 1.0, k)
                    for i in range(n_ns):
                        _move(w, ns[i], cn, alpha, -1.0, k)
                    _normalize(w, radius, project)
                    updates += 1
            else:
                if n_pt <= 1 or n - n_pt <= 1:
                    skipped += 1
                else:
                    for i in range(n_pt):
                        mark[ps_temp[i]] = 1
                    for j in range(k):
                        cp[j] = 0.0
                        cn[j] = 0.0
                    for i in range(n):
                        if mark[i]:
                            for j in range(k):
                                cp[j] += w[i, j]
                        else:
                            for j in range(k):
                                cn[j] += w[i, j]
                    for j in range(k):
                        cp[j] /= n_pt
                        cn[j] /= (n - n_pt)
                    for i in range(n):
                        if mark[i]:
                            _move(w, i, cp, alpha, 1.0, k)
                        else:
                            _move(w, i, cn, alpha, -1.0, k)
                    for i in range(n_pt):
                        mark[ps_temp[i]] = 0
                    _normalize(w, radius, project)
                    updates += 1

            if (t + 1) % fold_every != 0:
                continue
            memcpy(&ring[ring_pos, 0, 0], &w[0, 0], n * k * sizeof(double))
            ring_pos += 1
            if ring_pos == window:
                ring_pos = 0
            if ring_count < window:
                ring_count += 1

    stats[0] += updates
    stats[1] += skipped
    return ring_pos, ring_count
