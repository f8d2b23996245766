# Compiled twins of numpy_backend.py. Keep the arithmetic expressions and
# their order identical to the fallback so both builds produce the same bits.
import numpy as np

cimport cython
cimport numpy as cnp
cimport openmp
from cython.parallel cimport prange
from libc.math cimport ceil, fabs, floor

cnp.import_array()


cdef inline int _nt(int requested) noexcept nogil:
    if requested > 0:
        return requested
    return openmp.omp_get_max_threads()


cdef inline double _tri_one(const double[:, :, ::1] data,
                            double bx, double by, double bz,
                            double vx, double vy, double vz,
                            double px, double py, double pz) noexcept nogil:
    cdef Py_ssize_t nx = data.shape[0], ny = data.shape[1], nz = data.shape[2]
    cdef double lx = (px - bx) / vx
    cdef double ly = (py - by) / vy
    cdef double lz = (pz - bz) / vz
    if lx < 0.0: lx = 0.0
    if ly < 0.0: ly = 0.0
    if lz < 0.0: lz = 0.0
    if lx > nx - 1.0: lx = nx - 1.0
    if ly > ny - 1.0: ly = ny - 1.0
    if lz > nz - 1.0: lz = nz - 1.0
    cdef Py_ssize_t i = <Py_ssize_t>floor(lx)
    cdef Py_ssize_t j = <Py_ssize_t>floor(ly)
    cdef Py_ssize_t k = <Py_ssize_t>floor(lz)
    if i > nx - 2: i = nx - 2
    if j > ny - 2: j = ny - 2
    if k > nz - 2: k = nz - 2
    cdef double fx = lx - i, fy = ly - j, fz = lz - k
    cdef double gx = 1.0 - fx, gy = 1.0 - fy, gz = 1.0 - fz
    return (data[i, j, k] * gx * gy * gz
            + data[i + 1, j, k] * fx * gy * gz
            + data[i, j + 1, k] * gx * fy * gz
            + data[i, j, k + 1] * gx * gy * fz
            + data[i + 1, j + 1, k] * fx * fy * gz
            + data[i + 1, j, k + 1] * fx * gy * fz
            + data[i, j + 1, k + 1] * gx * fy * fz
            + data[i + 1, j + 1, k + 1] * fx * fy * fz)


cdef inline bint _clamped_one(Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t nz,
                              double bx, double by, double bz,
                              double vx, double vy, double vz,
                              double px, double py, double pz) noexcept nogil:
    cdef double lx = (px - bx) / vx
    cdef double ly = (py - by) / vy
    cdef double lz = (pz - bz) / vz
    return (lx < 0.0 or ly < 0.0 or lz < 0.0
            or lx > nx - 1.0 or ly > ny - 1.0 or lz > nz - 1.0)


def trilinear(double[:, :, ::1] data, double[::1] bbox_min, double[::1] voxel,
              double[:, ::1] pts, int num_threads=0):
    cdef Py_ssize_t n = pts.shape[0], i
    vals_arr = np.empty(n, dtype=np.float64)
    clamped_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] vals = vals_arr
    cdef cnp.uint8_t[::1] clamped = clamped_arr
    cdef double bx = bbox_min[0], by = bbox_min[1], bz = bbox_min[2]
    cdef double vx = voxel[0], vy = voxel[1], vz = voxel[2]
    cdef Py_ssize_t nx = data.shape[0], ny = data.shape[1], nz = data.shape[2]
    cdef int nt = _nt(num_threads)
    for i in prange(n, nogil=True, num_threads=nt):
        vals[i] = _tri_one(data, bx, by, bz, vx, vy, vz,
                           pts[i, 0], pts[i, 1], pts[i, 2])
        clamped[i] = _clamped_one(nx, ny, nz, bx, by, bz, vx, vy, vz,
                                  pts[i, 0], pts[i, 1], pts[i, 2])
    return vals_arr, clamped_arr.view(bool)


def trilinear_grad(double[:, :, ::1] data, double[::1] bbox_min,
                   double[::1] voxel, double[:, ::1] pts, int num_threads=0):
    cdef Py_ssize_t n = pts.shape[0], i, a
    grads_arr = np.empty((n, 3), dtype=np.float64)
    onesided_arr = np.zeros(n, dtype=np.uint8)
    cdef double[:, ::1] grads = grads_arr
    cdef cnp.uint8_t[::1] onesided = onesided_arr
    cdef double bx = bbox_min[0], by = bbox_min[1], bz = bbox_min[2]
    cdef double vx = voxel[0], vy = voxel[1], vz = voxel[2]
    cdef Py_ssize_t nx = data.shape[0], ny = data.shape[1], nz = data.shape[2]
    cdef double mx = bx + vx * (nx - 1), my = by + vy * (ny - 1), mz = bz + vz * (nz - 1)
    cdef double hx = vx * 0.5, hy = vy * 0.5, hz = vz * 0.5
    cdef double px, py, pz, center, plus, minus, h, pa, bmin_a, bmax_a, vox_a
    cdef int nt = _nt(num_threads)
    for i in prange(n, nogil=True, num_threads=nt):
        px = pts[i, 0]; py = pts[i, 1]; pz = pts[i, 2]
        center = _tri_one(data, bx, by, bz, vx, vy, vz, px, py, pz)
        for a in range(3):
            if a == 0:
                h = hx; pa = px; bmin_a = bx; bmax_a = mx; vox_a = vx
                plus = _tri_one(data, bx, by, bz, vx, vy, vz, px + h, py, pz)
                minus = _tri_one(data, bx, by, bz, vx, vy, vz, px - h, py, pz)
            elif a == 1:
                h = hy; pa = py; bmin_a = by; bmax_a = my; vox_a = vy
                plus = _tri_one(data, bx, by, bz, vx, vy, vz, px, py + h, pz)
                minus = _tri_one(data, bx, by, bz, vx, vy, vz, px, py - h, pz)
            else:
                h = hz; pa = pz; bmin_a = bz; bmax_a = mz; vox_a = vz
                plus = _tri_one(data, bx, by, bz, vx, vy, vz, px, py, pz + h)
                minus = _tri_one(data, bx, by, bz, vx, vy, vz, px, py, pz - h)
            if pa < bmin_a + vox_a:
                grads[i, a] = (plus - center) / h
                onesided[i] = 1
            elif pa > bmax_a - vox_a:
                grads[i, a] = (center - minus) / h
                onesided[i] = 1
            else:
                grads[i, a] = (plus - minus) / (2.0 * h)
    return grads_arr, onesided_arr.view(bool)


cdef inline double _line_val(const double[:, :, ::1] data,
                             double bx, double by, double bz,
                             double vx, double vy, double vz,
                             double ox, double oy, double oz,
                             double dx, double dy, double dz,
                             double t) noexcept nogil:
    return _tri_one(data, bx, by, bz, vx, vy, vz,
                    ox + t * dx, oy + t * dy, oz + t * dz)


cdef inline bint _bracket_crossed(double a, double b, double sa, double sb,
                                  bint falling_only) noexcept nogil:
    cdef double s_early, s_late
    if falling_only:
        if a <= b:
            s_early = sa; s_late = sb
        else:
            s_early = sb; s_late = sa
        return s_early > 0.0 and s_late <= 0.0
    return (sa > 0.0) != (sb > 0.0)


cdef bint _cross_one(const double[:, :, ::1] data,
                     double bx, double by, double bz,
                     double vx, double vy, double vz,
                     double ox, double oy, double oz,
                     double dx, double dy, double dz,
                     double lo, double hi, double iso,
                     double step, double tol, bint outward_first,
                     bint falling_only, double* t_out) noexcept nogil:
    cdef double s0 = _line_val(data, bx, by, bz, vx, vy, vz,
                               ox, oy, oz, dx, dy, dz, 0.0) - iso
    cdef Py_ssize_t n_out = <Py_ssize_t>ceil(hi / step) if hi > 0.0 else 0
    cdef Py_ssize_t n_in = <Py_ssize_t>ceil(-lo / step) if lo < 0.0 else 0
    cdef Py_ssize_t k, kmax, it, arm
    cdef double a = 0.0, b = 0.0, sa = 0.0, sb = 0.0, mid, sm
    cdef bint have = 0
    t_out[0] = 0.0
    if s0 == 0.0:
        return 1
    kmax = n_out + n_in if outward_first else (n_out if n_out > n_in else n_in)
    for k in range(kmax):
        if outward_first:
            if k < n_out:
                a = k * step
                b = (k + 1) * step
                if b > hi: b = hi
            else:
                a = -(k - n_out) * step
                b = -(k - n_out + 1) * step
                if b < lo: b = lo
            sa = _line_val(data, bx, by, bz, vx, vy, vz, ox, oy, oz, dx, dy, dz, a) - iso
            sb = _line_val(data, bx, by, bz, vx, vy, vz, ox, oy, oz, dx, dy, dz, b) - iso
            if _bracket_crossed(a, b, sa, sb, falling_only):
                have = 1
        else:
            for arm in range(2):
                if arm == 0:
                    if k >= n_out:
                        continue
                    a = k * step
                    b = (k + 1) * step
                    if b > hi: b = hi
                else:
                    if k >= n_in:
                        continue
                    a = -k * step
                    b = -(k + 1) * step
                    if b < lo: b = lo
                sa = _line_val(data, bx, by, bz, vx, vy, vz, ox, oy, oz, dx, dy, dz, a) - iso
                sb = _line_val(data, bx, by, bz, vx, vy, vz, ox, oy, oz, dx, dy, dz, b) - iso
                if _bracket_crossed(a, b, sa, sb, falling_only):
                    have = 1
                    break
        if have:
            for it in range(64):
                if fabs(b - a) <= tol:
                    break
                mid = 0.5 * (a + b)
                sm = _line_val(data, bx, by, bz, vx, vy, vz, ox, oy, oz, dx, dy, dz, mid) - iso
                if (sm > 0.0) == (sa > 0.0):
                    a = mid; sa = sm
                else:
                    b = mid; sb = sm
            t_out[0] = 0.5 * (a + b)
            return 1
    return 0


def line_iso_crossing(double[:, :, ::1] data, double[::1] bbox_min,
                      double[::1] voxel, double[::1] origin,
                      double[::1] direction, double lo, double hi,
                      double iso, double step, double tol,
                      bint outward_first=False, bint falling_only=False):
    cdef double t = 0.0
    cdef bint found
    found = _cross_one(data, bbox_min[0], bbox_min[1], bbox_min[2],
                       voxel[0], voxel[1], voxel[2],
                       origin[0], origin[1], origin[2],
                       direction[0], direction[1], direction[2],
                       lo, hi, iso, step, tol, outward_first, falling_only, &t)
    return t, bool(found)


def line_iso_crossing_batch(double[:, :, ::1] data, double[::1] bbox_min,
                            double[::1] voxel, double[:, ::1] origins,
                            double[:, ::1] directions, double[::1] los,
                            double[::1] his, double iso, double step,
                            double tol, bint outward_first=False,
                            bint falling_only=False, int num_threads=0):
    cdef Py_ssize_t n = origins.shape[0], i
    ts_arr = np.zeros(n, dtype=np.float64)
    founds_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] ts = ts_arr
    cdef cnp.uint8_t[::1] founds = founds_arr
    cdef double bx = bbox_min[0], by = bbox_min[1], bz = bbox_min[2]
    cdef double vx = voxel[0], vy = voxel[1], vz = voxel[2]
    cdef int nt = _nt(num_threads)
    for i in prange(n, nogil=True, num_threads=nt):
        founds[i] = _cross_one(data, bx, by, bz, vx, vy, vz,
                               origins[i, 0], origins[i, 1], origins[i, 2],
                               directions[i, 0], directions[i, 1], directions[i, 2],
                               los[i], his[i], iso, step, tol, outward_first,
                               falling_only, &ts[i])
    return ts_arr, founds_arr.view(bool)
