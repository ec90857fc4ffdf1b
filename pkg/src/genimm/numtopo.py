"""Numerical topology: linking numbers, degrees, Hopf invariants, curve solving.

The engines here are chart free.  Curves produced elsewhere in the package
live on a closed hypersurface in R^4 that is star shaped about the origin,
so each curve is faithfully described by the rays through its points and can
be normalized onto the unit 3-sphere whenever a common reference is needed.
Linking numbers are computed two independent ways: exactly on polylines via
solid angles of the Gauss map after a stereographic projection, and exactly
via signed crossings through a spherical cone.  Agreement of the two is used
as a runtime consistency check by the callers.  Degree and fiber routines
run batched Newton iterations seeded from coarse grids.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.spatial import cKDTree

from .config import Config, DEFAULT


class NonRegularValueError(RuntimeError):
    """Raised when a requested target value fails the regularity checks."""


@dataclasses.dataclass(frozen=True)
class SignedCount:
    """Isolated solutions of an equation together with orientation signs."""

    locations: np.ndarray
    signs: np.ndarray

    @property
    def value(self) -> int:
        return int(self.signs.sum())

    @property
    def count(self) -> int:
        return int(len(self.signs))


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _drop_duplicate_endpoint(curve):
    curve = np.asarray(curve, dtype=float)
    if curve.ndim != 2 or len(curve) < 3:
        raise ValueError("expected a closed polyline with at least 3 vertices")
    if np.linalg.norm(curve[0] - curve[-1]) < 1e-12:
        curve = curve[:-1]
    return curve


# ---------------------------------------------------------------------------
# linking of closed polylines in R^3


def _triangle_solid_angle(t1, t2, t3):
    num = np.einsum("...i,...i->...", t1, np.cross(t2, t3))
    den = (1.0 + np.einsum("...i,...i->...", t1, t2)
           + np.einsum("...i,...i->...", t2, t3)
           + np.einsum("...i,...i->...", t3, t1))
    return 2.0 * np.arctan2(num, den)


def gauss_link_raw(curve_a, curve_b, config: Config = DEFAULT) -> float:
    """Gauss linking integral of two closed polylines, summed exactly.

    The Gauss map g(s, t) = (a(s) - b(t)) / |a(s) - b(t)| sends the torus of
    parameter pairs to the unit sphere; its degree over one segment pair is
    the signed solid angle of a spherical quadrilateral, evaluated here with
    the arctangent formula, so the result is exact for the polylines.  With
    this Gauss map det(g, dg/ds, dg/dt) = -det(da/ds, db/dt, a - b)/|a-b|^3,
    so the right handed crossing convention is minus the accumulated angle
    over 4 pi.
    """
    a = _drop_duplicate_endpoint(curve_a)
    b = _drop_duplicate_endpoint(curve_b)
    if a.shape[1] != 3 or b.shape[1] != 3:
        raise ValueError("curves must lie in R^3")
    if cKDTree(b).query(a)[0].min() < config.min_image_separation:
        raise ValueError("curves are too close to link reliably")
    a_next = np.roll(a, -1, axis=0)
    b_next = np.roll(b, -1, axis=0)
    total = 0.0
    block = max(1, (1 << 21) // len(b))
    for lo in range(0, len(a), block):
        p0 = a[lo:lo + block, None, :]
        p1 = a_next[lo:lo + block, None, :]
        va = _unit(p0 - b[None, :, :])
        vb = _unit(p0 - b_next[None, :, :])
        vc = _unit(p1 - b_next[None, :, :])
        vd = _unit(p1 - b[None, :, :])
        total += _triangle_solid_angle(va, vd, vc).sum()
        total += _triangle_solid_angle(va, vc, vb).sum()
    return -total / (4.0 * np.pi)


def gauss_link(curve_a, curve_b, config: Config = DEFAULT) -> int:
    raw = gauss_link_raw(curve_a, curve_b, config)
    rounded = int(np.rint(raw))
    if abs(raw - rounded) > config.integer_rounding_margin:
        raise ArithmeticError(
            f"linking sum {raw:.6f} is not near an integer; "
            "the curves are under-resolved or intersect")
    return rounded


# ---------------------------------------------------------------------------
# stereographic projection


def stereographic_basis(pole):
    """Orthonormal (e1, e2, e3) normal to pole with det[pole, e] = -1.

    Projection from the pole then carries the outward-normal-first
    orientation of the unit 3-sphere to the standard orientation of R^3.
    """
    p = _unit(np.asarray(pole, dtype=float))
    cols = [p]
    for k in np.argsort(np.abs(p)):
        cand = np.eye(4)[k]
        for c in cols:
            cand = cand - (cand @ c) * c
        n = np.linalg.norm(cand)
        if n > 1e-9:
            cols.append(cand / n)
        if len(cols) == 4:
            break
    basis = np.stack(cols[1:], axis=1)
    if np.linalg.det(np.column_stack([p, basis])) > 0:
        basis = basis[:, [1, 0, 2]]
    return basis


def stereographic(points, pole):
    """Project unit 4-vectors from the pole onto R^3, preserving orientation."""
    points = np.asarray(points, dtype=float)
    p = _unit(np.asarray(pole, dtype=float))
    basis = stereographic_basis(p)
    denom = 1.0 - points @ p
    if np.any(np.abs(denom) < 1e-9):
        raise ValueError("points pass through the projection pole")
    return (points @ basis) / denom[..., None]


def choose_pole(curves, config: Config = DEFAULT):
    """Unit 4-vector staying far from every given curve (after normalizing)."""
    pts = _unit(np.concatenate([_drop_duplicate_endpoint(c) for c in curves]))
    rng = np.random.default_rng(config.seed)
    cands = np.concatenate([np.eye(4), -np.eye(4),
                            _unit(rng.normal(size=(60, 4)))])
    dist = np.linalg.norm(pts[None, :, :] - cands[:, None, :], axis=-1)
    return cands[dist.min(axis=1).argmax()]


def projected_link(curve_a, curve_b, config: Config = DEFAULT, pole=None) -> int:
    """Linking number of two closed curves given by rays in R^4.

    Curves are normalized onto the unit sphere, projected stereographically
    away from a pole clear of both, and linked with the Gauss formula.
    """
    a = _unit(_drop_duplicate_endpoint(curve_a))
    b = _unit(_drop_duplicate_endpoint(curve_b))
    if pole is None:
        pole = choose_pole([a, b], config)
    return gauss_link(stereographic(a, pole), stereographic(b, pole), config)


# ---------------------------------------------------------------------------
# linking via cone crossings on the 3-sphere of rays


def _cross4(u, v, w):
    """Vector X with X . y = det[u, v, w, y] columnwise, for stacked inputs."""
    m = np.stack([u, v, w], axis=-1)
    keep = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
    minors = np.stack([np.linalg.det(m[..., rows, :]) for rows in keep],
                      axis=-1)
    minors[..., 0] *= -1.0
    minors[..., 2] *= -1.0
    return minors


def _cone_crossings(apex, a, a_next, b):
    """Signed crossings of curve b through the spherical cone over curve a.

    The cone from the apex ray over an a-segment is the spherical triangle
    spanned by the three rays, parametrized by c(s, t) = (1-t) z + t a(s)
    and oriented by (dc/dt, dc/ds) so that its boundary traverses the
    segment positively.  A b-segment crosses the supporting hyperplane where
    the determinant d(u) = det[z, a_i, a_i+1, b(u)] changes sign, and lands
    inside the triangle when its coordinates in the three spanning rays are
    positive.  Tracking orientations through the radial projection onto the
    unit sphere, the crossing sign is sign(d_j+1 - d_j).  Returns None when
    a crossing is too close to a triangle edge to call.
    """
    x_vec = _cross4(np.broadcast_to(apex, a.shape), a, a_next)
    d = x_vec @ b.T
    scale = (np.linalg.norm(x_vec, axis=1, keepdims=True)
             * np.linalg.norm(b, axis=1)[None, :])

    def near_triangle(i, w, slack):
        span = np.column_stack([apex, a[i], a_next[i]])
        coeff, *_ = np.linalg.lstsq(span, w, rcond=None)
        return coeff, np.all(coeff > -slack * np.linalg.norm(w))

    # a vertex almost on a supporting hyperplane is harmless unless it is
    # also near that triangle, where the crossing count would be ambiguous
    for i, j in np.argwhere(np.abs(d) < 1e-9 * np.maximum(scale, 1e-30)):
        if near_triangle(i, b[j], 1e-6)[1]:
            return None

    d_next = np.roll(d, -1, axis=1)
    hits = np.argwhere(np.sign(d) != np.sign(d_next))
    total = 0
    for i, j in hits:
        jn = (j + 1) % d.shape[1]
        u = d[i, j] / (d[i, j] - d[i, jn])
        w = (1.0 - u) * b[j] + u * b[jn]
        coeff, inside_closed = near_triangle(i, w, 1e-9)
        if inside_closed and np.any(coeff < 1e-9 * np.linalg.norm(w)):
            return None  # crossing on a triangle edge, apex not generic
        if np.all(coeff > 0):
            total += 1 if d[i, jn] > d[i, j] else -1
    return total


def spherical_cone_link(curve_a, curve_b, config: Config = DEFAULT,
                        apex=None) -> int:
    """Linking number of two disjoint closed curves on a star-shaped 3-sphere.

    Both curves are taken up to positive radial scale, so any hypersurface
    star shaped about the origin works.  The number returned is the signed
    count of crossings of curve_b through a 2-chain coning curve_a off to an
    apex ray, equal to the Gauss-projection linking number.
    """
    a = _unit(_drop_duplicate_endpoint(curve_a))
    b = _unit(_drop_duplicate_endpoint(curve_b))
    if a.shape[1] != 4 or b.shape[1] != 4:
        raise ValueError("curves must be given by rays in R^4")
    if cKDTree(b).query(a)[0].min() < config.min_image_separation:
        raise ValueError("curves are too close to link reliably")
    a_next = np.roll(a, -1, axis=0)
    keep = np.linalg.norm(a_next - a, axis=1) > 1e-13
    a_seg, a_seg_next = a[keep], a_next[keep]
    rng = np.random.default_rng(config.seed)
    if apex is not None:
        candidates = [_unit(np.asarray(apex, dtype=float))]
    else:
        pool = _unit(rng.normal(size=(40, 4)))
        pts = np.concatenate([a, b])
        score = np.linalg.norm(pts[None] - pool[:, None], axis=-1).min(axis=1)
        candidates = list(pool[np.argsort(score)[::-1]][:config.apex_retries])
    for z in candidates:
        total = _cone_crossings(z, a_seg, a_seg_next, b)
        if total is not None:
            return total
    raise ArithmeticError("no generic apex found for the cone construction")


# ---------------------------------------------------------------------------
# degree of a map from the swept 3-sphere to S^3


def _wrap_angle_diff(x, y):
    d = x - y
    return (d + np.pi) % (2 * np.pi) - np.pi


def _finite_difference_jacobian(map_fn, theta, r, phi, step):
    cols = []
    for dt, dr, dp in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]:
        hi = map_fn(theta + step * dt, r + step * dr, phi + step * dp)
        lo = map_fn(theta - step * dt, r - step * dr, phi - step * dp)
        cols.append((hi - lo) / (2 * step))
    return np.stack(cols, axis=-1)


def degree_S3(map_fn, value, config: Config = DEFAULT, jac_fn=None) -> SignedCount:
    """Mapping degree at a regular value of a map (theta, r, phi) -> S^3.

    The domain is the box [0, 2pi) x [0, pi] x [0, 2pi) with periodic first
    and last coordinates.  Preimages are located by a coarse grid prefilter
    followed by a batched Newton iteration in the tangent chart of the
    value, deduplicated with wrapped distances, and signed by the sign of
    det[value, J columns].  Raises NonRegularValueError when any preimage
    fails the Jacobian regularity threshold.
    """
    v = _unit(np.asarray(value, dtype=float))
    if jac_fn is None:
        def jac_fn(theta, r, phi):
            return _finite_difference_jacobian(map_fn, theta, r, phi,
                                               config.fd_step)
    basis = stereographic_basis(v)

    n = config.degree_grid
    theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
    r = (np.arange(n) + 0.5) * np.pi / n
    phi = theta.copy()
    best = np.inf
    cand = []
    for th in theta:
        T = np.full((n, n), th)
        R, P = np.meshgrid(r, phi, indexing="ij")
        vals = map_fn(T, R, P)
        dist = np.linalg.norm(vals - v, axis=-1)
        best = min(best, dist.min())
        mask = dist < 0.35
        if mask.any():
            cand.append(np.stack([T[mask], R[mask], P[mask]], axis=-1))
    if not cand:
        if best > 0.2:
            return SignedCount(np.empty((0, 3)), np.empty(0, dtype=int))
        raise NonRegularValueError("grid approaches the value but no "
                                   "candidate cell isolates a preimage")

    x = np.concatenate(cand)
    alive = np.ones(len(x), dtype=bool)
    for _ in range(config.newton_max_iter):
        vals = map_fn(x[:, 0], x[:, 1], x[:, 2])
        F = vals @ basis
        res = np.linalg.norm(F, axis=-1)
        if res[alive].size == 0 or res[alive].max() < config.newton_tol:
            break
        J = jac_fn(x[:, 0], x[:, 1], x[:, 2])
        JF = np.einsum("ki,...ij->...kj", basis.T, J)
        good = np.abs(np.linalg.det(JF)) > 1e-14
        alive &= good
        step = np.zeros_like(x)
        step[good] = np.linalg.solve(JF[good], F[good][..., None])[..., 0]
        norms = np.linalg.norm(step, axis=-1, keepdims=True)
        step = np.where(norms > 0.5, step * (0.5 / np.maximum(norms, 0.5)),
                        step)
        x = x - np.where(alive[:, None], step, 0.0)

    vals = map_fn(x[:, 0], x[:, 1], x[:, 2])
    F = vals @ basis
    ok = (np.linalg.norm(F, axis=-1) < 100 * config.newton_tol) & alive
    ok &= vals @ v > 0.5
    ok &= (x[:, 1] > 1e-7) & (x[:, 1] < np.pi - 1e-7)
    x = x[ok]
    if len(x) == 0:
        if best > 0.2:
            return SignedCount(np.empty((0, 3)), np.empty(0, dtype=int))
        raise NonRegularValueError("Newton lost every candidate preimage")

    reps = []
    for p in x:
        for q in reps:
            if (abs(_wrap_angle_diff(p[0], q[0])) < 1e-4
                    and abs(p[1] - q[1]) < 1e-4
                    and abs(_wrap_angle_diff(p[2], q[2])) < 1e-4):
                break
        else:
            reps.append(p)
    reps = np.array(reps)

    J = jac_fn(reps[:, 0], reps[:, 1], reps[:, 2])
    JF = np.einsum("ki,...ij->...kj", basis.T, J)
    if np.any(np.abs(np.linalg.det(JF)) < config.jacobian_min_det):
        raise NonRegularValueError("value is not regular: singular Jacobian "
                                   "at a preimage")
    full = np.concatenate([np.broadcast_to(v, (len(reps), 4))[..., None], J],
                          axis=-1)
    signs = np.sign(np.linalg.det(full)).astype(int)
    return SignedCount(reps, signs)


# ---------------------------------------------------------------------------
# fiber tracing and the Hopf invariant


def _sphere_tangent_basis(v):
    # right handed: det[v, w1, w2] = +1 so (w1, w2) is positive for the
    # outward-normal-first orientation of S^2
    v = _unit(np.asarray(v, dtype=float))
    seed = np.eye(3)[np.argmin(np.abs(v))]
    w1 = _unit(seed - (seed @ v) * v)
    w2 = np.cross(v, w1)
    return w1, w2


def _correct_to_level(x, residual, config: Config):
    """Gauss-Newton projection onto the level set, or None on failure."""
    x = np.asarray(x, dtype=float).copy()
    for _ in range(config.newton_max_iter):
        F, J = residual(x)
        if np.linalg.norm(F) < config.trace_corrector_tol:
            return x
        step, *_ = np.linalg.lstsq(J, F, rcond=None)
        x = x - step
    return None


def _trace_closed_curve(start, residual, tangent, config: Config,
                        lattice=None):
    """Predictor-corrector tracing of a closed regular level curve.

    residual(x) -> (k,) must vanish on the curve, tangent(x) -> unit
    direction field along it (already oriented).  lattice, when given, lists
    period vectors identified with zero for the closure test.
    """
    def correct(x):
        out = _correct_to_level(x, residual, config)
        if out is None:
            raise ArithmeticError("corrector failed to converge while "
                                  "tracing")
        return out

    shifts = [np.zeros_like(np.asarray(start, dtype=float))]
    if lattice is not None:
        shifts = [i * lattice[0] + j * lattice[1]
                  for i in (-1, 0, 1) for j in (-1, 0, 1)]

    def closed_to(x, ref):
        d = x - ref
        return min(np.linalg.norm(d - s) for s in shifts)

    x = correct(np.asarray(start, dtype=float))
    pts = [x]
    step = config.trace_step
    for n in range(config.trace_max_steps):
        t = tangent(x)
        h = step
        if n > 5:
            gap = closed_to(x, pts[0])
            if gap < 1.5 * step:
                h = max(gap * 0.5, config.trace_closure_tol * 0.25)
        x = correct(x + h * t)
        pts.append(x)
        if n > 5 and closed_to(x, pts[0]) < config.trace_closure_tol:
            return np.array(pts)
    raise ArithmeticError("level curve failed to close while tracing")


def _fibers_param(map_fn, v, config: Config, jac_fn=None, grid=48):
    """All fiber components of map_fn over v in the (theta, r, phi) box."""
    if jac_fn is None:
        def jac_fn(theta, r, phi):
            return _finite_difference_jacobian(map_fn, theta, r, phi,
                                               config.fd_step)
    w1, w2 = _sphere_tangent_basis(v)
    W = np.stack([w1, w2], axis=0)

    def residual(x):
        val = map_fn(x[0], x[1], x[2])
        J = jac_fn(x[0], x[1], x[2])
        return W @ (val - v), W @ J

    def tangent(x):
        _, J = residual(x)
        t = np.cross(J[0], J[1])
        norm = np.linalg.norm(t)
        if norm < 1e-12:
            raise NonRegularValueError("fiber tangent degenerated; the "
                                       "value is not regular")
        t = t / norm
        u = np.linalg.pinv(J)
        sign = np.sign(np.linalg.det(np.column_stack([t, u[:, 0], u[:, 1]])))
        return t * sign

    theta = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    r = (np.arange(grid) + 0.5) * np.pi / grid
    T, R, P = np.meshgrid(theta, r, theta, indexing="ij")
    vals = map_fn(T, R, P)
    mask = np.linalg.norm(vals - v, axis=-1) < 0.3
    seeds = np.stack([T[mask], R[mask], P[mask]], axis=-1)
    if len(seeds) == 0:
        return []
    if len(seeds) > 400:
        rng = np.random.default_rng(config.seed)
        seeds = seeds[rng.choice(len(seeds), 400, replace=False)]

    lattice = [np.array([2 * np.pi, 0, 0]), np.array([0, 0, 2 * np.pi])]
    shifts = [i * lattice[0] + j * lattice[1]
              for i in (-1, 0, 1) for j in (-1, 0, 1)]
    curves = []
    trees = []
    for seed in seeds:
        refined = _correct_to_level(seed, residual, config)
        if refined is None:
            continue
        if any(tree.query(refined)[0] < 3 * config.trace_step
               for tree in trees):
            continue
        curve = _trace_closed_curve(refined, residual, tangent, config,
                                    lattice=lattice)
        curves.append(curve)
        trees.append(cKDTree(np.concatenate([curve + s for s in shifts])))
    return curves


def _fibers_ambient(field, constraint, v, config: Config, samples=120000):
    """Fiber components of an S^2-valued field on the hypersurface {G = 0}."""
    w1, w2 = _sphere_tangent_basis(v)
    W = np.stack([w1, w2], axis=0)
    h = config.fd_step

    def grad_rows(x):
        rows = np.empty((3, 4))
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            fp, fm = field(x + e), field(x - e)
            rows[:2, k] = W @ (fp - fm) / (2 * h)
            rows[2, k] = (constraint(x + e) - constraint(x - e)) / (2 * h)
        return rows

    def residual(x):
        F = np.empty(3)
        F[:2] = W @ (field(x) - v)
        F[2] = constraint(x)
        return F, grad_rows(x)

    def tangent(x):
        _, J = residual(x)
        t = _cross4(J[0], J[1], J[2])
        norm = np.linalg.norm(t)
        if norm < 1e-12:
            raise NonRegularValueError("fiber tangent degenerated")
        t = t / norm
        u = np.linalg.pinv(J)
        sign = np.sign(np.linalg.det(
            np.column_stack([J[2], t, u[:, 0], u[:, 1]])))
        return t * sign

    rng = np.random.default_rng(config.seed)
    pts = _unit(rng.normal(size=(samples, 4)))
    vals = field(pts)
    mask = np.linalg.norm(vals - v, axis=-1) < 0.25
    seeds = pts[mask]
    if len(seeds) == 0:
        return []
    if len(seeds) > 400:
        seeds = seeds[rng.choice(len(seeds), 400, replace=False)]
    curves = []
    trees = []
    for seed in seeds:
        refined = _correct_to_level(seed, residual, config)
        if refined is None:
            continue
        if any(tree.query(refined)[0] < 3 * config.trace_step
               for tree in trees):
            continue
        curve = _trace_closed_curve(refined, residual, tangent, config)
        curves.append(curve)
        trees.append(cKDTree(curve))
    return curves


def hopf_invariant(map_fn, config: Config = DEFAULT, *, domain="param",
                   constraint=None, to_sphere=None, values=None,
                   jac_fn=None, return_fibers=False):
    """Hopf invariant of a map to S^2: linking of two regular fibers.

    domain="param" expects map_fn(theta, r, phi) on the periodic box and a
    to_sphere callable carrying parameter points to rays in R^4.
    domain="ambient" expects map_fn(x) for x in R^4 near {constraint = 0}.
    Each fiber is traced, oriented so that the differential carries a
    positive complement onto the chosen tangent basis at the value, pushed
    onto the unit 3-sphere, and linked with both linking engines; the two
    must agree.  A map that misses a value is null homotopic, giving 0.

    Sign normalization: the quaternionic rotation map x -> x i conj(x) has
    Hopf invariant +1.  This is the convention the closed-form frame columns
    are built around; it is the negative of the right-handed fiber linking
    that gauss_link reports, so the result is negated once at the end.
    """
    if values is None:
        rng = np.random.default_rng(config.seed + 1)
        values = _unit(rng.normal(size=(2, 3)))
    v1, v2 = (np.asarray(v, dtype=float) for v in values)
    if domain == "param":
        if to_sphere is None:
            raise ValueError("param domain requires to_sphere")
        fib1 = _fibers_param(map_fn, v1, config, jac_fn)
        fib2 = _fibers_param(map_fn, v2, config, jac_fn)
        rays1 = [to_sphere(c) for c in fib1]
        rays2 = [to_sphere(c) for c in fib2]
    elif domain == "ambient":
        if constraint is None:
            raise ValueError("ambient domain requires constraint")
        rays1 = _fibers_ambient(map_fn, constraint, v1, config)
        rays2 = _fibers_ambient(map_fn, constraint, v2, config)
    else:
        raise ValueError("domain must be 'param' or 'ambient'")

    if not rays1 or not rays2:
        result = 0
        return (result, rays1, rays2) if return_fibers else result

    rays1 = [_unit(c) for c in rays1]
    rays2 = [_unit(c) for c in rays2]
    pole = choose_pole(rays1 + rays2, config)
    total = 0
    for ca in rays1:
        for cb in rays2:
            lk = gauss_link(stereographic(ca, pole), stereographic(cb, pole),
                            config)
            cone = spherical_cone_link(ca, cb, config)
            if lk != cone:
                raise ArithmeticError(
                    f"linking engines disagree ({lk} vs {cone}); "
                    "fiber curves are under-resolved")
            total += lk
    total = -total  # frame-map normalization, see docstring
    return (total, rays1, rays2) if return_fibers else total


# ---------------------------------------------------------------------------
# numerical self-intersection of the immersed sphere


@dataclasses.dataclass(frozen=True)
class SelfIntersection:
    """One double-point curve of an immersion, found numerically.

    preimage_components holds one closed polyline on the domain when the
    two branches over the double curve merge into a single circle, and two
    polylines otherwise.  image_curve is the corresponding polyline in R^5
    traced along the first branch.
    """

    preimage_components: tuple
    image_curve: np.ndarray
    merged_cover: bool


def _double_point_seeds(family, config: Config):
    p = family.params
    theta = np.linspace(0, 2 * np.pi, 72, endpoint=False)
    r_coarse = np.linspace(0.08, np.pi - 0.08, 26)
    r_fine = np.linspace(max(p.double_point_r - 0.25, 0.02),
                         p.double_point_r + 0.25, 14)
    r = np.unique(np.concatenate([r_coarse, r_fine]))
    phi = np.linspace(0, 2 * np.pi, 44, endpoint=False)
    T, R, P = np.meshgrid(theta, r, phi, indexing="ij")
    pts = family.torus_coords_point(T.ravel(), R.ravel(), P.ravel())
    img = family.ambient_eval(pts)
    tree = cKDTree(img)
    # k nearest neighbours instead of query_pairs: the grid is very dense
    # near the disk centres and an all-pairs query there blows up memory
    dist, nbr = tree.query(img, k=13)
    i = np.repeat(np.arange(len(img)), 12)
    j = nbr[:, 1:].ravel()
    close = dist[:, 1:].ravel() < config.pair_seed_radius
    i, j = i[close], j[close]
    sep = np.linalg.norm(pts[i] - pts[j], axis=1)
    keep = sep > config.min_preimage_separation
    i, j = i[keep], j[keep]
    if len(i) == 0:
        return np.empty((0, 8))
    gap = np.linalg.norm(img[i] - img[j], axis=1)
    order = np.argsort(gap)[:4000]
    return np.concatenate([pts[i][order], pts[j][order]], axis=1)


def solve_self_intersection(family, config: Config = DEFAULT):
    """Trace the double-point curves of a family member numerically.

    Solves f(x) = f(y) on pairs of distinct points of the domain
    hypersurface by damped Gauss-Newton from grid-proximity seeds, then
    follows each solution curve with a predictor-corrector walk in R^8.
    Returns a list of SelfIntersection records, one per double curve.
    """
    from .geometry import domain_constraint

    def residual(z):
        x, y = z[:4], z[4:]
        F = np.empty(7)
        F[:5] = family.ambient_eval(x) - family.ambient_eval(y)
        F[5] = domain_constraint(x, family.params)
        F[6] = domain_constraint(y, family.params)
        Jx = family.ambient_jacobian(x)
        Jy = family.ambient_jacobian(y)
        h = config.fd_step
        J = np.zeros((7, 8))
        J[:5, :4] = Jx
        J[:5, 4:] = -Jy
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            J[5, k] = (domain_constraint(x + e, family.params)
                       - domain_constraint(x - e, family.params)) / (2 * h)
            J[6, 4 + k] = (domain_constraint(y + e, family.params)
                           - domain_constraint(y - e, family.params)) / (2 * h)
        return F, J

    def refine(z):
        F, J = residual(z)
        best = np.linalg.norm(F)
        for _ in range(config.newton_max_iter):
            if best < config.newton_tol:
                return z
            step, *_ = np.linalg.lstsq(J, F, rcond=None)
            scale = 1.0
            for _ in range(8):
                cand = z - scale * step
                Fc, Jc = residual(cand)
                if np.linalg.norm(Fc) < best:
                    z, F, J, best = cand, Fc, Jc, np.linalg.norm(Fc)
                    break
                scale *= 0.5
            else:
                return None
        return z if best < config.newton_tol else None

    def tangent_field(prev):
        def tangent(z):
            _, J = residual(z)
            t = np.linalg.svd(J)[2][-1]
            if prev[0] is not None and t @ prev[0] < 0:
                t = -t
            prev[0] = t
            return t
        return tangent

    seeds = _double_point_seeds(family, config)
    solved = []
    for z in seeds[:600]:
        out = refine(z.copy())
        if out is None:
            continue
        if np.linalg.norm(out[:4] - out[4:]) < config.min_preimage_separation:
            continue
        solved.append(out)
        if len(solved) >= 80:
            break
    results = []
    consumed = np.zeros(len(solved), dtype=bool)
    solved_arr = np.array(solved) if solved else np.empty((0, 8))
    for idx in range(len(solved)):
        if consumed[idx]:
            continue
        z0 = solved_arr[idx]
        swap0 = np.concatenate([z0[4:], z0[:4]])
        prev = [None]
        tangent = tangent_field(prev)
        merged = False
        pts = [z0]
        z = z0.copy()
        armed = True
        step = config.double_trace_step
        for n in range(config.trace_max_steps):
            t = tangent(z)
            h = step
            gap = np.linalg.norm(z - z0)
            if n > 5 and gap < 1.5 * h:
                h = max(gap * 0.5, config.trace_closure_tol * 0.25)
            cand = None
            while cand is None and h > config.trace_closure_tol * 0.1:
                cand = refine(z + h * t)
                h *= 0.5
            if cand is None:
                raise ArithmeticError("double curve tracing lost the curve")
            z = cand
            pts.append(z)
            d_swap = np.linalg.norm(z - swap0)
            if d_swap > 3 * step:
                armed = True
            if armed and d_swap < 1.5 * step:
                merged = True
                armed = False
            if n > 5 and np.linalg.norm(z - z0) < config.trace_closure_tol:
                break
        else:
            raise ArithmeticError("double curve failed to close")
        track = np.array(pts)
        x_track, y_track = track[:, :4], track[:, 4:]
        if merged:
            comps = (x_track,)
        else:
            comps = (x_track, y_track)
        results.append(SelfIntersection(
            preimage_components=comps,
            image_curve=family.ambient_eval(x_track),
            merged_cover=merged))
        both = np.concatenate([track, track[:, [4, 5, 6, 7, 0, 1, 2, 3]]])
        dist = cKDTree(both).query(solved_arr)[0]
        consumed |= dist < 3 * step
    return results


# ---------------------------------------------------------------------------
# linking of a closed curve with an immersed 3-sphere image in R^5


class _DegenerateChain(Exception):
    """Internal: a crossing fell on a triangle edge or was near-tangential."""


def _star_project(directions, constraint):
    """Radially project unit 4-vectors onto the star-shaped level {G = 0}.

    Fixed-point iteration on the scale: for a unit direction d and scale s,
    G(s d) = s^2 - R(s d)^2 with R the target radius, so s <- sqrt(s^2 - G)
    converges for profiles whose radius varies slowly along rays.
    """
    d = _unit(np.asarray(directions, dtype=float))
    lam = np.ones(len(d))
    for _ in range(80):
        step = np.sqrt(np.maximum(lam**2 - constraint(lam[:, None] * d),
                                  1e-12))
        if np.max(np.abs(step - lam)) < 1e-13:
            lam = step
            break
        lam = step
    return lam[:, None] * d


def _chain_samples(verts, apex):
    """Sample lattice on the triangle fan: flat (points, triangle, u, t)."""
    n = len(verts)
    seg_b = verts[np.roll(np.arange(n), -1)]
    t_grid = np.concatenate([np.geomspace(1e-5, 0.02, 14, endpoint=False),
                             np.arange(0.02, 0.96, 0.015)])
    u_grid = np.array([0.25, 0.75])
    base = ((1 - u_grid)[:, None, None] * verts[None]
            + u_grid[:, None, None] * seg_b[None])
    pts = ((1 - t_grid)[:, None, None, None] * base[None]
           + t_grid[:, None, None, None] * apex)
    shape = pts.shape[:-1]
    tri = np.broadcast_to(np.arange(n)[None, None, :], shape).ravel()
    u = np.broadcast_to(u_grid[None, :, None], shape).ravel()
    t = np.broadcast_to(t_grid[:, None, None], shape).ravel()
    return pts.reshape(-1, 5), tri, u, t


def _seeds_near_chain(chain_tree, manifold, constraint, config: Config,
                      extra=None):
    """Domain points whose images come near the chain, by ray refinement.

    Starts from a quasi-uniform radial sample of the domain hypersurface
    and keeps jitter-refining the points whose images approach the chain.
    Returns None when nothing comes near at the coarse scale, which rules
    out any crossing at the sampling resolution used by the caller.
    """
    rng = np.random.default_rng(config.seed + 5)
    pts = _star_project(rng.normal(size=(60000, 4)), constraint)
    if extra is not None and len(extra):
        pts = np.concatenate([pts, np.asarray(extra, dtype=float)])
    for radius, jitter, fan in ((0.25, 0.06, 8), (0.08, 0.02, 6),
                                (0.025, None, 0)):
        dist = chain_tree.query(manifold.ambient_eval(pts))[0]
        keep = pts[dist < radius]
        if jitter is None:
            return keep
        if len(keep) == 0:
            return None
        reps = np.repeat(keep, fan, axis=0)
        reps = reps + rng.normal(size=reps.shape) * jitter
        pts = np.concatenate([keep, _star_project(reps, constraint)])
        if len(pts) > 150000:
            pts = pts[rng.choice(len(pts), 150000, replace=False)]
    return pts


def _fan_crossings(verts, apex, manifold, constraint, seeds, chain_data,
                   config: Config) -> int:
    """Signed count of image crossings through the fan over a polyline.

    Solves the 6 x 6 system (image point meets triangle interior, domain
    constraint) by damped batched Newton from proximity seeds, deduplicates
    converged solutions, and rejects edge-adjacent or near-tangential
    crossings by raising _DegenerateChain so the caller can re-cone.
    """
    n = len(verts)
    seg_a = verts
    seg_b = verts[np.roll(np.arange(n), -1)]
    fd = config.fd_step
    edge = 1e-5

    def grad_constraint(x):
        g = np.empty_like(x)
        for k in range(4):
            e = np.zeros(4)
            e[k] = fd
            g[..., k] = (constraint(x + e) - constraint(x - e)) / (2 * fd)
        return g

    chain_pts, tri_s, u_s, t_s = chain_data
    img = manifold.ambient_eval(seeds)
    # Pair in the seed -> chain direction: every seed mapping near the fan
    # launches Newton at its closest chain samples.  The reverse direction
    # (closest seeds per chain sample) starves sheets of a double circle
    # whose images coincide, since the nearest-image list can be exhausted
    # by a single sheet.
    kc = min(6, len(chain_pts))
    dist, idx = cKDTree(chain_pts).query(img, k=kc)
    dist = dist.reshape(len(img), kc)
    idx = idx.reshape(len(img), kc)
    pair_seed = []
    pair_row = []
    for j in range(kc):
        good = dist[:, j] < config.pair_seed_radius
        if j > 0:
            good &= np.all(tri_s[idx[:, j, None]]
                           != tri_s[idx[:, :j]], axis=1)
        pair_seed.append(np.nonzero(good)[0])
        pair_row.append(idx[good, j])
    pair_seed = np.concatenate(pair_seed)
    pair_row = np.concatenate(pair_row)
    if len(pair_seed) == 0:
        return 0
    if len(pair_seed) > 60000:
        stride = len(pair_seed) // 60000 + 1
        pair_seed, pair_row = pair_seed[::stride], pair_row[::stride]
    tri = tri_s[pair_row]
    z = np.column_stack([seeds[pair_seed], u_s[pair_row], t_s[pair_row]])
    A, B = seg_a[tri], seg_b[tri]

    def chain_of(zz, Aw, Bw):
        u, t = zz[:, 4], zz[:, 5]
        base = (1 - u)[:, None] * Aw + u[:, None] * Bw
        return (1 - t)[:, None] * base + t[:, None] * apex

    def residual(zz, Aw, Bw):
        F = np.empty((len(zz), 6))
        F[:, :5] = manifold.ambient_eval(zz[:, :4]) - chain_of(zz, Aw, Bw)
        F[:, 5] = constraint(zz[:, :4])
        return F

    def jacobian(zz, Aw, Bw):
        x, u, t = zz[:, :4], zz[:, 4], zz[:, 5]
        J = np.zeros((len(zz), 6, 6))
        J[:, :5, :4] = manifold.ambient_jacobian(x)
        J[:, 5, :4] = grad_constraint(x)
        J[:, :5, 4] = -(1 - t)[:, None] * (Bw - Aw)
        J[:, :5, 5] = ((1 - u)[:, None] * Aw + u[:, None] * Bw) - apex
        return J

    alive = np.ones(len(z), dtype=bool)
    best = np.linalg.norm(residual(z, A, B), axis=1)
    for _ in range(config.newton_max_iter):
        work = alive & (best > config.newton_tol)
        if not work.any():
            break
        zw, Aw, Bw = z[work], A[work], B[work]
        J = jacobian(zw, Aw, Bw)
        F = residual(zw, Aw, Bw)
        ok = np.abs(np.linalg.det(J)) > 1e-300
        step = np.zeros_like(zw)
        step[ok] = np.linalg.solve(J[ok], F[ok][..., None])[..., 0]
        zn, bn = zw.copy(), best[work].copy()
        improved = np.zeros(len(zw), dtype=bool)
        scale = 1.0
        for _ in range(6):
            cand = zw - scale * step
            fc = np.linalg.norm(residual(cand, Aw, Bw), axis=1)
            adv = ok & ~improved & (fc < bn)
            zn[adv], bn[adv] = cand[adv], fc[adv]
            improved |= adv
            scale *= 0.5
        z[work], best[work] = zn, bn
        widx = np.where(work)[0]
        alive[widx[~improved]] = False

    conv = alive & (best < 100 * config.newton_tol)
    z, tri, A, B = z[conv], tri[conv], A[conv], B[conv]
    u, t = z[:, 4], z[:, 5]
    if np.any((np.abs(u) < edge) | (np.abs(u - 1.0) < edge)
              | (np.abs(t - 1.0) < edge)):
        raise _DegenerateChain("crossing on a fan edge")
    inside = (u > edge) & (u < 1 - edge) & (t > 1e-7) & (t < 1 - edge)
    z, tri, A, B = z[inside], tri[inside], A[inside], B[inside]
    if len(z) == 0:
        return 0

    key = np.column_stack([z[:, :4], chain_of(z, A, B)])
    reps = []
    for k in range(len(z)):
        if all(np.linalg.norm(key[k] - key[j]) > 1e-5 for j in reps):
            reps.append(k)

    total = 0
    for k in reps:
        x, u, t = z[k, :4], z[k, 4], z[k, 5]
        nu = manifold.ambient_jacobian(x)
        nhat = _unit(grad_constraint(x[None])[0])
        basis = np.linalg.svd(nhat[None])[2][1:].T
        if np.linalg.det(np.column_stack([nhat, basis])) < 0:
            basis = basis[:, [1, 0, 2]]
        cu = (1 - t) * (B[k] - A[k])
        ct = apex - ((1 - u) * A[k] + u * B[k])
        D = np.column_stack([cu, ct, nu @ basis])
        val = np.linalg.det(D)
        if abs(val) < config.jacobian_min_det * np.prod(
                np.linalg.norm(D, axis=0)):
            raise _DegenerateChain("near-tangential crossing")
        total += 1 if val > 0 else -1
    return total


def link_1cycle_3manifold(curve, manifold, config: Config = DEFAULT,
                          apex=None, domain_seeds=None) -> int:
    """Linking number in R^5 of a closed curve with an immersed 3-sphere.

    curve is a closed polyline in R^5 disjoint from the image of manifold,
    an immersion exposing vectorized ambient_eval / ambient_jacobian over
    the star-shaped domain hypersurface {domain_constraint(., params) = 0}.
    The class of the curve in H_1 of the image complement is the signed
    count of crossings of the image through any 2-chain bounding the curve;
    the chain used here is the triangle fan coning the polyline to a far
    apex.  Crossings are solved per triangle from proximity seeds and
    signed by

        det[d chain/du, d chain/dt, f_* b1, f_* b2, f_* b3]

    with (b_i) a positive tangent basis of the domain, outward normal
    first, so a curve bounding a small disk that meets the image once
    positively gets +1.  The count is independent of the apex; a crossing
    within 1e-5 of a fan edge or failing the transversality threshold
    triggers a re-cone from a perturbed apex, config.apex_retries times.

    domain_seeds, optional (N, 4) points on the domain, augment the
    built-in ray-refinement seed search; pass them when the immersion has
    features sharper than its 0.25-coarse sampling can see.
    """
    from .geometry import domain_constraint

    verts = _drop_duplicate_endpoint(curve)
    if verts.shape[1] != 5:
        raise ValueError("curve must be a closed polyline in R^5")

    def constraint(x):
        return domain_constraint(x, manifold.params)

    rng = np.random.default_rng(config.seed + 11)
    last_err = None
    for attempt in range(max(1, config.apex_retries)):
        if apex is None:
            z = _unit(rng.normal(size=5)) * 0.06 * config.apex_distance
            z[4] += config.apex_distance * (1.0 + 0.1 * attempt)
        else:
            z = np.asarray(apex, dtype=float).copy()
            if attempt:
                z = z + _unit(rng.normal(size=5)) * 0.02 * np.linalg.norm(z)
        chain_data = _chain_samples(verts, z)
        chain_tree = cKDTree(chain_data[0])
        seeds = _seeds_near_chain(chain_tree, manifold, constraint, config,
                                  extra=domain_seeds)
        if seeds is None or len(seeds) == 0:
            return 0
        img = manifold.ambient_eval(seeds)
        if np.linalg.norm(z) < 2.0 * np.linalg.norm(img, axis=1).max():
            raise ValueError("cone apex must lie far outside the image")
        if cKDTree(img).query(verts)[0].min() < config.min_image_separation:
            raise ValueError("curve passes too close to the image to link")
        try:
            return _fan_crossings(verts, z, manifold, constraint, seeds,
                                  chain_data, config)
        except _DegenerateChain as err:
            last_err = err
    raise NonRegularValueError(f"no generic cone apex found: {last_err}")


def _directed_polyline_dist(pts, poly) -> float:
    """max over pts of the distance to the closed polyline poly."""
    n = len(poly)
    nxt = np.roll(np.arange(n), -1)
    # candidate segments: the ones adjacent to the four nearest vertices
    _, idx = cKDTree(poly).query(pts, k=min(4, n))
    idx = np.atleast_2d(idx)
    cand = np.concatenate([idx, (idx - 1) % n], axis=1)
    a = poly[cand]
    b = poly[nxt[cand]]
    ab = b - a
    ap = pts[:, None, :] - a
    denom = np.einsum("ijk,ijk->ij", ab, ab)
    t = np.clip(np.einsum("ijk,ijk->ij", ap, ab) / np.maximum(denom, 1e-300),
                0.0, 1.0)
    foot = a + t[..., None] * ab
    d = np.linalg.norm(pts[:, None, :] - foot, axis=-1).min(axis=1)
    return float(d.max())


def hausdorff_distance(curve_a, curve_b) -> float:
    """Hausdorff distance between two closed polylines (segment-aware)."""
    a = np.asarray(curve_a, dtype=float)
    b = np.asarray(curve_b, dtype=float)
    return max(_directed_polyline_dist(a, b), _directed_polyline_dist(b, a))
