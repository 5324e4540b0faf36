"""Fractional Riesz kernels, truncations, and operator constants.

The vector kernel w |w|^{alpha-n-1} is truncated radially by a tangent-line
profile: equal to r^{alpha-n} on [delta, R], extended by its tangent lines to
vanish at 0 and at S = R(n-alpha+1)/(n-alpha).  Operator matrices between two
atomic measures carry sqrt-mass weights so the spectral norm is the exact
L2(sigma) -> L2(omega) norm at fixed truncation.  Supremum-type constants
(norm, testing, weak boundedness) scan a logarithmic (delta, R) lattice.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .energy import energy
from .haar import HaarSystem
from .measure import cube_mass
from .poisson import poisson_m_weighted, poisson_standard

__all__ = [
    "riesz_kernel",
    "TruncationProfile",
    "tangent_truncation",
    "truncation_constant",
    "truncation_majorant",
    "truncation_difference_bound",
    "apply_truncated",
    "riesz_field",
    "OperatorMatrix",
    "operator_matrix",
    "operator_norm",
    "default_lattice",
    "norm_constant",
    "testing_constant",
    "testing_constant_dual",
    "weak_boundedness",
    "wbp_pair_family",
    "kernel_size_constant",
    "kernel_gradient_constant",
    "monotonicity_functional",
    "haar_riesz_companion",
    "pivotal_bound_check",
    "semiharmonic_laplacian",
    "riesz_gradient",
    "riesz_gradient_trace_check",
    "energy_reversal_check",
    "reversal_double_sum",
    "reversal_admissible",
    "kernel_ellipticity_check",
    "strong_ellipticity_check",
]


def riesz_kernel(w, params):
    """Vector kernel w / |w|^{n+1-alpha}; 0 at w = 0 (diagonal convention).

    w may be a single vector (d,) or a stack (N, d)."""
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    ws = w[None, :] if single else w
    r = np.linalg.norm(ws, axis=1)
    out = np.zeros_like(ws)
    nz = r > 0.0
    out[nz] = ws[nz] * (r[nz] ** (params.alpha - params.dim - 1.0))[:, None]
    return out[0] if single else out


@dataclass(frozen=True)
class TruncationProfile:
    """Radial truncation of the fractional kernel.

    kind 'tangent-line': r^{alpha-n} on [delta, R], tangent lines outside,
    vanishing at 0 and at S = R(n-alpha+1)/(n-alpha).
    kind 'cutoff': sharp r^{alpha-n} 1_[delta,R].
    kind 'smooth': C-infinity bump ramps on [delta/2, delta] and [R, 2R]."""

    delta: float
    R: float
    alpha: float
    n: int
    kind: str = "tangent-line"

    def __post_init__(self):
        if not (0.0 < self.delta < self.R):
            raise ValueError("profile requires 0 < delta < R, got (%r, %r)" %
                             (self.delta, self.R))
        if not (0.0 <= self.alpha < self.n):
            raise ValueError("profile requires 0 <= alpha < n")
        if self.kind not in ("tangent-line", "cutoff", "smooth"):
            raise ValueError("unknown profile kind %r" % (self.kind,))

    @property
    def S(self):
        """Zero of the outer tangent line."""
        gap = self.n - self.alpha
        return self.R * (gap + 1.0) / gap

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        single = r_arr.ndim == 0
        rs = np.atleast_1d(r_arr)
        if self.kind == "tangent-line":
            vals = _psi_tangent(rs, self.delta, self.R, self.alpha, self.n)
        elif self.kind == "cutoff":
            vals = np.where((rs >= self.delta) & (rs <= self.R),
                            _power(rs, self.alpha - self.n), 0.0)
        else:
            vals = _psi_smooth(rs, self.delta, self.R, self.alpha, self.n)
        return float(vals[0]) if single else vals


def _power(r, expo):
    out = np.zeros_like(r)
    nz = r > 0.0
    out[nz] = r[nz] ** expo
    return out


def _psi_tangent(r, delta, big_r, alpha, n):
    expo = alpha - n
    vals = np.zeros_like(r)
    mid = (r >= delta) & (r <= big_r)
    vals[mid] = r[mid] ** expo
    low = (r > 0.0) & (r < delta)
    # tangent at delta: value + slope * (r - delta), slope = expo * delta^{expo-1}
    vals[low] = delta ** expo + expo * delta ** (expo - 1.0) * (r[low] - delta)
    s_zero = big_r * (n - alpha + 1.0) / (n - alpha)
    high = (r > big_r) & (r < s_zero)
    vals[high] = big_r ** expo + expo * big_r ** (expo - 1.0) * (r[high] - big_r)
    return vals


def _smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        g = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
    return f / (f + g)


def _psi_smooth(r, delta, big_r, alpha, n):
    # ramps live on [delta/2, delta] and [R, 2R] so the sharp window is kept
    ramp_up = _smoothstep((r - delta / 2.0) / (delta / 2.0))
    ramp_down = 1.0 - _smoothstep((r - big_r) / big_r)
    return _power(r, alpha - n) * ramp_up * ramp_down


def tangent_truncation(r, profile):
    """Tangent-line profile value at radius r (profile parameters only)."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    vals = _psi_tangent(r_arr, profile.delta, profile.R, profile.alpha, profile.n)
    return float(vals[0]) if np.asarray(r).ndim == 0 else vals


def truncation_constant(profile):
    """Smallest dyadic-majorant constant: max of the inner-tail slope factor
    n-alpha+1 and the outer-shell ratios over the finitely many shells where
    the tangent tail is positive."""
    gap = profile.n - profile.alpha
    best = gap + 1.0
    k = 1
    while 2.0 ** (k - 1) < (gap + 1.0) / gap:
        head = max(0.0, 1.0 - gap * (2.0 ** (k - 1) - 1.0))
        best = max(best, head * 2.0 ** (2 * k * gap))
        k += 1
    return best


def truncation_majorant(r, profile):
    """Dyadic shell majorant: 2^{-k(n-alpha)} times the kernel size at the
    shell scale; constant delta^{alpha-n} below delta, zero on [delta, R],
    geometrically decaying above R."""
    gap = profile.n - profile.alpha
    r_arr = np.asarray(r, dtype=float)
    single = r_arr.ndim == 0
    rs = np.atleast_1d(r_arr).astype(float)
    vals = np.zeros_like(rs)
    vals[rs < profile.delta] = profile.delta ** (-gap)
    high = rs > profile.R
    if high.any():
        k = np.floor(np.log2(rs[high] / profile.R)).astype(int) + 1
        vals[high] = profile.R ** (-gap) * 2.0 ** (-2.0 * k * gap)
    return float(vals[0]) if single else vals


def truncation_difference_bound(w, profile):
    """(lhs, rhs) for the truncation-difference inequality at offset w:
    lhs is the worst component of the difference between the tangent-line
    kernel and the sharp cutoff kernel, rhs the scaled shell majorant."""
    w = np.asarray(w, dtype=float)
    r = float(np.linalg.norm(w))
    if r == 0.0:
        return 0.0, 0.0
    direction = float(np.abs(w).max() / r)
    sharp = r ** (profile.alpha - profile.n) if profile.delta <= r <= profile.R else 0.0
    lhs = direction * abs(float(tangent_truncation(r, profile)) - sharp)
    rhs = truncation_constant(profile) * float(truncation_majorant(r, profile))
    return lhs, rhs


def apply_truncated(mu, x, profile, component=None, f=None):
    """Truncated transform of f d mu at the point x:
    sum over atoms y of (x-y)/|x-y| * psi(|x-y|) * mass * f(y).

    Returns the vector (dim,), or one component when component is given."""
    x = np.asarray(x, dtype=float)
    if len(mu) == 0:
        out = np.zeros(x.shape[-1])
        return 0.0 if component is not None else out
    w = x[None, :] - mu.points
    r = np.linalg.norm(w, axis=1)
    psi = np.atleast_1d(profile(r))
    scale = np.zeros_like(r)
    nz = r > 0.0
    scale[nz] = psi[nz] / r[nz]
    weights = mu.masses if f is None else mu.masses * np.asarray(f, dtype=float)
    out = (w * (scale * weights)[:, None]).sum(axis=0)
    return float(out[component]) if component is not None else out


def riesz_field(points, mu, params, profile=None, mask=None):
    """Transform of mu evaluated at a stack of points -> (N, dim).

    Full kernel when profile is None; optional atom mask restricts mu."""
    points = np.asarray(points, dtype=float)
    masses = mu.masses if mask is None else mu.masses * mask
    if len(mu) == 0 or points.shape[0] == 0:
        return np.zeros_like(points)
    w = points[:, None, :] - mu.points[None, :, :]
    r = np.linalg.norm(w, axis=2)
    radial = np.zeros_like(r)
    nz = r > 0.0
    if profile is None:
        radial[nz] = r[nz] ** (params.alpha - params.dim - 1.0)
    else:
        radial[nz] = np.atleast_1d(profile(r[nz])) / r[nz]
    return np.einsum("pnd,pn,n->pd", w, radial, masses)


@dataclass
class OperatorMatrix:
    """sqrt(omega) K sqrt(sigma) stacked over kernel components: maps the
    mass-normalized coefficients of L2(sigma) to those of L2(omega)."""

    matrix: np.ndarray
    profile: TruncationProfile
    dim: int

    @property
    def norm(self):
        if self.matrix.size == 0:
            return 0.0
        return float(np.linalg.svd(self.matrix, compute_uv=False)[0])


def operator_matrix(sigma, omega, profile):
    dim = sigma.dim
    if len(sigma) == 0 or len(omega) == 0:
        return OperatorMatrix(np.zeros((0, 0)), profile, dim)
    w = omega.points[:, None, :] - sigma.points[None, :, :]
    r = np.linalg.norm(w, axis=2)
    radial = np.zeros_like(r)
    nz = r > 0.0
    radial[nz] = np.atleast_1d(profile(r[nz])) / r[nz]
    blocks = [w[:, :, c] * radial for c in range(dim)]
    stacked = np.concatenate(blocks, axis=0)
    stacked = stacked * np.sqrt(sigma.masses)[None, :]
    stacked = stacked * np.tile(np.sqrt(omega.masses), dim)[:, None]
    return OperatorMatrix(stacked, profile, dim)


def operator_norm(sigma, omega, profile):
    return operator_matrix(sigma, omega, profile).norm


def default_lattice(sigma, omega, params, size=8, kind="tangent-line"):
    """Logarithmic (delta, R) lattice of truncation profiles spanning the
    range of pairwise distances of the combined atom set."""
    pts = [m.points for m in (sigma, omega) if len(m)]
    if not pts:
        return [TruncationProfile(0.5, 1.0, params.alpha, params.dim, kind)]
    allp = np.concatenate(pts, axis=0)
    d = np.linalg.norm(allp[:, None, :] - allp[None, :, :], axis=2)
    pos = d[d > 0.0]
    if pos.size == 0:
        return [TruncationProfile(0.5, 1.0, params.alpha, params.dim, kind)]
    lo, hi = float(pos.min()) / 2.0, float(pos.max()) * 2.0
    deltas = np.geomspace(lo, hi, size)
    rs = np.geomspace(lo, hi, size)
    return [
        TruncationProfile(float(dl), float(rr), params.alpha, params.dim, kind)
        for dl in deltas for rr in rs if dl < rr
    ]


def _as_profiles(profiles):
    if isinstance(profiles, TruncationProfile):
        return [profiles]
    return list(profiles)


def norm_constant(sigma, omega, profiles, details=False):
    """Operator norm sup over a family of truncation profiles."""
    best, witness = 0.0, None
    for prof in _as_profiles(profiles):
        val = operator_norm(sigma, omega, prof)
        if val > best:
            best, witness = val, (prof.delta, prof.R)
    return (best, witness) if details else best


def testing_constant(sigma, omega, profiles, cube_family, details=False):
    """Testing constant: sqrt of the sup over cubes Q and profiles of
    (1/|Q|_sigma) sum over omega-atoms in Q of mass * |T(1_Q sigma)|^2."""
    best, witness = 0.0, None
    fam = list(cube_family)
    for prof in _as_profiles(profiles):
        for cube in fam:
            smass = cube_mass(sigma, cube)
            if smass == 0.0:
                continue
            in_q = cube.contains_points(omega.points)
            if not in_q.any():
                continue
            smask = cube.contains_points(sigma.points)
            vals = riesz_field(omega.points[in_q], sigma, None, profile=prof,
                               mask=smask)
            term = float((omega.masses[in_q] * (vals ** 2).sum(axis=1)).sum()) / smass
            if term > best:
                best, witness = term, (cube.key, prof.delta, prof.R)
    result = float(np.sqrt(best))
    return (result, witness) if details else result


def testing_constant_dual(sigma, omega, profiles, cube_family, details=False):
    return testing_constant(omega, sigma, profiles, cube_family, details=details)


def _annulus_pair(q_small, q_big):
    """q_small inside the tripled q_big but disjoint from q_big."""
    return q_big.dilate(3.0).contains_cube(q_small, tol=1e-12) and \
        q_small.disjoint_from(q_big)


def wbp_pair_family(grid, ratio_bound, *measures):
    """Admissible weak-boundedness pairs among active grid cubes: side ratio
    within [1/C, C], one cube inside the tripled other and disjoint from it."""
    cubes = grid.active_cubes(*measures)
    max_gap = int(np.floor(np.log2(ratio_bound) + 1e-9))
    pairs = []
    for a, b in itertools.combinations(cubes, 2):
        if abs(a.key[0] - b.key[0]) > max_gap:
            continue
        if _annulus_pair(a, b) or _annulus_pair(b, a):
            pairs.append((a, b))
    return pairs


def weak_boundedness(sigma, omega, profiles, pair_family, details=False):
    """Sup over admissible pairs and profiles of
    |integral over Q of T(1_Q' sigma) d omega| / sqrt(|Q|_omega |Q'|_sigma),
    evaluated in both orders for each unordered pair."""
    best, witness = 0.0, None
    prof_list = _as_profiles(profiles)
    for a, b in pair_family:
        for q, qp in ((a, b), (b, a)):
            om_mass = cube_mass(omega, q)
            sg_mass = cube_mass(sigma, qp)
            if om_mass == 0.0 or sg_mass == 0.0:
                continue
            in_q = q.contains_points(omega.points)
            smask = qp.contains_points(sigma.points)
            for prof in prof_list:
                vals = riesz_field(omega.points[in_q], sigma, None,
                                   profile=prof, mask=smask)
                integral = (vals * omega.masses[in_q][:, None]).sum(axis=0)
                val = float(np.linalg.norm(integral) / np.sqrt(om_mass * sg_mass))
                if val > best:
                    best, witness = val, (q.key, qp.key, prof.delta, prof.R)
    return (best, witness) if details else best


def kernel_size_constant(params):
    """|K(w)| = |w|^{alpha-n} exactly, so the size constant is 1."""
    return 1.0


def kernel_gradient_constant(params):
    """Spectral norm of the kernel gradient over |w|^{alpha-n-1}: the gradient
    matrix is |w|^{alpha-n-1} (I + (alpha-n-1) unit unit^T), with eigenvalues
    1 and alpha-n, hence the constant max(1, n-alpha)."""
    return max(1.0, params.dim - params.alpha)


def monotonicity_functional(cube, omega, mu, params, grid, system=None):
    """Oscillation-control functional of a cube against an exterior measure:
    sqrt of (P^alpha(J, mu)/l(J))^2 ||Delta_J x||^2
    + (P^alpha_{1+s}(J, mu)/l(J))^2 ||x - mean||^2 on J,
    s the kernel smoothness order.  Requires mu to avoid the doubled cube."""
    doubled = cube.dilate(2.0)
    if doubled.contains_points(mu.points).any():
        raise ValueError("measure must vanish on the doubled cube")
    system = HaarSystem(grid, omega) if system is None else system
    p1 = poisson_standard(cube, mu, params)
    p2 = poisson_m_weighted(cube, mu, params, 1.0 + params.smoothness)
    norms = system.coordinate_norms()
    term1 = (p1 / cube.side) ** 2 * norms.get(cube.key, 0.0)
    inside = cube.contains_points(omega.points)
    pts, ms = omega.points[inside], omega.masses[inside]
    total = ms.sum()
    osc = 0.0
    if total > 0.0:
        mean = (pts * ms[:, None]).sum(axis=0) / total
        osc = float(((pts - mean) ** 2 * ms[:, None]).sum())
    term2 = (p2 / cube.side) ** 2 * osc
    return float(np.sqrt(term1 + term2))


def haar_riesz_companion(cube, omega, mu, params, grid, system=None):
    """(||Delta_J (T mu)||_{L2(omega)}, Phi(J, mu)): the Haar coefficient norm
    of the transform of an exterior measure against the functional that is
    meant to dominate it."""
    system = HaarSystem(grid, omega) if system is None else system
    phi = monotonicity_functional(cube, omega, mu, params, grid, system=system)
    field = riesz_field(omega.points, mu, params)
    coeffs = system.coefficients(field, cube.key)
    return float(np.sqrt((coeffs ** 2).sum())), phi


def pivotal_bound_check(cube, psi, omega, nu, params, gamma=8.0):
    """Ratio |<T nu, psi>_omega| / (||psi|| P^alpha(J, |nu|) sqrt(|J|_omega))
    for a mean-zero psi supported on J and nu supported outside gamma J."""
    if gamma < 2.0:
        raise ValueError("gamma must be >= 2")
    if cube.dilate(gamma).contains_points(nu.points).any():
        raise ValueError("measure must vanish on the dilated cube")
    psi = np.asarray(psi, dtype=float)
    inside = cube.contains_points(omega.points)
    if np.abs(psi[~inside]).max(initial=0.0) > 0.0:
        raise ValueError("psi must vanish outside the cube")
    w_mean = float((omega.masses * psi).sum())
    norm = float(np.sqrt((omega.masses * psi ** 2).sum()))
    if norm > 0.0 and abs(w_mean) > 1e-9 * norm * np.sqrt(omega.total_mass):
        raise ValueError("psi must have omega-mean zero on the cube")
    field = riesz_field(omega.points, nu, params)
    pairing = float(np.linalg.norm((field * (omega.masses * psi)[:, None]).sum(axis=0)))
    om_mass = cube_mass(omega, cube)
    denom = norm * poisson_standard(cube, nu, params) * np.sqrt(om_mass)
    if denom == 0.0:
        return 0.0
    return pairing / denom


def semiharmonic_laplacian(x, params, ell):
    """Closed-form partial Laplacian over the first ell coordinates of the
    potential |x|^beta, beta = alpha - n + 1:
    beta ((ell + beta - 2)|x'|^2 + ell |x''|^2) |x|^{beta-4}."""
    x = np.asarray(x, dtype=float)
    n = params.dim
    if not (1 <= ell <= n):
        raise ValueError("ell must lie in [1, n]")
    rsq = float((x ** 2).sum())
    if rsq == 0.0:
        raise ValueError("x must be nonzero")
    beta = params.alpha - n + 1.0
    head = float((x[:ell] ** 2).sum())
    tail = rsq - head
    return beta * ((ell + beta - 2.0) * head + ell * tail) * rsq ** ((beta - 4.0) / 2.0)


def riesz_gradient(z, mu, params):
    """(matrix, eigenvalues) of the derivative of the transform of mu at z:
    sum over atoms of mass * |w|^{alpha-n-1} (I + (alpha-n-1) unit unit^T),
    w = z - y.  Eigenvalues sorted by decreasing magnitude."""
    z = np.asarray(z, dtype=float)
    n = params.dim
    w = z[None, :] - mu.points
    r = np.linalg.norm(w, axis=1)
    if (r == 0.0).any():
        raise ValueError("measure must vanish at the evaluation point")
    c = params.alpha - n - 1.0
    mat = np.zeros((n, n))
    for wi, ri, mi in zip(w, r, mu.masses):
        mat += mi * (ri ** c * np.eye(n) + c * ri ** (c - 2.0) * np.outer(wi, wi))
    mat = 0.5 * (mat + mat.T)
    eig = np.linalg.eigvalsh(mat)
    order = np.argsort(-np.abs(eig))
    return mat, eig[order]


def riesz_gradient_trace_check(z, mu, params, ell):
    """(lhs, rhs): beta times the trace of the gradient over the first ell
    coordinates against the summed closed-form partial Laplacian."""
    mat, _ = riesz_gradient(z, mu, params)
    beta = params.alpha - params.dim + 1.0
    lhs = beta * float(np.trace(mat[:ell, :ell]))
    z = np.asarray(z, dtype=float)
    rhs = float(sum(
        m * semiharmonic_laplacian(z - y, params, ell)
        for y, m in zip(mu.points, mu.masses)
    ))
    return lhs, rhs


def energy_reversal_check(cube, mu, omega, params, gamma, grid=None):
    """(lhs, rhs, ratio) of the energy reversal inequality:
    lhs = E(J, omega)^2 P^alpha(J, mu)^2, rhs the omega-variance over J of the
    full transform of mu; ratio lhs/rhs with 0/0 -> 0."""
    if gamma < 2.0:
        raise ValueError("gamma must be >= 2")
    if cube.dilate(gamma).contains_points(mu.points).any():
        raise ValueError("measure must vanish on the dilated cube")
    inside = cube.contains_points(omega.points)
    pts, ms = omega.points[inside], omega.masses[inside]
    total = float(ms.sum())
    e_sq = energy(cube, omega) ** 2
    p = poisson_standard(cube, mu, params)
    lhs = e_sq * p ** 2
    if total == 0.0:
        return lhs, 0.0, 0.0 if lhs == 0.0 else float("inf")
    field = riesz_field(pts, mu, params)
    mean = (field * ms[:, None]).sum(axis=0) / total
    rhs = float((((field - mean) ** 2).sum(axis=1) * ms).sum()) / total
    if rhs == 0.0:
        return lhs, rhs, 0.0 if lhs == 0.0 else float("inf")
    return lhs, rhs, lhs / rhs


def reversal_double_sum(cube, mu, omega, params):
    """Half the double omega-average over the cube of |T mu(x) - T mu(x')|^2:
    equals the variance form of the reversal right-hand side exactly."""
    inside = cube.contains_points(omega.points)
    pts, ms = omega.points[inside], omega.masses[inside]
    total = float(ms.sum())
    if total == 0.0:
        return 0.0
    field = riesz_field(pts, mu, params)
    diff = field[:, None, :] - field[None, :, :]
    sq = (diff ** 2).sum(axis=2)
    return 0.5 * float(ms @ sq @ ms) / total ** 2


def reversal_admissible(k, dim, alpha):
    """Parameter window in which the k-partial energy reversal is expected:
    either 1 <= k <= n-2 with n-k < alpha < n and alpha != n-1, or k = n-1
    with 0 <= alpha < n and alpha not in {1, n-1}."""
    n = dim
    if 1 <= k <= n - 2:
        return n - k < alpha < n and alpha != n - 1
    if k == n - 1:
        return 0 <= alpha < n and alpha != 1.0 and alpha != n - 1
    return False


def kernel_ellipticity_check(params, n_samples=200, rng=None):
    """(worst ratio, analytic bound): min over sampled unit directions and
    scales of max_j |K_j(t u)| / t^{alpha-n}, against 1/sqrt(n)."""
    rng = np.random.default_rng(0) if rng is None else rng
    n = params.dim
    worst = np.inf
    for _ in range(n_samples):
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        t = float(np.exp(rng.uniform(-3.0, 3.0)))
        val = float(np.abs(riesz_kernel(t * u, params)).max())
        worst = min(worst, val / t ** (params.alpha - n))
    return worst, 1.0 / np.sqrt(n)


def strong_ellipticity_check(map_, params, n_samples=100, rng=None):
    """Worst directional lower bound over the 2^n quasi-n-ants: for each sign
    pattern m, pairs x, x + w with w the image displacement of a preimage
    direction in the m-orthant are tested against the unit combination
    lambda = m/sqrt(n); returns min over samples of
    |lambda . K(w)| / |w|^{alpha-n}."""
    rng = np.random.default_rng(0) if rng is None else rng
    n = params.dim
    worst = np.inf
    for signs in itertools.product((1.0, -1.0), repeat=n):
        lam = np.array(signs) / np.sqrt(n)
        for _ in range(n_samples):
            z = np.abs(rng.standard_normal(n)) * np.array(signs)
            z /= np.linalg.norm(z)
            base = rng.uniform(-1.0, 1.0, size=n)
            t = float(np.exp(rng.uniform(-2.0, 2.0)))
            w = map_.forward(np.array([base + t * z]))[0] - map_.forward(
                np.array([base]))[0]
            r = float(np.linalg.norm(w))
            if r == 0.0:
                continue
            val = abs(float(lam @ riesz_kernel(w, params)))
            worst = min(worst, val / r ** (params.alpha - n))
    return worst
