"""Forward boxcar solver: multipliers -> optimal transmission support.

The optimal transmission at multipliers (lam, eta) is the indicator of
{eps : R(eps) <= 0} with R(eps) = g(eps) - (lam eps + eta) delta_f(eps).
This module locates that set by a sign scan over a cached per-reservoir
grid, bracketed root refinement, and asymptotic classification of the two
semi-infinite tails (tails are never decided by sampling at huge energies:
the sign of R at infinity follows from comparing the line lam*eps + eta
against the finite limits of g/delta_f and the tail sign of delta_f).

Also provides exact/panel integrals over a boxcar set and the analytic
Jacobian of (I, J) with respect to (eta, lam) from the implicit function
theorem.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NearBifurcationError, SolverError, ValidationError
from .physics import (
    ReservoirPair,
    delta_f,
    df_g_arrays,
    g_noise,
    g_ratio_limits,
    tail_signs,
)
from .quadrature import adaptive_panels, gk15_batched

__all__ = [
    "BoxcarSet",
    "Multipliers",
    "residual",
    "solve_boxcar",
    "boxcar_current",
    "boxcar_energy_current",
    "boxcar_variance",
    "boxcar_integrals",
    "multiplier_jacobian",
]

INF = math.inf


@dataclass(frozen=True)
class Multipliers:
    """Lagrange pair: lam conjugate to J, eta conjugate to I."""

    lam: float
    eta: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and math.isfinite(self.eta)):
            raise ValidationError(
                f"multipliers must be finite, got lam={self.lam}, eta={self.eta}"
            )


@dataclass(frozen=True)
class BoxcarSet:
    """Ordered disjoint energy intervals; endpoints may be -inf/+inf."""

    intervals: tuple

    def __post_init__(self):
        ivals = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivals)
        prev_b = -INF
        for k, (a, b) in enumerate(ivals):
            if math.isnan(a) or math.isnan(b):
                raise ValidationError("boxcar endpoints must not be NaN")
            if not b > a:
                raise ValidationError(f"empty or reversed interval ({a}, {b})")
            if k > 0 and not a > prev_b:
                raise ValidationError(
                    f"intervals must be strictly ordered and disjoint near ({a}, {b})"
                )
            if a == -INF and k != 0:
                raise ValidationError("only the first interval may reach -inf")
            if b == INF and k != len(ivals) - 1:
                raise ValidationError("only the last interval may reach +inf")
            prev_b = b

    @property
    def is_empty(self):
        return len(self.intervals) == 0

    @property
    def n_intervals(self):
        return len(self.intervals)

    @property
    def left_infinite(self):
        return bool(self.intervals) and self.intervals[0][0] == -INF

    @property
    def right_infinite(self):
        return bool(self.intervals) and self.intervals[-1][1] == INF

    def signature(self):
        """(interval count, left-infinite?, right-infinite?)."""
        return (self.n_intervals, self.left_infinite, self.right_infinite)

    def finite_endpoints(self):
        out = []
        for a, b in self.intervals:
            if a != -INF:
                out.append(a)
            if b != INF:
                out.append(b)
        return out

    def indicator(self, eps):
        """Evaluate the boxcar as a 0/1 transmission (closed intervals)."""
        e = np.asarray(eps, dtype=float)
        out = np.zeros_like(e)
        for a, b in self.intervals:
            out = np.where((e >= a) & (e <= b), 1.0, out)
        return float(out) if np.ndim(eps) == 0 else out

    def to_json(self):
        """JSON array of [a, b] pairs with "-inf"/"inf" sentinels."""

        def enc(x):
            if x == -INF:
                return "-inf"
            if x == INF:
                return "inf"
            return x

        return [[enc(a), enc(b)] for a, b in self.intervals]

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)

        def dec(x):
            if x == "-inf":
                return -INF
            if x == "inf":
                return INF
            return float(x)

        return cls(tuple((dec(a), dec(b)) for a, b in data))


EMPTY = BoxcarSet(())


# ---------------------------------------------------------------------------
# per-reservoir workspace
# ---------------------------------------------------------------------------

_CORE_X = 10.0  # half-width, in units of 1/beta, of the densely sampled core
_SCAN_X = 45.0  # scan window edge (integrands ~ e^-45 there)
_QUAD_X = 48.0  # truncation of semi-infinite integrals
_HORIZON_X = 700.0  # beyond this exp underflows and R loses its sign


@dataclass(frozen=True)
class _Workspace:
    res: ReservoirPair
    eps0: float  # nan when delta_beta == 0
    scan_lo: float
    scan_hi: float
    quad_lo: float
    quad_hi: float
    horizon_lo: float
    horizon_hi: float
    nodes: np.ndarray
    df_nodes: np.ndarray
    g_nodes: np.ndarray
    dfp_nodes: np.ndarray  # d(delta_f)/d eps on the nodes
    gp_nodes: np.ndarray  # dg/d eps on the nodes
    limit_lo: float  # g/delta_f limit at -inf
    limit_hi: float
    sign_lo: float  # delta_f tail signs
    sign_hi: float
    scale: float  # characteristic energy scale
    beta_max: float


def _df_g_primes(res, x):
    """(d delta_f/d eps, dg/d eps) on an array, tail-stable.

    Uses f' = -beta f(1-f) and 1 - 2f = tanh(x/2)."""
    x = np.asarray(x, dtype=float)
    xL = res.beta_L * (x - res.mu_L)
    xR = res.beta_R * (x - res.mu_R)
    eL = np.exp(-np.abs(xL))
    eR = np.exp(-np.abs(xR))
    flL = eL / (1.0 + eL) ** 2
    flR = eR / (1.0 + eR) ** 2
    dfp = -res.beta_L * flL + res.beta_R * flR
    gp = -res.beta_L * flL * np.tanh(xL / 2.0) - res.beta_R * flR * np.tanh(xR / 2.0)
    return dfp, gp


def _hull(res, x):
    los = (res.mu_L - x / res.beta_L, res.mu_R - x / res.beta_R)
    his = (res.mu_L + x / res.beta_L, res.mu_R + x / res.beta_R)
    return min(los), max(his)


@functools.lru_cache(maxsize=128)
def _workspace(res: ReservoirPair) -> _Workspace:
    from .physics import epsilon_zero

    beta_min = min(res.beta_L, res.beta_R)
    beta_max = max(res.beta_L, res.beta_R)
    scale = max(1.0, abs(res.mu_L), abs(res.mu_R), 1.0 / beta_min)

    scan_lo, scan_hi = _hull(res, _SCAN_X)
    quad_lo, quad_hi = _hull(res, _QUAD_X)
    horizon_lo, horizon_hi = _hull(res, _HORIZON_X)

    e0 = epsilon_zero(res)
    if e0 is not None and horizon_lo < e0 < horizon_hi:
        pad = 6.0 / beta_min
        scan_lo = min(scan_lo, e0 - pad)
        scan_hi = max(scan_hi, e0 + pad)
        quad_lo = min(quad_lo, e0 - pad)
        quad_hi = max(quad_hi, e0 + pad)

    core_lo, core_hi = _hull(res, _CORE_X)
    segs = [np.linspace(core_lo, core_hi, 1025)]
    # geometric tail nodes, denser toward the core
    t = np.geomspace(1e-3, 1.0, 257)
    segs.append(core_lo - (core_lo - scan_lo) * t)
    segs.append(core_hi + (scan_hi - core_hi) * t)
    if e0 is not None and scan_lo < e0 < scan_hi:
        segs.append(np.linspace(e0 - 6.0 / beta_max, e0 + 6.0 / beta_max, 257))
    nodes = np.unique(np.concatenate(segs))
    nodes = nodes[(nodes >= scan_lo) & (nodes <= scan_hi)]

    if res.identical:
        lim_lo = lim_hi = math.nan
    else:
        lim_lo, lim_hi = g_ratio_limits(res)
    s_lo, s_hi = tail_signs(res)
    dfp, gp = _df_g_primes(res, nodes)

    return _Workspace(
        res=res,
        eps0=math.nan if e0 is None else e0,
        scan_lo=scan_lo,
        scan_hi=scan_hi,
        quad_lo=quad_lo,
        quad_hi=quad_hi,
        horizon_lo=horizon_lo,
        horizon_hi=horizon_hi,
        nodes=nodes,
        df_nodes=np.asarray(delta_f(res, nodes)),
        g_nodes=np.asarray(g_noise(res, nodes)),
        dfp_nodes=dfp,
        gp_nodes=gp,
        limit_lo=lim_lo,
        limit_hi=lim_hi,
        sign_lo=s_lo,
        sign_hi=s_hi,
        scale=scale,
        beta_max=beta_max,
    )


def _df_g_scalar(res: ReservoirPair, e: float):
    """Scalar fast path for (delta_f, g); hot loop of the root refinement."""
    xL = res.beta_L * (e - res.mu_L)
    xR = res.beta_R * (e - res.mu_R)
    d = xR - xL
    if xL >= 0.0 and xR >= 0.0:
        a = math.exp(-xL)
        b = math.exp(-xR)
        num = b * math.expm1(d) if abs(d) < 30.0 else a - b
        df = num / ((1.0 + a) * (1.0 + b))
    elif xL < 0.0 and xR < 0.0:
        a = math.exp(xL)
        b = math.exp(xR)
        num = a * math.expm1(d) if abs(d) < 30.0 else b - a
        df = num / ((1.0 + a) * (1.0 + b))
    else:
        df = 1.0 / (1.0 + math.exp(xL)) - 1.0 / (1.0 + math.exp(xR))
    eL = math.exp(-abs(xL))
    eR = math.exp(-abs(xR))
    g = eL / (1.0 + eL) ** 2 + eR / (1.0 + eR) ** 2
    return df, g


def residual(res: ReservoirPair, m: Multipliers, eps):
    """R(eps) = g(eps) - (lam eps + eta) delta_f(eps).

    Vanishes at +-inf for any finite multipliers (both factors decay
    exponentially, beating the linear growth of the line).
    """
    e = np.asarray(eps, dtype=float)
    out = np.zeros_like(e)
    fin = np.isfinite(e)
    ef = e[fin]
    out[fin] = np.asarray(g_noise(res, ef)) - (m.lam * ef + m.eta) * np.asarray(
        delta_f(res, ef)
    )
    return float(out) if np.ndim(eps) == 0 else out


def _residual_scalar(res, lam, eta, e):
    df, g = _df_g_scalar(res, e)
    return g - (lam * e + eta) * df


# ---------------------------------------------------------------------------
# solve_boxcar
# ---------------------------------------------------------------------------


def _tail_included(ws, lam, eta, side):
    """Asymptotic sign of R in one tail; True means the tail is in the box.

    sign(R) = sign(delta_f) * sign(G - lam*eps - eta) where G is the finite
    tail limit of g/delta_f.  For lam != 0 the line dominates; for lam == 0
    the comparison is eta against G.
    """
    s_df = ws.sign_hi if side > 0 else ws.sign_lo
    if s_df == 0.0:
        return False
    if lam != 0.0:
        line_sign = -math.copysign(1.0, lam) if side > 0 else math.copysign(1.0, lam)
    else:
        g_lim = ws.limit_hi if side > 0 else ws.limit_lo
        diff = g_lim - eta
        if diff == 0.0:
            return False  # exactly on the B_0 bifurcation; measure zero
        line_sign = math.copysign(1.0, diff)
    return s_df * line_sign < 0.0


def _find_tail_root(ws, lam, eta, side, xtol):
    """Bracket the root between the scan edge and infinity on one side.

    Called only when the asymptotic tail sign contradicts the sign of R at
    the window edge, i.e. a root is 'coming from infinity' (near the B_0
    bifurcation).  The crossing of the line with the g/delta_f tail limit
    gives a sharp location hint; beyond the underflow horizon the hint
    itself is returned (the neglected measure carries ~e^-700 weight).
    """
    res = ws.res
    edge = ws.scan_hi if side > 0 else ws.scan_lo
    horizon = ws.horizon_hi if side > 0 else ws.horizon_lo
    f_edge = _residual_scalar(res, lam, eta, edge)
    if lam != 0.0:
        g_lim = ws.limit_hi if side > 0 else ws.limit_lo
        hint = (g_lim - eta) / lam
    else:
        hint = None

    probes = []
    if hint is not None and (hint - edge) * side > 0:
        probes.extend([hint, hint + side * ws.scale, hint + 4 * side * ws.scale])
    step = ws.scale
    p = edge
    for _ in range(60):
        p = p + side * step
        step *= 2.0
        probes.append(p)
        if (p - horizon) * side > 0:
            break
    probes = sorted((q for q in probes if (q - edge) * side > 0), key=lambda q: side * q)

    prev = edge
    f_prev = f_edge
    for q in probes:
        if (q - horizon) * side > 0:
            q = horizon
        df_q, g_q = _df_g_scalar(res, q)
        if df_q == 0.0 and g_q == 0.0:
            break  # underflow: no sign information this deep in the tail
        f_q = g_q - (lam * q + eta) * df_q
        if f_q == 0.0 or f_q * f_prev < 0.0:
            lo, hi = (prev, q) if prev < q else (q, prev)
            return brentq(
                lambda x: _residual_scalar(res, lam, eta, x), lo, hi, xtol=xtol
            )
        prev, f_prev = q, f_q
        if q == horizon:
            break
    # sign never flipped before underflow killed R; the line/limit crossing
    # is then an exponentially accurate estimate of the root location, and
    # everything beyond `prev` carries no representable measure anyway
    if hint is not None and (hint - edge) * side > 0:
        return hint
    return prev


def solve_boxcar(res: ReservoirPair, m: Multipliers, xtol=1e-12) -> BoxcarSet:
    """Closure of {eps : g(eps) < (lam eps + eta) delta_f(eps)} as a BoxcarSet.

    Sign-scans R on a cached grid (refined near eps0 and near the zero of the
    line), brackets every sign change, refines each root to `xtol` in eps,
    and classifies the two tails asymptotically.  Touching intervals are
    merged; the empty set is a valid result.
    """
    if res.identical:
        return EMPTY
    ws = _workspace(res)
    lam, eta = m.lam, m.eta

    nodes = ws.nodes
    df = ws.df_nodes
    g = ws.g_nodes
    dfp = ws.dfp_nodes
    gp = ws.gp_nodes
    extras = []
    if lam != 0.0:
        z0 = -eta / lam
        if ws.scan_lo < z0 < ws.scan_hi:
            w = 4.0 / ws.beta_max
            extras.append(np.linspace(z0 - w, z0 + w, 65))
        for g_lim in (ws.limit_lo, ws.limit_hi):
            zc = (g_lim - eta) / lam
            if ws.scan_lo < zc < ws.scan_hi:
                w = 2.0 / ws.beta_max
                extras.append(np.linspace(zc - w, zc + w, 33))
    if extras:
        ex = np.unique(np.concatenate(extras))
        ex = ex[(ex > ws.scan_lo) & (ex < ws.scan_hi)]
        nodes = np.concatenate([nodes, ex])
        order = np.argsort(nodes, kind="stable")
        nodes = nodes[order]
        df = np.concatenate([df, np.asarray(delta_f(res, ex))])[order]
        g = np.concatenate([g, np.asarray(g_noise(res, ex))])[order]
        exp_dfp, exp_gp = _df_g_primes(res, ex)
        dfp = np.concatenate([dfp, exp_dfp])[order]
        gp = np.concatenate([gp, exp_gp])[order]

    def rfun(x):
        return _residual_scalar(res, lam, eta, x)

    def rprime(x):
        m_local = Multipliers(lam, eta)
        return residual_prime(res, m_local, x)

    def roots_from_scan(nodes, df, g, dfp, gp):
        r = g - (lam * nodes + eta) * df
        r = np.where(r == 0.0, 5e-324, r)  # exact node zeros: treat as outside
        s = np.sign(r)
        idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
        roots = [brentq(rfun, nodes[i], nodes[i + 1], xtol=xtol) for i in idx]

        # tangency guard: a dip of R may fit between two nodes of equal
        # sign; an interior extremum of R is betrayed by a sign change of
        # its analytic derivative, so locate the extremum exactly and test
        # the sign of R there
        rp = gp - lam * df - (lam * nodes + eta) * dfp
        crossing = np.nonzero(
            (rp[:-1] * rp[1:] < 0.0) & (s[:-1] == s[1:]) & (np.abs(r[:-1]) > 0.0)
        )[0]
        for i in crossing:
            gap = nodes[i + 1] - nodes[i]
            # the dip is quadratic around the extremum, so locating it to a
            # small fraction of the gap decides the sign reliably
            x_ext = brentq(rprime, nodes[i], nodes[i + 1],
                           xtol=max(1e-3 * gap, 1e-14))
            r_ext = rfun(x_ext)
            if r_ext == 0.0 or (r_ext < 0.0) == (r[i] < 0.0):
                continue
            roots.append(brentq(rfun, nodes[i], x_ext, xtol=xtol))
            roots.append(brentq(rfun, x_ext, nodes[i + 1], xtol=xtol))
        return sorted(roots), r

    roots, r_scan = roots_from_scan(nodes, df, g, dfp, gp)

    left_in = _tail_included(ws, lam, eta, -1)
    right_in = _tail_included(ws, lam, eta, +1)

    # roots hiding between the scan edge and infinity (B_0 neighbourhood)
    if left_in != (r_scan[0] < 0.0):
        roots.append(_find_tail_root(ws, lam, eta, -1, xtol))
    if right_in != (r_scan[-1] < 0.0):
        roots.append(_find_tail_root(ws, lam, eta, +1, xtol))
    roots = sorted(roots)

    def parity_bad(roots):
        return left_in != (right_in ^ (len(roots) % 2 == 1))

    # parity: each simple root flips inclusion, so the two tails must agree
    if parity_bad(roots):
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        nodes2 = np.sort(np.concatenate([nodes, mids]))
        df2 = np.asarray(delta_f(res, nodes2))
        g2 = np.asarray(g_noise(res, nodes2))
        dfp2, gp2 = _df_g_primes(res, nodes2)
        roots, r_scan = roots_from_scan(nodes2, df2, g2, dfp2, gp2)
        if left_in != (r_scan[0] < 0.0):
            roots.append(_find_tail_root(ws, lam, eta, -1, xtol))
        if right_in != (r_scan[-1] < 0.0):
            roots.append(_find_tail_root(ws, lam, eta, +1, xtol))
        roots = sorted(roots)
        if parity_bad(roots):
            # a root sitting exactly on a node gets bracketed from both
            # sides; collapsing one member of a machine-width pair restores
            # the alternation
            deduped = []
            for rt in roots:
                if deduped and rt - deduped[-1] <= 64.0 * xtol * (1.0 + abs(rt)):
                    continue  # keep a single root of the machine-width pair
                deduped.append(rt)
            if not parity_bad(deduped):
                roots = deduped
        if parity_bad(roots):
            raise SolverError(
                "scan parity inconsistent with tail classification "
                "(suspected missed root near a tangency)",
                diagnostics={
                    "lam": lam,
                    "eta": eta,
                    "roots": roots,
                    "left_in": left_in,
                    "right_in": right_in,
                },
            )

    # assemble alternating pieces
    bounds = [-INF] + roots + [INF]
    pieces = []
    inside = left_in
    for a, b in zip(bounds[:-1], bounds[1:]):
        if inside:
            pieces.append([a, b])
        inside = not inside

    # merge across zero-width gaps, drop zero-width intervals
    def tol_at(e):
        return 16.0 * max(xtol, 1e-15) * (1.0 + abs(e))

    merged = []
    for a, b in pieces:
        if merged and math.isfinite(a) and a - merged[-1][1] <= tol_at(a):
            merged[-1][1] = b
        else:
            merged.append([a, b])
    final = [
        (a, b)
        for a, b in merged
        if not (math.isfinite(a) and math.isfinite(b) and b - a <= tol_at(a))
    ]
    return BoxcarSet(tuple(final))


# ---------------------------------------------------------------------------
# integrals and Jacobian
# ---------------------------------------------------------------------------


def _anti_scalar(res, e):
    """Scalar fast path for the delta_f antiderivative."""
    if e == INF:
        return 0.0
    if e == -INF:
        return res.mu_R - res.mu_L
    out = 0.0
    for beta, mu, sgn in (
        (res.beta_L, res.mu_L, 1.0),
        (res.beta_R, res.mu_R, -1.0),
    ):
        x = beta * (e - mu)
        if x >= 0.0:
            v = -math.log1p(math.exp(-x)) / beta
        else:
            v = (x - math.log1p(math.exp(x))) / beta
        out += sgn * v
    return out


def boxcar_current(res: ReservoirPair, B: BoxcarSet):
    """Particle current over a boxcar set, via the exact antiderivative."""
    I = 0.0
    for a, b in B.intervals:
        I += _anti_scalar(res, b) - _anti_scalar(res, a)
    return I


def _interval_sum(res, B, integrand, abstol, reltol):
    """Sum of panel integrals of `integrand` over the intervals of B,
    truncated at the quadrature window (the clipped tails sit below the
    absolute tolerance by construction of the window).

    Fast path: one batched Kronrod pass over fixed panels narrow enough
    (width 3 / beta_max) for the smooth exponential integrands; per-panel
    adaptive refinement only when the embedded estimate misses tolerance.
    """
    ws = _workspace(res)
    width = 3.0 / ws.beta_max
    clipped = []
    for a, b in B.intervals:
        aa = max(a, ws.quad_lo)
        bb = min(b, ws.quad_hi)
        if aa < bb:
            clipped.append((aa, bb))
    if not clipped:
        return 0.0

    los = []
    his = []
    for aa, bb in clipped:
        n = min(512, max(1, int(math.ceil((bb - aa) / width))))
        edges = np.linspace(aa, bb, n + 1)
        los.append(edges[:-1])
        his.append(edges[1:])
    lo = np.concatenate(los)
    hi = np.concatenate(his)
    total, err = gk15_batched(integrand, lo, hi)
    if err <= max(abstol, reltol * abs(total)):
        return total

    total = 0.0
    for aa, bb in clipped:
        n = min(64, max(1, int(math.ceil((bb - aa) / (2 * width)))))
        brk = np.linspace(aa, bb, n + 1)[1:-1]
        v, _ = adaptive_panels(
            integrand, aa, bb, abstol=abstol, reltol=reltol, breakpoints=brk
        )
        total += v
    return total


def boxcar_energy_current(res: ReservoirPair, B: BoxcarSet, abstol=1e-10, reltol=1e-8):
    """Energy current over a boxcar set by panel quadrature."""
    if B.is_empty:
        return 0.0
    return _interval_sum(
        res, B, lambda x: x * df_g_arrays(res, x)[0], abstol, reltol
    )


def boxcar_variance(res: ReservoirPair, B: BoxcarSet, abstol=1e-10, reltol=1e-8):
    """Variance over a boxcar set: sum of integrals of g (T^2 = T there)."""
    if B.is_empty:
        return 0.0
    return _interval_sum(res, B, lambda x: df_g_arrays(res, x)[1], abstol, reltol)


def boxcar_integrals(res: ReservoirPair, B: BoxcarSet, abstol=1e-10, reltol=1e-8):
    """(I, J, var) over a boxcar set.

    I uses the exact antiderivative of delta_f (finite at both infinities);
    J and var use adaptive panels per interval, truncated at the quadrature
    window where the integrands have decayed below the absolute tolerance.
    """
    if B.is_empty:
        return 0.0, 0.0, 0.0
    return (
        boxcar_current(res, B),
        boxcar_energy_current(res, B, abstol, reltol),
        boxcar_variance(res, B, abstol, reltol),
    )


def residual_prime(res: ReservoirPair, m: Multipliers, e: float):
    """dR/d eps at a finite energy (scalar fast path).

    Uses f' = -beta f(1-f) and 1 - 2f = tanh(x/2) for tail stability.
    """
    xL = res.beta_L * (e - res.mu_L)
    xR = res.beta_R * (e - res.mu_R)
    eL = math.exp(-abs(xL))
    eR = math.exp(-abs(xR))
    flL = eL / (1.0 + eL) ** 2
    flR = eR / (1.0 + eR) ** 2
    dfp = -res.beta_L * flL + res.beta_R * flR
    gp = -res.beta_L * flL * math.tanh(xL / 2.0) - res.beta_R * flR * math.tanh(
        xR / 2.0
    )
    df, _ = _df_g_scalar(res, e)
    return gp - m.lam * df - (m.lam * e + m.eta) * dfp


def multiplier_jacobian(
    res: ReservoirPair, m: Multipliers, B: BoxcarSet, derivative_floor=1e-8
):
    """2x2 matrix d(I, J)/d(eta, lam) for the boxcar at multipliers m.

    Implicit-function-theorem endpoint weights: xi_k = delta_f(a_k)^2 /
    R'(a_k) at left endpoints, theta_k = delta_f(b_k)^2 / R'(b_k) at right
    endpoints; infinite endpoints contribute zero.  Requires every finite
    endpoint root to be simple: |R'| below the floor raises
    NearBifurcationError (the caller should perturb the multipliers).
    """
    dI_deta = 0.0
    dI_dlam = 0.0
    dJ_dlam = 0.0
    floor = derivative_floor * max(1.0, abs(m.lam))
    for a, b in B.intervals:
        for e, is_left in ((a, True), (b, False)):
            if not math.isfinite(e):
                continue
            rp = residual_prime(res, m, e)
            if abs(rp) < floor:
                raise NearBifurcationError(
                    f"|R'({e})| = {abs(rp):.3e} below floor {floor:.3e}; "
                    "multipliers are too close to a bifurcation"
                )
            df, _ = _df_g_scalar(res, e)
            w = df * df / rp
            if is_left:
                dI_deta -= w
                dI_dlam -= w * e
                dJ_dlam -= w * e * e
            else:
                dI_deta += w
                dI_dlam += w * e
                dJ_dlam += w * e * e
    return np.array([[dI_deta, dI_dlam], [dI_dlam, dJ_dlam]])
