"""Direct SPR verification for concrete (beta, rho) candidates.

The scalar path checks Re H(jw) > 0 on the grid together with the exact
rational limits at w -> 0 and w -> infinity, where
H = (beta' L Cs + rho' C_R) / (1 + L) for first-order elements (C_R replaced
by s*C_R for the single-state second-order element).  The matrix path checks
positive definiteness of the real symmetric part of the 2x2 response plus the
applicable limit matrices and the strict jump-map inequality.

This module recomputes every quantity from raw loop samples and rational
blocks on its own; it shares no code path with the classifier or the
certifier it validates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import ResetElement, base_tf, reset_matrix_condition
from .errors import GridTooSparse, NotPositiveDefinite
from .frf import LoopSamples
from .lti import (
    RationalTF,
    dc_limit,
    high_frequency_re_limit,
    leading_coefficients,
    polymul,
    relative_degree,
    series,
    tf,
)

MARGIN = 1e-9   # strictness margin, relative to the local response scale


@dataclass(frozen=True)
class HbetaCandidate:
    """Scalar candidate (beta', rho') or matrix candidate (beta, rho)."""

    beta_prime: float | np.ndarray
    rho_prime: float | np.ndarray

    def as_matrix_params(self):
        b = np.atleast_1d(np.asarray(self.beta_prime, float))
        r = np.atleast_2d(np.asarray(self.rho_prime, float))
        return b, r


@dataclass(frozen=True)
class LimitCheck:
    kind: str       # "value" (H(inf) or H(0)) or "scaled" (w^2-scaled)
    value: float
    passed: bool


@dataclass(frozen=True)
class ScalarSprReport:
    passed: bool
    rho_positive: bool
    min_margin: float           # min of (beta',rho').N / (|N| * |xi|) over the grid
    worst_omega: float
    limit_zero: LimitCheck | None
    limit_inf: LimitCheck | None


def build_h_scalar(p_lin: RationalTF, element: ResetElement, c_s: RationalTF,
                   beta_prime: float, rho_prime: float,
                   variant: str = "standard") -> RationalTF:
    """H as a single rational function with the structural cancellations done.

    ``p_lin`` is the product C_L1*C_L2*G.  ``variant="modified"`` places the
    shaping filter inside the loop; ``variant="sosre"`` uses the s*C_R branch.
    """
    c_r = base_tf(element)
    nr, dr = c_r.num, c_r.den
    nt, dt = p_lin.num, p_lin.den
    ns, ds = c_s.num, c_s.den
    if variant == "modified":
        # loop is L' = C_R * P * Cs; H = N_R (b' Nt + r' Dt) Ds / (Dr Dt Ds + Nr Nt Ns)
        num = polymul(nr, polymul(ds, _polyadd(beta_prime * np.asarray(nt),
                                               rho_prime * np.asarray(dt))))
        den = _polyadd(polymul(polymul(dr, dt), ds), polymul(polymul(nr, nt), ns))
        return RationalTF(num, den)
    if element.kind == "SOSRE":
        # only the first state resets: the rho tap rides on s * C_R
        rho_term = rho_prime * np.asarray(polymul([0.0, 1.0], polymul(dt, ds)))
    else:
        rho_term = rho_prime * np.asarray(polymul(dt, ds))
    beta_term = beta_prime * np.asarray(polymul(nt, ns))
    num = polymul(nr, _polyadd(beta_term, rho_term))
    den = polymul(ds, _polyadd(polymul(dr, dt), polymul(nr, nt)))
    return RationalTF(num, den)


def _polyadd(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    n = max(a.size, b.size)
    out = np.zeros(n)
    out[: a.size] += a
    out[: b.size] += b
    return out


def _limits_scalar(h: RationalTF):
    zero = dc_limit(h)
    lim0 = LimitCheck("value", zero, bool(np.isfinite(zero) and zero > 0.0))
    kind, val = high_frequency_re_limit(h)
    liminf = LimitCheck(kind, val, bool(val > 0.0))
    return lim0, liminf


def spr_check_scalar(candidate: HbetaCandidate, samples: LoopSamples,
                     element: ResetElement, c_s: RationalTF | None = None,
                     p_lin: RationalTF | None = None,
                     variant: str = "standard") -> ScalarSprReport:
    """Grid positivity of Re H plus both limit conditions for one candidate.

    Grid test: (beta', rho') . N(w) > MARGIN * |N(w)| at every sample, with N
    recomputed here from the raw loop responses.  Limit tests need the
    rational blocks; without them the report carries None limits and fails
    closed only on the grid criterion.
    """
    bp = float(np.asarray(candidate.beta_prime).reshape(()))
    rp = float(np.asarray(candidate.rho_prime).reshape(()))
    c_s = c_s if c_s is not None else tf([1.0])
    L, cs, cr, w = samples.loop, samples.shaping, samples.reset_base, samples.omega
    if w.size < 8:
        raise GridTooSparse("need a denser grid for the SPR sweep")
    kappa = 1.0 + np.conj(L)
    if variant == "modified":
        n_chi = (L * kappa / cs).real
    else:
        n_chi = (L * cs * kappa).real
    if element.kind == "SOSRE":
        n_ups = -(w * kappa * cr).imag
    else:
        n_ups = (kappa * cr).real
    norm = np.hypot(n_chi, n_ups) * np.hypot(bp, rp)
    margins = (bp * n_chi + rp * n_ups) / np.maximum(norm, 1e-300)
    i = int(np.argmin(margins))
    min_margin, worst = float(margins[i]), float(w[i])
    rho_ok = rp > 0.0
    grid_ok = min_margin > MARGIN

    lim0 = liminf = None
    limits_ok = True
    if p_lin is not None:
        h = build_h_scalar(p_lin, element, c_s, bp, rp, variant)
        lim0, liminf = _limits_scalar(h)
        limits_ok = lim0.passed and liminf.passed
    return ScalarSprReport(bool(rho_ok and grid_ok and limits_ok), rho_ok,
                           min_margin, worst, lim0, liminf)


def search_candidate_scalar(samples: LoopSamples, element: ResetElement,
                            c_s: RationalTF | None = None,
                            p_lin: RationalTF | None = None,
                            variant: str = "standard",
                            steps: int = 720) -> HbetaCandidate | None:
    """Sweep the (beta', rho') direction over the unit circle.

    Positivity of Re H is scale-invariant in the candidate, so the unit norm
    loses nothing.  Returns the passing direction with the largest worst-case
    grid margin, or None when no direction passes.
    """
    c_s = c_s if c_s is not None else tf([1.0])
    L, cs, cr, w = samples.loop, samples.shaping, samples.reset_base, samples.omega
    kappa = 1.0 + np.conj(L)
    if variant == "modified":
        n_chi = (L * kappa / cs).real
    else:
        n_chi = (L * cs * kappa).real
    if element.kind == "SOSRE":
        n_ups = -(w * kappa * cr).imag
    else:
        n_ups = (kappa * cr).real
    norm = np.maximum(np.hypot(n_chi, n_ups), 1e-300)
    phis = np.arange(steps) * (2.0 * np.pi / steps)
    dirs = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    margins = (dirs @ np.stack([n_chi, n_ups]) / norm).min(axis=1)
    order = np.argsort(-margins)
    for k in order:
        if margins[k] <= MARGIN or dirs[k, 1] <= 0.0:
            continue
        cand = HbetaCandidate(float(dirs[k, 0]), float(dirs[k, 1]))
        rep = spr_check_scalar(cand, samples, element, c_s, p_lin, variant)
        if rep.passed:
            return cand
    return None


# ---------------------------------------------------------------------------
# matrix path (two-state reset element)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatrixSprReport:
    passed: bool
    grid_ok: bool
    worst_omega: float
    min_det_margin: float
    limit_inf: LimitCheck | None
    limit_zero: LimitCheck | None
    jump_map_ok: bool


def _sym_matrix_entries(candidate, samples: LoopSamples, omega_r: float, xi: float):
    """Entries of the real symmetric part of the 2x2 SPR response, times |kappa|^2."""
    b, r = candidate.as_matrix_params()
    b1, b2 = float(b[0]), float(b[1])
    r1, r2, r3 = float(r[0, 0]), float(r[0, 1]), float(r[1, 1])
    L, cs, cr, w = samples.loop, samples.shaping, samples.reset_base, samples.omega
    kappa = 1.0 + np.conj(L)
    jw = 1j * w
    lead = jw + 2.0 * xi * omega_r
    t1 = (cr * kappa * jw).real
    t2 = (cr * kappa).real
    t3 = (L * kappa * cs).real
    u1 = (cr * kappa * lead).real
    u3 = (L * kappa * cs * lead).real
    u2 = (cr * kappa * (2j * xi * omega_r * w - w**2)).real - np.abs(kappa) ** 2
    d1 = 2.0 * (r1 * t1 + r2 * t2 + b1 * t3)
    d2 = 2.0 * (r3 * u1 + r2 * u2 + b2 * u3)
    c = (r2 * t1 + r3 * t2 + b2 * t3) + (r2 * u1 + r1 * u2 + b1 * u3)
    return d1, d2, c


def limit_matrix_infinity(candidate, omega_r: float, xi: float,
                          n_minus_m: int, k_n: float | None) -> np.ndarray:
    """lim w^2 (H(jw) + H(-jw)^T); the n-m = 3 case picks up the k_n terms."""
    b, r = candidate.as_matrix_params()
    b1, b2 = float(b[0]), float(b[1])
    r1, r2, r3 = float(r[0, 0]), float(r[0, 1]), float(r[1, 1])
    if n_minus_m == 3:
        if k_n is None:
            raise ValueError("k_n required when n - m = 3")
        off = omega_r**2 * r1 + 2.0 * r2 * xi * omega_r - r3 - k_n * b1
        return np.array([[4.0 * r1 * xi * omega_r - 2.0 * r2, off],
                         [off, 2.0 * omega_r**2 * r2 - 2.0 * k_n * b2]])
    off = omega_r**2 * r1 + 2.0 * r2 * xi * omega_r - r3
    return np.array([[4.0 * r1 * xi * omega_r - 2.0 * r2, off],
                     [off, 2.0 * omega_r**2 * r2]])


def limit_matrix_zero(candidate, omega_r: float, xi: float, k_s0: float) -> np.ndarray:
    """lim w->0 of H(jw) + H(-jw)^T when the open loop integrates."""
    b, r = candidate.as_matrix_params()
    b1, b2 = float(b[0]), float(b[1])
    r1, r2 = float(r[0, 0]), float(r[0, 1])
    off = k_s0 * b2 + 2.0 * k_s0 * b1 * xi * omega_r - r1
    return np.array([[2.0 * k_s0 * b1, off],
                     [off, 4.0 * k_s0 * b2 * xi * omega_r - 2.0 * r2]])


def _pd_check(m: np.ndarray) -> bool:
    scale = np.linalg.norm(m, "fro")
    if scale == 0.0:
        return False
    eig = np.linalg.eigvalsh(m)
    return bool(np.all(eig > MARGIN * scale))


def spr_check_matrix(candidate: HbetaCandidate, samples: LoopSamples,
                     element: ResetElement, k_s0: float = 1.0,
                     k_n: float | None = None, origin_pole: bool = False,
                     n_minus_m: int = 4) -> MatrixSprReport:
    """SPR test for a (beta, rho) pair on a two-state reset element.

    Checks positive definiteness of the real symmetric part on the grid
    (leading minors), the applicable limit matrix (w -> 0 under an origin
    pole, w -> infinity per the loop relative degree), and the strict
    jump-map inequality A_rho' rho A_rho - rho < 0.
    """
    b, r = candidate.as_matrix_params()
    r1, r2, r3 = float(r[0, 0]), float(r[0, 1]), float(r[1, 1])
    if r1 <= 0.0 or r3 <= 0.0 or r1 * r3 <= r2 * r2:
        raise NotPositiveDefinite("rho must be positive definite")
    if samples.omega.size < 8:
        raise GridTooSparse("need a denser grid for the SPR sweep")
    wr, xi = element.omega_r, element.xi
    d1, d2, c = _sym_matrix_entries(candidate, samples, wr, xi)
    scale = np.abs(d1) + np.abs(d2) + np.abs(c)
    scale = np.maximum(scale, 1e-300)
    det = d1 * d2 - c * c
    ok = (d1 > MARGIN * scale) & (d2 > MARGIN * scale) & (det > MARGIN * scale**2)
    det_margin = det / scale**2
    grid_ok = bool(np.all(ok))
    worst = float(samples.omega[int(np.argmin(det_margin))])

    m_inf = limit_matrix_infinity(candidate, wr, xi, n_minus_m, k_n)
    lim_inf = LimitCheck("scaled", float(np.min(np.linalg.eigvalsh(m_inf))), _pd_check(m_inf))
    lim_zero = None
    if origin_pole:
        m0 = limit_matrix_zero(candidate, wr, xi, k_s0)
        lim_zero = LimitCheck("value", float(np.min(np.linalg.eigvalsh(m0))), _pd_check(m0))

    jump_ok = reset_matrix_condition(element.a_rho, r, strict=True)
    passed = bool(grid_ok and lim_inf.passed and (lim_zero is None or lim_zero.passed)
                  and jump_ok)
    return MatrixSprReport(passed, grid_ok, worst, float(np.min(det_margin)),
                           lim_inf, lim_zero, jump_ok)


def loop_invariants(element: ResetElement, c_l1: RationalTF, c_l2: RationalTF,
                    plant: RationalTF, c_s: RationalTF):
    """(p_lin, loop_tf, k_s0, k_n, origin_pole, n_minus_m) for oracle contexts."""
    p_lin = series(series(c_l1, c_l2), plant)
    loop_tf = series(base_tf(element), p_lin)
    lcs = series(loop_tf, c_s)
    k_n, k_s0 = leading_coefficients(lcs, c_s)
    num_val = next((i for i, x in enumerate(p_lin.num) if x != 0.0), 0)
    den_val = next((i for i, x in enumerate(p_lin.den) if x != 0.0), 0)
    origin = den_val - num_val > 0
    return p_lin, loop_tf, k_s0, k_n, origin, relative_degree(lcs)
