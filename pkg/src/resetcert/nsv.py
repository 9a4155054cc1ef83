"""Nyquist-stability-vector computation and Type I / Type II classification.

The per-frequency vector N(w) = (Re(L*Cs*kappa), Re(kappa*C_R)) with
kappa = 1 + conj(L) decides membership through the range of its angle,
mapped into [-pi/2, 3*pi/2).  The angle-window test is the decision path;
the condition-list test is kept as diagnostics and must agree with it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elements import ResetElement, base_tf
from .errors import SparseGrid, ZeroShapingFilter
from .frf import FrfTable, LoopSamples, compose_loop
from .lti import (
    RationalTF,
    base_linear_stability,
    canonical,
    jw_split,
    leading_coefficients,
    log_grid,
    minimality_check,
    nyquist_stability_from_samples,
    poly_degree,
    polyadd,
    polymul,
    relative_degree,
    series,
    tf,
)

SIGN_EPS = 1e-9          # slack on the pointwise strict sign conditions
THETA_GAP_MAX = np.pi / 6
REFINE_LEVELS = 4


@dataclass(frozen=True)
class NsvSample:
    omega: float
    n_chi: float
    n_upsilon: float
    theta: float


@dataclass(frozen=True)
class TypeVerdict:
    is_type1: bool
    is_type2: bool
    theta1: float
    theta2: float
    diagnostics: list = field(default_factory=list)


def map_angle(theta):
    """Wrap atan2 output into the [-pi/2, 3*pi/2) convention."""
    theta = np.asarray(theta, float)
    out = np.where(theta < -np.pi / 2, theta + 2.0 * np.pi, theta)
    return float(out) if out.ndim == 0 else out


def compute_nsv(samples: LoopSamples, variant: str = "standard") -> list[NsvSample]:
    """Per-frequency NSV components for the selected loop variant.

    ``standard``: N = (Re(L Cs kappa), Re(kappa C_R)).
    ``modified``: the shaping filter sits inside the loop; the chi component
    divides it back out: N_chi = Re(L' kappa / Cs).
    ``sosre``:    N_upsilon = -Im(w kappa C_R).
    """
    L = samples.loop
    cs = samples.shaping
    cr = samples.reset_base
    w = samples.omega
    kappa = 1.0 + np.conj(L)
    if variant == "standard":
        n_chi = (L * cs * kappa).real
        n_ups = (kappa * cr).real
    elif variant == "modified":
        small = np.abs(cs) < 1e-12 * max(np.max(np.abs(cs)), 1e-300)
        if np.any(small):
            raise ZeroShapingFilter(f"|Cs(jw)| below threshold at omega={w[small][0]:g}")
        n_chi = (L * kappa / cs).real
        n_ups = (kappa * cr).real
    elif variant == "sosre":
        n_chi = (L * cs * kappa).real
        n_ups = -(w * kappa * cr).imag
    else:
        raise ValueError(f"unknown NSV variant {variant!r}")
    theta = map_angle(np.arctan2(n_ups, n_chi))
    return [NsvSample(float(wi), float(x), float(y), float(t))
            for wi, x, y, t in zip(w, n_chi, n_ups, theta)]


def _window_type1(theta1, theta2, eps=SIGN_EPS):
    return (theta1 > -np.pi / 2 - eps and theta1 < np.pi + eps
            and theta2 > -np.pi / 2 - eps and theta2 < np.pi - eps
            and theta2 - theta1 < np.pi + eps)


def _window_type2(theta1, theta2, eps=SIGN_EPS):
    return (theta1 > eps and theta1 < 3 * np.pi / 2 - eps
            and theta2 > eps and theta2 < 3 * np.pi / 2 - eps
            and theta2 - theta1 < np.pi + eps)


def _condition_list_type1(n_chi, n_ups, theta, eps=SIGN_EPS):
    """Direct transcription of the Type-I condition list (diagnostics path)."""
    scale = np.hypot(n_chi, n_ups)
    zero_chi = np.abs(n_chi) <= 1e-12 * scale
    zero_ups = np.abs(n_ups) <= 1e-12 * scale
    c3 = bool(np.all(n_ups[zero_chi] > eps * scale[zero_chi])) if np.any(zero_chi) else True
    c4 = bool(np.all(n_chi[zero_ups] > eps * scale[zero_ups])) if np.any(zero_ups) else True
    i2 = (theta > np.pi / 2) & (theta < np.pi)
    i3 = (theta > np.pi) & (theta < 3 * np.pi / 2)
    i4 = (theta > -np.pi / 2) & (theta < 0.0)
    a = bool(np.all(n_ups >= -eps * scale))
    b = bool(np.all(n_chi >= -eps * scale))
    with np.errstate(divide="ignore"):
        ratios = np.abs(n_ups / n_chi)
    delta1 = np.max(ratios[i4]) if np.any(i4) else -np.inf
    psi1 = np.min(ratios[i2]) if np.any(i2) else np.inf
    c = bool(delta1 < psi1 and not np.any(i3))
    return c3 and c4 and (a or b or c)


def _condition_list_type2(n_chi, n_ups, theta, eps=SIGN_EPS):
    scale = np.hypot(n_chi, n_ups)
    zero_chi = np.abs(n_chi) <= 1e-12 * scale
    zero_ups = np.abs(n_ups) <= 1e-12 * scale
    c3 = bool(np.all(n_ups[zero_chi] > eps * scale[zero_chi])) if np.any(zero_chi) else True
    c4 = bool(np.all(n_chi[zero_ups] < -eps * scale[zero_ups])) if np.any(zero_ups) else True
    i1 = (theta > 0.0) & (theta < np.pi / 2)
    i3 = (theta > np.pi) & (theta < 3 * np.pi / 2)
    i4 = (theta > -np.pi / 2) & (theta < 0.0)
    a = bool(np.all(n_ups >= -eps * scale))
    b = bool(np.all(n_chi <= eps * scale))
    with np.errstate(divide="ignore"):
        ratios = np.abs(n_ups / n_chi)
    delta2 = np.max(ratios[i3]) if np.any(i3) else -np.inf
    psi2 = np.min(ratios[i1]) if np.any(i1) else np.inf
    c = bool(delta2 < psi2 and not np.any(i4))
    return c3 and c4 and (a or b or c)


def classify(samples: list[NsvSample], origin_pole: bool = False, k_s0: float = 1.0,
             element_kind: str = "GFORE", n_minus_m: int | None = None,
             extra_thetas=(), check_density: bool = True) -> TypeVerdict:
    """Type I / Type II verdict from NSV samples plus side conditions.

    ``extra_thetas`` carries asymptotic angle limits so the min/max covers
    the w -> 0 and w -> inf ends of the axis.  The angle-window test decides;
    the condition-list transcription is evaluated alongside for diagnostics.
    """
    if not samples:
        raise SparseGrid("no NSV samples")
    theta_raw = np.unwrap([np.arctan2(s.n_upsilon, s.n_chi) for s in samples])
    if check_density and theta_raw.size > 1:
        gap = np.max(np.abs(np.diff(theta_raw)))
        if gap >= THETA_GAP_MAX:
            raise SparseGrid(f"adjacent angle gap {gap:.3f} rad >= pi/6; refine the grid")
    theta = np.array([s.theta for s in samples])
    all_theta = np.concatenate([theta, np.asarray(list(extra_thetas), float)])
    theta1 = float(np.min(all_theta))
    theta2 = float(np.max(all_theta))

    diagnostics = []
    n_chi = np.array([s.n_chi for s in samples])
    n_ups = np.array([s.n_upsilon for s in samples])
    omega = np.array([s.omega for s in samples])

    norms = np.hypot(n_chi, n_ups)
    nz_ok = bool(np.all(norms > 1e-300))
    diagnostics.append(("nonzero-nsv", "ok" if nz_ok else
                        f"zero NSV at omega={omega[np.argmin(norms)]:g}"))

    # side condition (1): sign of the shaping DC gain under an origin pole
    c1_t1 = (k_s0 > 0.0) if origin_pole else True
    c1_t2 = (k_s0 < 0.0) if origin_pole else True
    # side condition (2): sign flip for the pure integrator element
    c2_t1 = (k_s0 < 0.0) if element_kind == "CI" else True
    c2_t2 = (k_s0 > 0.0) if element_kind == "CI" else True

    w1 = _window_type1(theta1, theta2)
    w2 = _window_type2(theta1, theta2)
    is1 = bool(c1_t1 and c2_t1 and w1 and nz_ok)
    is2 = bool(c1_t2 and c2_t2 and w2 and nz_ok)

    diagnostics.append(("type1-ks0-origin", "ok" if c1_t1 else f"k_s0={k_s0:g} <= 0"))
    diagnostics.append(("type1-ks0-ci", "ok" if c2_t1 else f"k_s0={k_s0:g} >= 0"))
    diagnostics.append(("type1-window", "ok" if w1 else
                        f"theta range [{theta1:.4f}, {theta2:.4f}]"))
    diagnostics.append(("type2-ks0-origin", "ok" if c1_t2 else f"k_s0={k_s0:g} >= 0"))
    diagnostics.append(("type2-ks0-ci", "ok" if c2_t2 else f"k_s0={k_s0:g} <= 0"))
    diagnostics.append(("type2-window", "ok" if w2 else
                        f"theta range [{theta1:.4f}, {theta2:.4f}]"))
    diagnostics.append(("type1-condition-list",
                        "ok" if _condition_list_type1(n_chi, n_ups, theta) else "violated"))
    diagnostics.append(("type2-condition-list",
                        "ok" if _condition_list_type2(n_chi, n_ups, theta) else "violated"))
    return TypeVerdict(is1, is2, theta1, theta2, diagnostics)


@dataclass(frozen=True)
class PhaseConditions:
    cond_a: bool    # sin(angle L) >= 0 on the whole grid
    cond_b: bool    # cos(angle L - angle C_R) >= 0 on the whole grid


def sufficient_phase_conditions(samples: LoopSamples) -> PhaseConditions:
    """Two quick sufficient sign tests on the loop phase (unit shaping only).

    Either one passing implies Type I / Type II membership for non-CI
    first-order elements (cond_b excludes CI).
    """
    L = samples.loop
    cr = samples.reset_base
    scale_a = np.abs(L)
    cond_a = bool(np.all(L.imag >= -SIGN_EPS * np.maximum(scale_a, 1e-300)))
    align = (L * np.conj(cr)).real
    scale_b = np.abs(L) * np.abs(cr)
    cond_b = bool(np.all(align >= -SIGN_EPS * np.maximum(scale_b, 1e-300)))
    return PhaseConditions(cond_a, cond_b)


# ---------------------------------------------------------------------------
# exact asymptotic NSV angles from rational blocks
# ---------------------------------------------------------------------------

class _CRat:
    """Complex rational function of w: (re + j*im)/den with real polynomials."""

    __slots__ = ("re", "im", "den")

    def __init__(self, re, im, den):
        self.re, self.im, self.den = canonical(re), canonical(im), canonical(den)

    @staticmethod
    def from_tf(tfn: RationalTF) -> "_CRat":
        nr, ni = jw_split(tfn.num)
        dr, di = jw_split(tfn.den)
        den = polyadd(polymul(dr, dr), polymul(di, di))
        re = polyadd(polymul(nr, dr), polymul(ni, di))
        im = polyadd(polymul(ni, dr), [-c for c in polymul(nr, di)])
        return _CRat(re, im, den)

    @staticmethod
    def one() -> "_CRat":
        return _CRat([1.0], [0.0], [1.0])

    @staticmethod
    def jw() -> "_CRat":
        return _CRat([0.0], [0.0, 1.0], [1.0])

    def conj(self) -> "_CRat":
        return _CRat(self.re, -self.im, self.den)

    def __mul__(self, other: "_CRat") -> "_CRat":
        re = polyadd(polymul(self.re, other.re), [-c for c in polymul(self.im, other.im)])
        im = polyadd(polymul(self.re, other.im), polymul(self.im, other.re))
        return _CRat(re, im, polymul(self.den, other.den))

    def __add__(self, other: "_CRat") -> "_CRat":
        re = polyadd(polymul(self.re, other.den), polymul(other.re, self.den))
        im = polyadd(polymul(self.im, other.den), polymul(other.im, self.den))
        return _CRat(re, im, polymul(self.den, other.den))

    def real_pair(self):
        return self.re, self.den


def _nsv_rationals(loop_tf: RationalTF, c_s: RationalTF, c_r: RationalTF,
                   variant: str):
    """NSV components as real rational functions of w."""
    L = _CRat.from_tf(loop_tf)
    CS = _CRat.from_tf(c_s)
    CR = _CRat.from_tf(c_r)
    kappa = _CRat.one() + L.conj()
    if variant == "modified":
        inv_cs = _CRat.from_tf(RationalTF(c_s.den, c_s.num))
        chi = L * kappa * inv_cs
    else:
        chi = L * CS * kappa
    if variant == "sosre":
        # N_upsilon = -Im(w kappa C_R) = Re(jw kappa C_R)
        ups = _CRat.jw() * kappa * CR
    else:
        ups = kappa * CR
    return chi.real_pair(), ups.real_pair()


def _valuation(p):
    p = canonical(p)
    for i, c in enumerate(p):
        if c != 0.0:
            return i, float(c)
    return None, 0.0


def _limit_angle(chi_pair, ups_pair, end: str) -> float | None:
    """Angle of (N_chi, N_ups) as w -> 0 (end='lo') or w -> inf (end='hi')."""
    pc, qc = chi_pair
    pu, qu = ups_pair
    # common denominator qc*qu
    a = polymul(pc, qu)
    b = polymul(pu, qc)
    if end == "lo":
        va, ca = _valuation(a)
        vb, cb = _valuation(b)
        if va is None and vb is None:
            return None
        if vb is None or (va is not None and va < vb):
            return map_angle(np.arctan2(0.0, ca))
        if va is None or vb < va:
            return map_angle(np.arctan2(cb, 0.0))
        return map_angle(np.arctan2(cb, ca))
    da, db = poly_degree(canonical(a)), poly_degree(canonical(b))
    za, zb = np.all(canonical(a) == 0.0), np.all(canonical(b) == 0.0)
    if za and zb:
        return None
    ca = canonical(a)[-1] if not za else 0.0
    cb = canonical(b)[-1] if not zb else 0.0
    if zb or (not za and da > db):
        return map_angle(np.arctan2(0.0, ca))
    if za or db > da:
        return map_angle(np.arctan2(cb, 0.0))
    return map_angle(np.arctan2(cb, ca))


def asymptotic_angles(loop_tf: RationalTF, c_s: RationalTF, c_r: RationalTF,
                      variant: str = "standard"):
    """Exact NSV angle limits at w -> 0 and w -> inf from rational blocks."""
    chi_pair, ups_pair = _nsv_rationals(loop_tf, c_s, c_r, variant)
    out = []
    lo = _limit_angle(chi_pair, ups_pair, "lo")
    hi = _limit_angle(chi_pair, ups_pair, "hi")
    if lo is not None:
        out.append(lo)
    if hi is not None:
        out.append(hi)
    return out


# ---------------------------------------------------------------------------
# sample generation with refinement near component sign changes
# ---------------------------------------------------------------------------

def feature_band(*tfs, extra=()):
    """Frequency band spanned by pole/zero magnitudes of the given blocks."""
    feats = [abs(x) for x in extra if x]
    for t in tfs:
        for r in np.concatenate([t.poles(), t.zeros()]) if not t.is_zero() else []:
            m = abs(r)
            if m > 1e-9:
                feats.append(m)
    if not feats:
        feats = [1.0]
    return min(feats), max(feats)


def nsv_grid_samples(plant, c_l1: RationalTF, c_l2: RationalTF, c_s: RationalTF,
                     element: ResetElement, variant: str = "standard",
                     points: int = 2000, refine: int = REFINE_LEVELS):
    """Loop samples + NSV list on a padded log grid, refined near zero crossings."""
    c_r = base_tf(element)
    in_loop = variant == "modified"
    if isinstance(plant, FrfTable):
        lo, hi = plant.band
        grid = np.logspace(np.log10(lo), np.log10(hi), points)
    else:
        lo, hi = feature_band(plant, c_l1, c_l2, c_s, c_r,
                              extra=(element.omega_r if element.kind != "CI" else 1.0,))
        grid = log_grid(lo, hi, points)
    samples = compose_loop(plant, c_l1, c_r, c_l2, c_s, grid,
                           include_shaping_in_loop=in_loop)
    nsv = compute_nsv(samples, variant)
    for _ in range(max(refine, 8)):
        chi = np.array([s.n_chi for s in nsv])
        ups = np.array([s.n_upsilon for s in nsv])
        w = np.array([s.omega for s in nsv])
        gaps = np.abs(np.diff(np.unwrap(np.arctan2(ups, chi))))
        flips = np.nonzero((np.sign(chi[:-1]) != np.sign(chi[1:]))
                           | (np.sign(ups[:-1]) != np.sign(ups[1:]))
                           | (gaps >= np.pi / 7.0))[0]
        if flips.size == 0:
            break
        mids = np.sqrt(w[flips] * w[flips + 1])
        grid = np.unique(np.concatenate([w, mids]))
        samples = compose_loop(plant, c_l1, c_r, c_l2, c_s, grid,
                               include_shaping_in_loop=in_loop)
        nsv = compute_nsv(samples, variant)
    return samples, nsv


# ---------------------------------------------------------------------------
# aggregate first-order / SOSRE certification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CertifiedVerdict:
    certified: bool
    conditional_on_well_posedness: bool
    bullets: list
    type_verdict: TypeVerdict | None
    k_s0: float
    k_n: float | None


def _origin_pole_count(p: RationalTF) -> int:
    vn, _ = _valuation(p.num)
    vd, _ = _valuation(p.den)
    if vn is None:
        return 0
    return max(0, vd - vn)


def certify_first_order(element: ResetElement, c_l1: RationalTF, c_l2: RationalTF,
                        plant, c_s: RationalTF | None = None,
                        architecture: str = "standard", points: int = 2000,
                        plant_rhp_poles: int = 0, plant_origin_poles: int = 0,
                        asymptote=None) -> CertifiedVerdict:
    """Full stability verdict for CI / PCI / GFORE / SOSRE reset loops.

    Aggregates base-linear stability, open-loop minimality, the CI side
    rules, Type I/II membership, the reset-scalar bound, and the shaping
    proviso.  With a measured plant the stability check falls back to the
    winding count and minimality is assumed (reported as such).
    """
    c_s = c_s if c_s is not None else tf([1.0])
    variant = "sosre" if element.kind == "SOSRE" else (
        "modified" if architecture == "modified" else "standard")
    c_r = base_tf(element)
    rational_plant = isinstance(plant, RationalTF)
    bullets = []

    # loop transfer function (with the shaping filter when it sits in the loop)
    samples, nsv = nsv_grid_samples(plant, c_l1, c_l2, c_s, element,
                                    variant=variant, points=points)
    if rational_plant:
        loop_tf = series(series(c_l1, c_r), series(c_l2, plant))
        if architecture == "modified":
            loop_tf = series(loop_tf, c_s)
        rep = base_linear_stability(loop_tf)
        bullets.append(("base-linear-stability", "pass" if rep.stable else "fail",
                        f"{rep.poles.size} closed-loop poles"))
        cancels = minimality_check(loop_tf)
        bullets.append(("open-loop-minimality", "pass" if not cancels else "fail",
                        "no cancellations" if not cancels else f"cancellation at {cancels[0]:.4g}"))
        p_lin = series(series(c_l1, c_l2), plant)
        origin = _origin_pole_count(p_lin)
        lcs = series(loop_tf, c_s) if architecture == "standard" else loop_tf
        k_n, k_s0 = leading_coefficients(lcs, c_s)
        n_minus_m = relative_degree(lcs)
        extra = asymptotic_angles(loop_tf, c_s, c_r, variant=variant)
    else:
        rep = nyquist_stability_from_samples(samples.omega, samples.loop,
                                             rhp_poles=plant_rhp_poles,
                                             origin_poles=plant_origin_poles)
        bullets.append(("base-linear-stability", "pass" if rep.stable else "fail",
                        f"net encirclements {rep.encirclements}"))
        bullets.append(("open-loop-minimality", "assumed",
                        "measured plant: cancellations not checkable"))
        origin = plant_origin_poles
        _, k_s0 = leading_coefficients(tf([1.0]), c_s)
        k_n = None
        n_minus_m = None
        extra = []
        if asymptote is not None:
            lo_slope, hi_slope = asymptote
            extra = _frf_asymptote_angles(samples, c_s, c_r, variant,
                                          int(lo_slope), int(hi_slope))
            n_minus_m = -int(hi_slope)

    if element.kind == "CI":
        ok_origin = origin == 0
        ok_slope = n_minus_m == 2 if n_minus_m is not None else False
        bullets.append(("ci-origin-pole-rule", "pass" if ok_origin else "fail",
                        f"{origin} origin poles in the linear part"))
        bullets.append(("ci-relative-degree-rule", "pass" if ok_slope else "fail",
                        f"n-m = {n_minus_m}"))

    verdict = classify(nsv, origin_pole=origin > 0, k_s0=k_s0,
                       element_kind=element.kind,
                       n_minus_m=n_minus_m, extra_thetas=extra)
    bullets.append(("type-membership", "pass" if (verdict.is_type1 or verdict.is_type2) else "fail",
                    f"type1={verdict.is_type1} type2={verdict.is_type2}"))

    gamma = float(element.a_rho[0, 0])
    ok_gamma = -1.0 < gamma < 1.0
    bullets.append(("reset-scalar-bound", "pass" if ok_gamma else "fail", f"gamma={gamma:g}"))

    unit_shaping = (c_s.num.size == 1 and c_s.den.size == 1
                    and np.isclose(c_s.num[0] / c_s.den[0], 1.0))
    conditional = (not unit_shaping) or element.kind == "SOSRE"
    if not conditional:
        detail = "unit shaping filter"
    elif element.kind == "SOSRE":
        detail = "partial reset requires well-posed reset instants"
    else:
        detail = "shaping filter requires well-posed reset instants"
    bullets.append(("well-posedness-proviso",
                    "pass" if not conditional else "conditional", detail))

    certified = all(status in ("pass", "conditional", "assumed") for _, status, _ in bullets)
    return CertifiedVerdict(certified, conditional, bullets, verdict, k_s0, k_n)


def _frf_asymptote_angles(samples: LoopSamples, c_s, c_r, variant,
                          lo_slope, hi_slope):
    """Limit angles for a measured plant from declared asymptotic loop slopes.

    The loop is modelled as c*s^p at each end, the gain magnitude matched at
    the band edge and the sign chosen to match the measured phase there.
    """
    out = []
    for slope, idx, end in ((lo_slope, 0, "lo"), (hi_slope, -1, "hi")):
        w_edge = samples.omega[idx]
        l_edge = samples.loop[idx]
        gain = abs(l_edge) / w_edge ** slope
        model_phase = map_angle(np.angle((1j * w_edge) ** slope))
        meas_phase = map_angle(np.angle(l_edge))
        if abs(np.exp(1j * model_phase) - np.exp(1j * meas_phase)) > np.sqrt(2.0):
            gain = -gain
        if slope >= 0:
            loop_tf = tf([0.0] * slope + [gain], [1.0])
        else:
            loop_tf = tf([gain], [0.0] * (-slope) + [1.0])
        chi_pair, ups_pair = _nsv_rationals(loop_tf, c_s, c_r, variant)
        ang = _limit_angle(chi_pair, ups_pair, end)
        if ang is not None:
            out.append(ang)
    return out
