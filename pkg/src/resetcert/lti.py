"""Rational transfer functions, canonical realizations, and closed-loop assembly.

Polynomials are real coefficient arrays in ascending powers of s, e.g.
``[1.0, 2.0, 1.0]`` is ``1 + 2s + s^2``.  Trailing (high-order) zeros are
stripped on construction so degrees are canonical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import matrix_balance as scipy_balance

from .errors import (
    DimensionMismatch,
    EvaluationAtPole,
    ImproperTransferFunction,
    InsufficientFrfResolution,
    NonStrictlyProperPlant,
    NormalizationError,
)

CANONICAL_RTOL = 1e-12      # trailing-zero strip threshold, relative to max |coeff|
ROOT_MATCH_RTOL = 1e-6      # pole/zero cancellation matching tolerance
RANK_RTOL = 1e-9            # singular-value threshold for rank tests


# ---------------------------------------------------------------------------
# polynomial helpers (ascending coefficients)
# ---------------------------------------------------------------------------

def canonical(coeffs) -> np.ndarray:
    """Strip trailing zero and cancellation-noise coefficients.

    A trailing coefficient is treated as noise only when it is negligible
    both against the largest coefficient and against its neighbours: wide
    pole spreads legitimately produce leading coefficients many orders below
    the peak (they scale like the root-spread to the degree), and stripping
    those would silently change the relative degree.
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.size == 0:
        return np.zeros(1)
    while c.size > 1 and c[-1] == 0.0:
        c = c[:-1]
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1)
    while c.size > 1:
        neighbor = np.max(np.abs(c[max(0, c.size - 3):-1]))
        if abs(c[-1]) <= CANONICAL_RTOL * scale and abs(c[-1]) <= 1e-9 * neighbor:
            c = c[:-1]
        else:
            break
    return c.copy()


def polymul(a, b) -> np.ndarray:
    return np.convolve(np.asarray(a, float), np.asarray(b, float))


def polyadd(a, b) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    n = max(a.size, b.size)
    out = np.zeros(n)
    out[: a.size] += a
    out[: b.size] += b
    return out


def polyval_jw(coeffs, omega):
    """Evaluate p(j*omega) by Horner's scheme; omega may be an array."""
    s = 1j * np.asarray(omega, dtype=float)
    acc = np.zeros_like(s, dtype=complex)
    for c in np.asarray(coeffs, float)[::-1]:
        acc = acc * s + c
    return acc


def poly_degree(coeffs) -> int:
    c = canonical(coeffs)
    return int(c.size - 1)


def is_zero_poly(coeffs) -> bool:
    c = canonical(coeffs)
    return c.size == 1 and c[0] == 0.0


# ---------------------------------------------------------------------------
# rational transfer function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RationalTF:
    """Real-rational transfer function num(s)/den(s), ascending coefficients."""

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = canonical(self.num)
        den = canonical(self.den)
        if is_zero_poly(den):
            raise ZeroDivisionError("transfer function denominator is zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def constant(k: float) -> "RationalTF":
        return RationalTF(np.array([float(k)]), np.array([1.0]))

    @staticmethod
    def zero() -> "RationalTF":
        return RationalTF(np.array([0.0]), np.array([1.0]))

    # -- structure ---------------------------------------------------------
    @property
    def degree_num(self) -> int:
        return poly_degree(self.num)

    @property
    def degree_den(self) -> int:
        return poly_degree(self.den)

    def is_zero(self) -> bool:
        return is_zero_poly(self.num)

    def is_proper(self) -> bool:
        return self.is_zero() or self.degree_num <= self.degree_den

    def is_strictly_proper(self) -> bool:
        return self.is_zero() or self.degree_num < self.degree_den

    def poles(self) -> np.ndarray:
        return poly_roots(self.den)

    def zeros(self) -> np.ndarray:
        return np.array([]) if self.is_zero() else poly_roots(self.num)

    def __mul__(self, other) -> "RationalTF":
        if isinstance(other, RationalTF):
            return series(self, other)
        return RationalTF(self.num * float(other), self.den)

    __rmul__ = __mul__

    def __add__(self, other) -> "RationalTF":
        if not isinstance(other, RationalTF):
            other = RationalTF.constant(float(other))
        num = polyadd(polymul(self.num, other.den), polymul(other.num, self.den))
        return RationalTF(num, polymul(self.den, other.den))

    def __repr__(self):
        return f"RationalTF(num={list(self.num)}, den={list(self.den)})"


def tf(num, den=(1.0,)) -> RationalTF:
    return RationalTF(np.asarray(num, float), np.asarray(den, float))


def poly_roots(coeffs) -> np.ndarray:
    """Roots via companion-matrix eigenvalues (numpy.roots on canonical poly)."""
    c = canonical(coeffs)
    if c.size <= 1:
        return np.array([])
    return np.roots(c[::-1])


def evaluate(tfn: RationalTF, omega):
    """Frequency response num(jw)/den(jw); omega scalar or array, rad/s."""
    num_v = polyval_jw(tfn.num, omega)
    den_v = polyval_jw(tfn.den, omega)
    # scale-free pole guard: |den(jw)| against the coefficient magnitude bound
    w = np.abs(np.asarray(omega, float))
    bound = sum(abs(c) * np.maximum(w, 1e-300) ** k for k, c in enumerate(tfn.den))
    bad = np.abs(den_v) <= 1e-14 * bound
    if np.any(bad):
        w_bad = np.atleast_1d(w)[np.atleast_1d(bad)][0]
        raise EvaluationAtPole(f"denominator underflows at omega={w_bad:g}")
    out = num_v / den_v
    return complex(out) if out.ndim == 0 else out


def series(a: RationalTF, b: RationalTF) -> RationalTF:
    """Cascade a*b; polynomial products, no pole-zero cancellation performed."""
    return RationalTF(polymul(a.num, b.num), polymul(a.den, b.den))


def relative_degree(tfn: RationalTF) -> int:
    return tfn.degree_den - tfn.degree_num


def leading_coefficients(loop_times_shaping: RationalTF, shaping: RationalTF):
    """High-frequency gain of L*Cs and the DC numerator constant of Cs.

    Returns ``(k_n, k_s0)`` where ``k_n = lim s^(n-m) L(s)Cs(s)`` is the ratio
    of leading coefficients, and ``k_s0 = Cs(0)`` after normalizing the
    shaping-filter denominator constant term to 1.
    """
    k_n = loop_times_shaping.num[-1] / loop_times_shaping.den[-1]
    d0 = shaping.den[0]
    if abs(d0) <= CANONICAL_RTOL * np.max(np.abs(shaping.den)):
        raise NormalizationError("shaping filter denominator constant term is zero")
    k_s0 = shaping.num[0] / d0
    return float(k_n), float(k_s0)


# ---------------------------------------------------------------------------
# state space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float))
        B = np.atleast_2d(np.asarray(self.B, float))
        C = np.atleast_2d(np.asarray(self.C, float))
        D = np.atleast_2d(np.asarray(self.D, float))
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n and n > 0:
            raise DimensionMismatch(f"incompatible shapes A{A.shape} B{B.shape} C{C.shape}")
        if n == 0:
            B = B.reshape(0, max(B.shape[1], D.shape[1]))
            C = C.reshape(max(C.shape[0], D.shape[0]), 0)
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionMismatch(f"D{D.shape} incompatible with C{C.shape}, B{B.shape}")
        for name, m in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, m)

    @property
    def order(self) -> int:
        return self.A.shape[0]


def to_state_space(tfn: RationalTF, form: str = "controllable") -> StateSpace:
    """Canonical realization of a proper transfer function.

    ``controllable``: top-row companion matrix, B = e1, matching the usual
    template A = [[-a_{n-1} ... -a_0], [I, 0]].  ``observable``: coefficients
    in the last column, B carries the numerator, C = e_n.
    """
    if not tfn.is_proper():
        raise ImproperTransferFunction(f"relative degree {relative_degree(tfn)} < 0")
    den = tfn.den / tfn.den[-1]
    num = tfn.num / tfn.den[-1]
    n = den.size - 1
    d = num[n] if num.size == n + 1 else 0.0
    rem = polyadd(num, -d * den)[:n] if n else np.zeros(0)
    rem = np.pad(rem, (0, n - rem.size))
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)),
                          np.array([[d]]))
    if form == "controllable":
        A = np.zeros((n, n))
        A[0, :] = -den[:n][::-1]
        A[1:, :-1] += np.eye(n - 1)
        B = np.zeros((n, 1))
        B[0, 0] = 1.0
        C = rem[::-1].reshape(1, n)
    elif form == "observable":
        A = np.zeros((n, n))
        A[:, -1] = -den[:n]
        A[np.arange(1, n), np.arange(n - 1)] = 1.0
        B = rem.reshape(n, 1)
        C = np.zeros((1, n))
        C[0, -1] = 1.0
    else:
        raise ValueError(f"unknown canonical form {form!r}")
    return StateSpace(A, B, C, np.array([[d]]))


def to_transfer_function(ss: StateSpace) -> RationalTF:
    """SISO transfer function C (sI-A)^-1 B + D via the Faddeev recursion."""
    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    n = A.shape[0]
    if B.shape[1] != 1 or C.shape[0] != 1:
        raise DimensionMismatch("SISO reconstruction only")
    # den(s) = s^n + c_{n-1} s^{n-1} + ... ; num from C adj(sI-A) B
    den = np.zeros(n + 1)
    den[n] = 1.0
    num = np.zeros(n + 1)
    M = np.eye(n)
    for k in range(1, n + 1):
        num[n - k] = (C @ M @ B).item()
        AM = A @ M
        c = -np.trace(AM) / k
        den[n - k] = c
        M = AM + c * np.eye(n)
    num = polyadd(num, float(D[0, 0]) * den)
    return RationalTF(num, den)


# ---------------------------------------------------------------------------
# closed-loop assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosedLoop:
    """Hybrid closed loop: flow matrices plus the block-diagonal jump map."""

    a_bar: np.ndarray
    b_bar: np.ndarray       # columns: [reference, disturbance]
    c_bar: np.ndarray       # plant output y
    c_e_bar: np.ndarray     # reset-triggering signal e_r (state part)
    a_rho_bar: np.ndarray
    d_e: float
    n_r: int

    @property
    def order(self) -> int:
        return self.a_bar.shape[0]


def _linear_part(blocks: dict, architecture: str):
    """State-space of the LTI surroundings of the reset element.

    Returns (A, B_u, B_w, C_y, C_e, C_u, D_e, D_1) with input u_r, exogenous
    w = [r, d], outputs y, e_r, u_1 per the chosen architecture.
    """
    c_l1, c_l2, g, c_s = blocks["c_l1"], blocks["c_l2"], blocks["g"], blocks["c_s"]
    if not g.is_strictly_proper():
        raise NonStrictlyProperPlant("plant block must be strictly proper")
    for name in ("c_l1", "c_l2", "c_s"):
        if not blocks[name].is_proper():
            raise ImproperTransferFunction(f"{name} must be proper")

    s1 = to_state_space(c_l1)
    s2 = to_state_space(c_l2)
    sg = to_state_space(g)
    ss_ = to_state_space(c_s)
    n1, n2, ng, ns = s1.order, s2.order, sg.order, ss_.order
    n = n1 + n2 + ng + ns
    i1 = slice(0, n1)
    i2 = slice(n1, n1 + n2)
    ig = slice(n1 + n2, n1 + n2 + ng)
    is_ = slice(n1 + n2 + ng, n)
    D1 = float(s1.D[0, 0])
    D2 = float(s2.D[0, 0])
    Ds = float(ss_.D[0, 0])

    A = np.zeros((n, n))
    A[i1, i1] = s1.A
    A[i2, i2] = s2.A
    A[ig, ig] = sg.A
    A[is_, is_] = ss_.A
    A[i1, ig] = -s1.B @ sg.C                      # e = r - y feeds C_L1
    A[ig, i2] = sg.B @ s2.C                       # C_L2 output into plant

    B_u = np.zeros((n, 1))
    B_u[i2] = s2.B
    B_u[ig] = sg.B * D2

    B_w = np.zeros((n, 2))
    B_w[i1, 0:1] = s1.B
    B_w[ig, 1:2] = sg.B                           # disturbance enters plant input

    C_y = np.zeros((1, n))
    C_y[0, ig] = sg.C

    if architecture == "standard":
        # u_1 = C_L1(r - y); e_r = C_s(u_1) sits outside the loop
        C_u = np.zeros((1, n))
        C_u[0, i1] = s1.C
        C_u[0, ig] = -D1 * sg.C
        D_1 = D1
        A[is_, :] += ss_.B @ C_u
        B_w[is_, 0:1] += ss_.B * D_1
        C_e = Ds * C_u
        C_e[0, is_] += ss_.C[0]
        D_e = Ds * D_1
    elif architecture == "modified":
        # shaping filter inside the loop: u_1 = C_s(C_L1(r - y)); e_r = u_1
        C_v = np.zeros((1, n))
        C_v[0, i1] = s1.C
        C_v[0, ig] = -D1 * sg.C
        A[is_, :] += ss_.B @ C_v
        B_w[is_, 0:1] += ss_.B * D1
        C_u = Ds * C_v
        C_u[0, is_] += ss_.C[0]
        D_1 = Ds * D1
        C_e = C_u.copy()
        D_e = D_1
    else:
        raise ValueError(f"unknown architecture {architecture!r}")
    return A, B_u, B_w, C_y, C_e, C_u, D_e, D_1


def assemble_closed_loop(reset_ss: StateSpace, a_rho, c_l1: RationalTF,
                         c_l2: RationalTF, g: RationalTF, c_s: RationalTF,
                         architecture: str = "standard") -> ClosedLoop:
    """Interconnect the reset element with the linear blocks.

    The state is x = [x_r, zeta]; jumps multiply x_r by ``a_rho`` and leave
    zeta untouched.  ``architecture="modified"`` places the shaping filter in
    the loop ahead of the reset element instead of on the trigger tap.
    """
    a_rho = np.atleast_2d(np.asarray(a_rho, float))
    n_r = reset_ss.order
    if a_rho.shape != (n_r, n_r):
        raise DimensionMismatch(f"a_rho {a_rho.shape} vs reset order {n_r}")
    blocks = {"c_l1": c_l1, "c_l2": c_l2, "g": g, "c_s": c_s}
    A, B_u, B_w, C_y, C_e, C_u, D_e, D_1 = _linear_part(blocks, architecture)
    n_p = A.shape[0]
    Ar, Br, Cr, Dr = reset_ss.A, reset_ss.B, reset_ss.C, float(reset_ss.D[0, 0])

    a_bar = np.zeros((n_r + n_p, n_r + n_p))
    a_bar[:n_r, :n_r] = Ar
    a_bar[:n_r, n_r:] = Br @ C_u
    a_bar[n_r:, :n_r] = B_u @ Cr
    a_bar[n_r:, n_r:] = A + Dr * (B_u @ C_u)

    b_bar = np.zeros((n_r + n_p, 2))
    b_bar[n_r:, :] = B_w
    b_bar[:n_r, 0:1] += Br * D_1
    b_bar[n_r:, 0:1] += B_u * (Dr * D_1)

    c_bar = np.hstack([np.zeros((1, n_r)), C_y])
    c_e_bar = np.hstack([np.zeros((1, n_r)), C_e])

    a_rho_bar = np.eye(n_r + n_p)
    a_rho_bar[:n_r, :n_r] = a_rho
    return ClosedLoop(a_bar, b_bar, c_bar, c_e_bar, a_rho_bar, float(D_e), n_r)


# ---------------------------------------------------------------------------
# stability, minimality, rank tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    poles: np.ndarray = field(default_factory=lambda: np.array([]))
    encirclements: int | None = None


def base_linear_stability(loop: RationalTF) -> StabilityReport:
    """Closed-loop stability of the unity-feedback loop 1 + L(s) = 0."""
    char = polyadd(loop.den, loop.num)
    roots = poly_roots(char)
    stable = bool(np.all(roots.real < 0.0)) if roots.size else True
    return StabilityReport(stable=stable, poles=roots)


def nyquist_stability_from_samples(omega, loop_values, rhp_poles: int = 0,
                                   origin_poles: int = 0) -> StabilityReport:
    """Closed-loop stability from sampled L(jw), w > 0 ascending.

    Counts counter-clockwise encirclements of -1 by doubling the positive-
    frequency phase change of 1 + L (conjugate symmetry) and adding the
    clockwise arc contributed by declared open-loop poles at the origin.
    The declared number of open-loop RHP poles closes the criterion.
    """
    kappa = 1.0 + np.asarray(loop_values, complex)
    steps = np.angle(kappa[1:] / kappa[:-1])
    if np.any(np.abs(steps) > np.pi / 2):
        i = int(np.argmax(np.abs(steps)))
        raise InsufficientFrfResolution(
            f"phase step {steps[i]:.3f} rad between samples {i} and {i + 1}")
    total_ccw = 2.0 * float(np.sum(steps)) - origin_poles * np.pi
    n_ccw = int(np.round(total_ccw / (2.0 * np.pi)))
    return StabilityReport(stable=(n_ccw == rhp_poles), encirclements=n_ccw)


def minimality_check(loop: RationalTF):
    """Common roots of numerator and denominator (open-loop cancellations).

    Returns a list of cancelling root locations; empty means minimal.  A zero
    cancels when the denominator residual there is small relative to its
    coefficient scale; this matches the 1e-6 root distance for simple poles
    and stays robust for clustered multiple roots.
    """
    if loop.is_zero():
        return []
    zs = loop.zeros()
    den = loop.den
    hits = []
    for z in zs:
        r = max(abs(z), 1.0)
        scale = sum(abs(c) * r**k for k, c in enumerate(den))
        val = sum(c * z**k for k, c in enumerate(den))
        if abs(val) <= ROOT_MATCH_RTOL * scale:
            hits.append(complex(z))
    return hits


def controllability_observability(a, b=None, c=None, rtol: float = RANK_RTOL):
    """Rank tests for controllability of (A, B) and observability of (A, C).

    Returns ``(controllable, observable)``; an omitted b or c yields None in
    the corresponding slot.  Each pair is tested through the eigenvalue
    pencil rank([lambda*I - A, B]) with a relative singular-value threshold;
    the plain Krylov stack loses rank information in double precision once
    the eigenvalue spread exceeds a few decades.
    """
    a = np.atleast_2d(np.asarray(a, float))
    n = a.shape[0]
    if n:
        # diagonal similarity scaling: rank properties are invariant and the
        # pencil conditioning improves by orders of magnitude
        a_bal, t = scipy_balance(a)
        t_inv = np.diag(1.0 / np.diag(t))
    else:
        a_bal, t, t_inv = a, np.eye(0), np.eye(0)
    scale = max(np.linalg.norm(a_bal, 2), 1.0) if n else 1.0
    a = a_bal

    def pencil_full_rank(side, stack_below):
        if n == 0:
            return True
        for lam in np.linalg.eigvals(a):
            if stack_below:
                m = np.vstack([lam * np.eye(n) - a, side])
            else:
                m = np.hstack([lam * np.eye(n) - a, side])
            sv = np.linalg.svd(m, compute_uv=False)
            if sv[n - 1] <= rtol * max(sv[0], scale):
                return False
        return True

    ctrb = obsv = None
    if b is not None:
        b = np.atleast_2d(np.asarray(b, float))
        if b.shape[0] != n:
            raise DimensionMismatch(f"B rows {b.shape[0]} != {n}")
        b = t_inv @ b
        ctrb = pencil_full_rank(b / max(np.linalg.norm(b), 1e-300) * scale, False)
    if c is not None:
        c = np.atleast_2d(np.asarray(c, float))
        if c.shape[1] != n:
            raise DimensionMismatch(f"C cols {c.shape[1]} != {n}")
        c = c @ t
        obsv = pencil_full_rank(c / max(np.linalg.norm(c), 1e-300) * scale, True)
    return ctrb, obsv


# ---------------------------------------------------------------------------
# exact real-part / limit machinery for rational responses
# ---------------------------------------------------------------------------

def jw_split(coeffs):
    """Split p(jw) into real and imaginary polynomials in w.

    p(jw) = pr(w) + j*pi(w) with pr even, pi odd (returned as full ascending
    coefficient arrays in w).
    """
    c = np.asarray(coeffs, float)
    pr = np.zeros(c.size)
    pi = np.zeros(c.size)
    cycle = [(1, 0), (0, 1), (-1, 0), (0, -1)]   # j^k for k mod 4
    for k, ck in enumerate(c):
        re, im = cycle[k % 4]
        pr[k] = re * ck
        pi[k] = im * ck
    return pr, pi


def real_part_rational(tfn: RationalTF):
    """Even polynomials (P, Q) in w with Re tfn(jw) = P(w)/Q(w), Q > 0."""
    nr, ni = jw_split(tfn.num)
    dr, di = jw_split(tfn.den)
    p = polyadd(polymul(nr, dr), polymul(ni, di))
    q = polyadd(polymul(dr, dr), polymul(di, di))
    return canonical(p), canonical(q)


def dc_limit(tfn: RationalTF) -> float:
    """lim_{s->0} tfn(s); +-inf when the valuation makes it diverge."""
    num, den = canonical(tfn.num), canonical(tfn.den)
    vn = next((i for i, c in enumerate(num) if c != 0.0), None)
    vd = next((i for i, c in enumerate(den) if c != 0.0), None)
    if vn is None:
        return 0.0
    if vn > vd:
        return 0.0
    if vn < vd:
        return float(np.sign(num[vn] / den[vd]) * np.inf)
    return float(num[vn] / den[vd])


def high_frequency_re_limit(tfn: RationalTF):
    """High-frequency behaviour of Re tfn(jw).

    Returns ``("value", H(inf))`` for a biproper function, otherwise
    ``("scaled", lim w^2 Re tfn(jw))`` (0 when the decay is faster).
    """
    if relative_degree(tfn) <= 0 and not tfn.is_zero():
        return "value", float(tfn.num[-1] / tfn.den[-1])
    p, q = real_part_rational(tfn)
    dq = poly_degree(q)
    want = dq - 2
    if want < 0:
        return "scaled", 0.0
    pk = p[want] if poly_degree(p) >= want and p.size > want else 0.0
    if poly_degree(p) > want:
        # Re part decays slower than 1/w^2: biproper already excluded, so the
        # even-degree bound forces deg p == dq, i.e. a nonzero limit of Re
        # itself; report it unscaled.
        return "value", float(p[-1] / q[-1])
    return "scaled", float(pk / q[-1])


def log_grid(omega_min: float, omega_max: float, points: int = 2000,
             pad_decades: float = 2.0) -> np.ndarray:
    """Log-spaced grid padded beyond the band of interest."""
    lo = np.log10(omega_min) - pad_decades
    hi = np.log10(omega_max) + pad_decades
    return np.logspace(lo, hi, points)
