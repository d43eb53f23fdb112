"""Orlicz data phi, psi = 1/phi, Psi, and the mollified kernel pair.

The solver works with the decreasing kernel psi = 1/phi and its primitive
Psi(t) = int_t^inf psi.  Because psi need not be differentiable, and because
the interior-center problem needs the energy to blow up at the boundary,
psi is replaced by a C^1 surrogate psi_eps built in four pieces:

  (0, eps/2]   aleph * t^(q-1)            (forces at least t^q blow-up)
  (eps/2, t0]  tangent line to the power branch at eps/2
  (t0, eps)    monotone cubic Hermite joining the line to the convolution
  [eps, inf)   theta_eps = psi * bump     (one-sided mollification)

plus the additive term eps / (1 + t^2) that makes the derivative strictly
negative everywhere.  All constants (q, delta, aleph, aleph0, aleph1, A)
are derived from the growth scan of psi near zero.

Kernel evaluations are memoized on a log grid with monotone cubic
interpolation; Psi_eps is evaluated as an exact running integral of the
memoized psi_eps so that -d/dt Psi_eps == psi_eps holds to quadrature
precision, which the downstream finite-difference checks rely on.  Direct
quadrature evaluators are retained for tests.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

MEMO_POINTS = 4096
_SCAN_POINTS = 800
_SCAN_FLOOR = 1e-9
_DELTA_DEFAULT = 0.9
_MARGIN = 1.1


# ---------------------------------------------------------------------------
# Orlicz specification


@dataclass(frozen=True)
class OrliczSpec:
    """Gain function phi with its reciprocal kernel psi and primitive Psi.

    ``kind`` is "power" (phi(t) = t^(1-p), everything analytic) or
    "tabulated" (phi given by an evaluator, with a declared power bound
    psi(t) <= tail_coeff * t^tail_exponent for large t, tail_exponent < -1).
    """

    kind: str
    p: float
    phi: Callable[[np.ndarray], np.ndarray]
    psi: Callable[[np.ndarray], np.ndarray]
    tail_exponent: float
    tail_coeff: float

    def Psi(self, t):
        """Psi(t) = int_t^inf psi(s) ds."""
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return t**self.p / abs(self.p)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = np.empty_like(tt)
        for k, a in enumerate(tt):
            big = max(50.0, 10.0 * a)
            val, _ = quad(lambda s: float(self.psi(s)), a, big, limit=200)
            out[k] = val + self.psi_tail_integral(big)
        return float(out[0]) if scalar else out

    def psi_tail_integral(self, t: float) -> float:
        """int_t^inf psi via the declared tail bound (exact for powers)."""
        if self.kind == "power":
            return t**self.p / abs(self.p)
        s = self.tail_exponent
        return self.tail_coeff * t ** (s + 1.0) / abs(s + 1.0)


def make_power_spec(n: int, p: float) -> OrliczSpec:
    """Power gain phi(t) = t^(1-p) for -n < p < 0."""
    if not (-n < p < 0.0):
        raise ValueError(f"p out of (-n, 0): p={p}, n={n}")
    return OrliczSpec(
        kind="power",
        p=float(p),
        phi=lambda t: np.asarray(t, dtype=float) ** (1.0 - p),
        psi=lambda t: np.asarray(t, dtype=float) ** (p - 1.0),
        tail_exponent=p - 1.0,
        tail_coeff=1.0,
    )


def make_tabulated_spec(
    n: int,
    p: float,
    phi: Callable[[np.ndarray], np.ndarray],
    tail_exponent: float,
    tail_coeff: float = 1.0,
) -> OrliczSpec:
    """Wrap a user-supplied gain evaluator.

    Validates phi(0) = 0, strict monotonicity on a sampled ladder, a positive
    sampled lower bound for phi(t)/t^(1-p) near zero, and an integrable
    declared tail (tail_exponent < -1) for psi = 1/phi.
    """
    if not (-n < p < 0.0):
        raise ValueError(f"p out of (-n, 0): p={p}, n={n}")
    if tail_exponent >= -1.0:
        raise ValueError("declared tail exponent must be < -1 for integrability")
    if tail_coeff <= 0.0:
        raise ValueError("declared tail constant must be positive")
    if abs(float(phi(0.0))) > 1e-300:
        raise ValueError("phi(0) must be 0")
    ladder = np.geomspace(1e-6, 1e3, 1000)
    vals = np.asarray(phi(ladder), dtype=float)
    if np.any(np.diff(vals) <= 0.0):
        raise ValueError("phi must be strictly increasing")
    growth = vals[ladder <= _DELTA_DEFAULT] / ladder[ladder <= _DELTA_DEFAULT] ** (1.0 - p)
    if growth.min() <= 0.0:
        raise ValueError("phi(t)/t^(1-p) must stay positive near 0")

    def psi(t):
        return 1.0 / np.asarray(phi(t), dtype=float)

    return OrliczSpec(
        kind="tabulated",
        p=float(p),
        phi=phi,
        psi=psi,
        tail_exponent=float(tail_exponent),
        tail_coeff=float(tail_coeff),
    )


def spec_from_table(n: int, p: float, table, tail_exponent: float,
                    tail_coeff: float = 1.0) -> OrliczSpec:
    """Tabulated gain from sampled (t, phi(t)) pairs, log-log interpolated.

    Outside the table the declared tail bound continues psi; below the first
    knot phi continues as the power matching the first two samples.
    """
    tab = np.asarray(table, dtype=float)
    if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 4:
        raise ValueError("table must be an (m, 2) array of (t, phi) samples, m >= 4")
    ts, ys = tab[:, 0], tab[:, 1]
    if np.any(ts <= 0.0) or np.any(ys <= 0.0):
        raise ValueError("table entries must be positive")
    if np.any(np.diff(ts) <= 0.0):
        raise ValueError("table abscissae must be strictly increasing")
    interp = PchipInterpolator(np.log(ts), np.log(ys), extrapolate=True)

    def phi(t):
        t = np.asarray(t, dtype=float)
        pos = t > 0.0
        out = np.where(pos, np.exp(interp(np.log(np.where(pos, t, 1.0)))), 0.0)
        return out if out.ndim else float(out)

    return make_tabulated_spec(n, p, phi, tail_exponent, tail_coeff)


# ---------------------------------------------------------------------------
# Constants block


@dataclass(frozen=True)
class KernelConstants:
    """Growth constants: q = min{p, -(n-1)}, psi(t) < aleph t^(p-1) on (0, delta),
    A = int_delta^inf psi + 1/(1+t^2), aleph0 = max{2 aleph/|q|, A/delta^q},
    aleph1 = (1 - 2^q) aleph / |q|."""

    q: float
    delta: float
    aleph: float
    aleph0: float
    aleph1: float
    A: float


def derive_constants(spec: OrliczSpec, n: int) -> KernelConstants:
    """Scan psi(t)/t^(p-1) on a log grid of (0, 1) and build the constants.

    delta is fixed at 0.9 and aleph carries a 10% margin over the scanned
    supremum (clamped above 1).  A diverging ratio toward t -> 0 (the
    forbidden limsup) is detected by monotone growth across the smallest
    scan decades; slowly diverging ratios below the scan floor are
    undetectable by any finite scan.
    """
    p = spec.p
    delta = _DELTA_DEFAULT
    ts = np.geomspace(_SCAN_FLOOR, delta, _SCAN_POINTS)
    ratio = np.asarray(spec.psi(ts), dtype=float) / ts ** (p - 1.0)
    if not np.all(np.isfinite(ratio)):
        raise ValueError("psi(t)/t^(p-1) is not finite on the scan grid")
    lead = ratio[ts <= _SCAN_FLOOR * 1e2]
    rest_max = float(ratio[ts > _SCAN_FLOOR * 1e2].max())
    if len(lead) >= 2 and lead[0] > 2.0 * lead[-1] and lead[0] > 10.0 * rest_max:
        raise ValueError(
            "psi(t)/t^(p-1) grows unboundedly toward 0: phi violates the "
            "required liminf phi(t)/t^(1-p) > 0"
        )
    aleph = max(_MARGIN, _MARGIN * float(ratio.max()))
    q = min(p, -(n - 1.0))

    if spec.kind == "power":
        tail = delta**p / abs(p)
    else:
        mid, _ = quad(lambda s: float(spec.psi(s)), delta, 50.0, limit=200)
        tail = mid + spec.psi_tail_integral(50.0)
    A = tail + (np.pi / 2.0 - math.atan(delta))

    aleph0 = max(2.0 * aleph / abs(q), A / delta**q)
    aleph1 = (1.0 - 2.0**q) * aleph / abs(q)
    return KernelConstants(q=q, delta=delta, aleph=aleph, aleph0=aleph0,
                           aleph1=aleph1, A=A)


# ---------------------------------------------------------------------------
# Bump function and one-sided convolution


def _bump_raw(x):
    x = np.asarray(x, dtype=float)
    s = 2.0 * x + 1.0
    inside = (x > -1.0) & (x < 0.0)
    g = np.where(inside, 1.0 - s * s, 1.0)
    out = np.where(inside, np.exp(-1.0 / g), 0.0)
    return out


def _bump_raw_deriv(x):
    x = np.asarray(x, dtype=float)
    s = 2.0 * x + 1.0
    inside = (x > -1.0) & (x < 0.0)
    g = np.where(inside, 1.0 - s * s, 1.0)
    return np.where(inside, np.exp(-1.0 / g) * (-4.0 * s) / (g * g), 0.0)


_GL_NODES, _GL_WEIGHTS = leggauss(32)
_BUMP_X = (_GL_NODES - 1.0) / 2.0
# weights for theta_eps(t) = sum c_k psi(t + off_k * eps); normalized so that
# the discrete convolution preserves constants exactly (keeps the monotone
# bracket psi(t + eps) <= theta_eps(t) <= psi(t) strict)
_CONV_RAW = 0.5 * _GL_WEIGHTS * _bump_raw(_BUMP_X)
_BUMP_NORM = _CONV_RAW.sum()
_CONV_W = _CONV_RAW / _BUMP_NORM
_CONV_OFF = (1.0 - _GL_NODES) / 2.0
# weights for theta_eps'(t) = (1/eps) * sum d_k psi(t + off_k * eps), obtained
# by moving the derivative to the bump; shares the bump normalization and is
# centered so that constant kernels map to zero slope
_DER_W = 0.5 * _GL_WEIGHTS * _bump_raw_deriv(_BUMP_X) / _BUMP_NORM
_DER_W -= _DER_W.sum() * _CONV_W


@dataclass(frozen=True)
class SmoothedKernel:
    """C^1 mollified kernel psi_eps and its primitive Psi_eps.

    ``psi``, ``dpsi`` and ``Psi`` evaluate through the memoized log-grid
    interpolant (analytic below eps/2 and beyond the memo range); the
    ``*_exact`` variants evaluate the defining quadratures directly.
    """

    spec: OrliczSpec
    constants: KernelConstants
    eps: float
    t0: float
    hermite: tuple
    memo_logt: np.ndarray
    memo_logpsi: np.ndarray
    memo_interp: PchipInterpolator
    memo_interp_deriv: PchipInterpolator
    memo_Psi_knots: np.ndarray
    T: float

    # -- exact piecewise evaluation ------------------------------------

    def _theta(self, t):
        """One-sided convolution of psi against the bump, averaged over [t, t+eps]."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        args = t[:, None] + self.eps * _CONV_OFF[None, :]
        return np.asarray(self.spec.psi(args), dtype=float) @ _CONV_W

    def _theta_deriv(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        args = t[:, None] + self.eps * _CONV_OFF[None, :]
        return (np.asarray(self.spec.psi(args), dtype=float) @ _DER_W) / self.eps

    def _tilde_theta_exact(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        al, q, eps, t0 = self.constants.aleph, self.constants.q, self.eps, self.t0
        d_val, d_slope, coeffs = self.hermite
        m = t <= eps / 2.0
        out[m] = al * t[m] ** (q - 1.0)
        m = (t > eps / 2.0) & (t <= t0)
        out[m] = d_val + d_slope * (t[m] - eps / 2.0)
        m = (t > t0) & (t < eps)
        if m.any():
            out[m] = _cubic_eval(coeffs, t[m] - t0)
        m = t >= eps
        if m.any():
            out[m] = self._theta(t[m])
        return out

    def _tilde_theta_deriv_exact(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        al, q, eps, t0 = self.constants.aleph, self.constants.q, self.eps, self.t0
        d_val, d_slope, coeffs = self.hermite
        m = t <= eps / 2.0
        out[m] = al * (q - 1.0) * t[m] ** (q - 2.0)
        m = (t > eps / 2.0) & (t <= t0)
        out[m] = d_slope
        m = (t > t0) & (t < eps)
        if m.any():
            out[m] = _cubic_eval_deriv(coeffs, t[m] - t0)
        m = t >= eps
        if m.any():
            out[m] = self._theta_deriv(t[m])
        return out

    def psi_exact(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = self._tilde_theta_exact(tt) + self.eps / (1.0 + tt * tt)
        return float(out[0]) if scalar else out

    def dpsi_exact(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = self._tilde_theta_deriv_exact(tt) - self.eps * 2.0 * tt / (1.0 + tt * tt) ** 2
        return float(out[0]) if scalar else out

    def Psi_exact(self, t):
        """Psi_eps by adaptive quadrature over [t, T] plus the analytic tail.

        The quadrature runs in log coordinates (integrand psi_eps(e^x) e^x)
        with breakpoints at the splice corners, which keeps the adaptive rule
        honest across the t^(q-1) region.
        """
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = np.empty_like(tt)
        eps = self.eps
        breaks = [eps / 2.0, self.t0, eps]

        def integrand(x):
            s = math.exp(x)
            return float(self.psi_exact(s)) * s

        for k, a in enumerate(tt):
            if a <= 0.0:
                raise ValueError("Psi_eps is defined for t > 0")
            lo = a
            val = 0.0
            if lo < eps / 2.0:
                val += self._power_piece_integral(lo, eps / 2.0)
                lo = eps / 2.0
            pts = [math.log(b) for b in breaks if lo < b < self.T]
            piece, _ = quad(integrand, math.log(lo), math.log(self.T),
                            points=pts or None, limit=300)
            val += piece
            out[k] = val + self._tail(self.T)
        return float(out[0]) if scalar else out

    # -- analytic pieces --------------------------------------------------

    def _power_piece_integral(self, a, b):
        """int_a^b [aleph s^(q-1) + eps/(1+s^2)] ds for 0 < a <= b <= eps/2."""
        al, q = self.constants.aleph, self.constants.q
        return al * (a**q - b**q) / abs(q) + self.eps * (math.atan(b) - math.atan(a))

    def _tail(self, t):
        """int_t^inf psi_eps for t >= T (declared/analytic continuation)."""
        return self.spec.psi_tail_integral(t) + self.eps * (np.pi / 2.0 - math.atan(t))

    def _tail_psi(self, t):
        return np.asarray(self.spec.psi(t), dtype=float) + self.eps / (1.0 + t * t)

    # -- memoized evaluation ----------------------------------------------

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t).astype(float)
        if np.any(tt <= 0.0):
            raise ValueError("psi_eps is defined for t > 0")
        out = np.empty_like(tt)
        lo = tt < self.memo_logt_lo
        hi = tt > self.T
        mid = ~(lo | hi)
        if lo.any():
            al, q = self.constants.aleph, self.constants.q
            out[lo] = al * tt[lo] ** (q - 1.0) + self.eps / (1.0 + tt[lo] ** 2)
        if hi.any():
            out[hi] = self._tail_psi(tt[hi])
        if mid.any():
            out[mid] = np.exp(self.memo_interp(np.log(tt[mid])))
        return float(out[0]) if scalar else out

    def dpsi(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t).astype(float)
        out = np.empty_like(tt)
        lo = tt < self.memo_logt_lo
        hi = tt > self.T
        mid = ~(lo | hi)
        if lo.any():
            al, q = self.constants.aleph, self.constants.q
            out[lo] = (al * (q - 1.0) * tt[lo] ** (q - 2.0)
                       - 2.0 * self.eps * tt[lo] / (1.0 + tt[lo] ** 2) ** 2)
        if hi.any():
            s, c = self.spec.tail_exponent, self.spec.tail_coeff
            if self.spec.kind == "power":
                base = (self.spec.p - 1.0) * tt[hi] ** (self.spec.p - 2.0)
            else:
                base = c * s * tt[hi] ** (s - 1.0)
            out[hi] = base - 2.0 * self.eps * tt[hi] / (1.0 + tt[hi] ** 2) ** 2
        if mid.any():
            x = np.log(tt[mid])
            val = np.exp(self.memo_interp(x))
            out[mid] = val * self.memo_interp_deriv(x) / tt[mid]
        return float(out[0]) if scalar else out

    def Psi(self, t):
        """Memoized Psi_eps: exact running integral of the memoized psi_eps."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t).astype(float)
        if np.any(tt <= 0.0):
            raise ValueError("Psi_eps is defined for t > 0")
        out = np.empty_like(tt)
        lo = tt < self.memo_logt_lo
        hi = tt > self.T
        mid = ~(lo | hi)
        if hi.any():
            out[hi] = np.array([self._tail(a) for a in tt[hi]])
        if mid.any():
            out[mid] = self._Psi_memo(tt[mid])
        if lo.any():
            base = self.memo_Psi_knots[0]
            vals = np.array(
                [self._power_piece_integral(a, self.memo_logt_lo) for a in tt[lo]]
            )
            out[lo] = base + vals
        return float(out[0]) if scalar else out

    def _Psi_memo(self, tt):
        x = np.log(tt)
        idx = np.searchsorted(self.memo_logt, x, side="right") - 1
        idx = np.clip(idx, 0, len(self.memo_logt) - 2)
        x_right = self.memo_logt[idx + 1]
        # int_t^{knot right} exp(P(x) + x) dx via fixed Gauss panels
        half = 0.5 * (x_right - x)
        mids = 0.5 * (x_right + x)
        nodes = mids[:, None] + half[:, None] * _PSI_GL_NODES[None, :]
        vals = np.exp(self.memo_interp(nodes) + nodes)
        seg = (vals @ _PSI_GL_WEIGHTS) * half
        return self.memo_Psi_knots[idx + 1] + seg

    @property
    def memo_logt_lo(self):
        return self._memo_t_lo

    # populated in __post_init__
    def __post_init__(self):
        object.__setattr__(self, "_memo_t_lo", float(np.exp(self.memo_logt[0])))
        self.memo_logt.setflags(write=False)
        self.memo_logpsi.setflags(write=False)
        self.memo_Psi_knots.setflags(write=False)


_PSI_GL_NODES, _PSI_GL_WEIGHTS = leggauss(8)
_PANEL_NODES, _PANEL_WEIGHTS = leggauss(12)


def _cubic_eval(coeffs, s):
    c0, c1, c2, c3 = coeffs
    return ((c3 * s + c2) * s + c1) * s + c0


def _cubic_eval_deriv(coeffs, s):
    _, c1, c2, c3 = coeffs
    return (3.0 * c3 * s + 2.0 * c2) * s + c1


def mollify(spec: OrliczSpec, constants: KernelConstants, eps: float) -> SmoothedKernel:
    """Build the C^1 mollified kernel for 0 < eps < delta.

    The splice point t0 solves Delta(t0) = midpoint of [theta_eps(eps),
    aleph eps^(q-1)] on the tangent line Delta; the (t0, eps) gap is closed
    by a cubic Hermite matching values and slopes.  If the Hermite segment
    is not monotone decreasing (Fritsch-Carlson box test), t0 is bisected
    toward eps/2, which steepens the secant until monotonicity holds.
    """
    if not (0.0 < eps < constants.delta):
        raise ValueError(f"eps must lie in (0, delta={constants.delta}), got {eps}")
    al, q = constants.aleph, constants.q

    half = eps / 2.0
    d_val = al * half ** (q - 1.0)
    d_slope = al * (q - 1.0) * half ** (q - 2.0)

    shell = _KernelShell(spec, eps)
    theta_end = float(shell.theta(np.array([eps]))[0])
    theta_slope_end = float(shell.theta_deriv(np.array([eps]))[0])
    power_end = al * eps ** (q - 1.0)
    if theta_end >= power_end:
        raise ValueError("kernel constants inconsistent: theta_eps(eps) >= aleph eps^(q-1)")
    target = 0.5 * (theta_end + power_end)
    t0 = half + (target - d_val) / d_slope
    if not (half < t0 < eps):
        t0 = 0.5 * (half + eps)

    for _ in range(80):
        h_gap = eps - t0
        y0 = d_val + d_slope * (t0 - half)
        secant = (theta_end - y0) / h_gap
        # both end slopes are negative; monotone decreasing if slope/secant in [0, 3]
        r0 = d_slope / secant
        r1 = theta_slope_end / secant
        if secant < 0.0 and 0.0 <= r0 <= 3.0 and 0.0 <= r1 <= 3.0:
            break
        t0 = 0.5 * (t0 + half)
    else:
        raise RuntimeError("Hermite join failed to become monotone")

    h_gap = eps - t0
    y0 = d_val + d_slope * (t0 - half)
    c0, c1 = y0, d_slope
    c2 = (3.0 * (theta_end - y0) / h_gap - 2.0 * d_slope - theta_slope_end) / h_gap
    c3 = (d_slope + theta_slope_end - 2.0 * (theta_end - y0) / h_gap) / (h_gap * h_gap)
    # (value and slope of the tangent line at eps/2, cubic coefficients at t0)
    hermite = (d_val, d_slope, (c0, c1, c2, c3))

    T = max(10.0, 10.0 / eps)
    knots = np.unique(np.concatenate([
        np.geomspace(half, T, MEMO_POINTS), [t0, eps],
    ]))
    kernel = SmoothedKernel(
        spec=spec, constants=constants, eps=eps, t0=t0, hermite=hermite,
        memo_logt=np.zeros(1), memo_logpsi=np.zeros(1),
        memo_interp=None, memo_interp_deriv=None,
        memo_Psi_knots=np.zeros(1), T=T,
    )
    # exact samples through the piecewise definition
    psi_samples = kernel.psi_exact(knots)
    logt = np.log(knots)
    logpsi = np.log(psi_samples)
    interp = PchipInterpolator(logt, logpsi, extrapolate=False)
    interp_deriv = interp.derivative()

    # running integral of exp(P(x) + x) over the panels, from the right
    half_w = 0.5 * np.diff(logt)
    mids = 0.5 * (logt[1:] + logt[:-1])
    nodes = mids[:, None] + half_w[:, None] * _PANEL_NODES[None, :]
    vals = np.exp(interp(nodes) + nodes)
    panel = (vals @ _PANEL_WEIGHTS) * half_w
    tail = kernel._tail(T)
    Psi_knots = np.concatenate([np.cumsum(panel[::-1])[::-1] + tail, [tail]])

    return SmoothedKernel(
        spec=spec, constants=constants, eps=eps, t0=t0, hermite=hermite,
        memo_logt=logt, memo_logpsi=logpsi,
        memo_interp=interp, memo_interp_deriv=interp_deriv,
        memo_Psi_knots=Psi_knots, T=T,
    )


class _KernelShell:
    """Convolution helpers needed before the full kernel object exists."""

    def __init__(self, spec, eps):
        self.spec = spec
        self.eps = eps

    def theta(self, t):
        args = t[:, None] + self.eps * _CONV_OFF[None, :]
        return np.asarray(self.spec.psi(args), dtype=float) @ _CONV_W

    def theta_deriv(self, t):
        args = t[:, None] + self.eps * _CONV_OFF[None, :]
        return (np.asarray(self.spec.psi(args), dtype=float) @ _DER_W) / self.eps


def big_psi_eps(kernel: SmoothedKernel, t) -> float | np.ndarray:
    """Psi_eps(t) by direct quadrature (the certified evaluation path)."""
    return kernel.Psi_exact(t)


def write_kernel_csv(spec: OrliczSpec, kernel: SmoothedKernel, path,
                     t_lo: float = None, t_hi: float = 10.0, count: int = 200) -> None:
    """Dump ``t, psi, psi_eps, Psi, Psi_eps`` on a log grid for plotting."""
    lo = t_lo if t_lo is not None else kernel.eps / 8.0
    ts = np.geomspace(lo, t_hi, count)
    psi = np.asarray(spec.psi(ts), dtype=float)
    Psi = np.asarray(spec.Psi(ts), dtype=float)
    psi_e = kernel.psi(ts)
    Psi_e = kernel.Psi(ts)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "psi", "psi_eps", "Psi", "Psi_eps"])
        for row in zip(ts, psi, psi_e, Psi, Psi_e):
            writer.writerow([repr(float(v)) for v in row])
