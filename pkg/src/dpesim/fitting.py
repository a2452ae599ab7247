"""Curve fitting and coincidence-histogram analysis.

Nonlinear fits run Levenberg-Marquardt least squares with analytic Jacobians
where they are closed-form, initial guesses from linearized regressions, a
cap of about 200 iterations and a relative-change convergence threshold of
1e-10. A fit that fails to converge is returned flagged, never silently.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erfc

from .errors import DegenerateDataError

_XTOL = 1e-10
_MAX_ITER = 200


@dataclass(frozen=True)
class CoincidenceHistogram:
    """Binned coincidence counts versus detection delay."""

    bin_centers: np.ndarray  # ps, uniform
    counts: np.ndarray  # non-negative integers
    rep_period: float  # ps

    def __post_init__(self):
        d = np.diff(self.bin_centers)
        if d.size and (np.any(d <= 0) or np.ptp(d) > 1e-9 * d[0]):
            raise ValueError("bins must be uniform and increasing")
        if np.any(np.asarray(self.counts) < 0):
            raise ValueError("counts must be >= 0")

    @property
    def bin_width(self) -> float:
        return float(self.bin_centers[1] - self.bin_centers[0])

    def csv_rows(self):
        for c, n in zip(self.bin_centers, self.counts):
            yield (c, int(n))

    CSV_COLUMNS = ("bin_center_ps", "counts")


@dataclass(frozen=True)
class FitReport:
    """Parameter estimates with 1-sigma uncertainties and a convergence flag."""

    params: dict
    uncertainties: dict
    residual_norm: float
    converged: bool
    model: str

    def to_text(self) -> str:
        lines = [f"model = {self.model}", f"converged = {self.converged}"]
        for k, v in self.params.items():
            lines.append(f"{k} = {v:.10g}")
        for k, v in self.uncertainties.items():
            lines.append(f"sigma_{k} = {v:.4g}")
        lines.append(f"residual_norm = {self.residual_norm:.6g}")
        return "\n".join(lines) + "\n"


class Estimate(NamedTuple):
    """A scalar estimate with its propagated 1-sigma error."""

    value: float
    sigma: float


def _check_not_flat(y: np.ndarray, what: str) -> None:
    y = np.asarray(y, dtype=float)
    if y.size < 4 or np.ptp(y) <= 1e-12 * max(1.0, np.max(np.abs(y))):
        raise DegenerateDataError(f"{what}: data cannot constrain the fit")


def _run_lm(residual, x0, jac, names) -> tuple[dict, dict, float, bool]:
    res = least_squares(
        residual,
        x0,
        jac=jac,
        method="lm",
        xtol=_XTOL,
        ftol=1e-14,
        gtol=1e-14,
        max_nfev=_MAX_ITER * (len(x0) + 1),
    )
    m, n = res.fun.size, len(x0)
    converged = bool(res.status > 0)
    jtj = res.jac.T @ res.jac
    dof = max(m - n, 1)
    scale = 2.0 * res.cost / dof
    try:
        cov = np.linalg.inv(jtj) * scale
        sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj) * scale
        sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
        converged = False
    params = dict(zip(names, (float(v) for v in res.x)))
    uncerts = dict(zip(names, (float(s) for s in sig)))
    return params, uncerts, float(np.linalg.norm(res.fun)), converged, cov


def exponential_model(t, amplitude, t1, baseline, irf_fwhm: float | None = None):
    """A exp(-t/T1) + b, optionally pre-convolved with a Gaussian IRF.

    With an IRF the decay is taken to switch on at t = 0 and the closed-form
    exponentially modified Gaussian is used.
    """
    t = np.asarray(t, dtype=float)
    if irf_fwhm is None:
        return amplitude * np.exp(-t / t1) + baseline
    sig = irf_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    arg = np.clip(sig * sig / (2.0 * t1 * t1) - t / t1, -700, 700)
    core = 0.5 * np.exp(arg) * erfc((sig * sig / t1 - t) / (sig * math.sqrt(2.0)))
    return amplitude * core + baseline


def fit_exponential(t, y, irf_fwhm: float | None = None) -> FitReport:
    """Fit A exp(-t/T1) + b to a decay trace.

    Initial guesses come from a log-linear regression of the tail; with an
    IRF the exponentially modified Gaussian model is used instead and the
    Jacobian falls back to forward differences.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_not_flat(y, "fit_exponential")
    ipk = int(np.argmax(y))
    if y.size - ipk - 1 < 10:
        raise DegenerateDataError("fit_exponential: need >= 10 points past the peak")

    b0 = float(np.min(y))
    tail = y - b0
    mask = tail > 0.02 * np.max(tail)
    mask[: ipk + 1] = False
    if mask.sum() >= 3:
        slope, intercept = np.polyfit(t[mask], np.log(tail[mask]), 1)
        t1_0 = -1.0 / slope if slope < 0 else (t[-1] - t[ipk])
        a0 = math.exp(intercept)
    else:
        t1_0 = max(t[-1] - t[ipk], 1.0)
        a0 = float(np.max(tail))
    x0 = np.array([a0, max(t1_0, 1e-6), b0])

    if irf_fwhm is None:

        def residual(x):
            return exponential_model(t, *x) - y

        def jac(x):
            a, t1, _ = x
            e = np.exp(-t / t1)
            return np.column_stack([e, a * e * t / (t1 * t1), np.ones_like(t)])

    else:

        def residual(x):
            return exponential_model(t, *x, irf_fwhm=irf_fwhm) - y

        jac = "2-point"

    params, uncerts, rnorm, ok, _ = _run_lm(
        residual, x0, jac, ("amplitude", "t1", "baseline")
    )
    return FitReport(params, uncerts, rnorm, ok, "exponential")


def fit_lorentzian(x, y) -> FitReport:
    """Fit a Lorentzian peak or dip plus a linear baseline.

    The extremum sign is auto-detected. The report includes the quality
    factor q = |center| / fwhm with its propagated uncertainty.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_not_flat(y, "fit_lorentzian")

    edge = max(len(x) // 10, 2)
    xe = np.concatenate([x[:edge], x[-edge:]])
    ye = np.concatenate([y[:edge], y[-edge:]])
    m0, b0 = np.polyfit(xe, ye, 1)
    resid0 = y - (m0 * x + b0)
    i0 = int(np.argmax(np.abs(resid0)))
    a0 = float(resid0[i0])
    x00 = float(x[i0])
    half = np.abs(resid0) >= abs(a0) / 2.0
    w0 = max(float(x[half].max() - x[half].min()), 2.0 * float(np.diff(x).mean()))
    x0 = np.array([a0, x00, w0, m0, b0])

    def parts(p):
        a, c, w, _, _ = p
        q = w / 2.0
        d = (x - c) ** 2 + q * q
        u = q * q / d
        return a, c, w, q, d, u

    def residual(p):
        a, _, _, q, d, u = parts(p)
        return a * u + p[3] * x + p[4] - y

    def jac(p):
        a, c, _, q, d, u = parts(p)
        du_dc = 2.0 * q * q * (x - c) / (d * d)
        du_dw = q * (x - c) ** 2 / (d * d)
        return np.column_stack([u, a * du_dc, a * du_dw, x, np.ones_like(x)])

    params, uncerts, rnorm, ok, cov = _run_lm(
        residual, x0, jac, ("amplitude", "center", "fwhm", "slope", "offset")
    )
    params["fwhm"] = abs(params["fwhm"])
    c, w = params["center"], params["fwhm"]
    params["q"] = abs(c) / w
    gc, gw = 1.0 / w, -abs(c) / (w * w)
    var_q = (
        gc * gc * cov[1, 1] + gw * gw * cov[2, 2] + 2.0 * gc * gw * cov[1, 2]
    )
    uncerts["q"] = math.sqrt(max(var_q, 0.0))
    return FitReport(params, uncerts, rnorm, ok, "lorentzian")


def fit_sinusoid(angles_deg, energy) -> FitReport:
    """Fit E(phi) = E0 + amplitude cos(2 (phi - phi0)), period 180 degrees.

    Linear in (E0, a, b) with a = amp cos(2 phi0), b = amp sin(2 phi0), so it
    is solved exactly by linear least squares. The report includes
    fss = 2 * amplitude, the full peak-to-peak splitting.
    """
    angles = np.asarray(angles_deg, dtype=float)
    energy = np.asarray(energy, dtype=float)
    _check_not_flat(energy, "fit_sinusoid")
    step = float(np.median(np.diff(np.sort(angles)))) if angles.size > 1 else 0.0
    if np.ptp(angles) + step < 180.0 * (1.0 - 1e-9):
        raise DegenerateDataError(
            "fit_sinusoid: angles must cover a full 180-degree period"
        )
    phi = np.deg2rad(angles)
    design = np.column_stack([np.ones_like(phi), np.cos(2 * phi), np.sin(2 * phi)])
    coef, rss, rank, _ = np.linalg.lstsq(design, energy, rcond=None)
    e0, a, b = coef
    amp = math.hypot(a, b)
    phi0 = math.degrees(0.5 * math.atan2(b, a)) % 180.0
    resid = design @ coef - energy
    dof = max(energy.size - 3, 1)
    scale = float(resid @ resid) / dof
    cov = np.linalg.inv(design.T @ design) * scale
    if amp > 0:
        g = np.array([0.0, a / amp, b / amp])
        var_amp = float(g @ cov @ g)
    else:
        var_amp = float(cov[1, 1] + cov[2, 2])
    params = {
        "offset": float(e0),
        "amplitude": float(amp),
        "phase_deg": float(phi0),
        "fss": float(2.0 * amp),
    }
    uncerts = {
        "offset": math.sqrt(max(cov[0, 0], 0.0)),
        "amplitude": math.sqrt(max(var_amp, 0.0)),
        "phase_deg": 0.0 if amp == 0 else math.degrees(
            0.5 * math.sqrt(max(float(cov[1, 1] + cov[2, 2]), 0.0)) / amp
        ),
        "fss": 2.0 * math.sqrt(max(var_amp, 0.0)),
    }
    return FitReport(
        params, uncerts, float(np.linalg.norm(resid)), rank == 3, "sinusoid"
    )


def _peak_area(hist: CoincidenceHistogram, center: float, window: float):
    """Windowed counts around one peak; edge bins weighted by overlap."""
    w = hist.bin_width
    lo, hi = center - window / 2.0, center + window / 2.0
    starts = hist.bin_centers - w / 2.0
    ends = hist.bin_centers + w / 2.0
    overlap = np.clip(np.minimum(ends, hi) - np.maximum(starts, lo), 0.0, w) / w
    area = float(np.sum(overlap * hist.counts))
    var = float(np.sum(overlap * overlap * hist.counts))
    return area, var


def _peak_positions(hist: CoincidenceHistogram, window: float):
    t_lo = hist.bin_centers[0] - hist.bin_width / 2.0
    t_hi = hist.bin_centers[-1] + hist.bin_width / 2.0
    k_max = int(math.floor((t_hi - window / 2.0) / hist.rep_period))
    k_min = int(math.ceil((t_lo + window / 2.0) / hist.rep_period))
    return [k * hist.rep_period for k in range(k_min, k_max + 1)]


def _center_and_sides(hist: CoincidenceHistogram, window: float):
    positions = _peak_positions(hist, window)
    sides = [p for p in positions if p != 0.0]
    if 0.0 not in positions or len(sides) < 3:
        raise DegenerateDataError(
            "histogram must contain the center peak and >= 3 side peaks"
        )
    a0, v0 = _peak_area(hist, 0.0, window)
    side_areas, side_vars = zip(*(_peak_area(hist, p, window) for p in sides))
    s_total = float(sum(side_areas))
    if s_total <= 0:
        raise DegenerateDataError("side peaks carry no counts")
    return a0, v0, s_total, float(sum(side_vars)), len(sides)


def hbt_g2(hist: CoincidenceHistogram, window: float | None = None) -> Estimate:
    """g2(0) estimate: center-peak counts over the mean side-peak counts.

    The integration window defaults to half the repetition period, centered
    on each peak; the Poisson error of a zero-count center is taken as one
    count.
    """
    window = hist.rep_period / 2.0 if window is None else window
    a0, v0, s_total, vs_total, k = _center_and_sides(hist, window)
    mean_side = s_total / k
    g2 = a0 / mean_side
    var = max(v0, 1.0) / mean_side**2 + (a0 / mean_side**2) ** 2 * vs_total / k**2
    return Estimate(g2, math.sqrt(var))


def hom_visibility(
    hist_co: CoincidenceHistogram,
    hist_cross: CoincidenceHistogram,
    window: float | None = None,
) -> Estimate:
    """Raw HOM visibility 1 - A_co(0) / A_cross(0).

    Center-peak areas are normalized by each histogram's own mean side-peak
    area, which removes acquisition-time differences between the two
    configurations.
    """
    if abs(hist_co.bin_width - hist_cross.bin_width) > 1e-9 or (
        abs(hist_co.rep_period - hist_cross.rep_period) > 1e-9
    ):
        raise ValueError("co- and cross-polarized histograms must share binning")
    window = hist_co.rep_period / 2.0 if window is None else window
    a_co, v_co, s_co, vs_co, k_co = _center_and_sides(hist_co, window)
    a_cx, v_cx, s_cx, vs_cx, k_cx = _center_and_sides(hist_cross, window)
    if a_cx <= 0:
        raise DegenerateDataError("cross-polarized center peak carries no counts")
    r_co = a_co / (s_co / k_co)
    r_cx = a_cx / (s_cx / k_cx)
    ratio = r_co / r_cx
    rel = (
        max(v_co, 1.0) / a_co**2 if a_co > 0 else max(v_co, 1.0)
    ) + v_cx / a_cx**2 + vs_co / s_co**2 + vs_cx / s_cx**2
    return Estimate(1.0 - ratio, abs(ratio) * math.sqrt(rel))


def correct_visibility(v_raw: float, g2: float, splitting: float = 0.488) -> float:
    """Indistinguishability corrected for multi-photon events and an
    unbalanced interferometer splitting ratio R:T.

    M = (V_raw + g2) / (1 - g2) * (R^2 + T^2) / (2 R T); the identity map at
    g2 = 0 and R = 0.5.
    """
    if not 0.0 <= v_raw <= 1.0:
        raise ValueError("v_raw must lie in [0, 1]")
    if not 0.0 <= g2 < 1.0:
        raise ValueError("g2 must lie in [0, 1)")
    if not 0.0 < splitting < 1.0:
        raise ValueError("splitting fraction must lie in (0, 1)")
    r, t = splitting, 1.0 - splitting
    return (v_raw + g2) / (1.0 - g2) * (r * r + t * t) / (2.0 * r * t)
