"""Farquhar-von Caemmerer-Berry (FvCB) model of C3 photosynthesis.

Net assimilation is the minimum of three limitation rates, scaled by
photorespiratory loss and offset by day respiration:

    A = min(Wc, Wj, Wp) * (1 - Gamma*/C) - Rd

with Wc the Rubisco-limited rate, Wj the RuBP-regeneration-limited rate
driven by electron transport J, and Wp the triose-phosphate-utilization
(TPU) limited rate. See Farquhar et al. (1980), von Caemmerer (2000)
and Sharkey et al. (2007) for the biochemistry; Medlyn et al. (2002)
for the temperature response forms; Busch et al. (2018) for the
glycolate-export term alpha_g in Wp.

Every function here is pure and accepts either plain numpy arrays or
autodiff Vars for the parameter arguments, so the same code serves
forward prediction and gradient evaluation.

References
----------
Farquhar GD, von Caemmerer S, Berry JA (1980) A biochemical model of
photosynthetic CO2 assimilation in leaves of C3 species. Planta 149:78-90.
Medlyn BE et al. (2002) Temperature response of parameters of a
biochemically based model of photosynthesis. PCE 25:1167-1179.
Sharkey TD, Bernacchi CJ, Farquhar GD, Singsaas EL (2007) Fitting
photosynthetic carbon dioxide response curves for C3 leaves. PCE 30:1035-1040.
Busch FA, Sage RF, Farquhar GD (2018) Plants increase CO2 uptake by
assimilating nitrogen via the photorespiratory pathway. Nat Plants 4:46-54.
"""

from __future__ import annotations

import numpy as np

from . import engine
from .constants import R_GAS, T_REF
from .engine import exp, log, sqrt, relu, sigmoid, where
from .errors import DomainError, NonPositiveC

__all__ = [
    "arrhenius", "peaked_arrhenius", "topt_from_entropy",
    "electron_transport", "limitation_rates", "net_assimilation",
    "predict_curve",
]


def arrhenius(k25, dha, tleaf, r_gas: float = R_GAS):
    """Arrhenius temperature scaling from the 25 C reference.

    Parameters
    ----------
    k25 : value of the parameter at the reference temperature.
    dha : activation energy (kJ mol-1).
    tleaf : leaf temperature (K).

    Returns k25 * exp[(dha/R) * (1/298 - 1/tleaf)]; monotone increasing
    in tleaf for positive dha.
    """
    return k25 * exp((dha / r_gas) * (1.0 / T_REF - 1.0 / tleaf))


def _peak_factor(dha, dhd, topt, t, r_gas):
    # f(T) = 1 + exp[(dhd/R)(1/Topt - 1/T) - ln(dhd/dha - 1)]
    return 1.0 + exp((dhd / r_gas) * (1.0 / topt - 1.0 / t) - log(dhd / dha - 1.0))


def peaked_arrhenius(k25, dha, dhd, topt, tleaf, r_gas: float = R_GAS):
    """Peaked Arrhenius response with deactivation above an optimum.

    The plain Arrhenius rise is damped by f(298)/f(tleaf) so the
    response attains its maximum exactly at tleaf = topt and returns
    k25 at the 25 C reference.

    Raises DomainError unless dhd > dha > 0 (the log argument must be
    positive).
    """
    dha_v = engine.value(dha)
    dhd_v = engine.value(dhd)
    if np.any(dha_v <= 0.0) or np.any(dhd_v <= dha_v):
        raise DomainError("peaked response requires dhd > dha > 0")
    ref = _peak_factor(dha, dhd, topt, T_REF, r_gas)
    at_t = _peak_factor(dha, dhd, topt, tleaf, r_gas)
    return arrhenius(k25, dha, tleaf, r_gas) * ref / at_t


def topt_from_entropy(ds, dha, dhd, r_gas: float = R_GAS):
    """Optimum temperature implied by an entropy term.

    Inverts dS = dhd/Topt + R*ln(dha/(dhd - dha)) to
    Topt = dhd / (ds - R*ln(dha/(dhd - dha))).
    """
    ds = np.asarray(ds, dtype=np.float64)
    dha = np.asarray(dha, dtype=np.float64)
    dhd = np.asarray(dhd, dtype=np.float64)
    if np.any(dha <= 0.0) or np.any(dhd <= dha):
        raise DomainError("requires dhd > dha > 0")
    denom = ds - r_gas * np.log(dha / (dhd - dha))
    if np.any(denom <= 0.0):
        raise DomainError("entropy too small: non-positive denominator")
    return dhd / denom


def electron_transport(qin, jmax, alpha=None, theta=None, light_type: int = 0):
    """Electron transport rate J for the chosen light-response form.

    light_type 0: J = jmax regardless of qin (saturating light assumed).
    light_type 1: rectangular hyperbola, J = aQ*jmax/(aQ + jmax).
    light_type 2: smaller root of theta*J^2 - (aQ + jmax)*J + aQ*jmax = 0,
                  which tends to type 1 as theta -> 0 and to
                  min(aQ, jmax) as theta -> 1.
    where aQ = alpha * qin.
    """
    if light_type == 0:
        return jmax
    aq = alpha * qin
    if light_type == 1:
        return aq * jmax / (aq + jmax)
    if light_type == 2:
        s = aq + jmax
        disc = s * s - (4.0 * theta) * (aq * jmax)
        # roundoff can push the discriminant a hair negative at theta=1
        return (s - sqrt(relu(disc))) / (2.0 * theta)
    raise ValueError(f"unknown light_type {light_type!r}")


def limitation_rates(c, vcmax, j, tpu, gamma_star, kc, ko, o2,
                     alpha_g=0.0, big: float = np.inf):
    """The three carboxylation-limitation rates at one temperature.

    Parameters are the temperature-scaled values at the evaluation
    point; c is the CO2 mole fraction at the carboxylation site.

    Wp has a pole at C = (1 + 3*alpha_g) * Gamma*; below it TPU cannot
    be limiting and Wp is reported as `big` (default +inf) so it never
    wins the minimum. Callers embedding this in a gradient graph pass a
    large finite sentinel instead to keep backward passes NaN-free.

    Returns (wc, wj, wp, wp_valid) with wp_valid the boolean mask of
    points where Wp is physically defined.
    """
    wc = vcmax * c / (c + kc * (1.0 + o2 / ko))
    wj = j * c / (4.0 * (c + 2.0 * gamma_star))
    thresh = (1.0 + 3.0 * alpha_g) * gamma_star
    valid = engine.value(c) > engine.value(thresh)
    denom = where(valid, c - thresh, 1.0)
    wp = where(valid, (3.0 * tpu) * c / denom, big)
    return wc, wj, wp, valid


def _scaled_main(k25, dha, dhd, topt, tleaf_k, temp_type, r_gas):
    # temperature response of a fitted main parameter
    if temp_type == 0:
        return k25
    if temp_type == 1:
        return arrhenius(k25, dha, tleaf_k, r_gas)
    if temp_type == 2:
        return peaked_arrhenius(k25, dha, dhd, topt, tleaf_k, r_gas)
    raise ValueError(f"unknown temp_type {temp_type!r}")


def net_assimilation(point, params, config, entry: int = 0, group: int = 0):
    """Net assimilation and limiting state at a single measurement point.

    Parameters
    ----------
    point : (ci, qin, tleaf_c) triple, a GasExchangeRecord, or any object
        with .ci/.qin/.tleaf_c attributes.
    params : ParameterState; `entry` picks the main-four column and
        `group` the shared block.
    config : FitConfig selecting light and temperature sub-models.

    Returns
    -------
    (a_hat, state) : predicted A (umol m-2 s-1) and the limiting branch
        label, one of "c", "j", "p". Ties go to "c", then "j".
    """
    if hasattr(point, "ci"):
        ci, qin, tleaf_c = point.ci, point.qin, point.tleaf_c
    else:
        ci, qin, tleaf_c = point
    a_hat, states = _predict_points(
        np.asarray([ci], dtype=np.float64),
        np.asarray([qin], dtype=np.float64),
        np.asarray([tleaf_c], dtype=np.float64),
        None, params, config, entry, group)
    return float(a_hat[0]), states[0]


def predict_curve(curve, params, config, entry: int = 0, group: int = 0):
    """Vectorized forward prediction for one response curve.

    Uses measured A for the g_m substitution when config.fit_gm is on.
    Returns (a_hat, states) aligned with curve.records.
    """
    ci = np.array([r.ci for r in curve.records], dtype=np.float64)
    qin = np.array([r.qin for r in curve.records], dtype=np.float64)
    tl = np.array([r.tleaf_c for r in curve.records], dtype=np.float64)
    a_meas = np.array([r.a for r in curve.records], dtype=np.float64)
    return _predict_points(ci, qin, tl, a_meas, params, config, entry, group)


def _predict_points(ci, qin, tleaf_c, a_meas, params, config, entry, group):
    cn = params.constants
    r_gas = cn.r_gas
    tk = tleaf_c + 273.15

    c = ci
    if config.fit_gm:
        if a_meas is None:
            raise ValueError("g_m substitution needs measured A")
        c = ci - a_meas / params.gm[group]
        if np.any(c <= 0.0):
            raise NonPositiveC("C_i - A/g_m must stay positive")

    vcmax = _scaled_main(params.vcmax25[entry], params.dha_vcmax[group],
                         cn.dhd_vcmax, params.topt_vcmax[group],
                         tk, config.temp_type, r_gas)
    jmax = _scaled_main(params.jmax25[entry], params.dha_jmax[group],
                        cn.dhd_jmax, params.topt_jmax[group],
                        tk, config.temp_type, r_gas)
    tpu = _scaled_main(params.tpu25[entry], params.dha_tpu[group],
                       cn.dhd_tpu, params.topt_tpu[group],
                       tk, config.temp_type, r_gas)
    rd = params.rd25[entry]
    kc = params.kc25[group]
    ko = params.ko25[group]
    gamma = params.gamma25[group]
    if config.temp_type >= 1:
        # Rd and the kinetic constants always follow plain Arrhenius
        # with fixed activation energies; only the main three get the
        # peaked form. temp_type 0 disables every response.
        rd = arrhenius(rd, cn.dha_rd, tk, r_gas)
        kc = arrhenius(kc, cn.dha_kc, tk, r_gas)
        ko = arrhenius(ko, cn.dha_ko, tk, r_gas)
        gamma = arrhenius(gamma, cn.dha_gamma, tk, r_gas)

    j = electron_transport(qin, jmax, params.alpha[group],
                           params.theta[group], config.light_type)
    ag = sigmoid(params.alpha_g_raw[group])
    wc, wj, wp, _ = limitation_rates(c, vcmax, j, tpu, gamma, kc, ko,
                                     cn.o2, ag)
    wc = np.broadcast_to(np.asarray(wc, dtype=np.float64), c.shape)
    wj = np.broadcast_to(np.asarray(wj, dtype=np.float64), c.shape)
    wp = np.broadcast_to(np.asarray(wp, dtype=np.float64), c.shape)

    w = np.minimum(np.minimum(wc, wj), wp)
    a_hat = w * (1.0 - gamma / c) - rd
    states = np.where(wc <= np.minimum(wj, wp), "c",
                      np.where(wj <= wp, "j", "p"))
    return a_hat, states
