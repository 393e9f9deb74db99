"""The penalty-augmented fitting objective.

total = MSE over all retained points (one global n)
      + per CO2 curve:  the limitation-ordering penalty at the point
                        where A_c and A_j are closest, and the
                        TPU-transition penalty at the highest Ci
      + per curve:      two intersection penalties forcing A_c and A_j
                        to cross with a summed margin of at least beta
      + per group:      an optional Vcmax/Jmax correlation penalty
                        (groups of >= 7 curves)
      + per fitted scalar that must stay non-negative: max(0, -k).

The standalone penalty functions below operate on plain numpy series
and define the reference semantics; the batched evaluator `total_loss`
computes the same quantities vectorized across curves, and doubles as
the gradient graph builder when handed autodiff leaves.

A_p handling: where Wp is undefined (C below the (1+3*alpha_g)*Gamma*
pole) the point is treated as non-limiting, i.e. it cannot trigger the
ordering penalty and contributes nothing to the transition penalty.
On light-response curves the A_p series is held non-updating (values
participate in the forward minimum, gradients do not flow), and the two
A_p-based penalties are skipped.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import engine
from .data_io import CurveKind, Dataset
from .engine import Var, detach, gather, maximum, minimum, relu, segment_sum, \
    sigmoid, vsum, where
from .errors import DegenerateSeries, FvcbError, LengthMismatch, NonPositiveC
from .metrics import pearson_r
from .model import arrhenius, electron_transport, limitation_rates, \
    peaked_arrhenius
from .params import FitConfig, ParameterState, fitted_fields

__all__ = [
    "LossBreakdown", "mse", "find_jc_index", "penalty_cjp",
    "penalty_intersections", "penalty_tpu_transition",
    "penalty_vj_correlation", "penalty_nonneg", "total_loss",
]

# Finite stand-in for "not limiting" inside gradient graphs; +inf would
# poison backward passes with inf*0 products.
_BIG = 1e9

MIN_CURVES_FOR_R = 7


@dataclass(frozen=True)
class LossBreakdown:
    mse: float
    p_cjp: float
    p_c_gt_j: float
    p_c_lt_j: float
    p_j_lt_p: float
    p_corr: float
    p_nonneg: float
    total: float


def mse(a_measured, a_predicted) -> float:
    """Mean squared error with n = total point count."""
    a = np.asarray(a_measured, dtype=np.float64)
    ah = np.asarray(a_predicted, dtype=np.float64)
    if a.shape != ah.shape or a.size == 0:
        raise LengthMismatch(f"{a.shape} vs {ah.shape}")
    return float(np.mean((a - ah) ** 2))


def find_jc_index(ac, aj) -> int:
    """Index where |A_j - A_c| is smallest; first index wins ties."""
    ac = np.asarray(ac, dtype=np.float64)
    aj = np.asarray(aj, dtype=np.float64)
    if ac.shape != aj.shape or ac.size == 0:
        raise LengthMismatch(f"{ac.shape} vs {aj.shape}")
    return int(np.argmin(np.abs(aj - ac)))


def penalty_cjp(ac, aj, ap) -> float:
    """Ordering penalty at the A_c/A_j closest point.

    Positive when A_p dips below the higher of A_c and A_j there, which
    would make the TPU branch cut in before the other two cross.
    """
    k = find_jc_index(ac, aj)
    ap = np.asarray(ap, dtype=np.float64)
    gap = max(float(aj[k]), float(ac[k])) - float(ap[k])
    return max(0.0, gap)


def penalty_intersections(ac, aj, beta: float = 8.0):
    """Margin penalties forcing the A_c and A_j series to cross.

    Returns (p_c_gt_j, p_c_lt_j): each is max(0, beta - S) where S sums
    the positive parts of A_c - A_j (respectively A_j - A_c).
    """
    ac = np.asarray(ac, dtype=np.float64)
    aj = np.asarray(aj, dtype=np.float64)
    d = ac - aj
    s_pos = float(np.sum(np.where(d > 0.0, d, 0.0)))
    s_neg = float(np.sum(np.where(d < 0.0, -d, 0.0)))
    return max(0.0, beta - s_pos), max(0.0, beta - s_neg)


def penalty_tpu_transition(aj, ap) -> float:
    """max(0, A_p - A_j) at the last (highest Ci) point of the curve."""
    aj = np.asarray(aj, dtype=np.float64)
    ap = np.asarray(ap, dtype=np.float64)
    if aj.shape != ap.shape or aj.size == 0:
        raise LengthMismatch(f"{aj.shape} vs {ap.shape}")
    return max(0.0, float(ap[-1]) - float(aj[-1]))


def penalty_vj_correlation(vcmax_group, jmax_group) -> float:
    """max(0, 0.7 - r) over a fitting group's per-curve Vcmax25/Jmax25.

    Returns 0 for groups below 7 curves. A zero-variance series makes
    the correlation undefined; the penalty is skipped with a warning.
    """
    x = np.asarray(vcmax_group, dtype=np.float64)
    y = np.asarray(jmax_group, dtype=np.float64)
    if x.size < MIN_CURVES_FOR_R:
        return 0.0
    try:
        r = pearson_r(x, y)
    except Exception:
        warnings.warn(str(DegenerateSeries("zero-variance parameter series; "
                                           "correlation penalty skipped")),
                      stacklevel=2)
        return 0.0
    return max(0.0, 0.7 - r)


def penalty_nonneg(k) -> float:
    """max(0, -k): positive only when the scalar has gone negative."""
    return max(0.0, -float(k))


class Workspace:
    """Flattened, canonically ordered view of a dataset for batch loss.

    Curves are ordered by (fitting group, curve id) and points within a
    curve by ascending Ci, independent of input order, so losses and
    gradients are invariant to permutations of the input.
    """

    __slots__ = ("ci", "a", "qin", "tk", "tfac", "pt_entry", "pt_group",
                 "seg_starts", "seg_lengths", "last_flat", "is_light",
                 "light_pt", "any_light", "light_only", "curve_ids",
                 "curve_entry", "curve_group", "n_points", "n_curves",
                 "co2_curves", "corr_groups", "orig_index")

    def __init__(self, dataset: Dataset, params: ParameterState):
        by_id = {c.curve_id: c for c in dataset.curves}
        if set(by_id) != set(params.curve_ids):
            raise FvcbError("parameter state and dataset disagree on curve ids")
        ci, a, qin, tl, orig = [], [], [], [], []
        starts, lengths, is_light = [], [], []
        pt_entry, pt_group = [], []
        pos = 0
        for i, cid in enumerate(params.curve_ids):
            curve = by_id[cid]
            c_ci = curve.array("ci")
            n = c_ci.shape[0]
            order = np.lexsort((np.arange(n), c_ci))
            ci.append(c_ci[order])
            a.append(curve.array("a")[order])
            qin.append(curve.array("qin")[order])
            tl.append(curve.array("tleaf_c")[order])
            orig.append(order)
            starts.append(pos)
            lengths.append(n)
            is_light.append(curve.kind is CurveKind.LightResponse)
            pt_entry.append(np.full(n, params.entry_of[i], dtype=np.intp))
            pt_group.append(np.full(n, params.group_of[i], dtype=np.intp))
            pos += n
        self.ci = np.concatenate(ci)
        self.a = np.concatenate(a)
        self.qin = np.concatenate(qin)
        self.tk = np.concatenate(tl) + 273.15
        self.tfac = 1.0 / 298.0 - 1.0 / self.tk
        self.pt_entry = np.concatenate(pt_entry)
        self.pt_group = np.concatenate(pt_group)
        self.seg_starts = np.asarray(starts, dtype=np.intp)
        self.seg_lengths = np.asarray(lengths, dtype=np.intp)
        self.last_flat = self.seg_starts + self.seg_lengths - 1
        self.is_light = np.asarray(is_light, dtype=bool)
        self.light_pt = np.repeat(self.is_light, self.seg_lengths)
        self.any_light = bool(self.is_light.any())
        self.light_only = bool(self.is_light.all())
        self.curve_ids = params.curve_ids
        self.curve_entry = params.entry_of
        self.curve_group = params.group_of
        self.n_points = int(self.ci.shape[0])
        self.n_curves = len(params.curve_ids)
        self.co2_curves = np.flatnonzero(~self.is_light)
        self.orig_index = orig
        # groups eligible for the correlation penalty
        self.corr_groups = []
        if not params.onefit:
            for gi in range(params.n_groups):
                entries = params.entry_of[params.group_of == gi]
                if entries.shape[0] >= MIN_CURVES_FOR_R:
                    self.corr_groups.append((gi, entries.copy()))


def _evaluate(ws: Workspace, params: ParameterState, config: FitConfig,
              fitted: tuple = ()):
    """Loss of a workspace; the one evaluator for values and gradients.

    With `fitted` empty every operand is a plain ndarray and the result
    is a pure numpy computation. Each name in `fitted` becomes an
    autodiff leaf instead, and the returned total is a Var.

    Returns (total, LossBreakdown, leaves, aux) where aux carries
    per-curve diagnostics (the A_p - A_j gap at the last point, and its
    validity) computed from forward values.
    """
    cn = params.constants
    r_gas = cn.r_gas
    leaves = {name: Var(getattr(params, name)) for name in fitted}

    def P(name):
        return leaves[name] if name in leaves else getattr(params, name)

    ve = gather(P("vcmax25"), ws.pt_entry)
    je = gather(P("jmax25"), ws.pt_entry)
    te = gather(P("tpu25"), ws.pt_entry)
    rd = gather(P("rd25"), ws.pt_entry)
    kc = gather(P("kc25"), ws.pt_group)
    ko = gather(P("ko25"), ws.pt_group)
    gamma = gather(P("gamma25"), ws.pt_group)
    ag = sigmoid(gather(P("alpha_g_raw"), ws.pt_group))

    c = ws.ci
    if config.fit_gm:
        c = c - ws.a / gather(P("gm"), ws.pt_group)
        if np.any(engine.value(c) <= 0.0):
            raise NonPositiveC("C_i - A/g_m went non-positive")

    if config.temp_type >= 1:
        # fixed activation energies give constant scale factors
        rd = rd * np.exp((cn.dha_rd / r_gas) * ws.tfac)
        kc = kc * np.exp((cn.dha_kc / r_gas) * ws.tfac)
        ko = ko * np.exp((cn.dha_ko / r_gas) * ws.tfac)
        gamma = gamma * np.exp((cn.dha_gamma / r_gas) * ws.tfac)
    if config.temp_type == 1:
        ve = arrhenius(ve, gather(P("dha_vcmax"), ws.pt_group), ws.tk, r_gas)
        je = arrhenius(je, gather(P("dha_jmax"), ws.pt_group), ws.tk, r_gas)
        te = arrhenius(te, gather(P("dha_tpu"), ws.pt_group), ws.tk, r_gas)
    elif config.temp_type == 2:
        ve = peaked_arrhenius(ve, gather(P("dha_vcmax"), ws.pt_group),
                              cn.dhd_vcmax, gather(P("topt_vcmax"), ws.pt_group),
                              ws.tk, r_gas)
        je = peaked_arrhenius(je, gather(P("dha_jmax"), ws.pt_group),
                              cn.dhd_jmax, gather(P("topt_jmax"), ws.pt_group),
                              ws.tk, r_gas)
        te = peaked_arrhenius(te, gather(P("dha_tpu"), ws.pt_group),
                              cn.dhd_tpu, gather(P("topt_tpu"), ws.pt_group),
                              ws.tk, r_gas)

    if config.light_type == 0:
        j = je
    else:
        j = electron_transport(ws.qin, je, gather(P("alpha"), ws.pt_group),
                               gather(P("theta"), ws.pt_group),
                               config.light_type)

    wc, wj, wp, valid = limitation_rates(c, ve, j, te, gamma, kc, ko,
                                         cn.o2, ag, big=_BIG)
    # light-response curves: Wp participates in the forward minimum but
    # its gradient is frozen
    wp_eff = wp
    if ws.any_light and isinstance(wp, Var):
        wp_eff = where(ws.light_pt, detach(wp), wp)

    w = minimum(minimum(wc, wj), wp_eff)
    fac = 1.0 - gamma / c
    pred = w * fac - rd
    resid = pred - ws.a
    mse_term = vsum(resid * resid) / float(ws.n_points)

    aj = wj * fac - rd
    ac = wc * fac - rd
    ap = wp * fac - rd

    aj_v = engine.value(aj)
    ac_v = engine.value(ac)
    ap_v = engine.value(ap)
    gap_last = np.where(valid[ws.last_flat],
                        ap_v[ws.last_flat] - aj_v[ws.last_flat], np.nan)
    aux = {
        "tpu_gap": gap_last,
        "tpu_valid": valid[ws.last_flat] & ~ws.is_light,
        "pred": engine.value(pred),
    }

    zero = 0.0
    p_cjp = p_cgj = p_clj = p_tpu = p_corr = p_nn = zero

    if config.penalties:
        co2 = ws.co2_curves
        if co2.shape[0]:
            # ordering penalty at the closest A_c/A_j point of each curve
            gapcj = np.abs(aj_v - ac_v)
            jc = np.empty(co2.shape[0], dtype=np.intp)
            for k, ic in enumerate(co2):
                s = ws.seg_starts[ic]
                jc[k] = s + int(np.argmin(gapcj[s:s + ws.seg_lengths[ic]]))
            ap_pen = where(valid, ap, _BIG) if isinstance(ap, Var) \
                else np.where(valid, ap_v, _BIG)
            hi = maximum(gather(aj, jc), gather(ac, jc))
            p_cjp = vsum(relu(hi - gather(ap_pen, jc)))

        d = ac - aj
        s_pos = segment_sum(relu(d), ws.seg_starts, ws.seg_lengths)
        s_neg = segment_sum(relu(0.0 - d), ws.seg_starts, ws.seg_lengths)
        p_cgj = vsum(relu(config.beta - s_pos))
        p_clj = vsum(relu(config.beta - s_neg))

        if config.tpu_penalty and co2.shape[0]:
            last = ws.last_flat[co2]
            ok = (valid[last]).astype(np.float64)
            p_tpu = vsum(relu(gather(ap, last) - gather(aj, last)) * ok)

        if config.r_penalty and ws.corr_groups:
            for _, entries in ws.corr_groups:
                x = gather(P("vcmax25"), entries)
                y = gather(P("jmax25"), entries)
                xv, yv = engine.value(x), engine.value(y)
                if np.ptp(xv) == 0.0 or np.ptp(yv) == 0.0:
                    continue  # undefined correlation; penalty skipped
                m = float(entries.shape[0])
                xc = x - vsum(x) / m
                yc = y - vsum(y) / m
                r = vsum(xc * yc) / engine.sqrt(vsum(xc * xc) * vsum(yc * yc))
                p_corr = p_corr + relu(0.7 - r)

        # only parameters the configuration actually fits are penalized
        eligible = set(fitted) if fitted \
            else set(fitted_fields(config, ws.light_only))
        nn_terms = []
        if config.positive_rd and "rd25" in eligible:
            nn_terms.append(P("rd25"))
        for name in ("dha_vcmax", "dha_jmax", "dha_tpu", "alpha", "theta"):
            if name in eligible:
                nn_terms.append(P(name))
        for term in nn_terms:
            p_nn = p_nn + vsum(relu(0.0 - term))

    total = mse_term + p_cjp + p_cgj + p_clj + p_tpu + p_corr + p_nn
    breakdown = LossBreakdown(
        mse=float(engine.value(mse_term)),
        p_cjp=float(engine.value(p_cjp)),
        p_c_gt_j=float(engine.value(p_cgj)),
        p_c_lt_j=float(engine.value(p_clj)),
        p_j_lt_p=float(engine.value(p_tpu)),
        p_corr=float(engine.value(p_corr)),
        p_nonneg=float(engine.value(p_nn)),
        total=float(engine.value(total)),
    )
    return total, breakdown, leaves, aux


def total_loss(dataset: Dataset, params: ParameterState,
               config: FitConfig | None = None) -> LossBreakdown:
    """Evaluate the full objective over a dataset."""
    config = config or FitConfig()
    ws = Workspace(dataset, params)
    _, breakdown, _, _ = _evaluate(ws, params, config)
    return breakdown
