use serde::{Deserialize, Serialize};

use super::{dense_points, AnalysisError, MonitorReport};
use crate::energy::{Delta1Source, EnergyBudget};
use crate::integrator::{Crossing, EventKind, EventSpec, Trajectory};
use crate::model::{ov_value, ModelError, ModelParams, OvflField, VectorField};

/// Slack on `psi >= R` and on the gap floor.
pub const BARRIER_TOL: f64 = 1e-6;
/// Relative tolerance of the finite-difference `psi'` against `g`.
pub const PSI_SLOPE_REL_TOL: f64 = 1e-3;

const SEGMENT_SAMPLES: usize = 2000;
const MONOTONE_TOL: f64 = 1e-9;
const LEMMA6_TOL: f64 = 1e-8;
const LEMMA7_TOL: f64 = 1e-9;

/// Lower bound on the leader's gap used to size `delta_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderFloor {
    pub value: f64,
    pub source: Delta1Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSample {
    pub t: f64,
    pub zeta: f64,
    pub psi: f64,
    pub leader_zeta: f64,
    pub leader_xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentExit {
    /// The closing rate reached zero: the gap attained its minimum.
    GapRateZero,
    /// The gap climbed back above the threshold.
    GapRecovered,
    /// The trajectory ended first.
    Horizon,
}

/// The stretch after the gap first falls to `delta_2 / 2`, on which the
/// closing rate increases monotonically and the gap can be read as a
/// function `psi(zeta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierSegment {
    pub pair: usize,
    pub t_check: f64,
    pub t_exit: f64,
    pub exit: SegmentExit,
    pub zeta_check: f64,
    pub delta_1: f64,
    pub delta_1_source: Delta1Source,
    pub delta_2: f64,
    pub beta: f64,
    /// Largest sampled `zeta`, the right end of the reconstructed interval.
    pub mu_plus: f64,
    /// Closing rate at `t_exit`.
    pub zeta_exit: f64,
    /// `1 / (2 / delta_2 + |zeta_check| / beta)`.
    pub barrier_bound: f64,
    /// The same expression with the signed `zeta_check`; absent when its
    /// denominator is not positive.
    pub barrier_bound_signed: Option<f64>,
    pub samples: Vec<BarrierSample>,
}

impl BarrierSegment {
    pub fn threshold(&self) -> f64 {
        0.5 * self.delta_2
    }

    pub fn psi(&self) -> Result<MonotoneCubic, AnalysisError> {
        let xs = self.samples.iter().map(|s| s.zeta).collect();
        let ys = self.samples.iter().map(|s| s.psi).collect();
        MonotoneCubic::new(xs, ys)
    }

    pub fn min_psi(&self) -> f64 {
        self.samples.iter().map(|s| s.psi).fold(f64::INFINITY, f64::min)
    }
}

/// Comparison curve `R(u) = 1 / (2 / delta_2 + (u - zeta_check) / beta)` on `[zeta_check, 0)`.
pub fn barrier_r(u: f64, delta_2: f64, beta: f64, zeta_check: f64) -> Result<f64, AnalysisError> {
    if !(u >= zeta_check && u < 0.0) {
        return Err(ModelError::Domain {
            what: "barrier argument",
            value: u,
            lo: zeta_check,
            hi: 0.0,
        }
        .into());
    }
    Ok(1.0 / (2.0 / delta_2 + (u - zeta_check) / beta))
}

/// `inf R` over `[zeta_check, 0)`: a strictly positive floor on the gap.
pub fn barrier_lower_bound(delta_2: f64, beta: f64, zeta_check: f64) -> f64 {
    1.0 / (2.0 / delta_2 + zeta_check.abs() / beta)
}

/// Slope field `psi'(zeta) = g(zeta, psi)` of the gap as a function of its
/// closing rate, with the leader frozen at `(leader_zeta, leader_xi)`.
pub fn g_field(zeta: f64, psi: f64, leader_zeta: f64, leader_xi: f64, p: &ModelParams) -> Result<f64, AnalysisError> {
    if !(psi > 0.0) || !(zeta < 0.0) || !(leader_xi > 0.0) {
        return Err(AnalysisError::Validation(format!(
            "g needs psi > 0, zeta < 0 and a positive leader gap; got psi = {psi}, zeta = {zeta}, leader gap = {leader_xi}"
        )));
    }
    let terms = [
        p.alpha * ov_value(psi),
        -p.alpha * ov_value(leader_xi),
        p.alpha * zeta,
        p.beta * zeta / (psi * psi),
        -p.beta * leader_zeta / (leader_xi * leader_xi),
    ];
    let denom: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|v| v.abs()).sum();
    // zero up to cancellation error
    if !(denom.abs() > 8.0 * f64::EPSILON * scale) || !denom.is_finite() {
        return Err(AnalysisError::SingularQuotient { zeta, psi });
    }
    Ok(-zeta / denom)
}

fn gap_accel(field: &OvflField, t: f64, state: &[f64], pair: usize) -> Result<f64, AnalysisError> {
    let mut d = vec![0.0; state.len()];
    field.eval(t, state, &mut d)?;
    // the closing rate is linear in the velocity block
    Ok(field.gap_rate(&d, pair))
}

/// Energy-based floor when available, else the smallest leader gap seen.
pub fn leader_floor(traj: &Trajectory, field: &OvflField, pair: usize, budget: Option<&EnergyBudget>) -> LeaderFloor {
    if let Some(b) = budget.filter(|b| pair == 2 && b.delta_1_source == Delta1Source::Energy) {
        if let Some(v) = b.delta_1 {
            return LeaderFloor { value: v, source: Delta1Source::Energy };
        }
    }
    let value = traj
        .states()
        .iter()
        .map(|s| field.gap(s, pair - 1))
        .fold(f64::INFINITY, f64::min);
    LeaderFloor { value, source: Delta1Source::Empirical }
}

/// [`extract_barrier_segment`] for pair 2 with `delta_1` taken from the
/// leading pair's energy budget (or observed, when the budget has none).
pub fn extract_barrier_segment_with_budget(
    traj: &Trajectory,
    field: &OvflField,
    budget: &EnergyBudget,
) -> Result<Option<BarrierSegment>, AnalysisError> {
    let floor = leader_floor(traj, field, 2, Some(budget));
    extract_barrier_segment(traj, field, 2, floor)
}

/// Near-collision segment of `pair` (>= 2). Returns `None` when the gap
/// never falls to `delta_2 / 2`.
pub fn extract_barrier_segment(
    traj: &Trajectory,
    field: &OvflField,
    pair: usize,
    floor: LeaderFloor,
) -> Result<Option<BarrierSegment>, AnalysisError> {
    if pair < 2 || pair > field.params.followers() {
        return Err(AnalysisError::Validation(format!(
            "pair {pair} has no follower ahead of it in a platoon of {} followers",
            field.params.followers()
        )));
    }
    if !(floor.value > 0.0) {
        return Err(AnalysisError::Validation(format!("leader gap floor must be positive, got {}", floor.value)));
    }
    let f = *field;
    let xi0 = f.gap(&traj.states()[0], pair);
    let delta_2 = xi0.min(floor.value);
    let thr = 0.5 * delta_2;

    let down = EventSpec::root(EventKind::TCheck, pair, Crossing::Falling, move |_, s| f.gap(s, pair) - thr);
    let Some(check) = traj.detect_event(&down) else {
        return Ok(None);
    };
    let t_check = check.time;
    let zeta_check = f.gap_rate(&check.state, pair);
    if !(zeta_check < 0.0) {
        return Ok(None);
    }

    let after = |spec: EventSpec| traj.detect_events(&spec).into_iter().find(|e| e.time > t_check).map(|e| e.time);
    let rate_zero = after(EventSpec::root(EventKind::YSignChange, pair, Crossing::Rising, move |_, s| f.gap_rate(s, pair)));
    let recovered = after(EventSpec::root(EventKind::TCheck, pair, Crossing::Rising, move |_, s| f.gap(s, pair) - thr));
    let (t_exit, exit) = match (rate_zero, recovered) {
        (Some(a), Some(b)) if b < a => (b, SegmentExit::GapRecovered),
        (Some(a), _) => (a, SegmentExit::GapRateZero),
        (None, Some(b)) => (b, SegmentExit::GapRecovered),
        (None, None) => (traj.t_final(), SegmentExit::Horizon),
    };

    let mut samples: Vec<BarrierSample> = Vec::with_capacity(SEGMENT_SAMPLES);
    let dt = (t_exit - t_check) / SEGMENT_SAMPLES as f64;
    for i in 0..SEGMENT_SAMPLES {
        let t = t_check + dt * i as f64;
        let s = if i == 0 { check.state.clone() } else { traj.state_at(t)? };
        let zeta = f.gap_rate(&s, pair);
        // psi(zeta_check) = delta_2 / 2 by construction of t_check
        let psi = if i == 0 { thr } else { f.gap(&s, pair) };
        if zeta >= 0.0 || psi > thr {
            break;
        }
        if let Some(prev) = samples.last() {
            let step = zeta - prev.zeta;
            if step < -MONOTONE_TOL {
                return Err(AnalysisError::MonotonicityViolation { t, drop: -step });
            }
            if step <= 0.0 {
                continue;
            }
        }
        samples.push(BarrierSample {
            t,
            zeta,
            psi,
            leader_zeta: f.gap_rate(&s, pair - 1),
            leader_xi: f.gap(&s, pair - 1),
        });
    }

    let beta = f.params.beta;
    let signed = 2.0 / delta_2 + zeta_check / beta;
    Ok(Some(BarrierSegment {
        pair,
        t_check,
        t_exit,
        exit,
        zeta_check,
        delta_1: floor.value,
        delta_1_source: floor.source,
        delta_2,
        beta,
        mu_plus: samples.last().map_or(zeta_check, |s| s.zeta),
        zeta_exit: f.gap_rate(&traj.state_at(t_exit)?, pair),
        barrier_bound: barrier_lower_bound(delta_2, beta, zeta_check),
        barrier_bound_signed: (signed > 0.0).then(|| 1.0 / signed),
        samples,
    }))
}

/// `psi >= R` at every sample and `min psi >= barrier_bound`.
pub fn verify_barrier(seg: &BarrierSegment, beta: f64) -> Result<MonitorReport, AnalysisError> {
    let mut worst_margin = f64::INFINITY;
    let mut at = seg.samples.first().map_or((seg.t_check, seg.zeta_check), |s| (s.t, s.zeta));
    for s in &seg.samples {
        let margin = s.psi - barrier_r(s.zeta, seg.delta_2, beta, seg.zeta_check)?;
        if margin < worst_margin {
            worst_margin = margin;
            at = (s.t, s.zeta);
        }
    }
    if seg.samples.is_empty() {
        worst_margin = 0.0;
    }
    let floor = barrier_lower_bound(seg.delta_2, beta, seg.zeta_check);
    let min_psi = if seg.samples.is_empty() { seg.threshold() } else { seg.min_psi() };
    let worst = (-worst_margin).max(floor - min_psi).max(0.0);
    let mut r = MonitorReport::new(&format!("barrier_pair{}", seg.pair), worst, BARRIER_TOL)
        .observed(worst_margin)
        .detail(format!(
            "min (psi - R) = {worst_margin:e} at zeta = {}; min psi = {min_psi} against floor {floor}",
            at.1
        ));
    r.time = Some(at.0);
    Ok(r)
}

/// Centered finite differences of the interpolated `psi` against `g` at
/// interior samples.
pub fn psi_slope_check(seg: &BarrierSegment, p: &ModelParams) -> Result<MonitorReport, AnalysisError> {
    let name = format!("psi_slope_pair{}", seg.pair);
    if seg.samples.len() < 3 {
        return Ok(MonitorReport::vacuous(&name, "fewer than three samples"));
    }
    let psi = seg.psi()?;
    let mut worst = 0.0;
    let mut at = seg.samples[1];
    let mut positive_g = 0usize;
    for w in seg.samples.windows(3) {
        let s = w[1];
        let h = 1e-3 * (s.zeta - w[0].zeta).min(w[2].zeta - s.zeta);
        let fd = (psi.eval(s.zeta + h) - psi.eval(s.zeta - h)) / (2.0 * h);
        let g = g_field(s.zeta, s.psi, s.leader_zeta, s.leader_xi, p)?;
        if g >= 0.0 {
            positive_g += 1;
        }
        let rel = (fd - g).abs() / g.abs();
        if rel > worst {
            worst = rel;
            at = s;
        }
    }
    let mut r = MonitorReport::new(&name, worst, PSI_SLOPE_REL_TOL).detail(format!(
        "max relative error {worst:e} at zeta = {}; {positive_g} interior samples with g >= 0",
        at.zeta
    ));
    r.time = Some(at.t);
    if positive_g > 0 {
        r.passed = false;
    }
    Ok(r)
}

/// Sign statements about the closing rate on and after the segment:
/// it keeps increasing along the segment, and once positive below the
/// threshold it stays non-negative until the gap recovers.
pub fn verify_segment_lemmas(
    traj: &Trajectory,
    field: &OvflField,
    seg: &BarrierSegment,
) -> Result<Vec<MonitorReport>, AnalysisError> {
    let pair = seg.pair;
    let mut worst7 = 0.0;
    let mut at7 = None;
    for s in &seg.samples {
        let state = traj.state_at(s.t)?;
        let acc = gap_accel(field, s.t, &state, pair)?;
        if -acc > worst7 {
            worst7 = -acc;
            at7 = Some((s.t, state));
        }
    }
    let mut lemma7 = MonitorReport::new(&format!("closing_rate_increasing_pair{pair}"), worst7, LEMMA7_TOL)
        .detail(format!("d(zeta)/dt checked at {} segment samples", seg.samples.len()));
    if let Some((t, s)) = at7 {
        lemma7 = lemma7.at(t, &s);
    }

    let thr = seg.threshold();
    let mut armed = false;
    let mut worst6 = 0.0;
    let mut at6 = None;
    for (t, s) in dense_points(traj, f64::INFINITY, 3).into_iter().filter(|p| p.0 >= seg.t_check) {
        let (xi, zeta) = (field.gap(&s, pair), field.gap_rate(&s, pair));
        if xi >= thr {
            armed = false;
            continue;
        }
        if armed && -zeta > worst6 {
            worst6 = -zeta;
            at6 = Some((t, s.clone()));
        }
        if zeta > 0.0 {
            armed = true;
        }
    }
    let mut lemma6 = MonitorReport::new(&format!("closing_rate_stays_positive_pair{pair}"), worst6, LEMMA6_TOL)
        .detail("zeta >= 0 after turning positive while the gap is below the threshold");
    if let Some((t, s)) = at6 {
        lemma6 = lemma6.at(t, &s);
    }
    Ok(vec![lemma6, lemma7])
}

/// Piecewise cubic Hermite interpolant with second-order node slopes
/// limited to preserve monotonicity of the data.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, AnalysisError> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(AnalysisError::Validation("interpolation needs at least two matching nodes".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(AnalysisError::Validation("interpolation nodes must be strictly increasing".into()));
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m = vec![d[0], d[0]];
        } else {
            for i in 1..n - 1 {
                m[i] = (h[i] * d[i - 1] + h[i - 1] * d[i]) / (h[i - 1] + h[i]);
            }
            m[0] = ((2.0 * h[0] + h[1]) * d[0] - h[0] * d[1]) / (h[0] + h[1]);
            let k = n - 2;
            m[n - 1] = ((2.0 * h[k] + h[k - 1]) * d[k] - h[k] * d[k - 1]) / (h[k] + h[k - 1]);
            for i in 0..n {
                let left = if i > 0 { d[i - 1] } else { d[0] };
                let right = if i < n - 1 { d[i] } else { d[n - 2] };
                if left * right <= 0.0 || m[i] * right <= 0.0 {
                    m[i] = 0.0;
                } else {
                    let cap = 3.0 * left.abs().min(right.abs());
                    m[i] = m[i].signum() * m[i].abs().min(cap);
                }
            }
        }
        Ok(Self { xs, ys, slopes: m })
    }

    fn locate(&self, x: f64) -> usize {
        self.xs.partition_point(|&v| v <= x).clamp(1, self.xs.len() - 1) - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s).powi(2),
            s * (1.0 - s).powi(2),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (d00, d10, d01, d11) = (
            6.0 * s * (s - 1.0) / h,
            (1.0 - s) * (1.0 - 3.0 * s),
            -6.0 * s * (s - 1.0) / h,
            s * (3.0 * s - 2.0),
        );
        d00 * self.ys[i] + d10 * self.slopes[i] + d01 * self.ys[i + 1] + d11 * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_budget;
    use crate::integrator::{integrate, IntegratorConfig};
    use crate::model::CoordinateSystem;
    use approx::assert_abs_diff_eq;

    #[test]
    fn comparison_curve() {
        assert_eq!(barrier_r(-0.5, 0.3, 1.0, -0.5).unwrap(), 0.15);
        assert_abs_diff_eq!(barrier_r(-1e-15, 0.3, 1.0, -0.5).unwrap(), 0.139_534_883_720_930_23, epsilon = 1e-12);
        assert!(barrier_r(0.0, 0.3, 1.0, -0.5).is_err());
        assert!(barrier_r(-0.6, 0.3, 1.0, -0.5).is_err());
        // dR / R^2 = -du / beta
        let (beta, zc) = (1.7, -0.8);
        for i in 0..100 {
            let u = zc + 0.79 * i as f64 / 100.0;
            let h = 1e-6;
            let r = barrier_r(u, 0.3, beta, zc).unwrap();
            let d = (barrier_r(u + h, 0.3, beta, zc).unwrap() - barrier_r((u - h).max(zc), 0.3, beta, zc).unwrap())
                / (u + h - (u - h).max(zc));
            assert!((d / (r * r) + 1.0 / beta).abs() < 1e-6);
        }
    }

    #[test]
    fn floor_formula() {
        assert_abs_diff_eq!(barrier_lower_bound(0.3, 1.0, -0.5), 0.139_534_883_720_930_23, epsilon = 1e-15);
        assert_abs_diff_eq!(barrier_lower_bound(0.3, 1.0, -1e-14), 0.15, epsilon = 1e-14);
        assert!(barrier_lower_bound(0.3, 10.0, -0.5) > barrier_lower_bound(0.3, 1.0, -0.5));
    }

    #[test]
    fn g_matches_closing_acceleration() {
        let p = ModelParams::new(2.0, 2.0, 0.8, 3).unwrap();
        let f = OvflField::new(p, CoordinateSystem::Difference).unwrap();
        let s = [1.5, 0.1, 0.3, -0.4];
        let acc = gap_accel(&f, 0.0, &s, 2).unwrap();
        let g = g_field(-0.4, 0.1, 0.3, 1.5, &p).unwrap();
        assert!((g * acc - -0.4).abs() < 1e-9);
        assert!(g_field(0.1, 0.1, 0.3, 1.5, &p).is_err());
        assert!(g_field(-0.1, 0.0, 0.3, 1.5, &p).is_err());
    }

    #[test]
    fn g_singular_quotient() {
        let p = ModelParams::new(1.0, 1.0, 0.8, 3).unwrap();
        // choose leader rate so that the denominator vanishes exactly
        let (zeta, psi, xi1) = (-0.5f64, 0.5f64, 1.0f64);
        let rest = p.alpha * (ov_value(psi) - ov_value(xi1)) + p.alpha * zeta + p.beta * zeta / (psi * psi);
        let leader_zeta = rest * xi1 * xi1 / p.beta;
        assert!(matches!(
            g_field(zeta, psi, leader_zeta, xi1, &p),
            Err(AnalysisError::SingularQuotient { .. })
        ));
    }

    #[test]
    fn monotone_cubic_reproduces_cubics_and_stays_monotone() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.1).powf(1.3)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -x * x).collect();
        let c = MonotoneCubic::new(xs.clone(), ys).unwrap();
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            assert!((c.eval(mid) + mid * mid).abs() < 1e-3);
            assert!(c.derivative(mid) <= 0.0);
        }
        let step = MonotoneCubic::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        for i in 0..=300 {
            let x = i as f64 / 100.0;
            assert!(step.eval(x) >= -1e-15 && step.eval(x) <= 1.0 + 1e-15);
        }
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    fn single_sample(psi: f64) -> BarrierSegment {
        BarrierSegment {
            pair: 2,
            t_check: 1.0,
            t_exit: 2.0,
            exit: SegmentExit::GapRateZero,
            zeta_check: -0.5,
            delta_1: 1.0,
            delta_1_source: Delta1Source::Energy,
            delta_2: 0.3,
            beta: 1.0,
            mu_plus: -0.5,
            zeta_exit: 0.0,
            barrier_bound: barrier_lower_bound(0.3, 1.0, -0.5),
            barrier_bound_signed: None,
            samples: vec![BarrierSample { t: 1.0, zeta: -0.5, psi, leader_zeta: 0.1, leader_xi: 1.0 }],
        }
    }

    #[test]
    fn single_sample_passes_with_zero_margin() {
        let r = verify_barrier(&single_sample(0.15), 1.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.worst_violation, 0.0);
        assert_eq!(r.observed, Some(0.0));
    }

    #[test]
    fn dip_below_r_is_located() {
        let mut seg = single_sample(0.15);
        seg.samples.push(BarrierSample { t: 1.5, zeta: -0.2, psi: 0.10, leader_zeta: 0.1, leader_xi: 1.0 });
        seg.samples.push(BarrierSample { t: 1.8, zeta: -0.1, psi: 0.14, leader_zeta: 0.1, leader_xi: 1.0 });
        let r = verify_barrier(&seg, 1.0).unwrap();
        assert!(!r.passed);
        assert_eq!(r.time, Some(1.5));
        let expected = barrier_r(-0.2, 0.3, 1.0, -0.5).unwrap() - 0.10;
        assert_abs_diff_eq!(r.worst_violation, expected, epsilon = 1e-15);
    }

    fn near_collision() -> (Trajectory, OvflField, EnergyBudget) {
        let p = ModelParams::new(1.0, 0.1, 0.8, 3).unwrap();
        let f = OvflField::new(p, CoordinateSystem::Difference).unwrap();
        let x1 = 0.9 * p.x_infinity();
        let budget = energy_budget(&p, x1, 0.05).unwrap();
        let x2 = 0.6 * budget.delta_1.unwrap();
        let zeta2 = (0.8 - crate::model::V_MAX) * 0.98 - 0.05;
        let cfg = IntegratorConfig::default().with_t_end(30.0);
        let tr = integrate(&f, 0.0, &[x1, x2, 0.05, zeta2], &cfg, &[]).unwrap();
        (tr, f, budget)
    }

    #[test]
    fn near_collision_segment() {
        let (tr, f, b) = near_collision();
        let seg = extract_barrier_segment_with_budget(&tr, &f, &b).unwrap().expect("segment");
        assert!(seg.samples.len() > 100);
        assert!(seg.samples.windows(2).all(|w| w[1].zeta > w[0].zeta));
        assert!(seg.samples.iter().all(|s| s.zeta < 0.0 && s.psi > 0.0 && s.psi <= seg.threshold()));
        assert_eq!(seg.samples[0].psi, seg.threshold());
        assert!(verify_barrier(&seg, f.params.beta).unwrap().passed);
        let slope = psi_slope_check(&seg, &f.params).unwrap();
        assert!(slope.passed, "{slope:?}");
        for r in verify_segment_lemmas(&tr, &f, &seg).unwrap() {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn distant_follower_has_no_segment() {
        let p = ModelParams::new(2.0, 1.0, 0.8, 3).unwrap();
        let f = OvflField::new(p, CoordinateSystem::Difference).unwrap();
        let cfg = IntegratorConfig::default().with_t_end(20.0);
        let tr = integrate(&f, 0.0, &[1.0, 2.0, 0.1, 0.2], &cfg, &[]).unwrap();
        let b = energy_budget(&p, 1.0, 0.1).unwrap();
        assert!(extract_barrier_segment_with_budget(&tr, &f, &b).unwrap().is_none());
        let floor = LeaderFloor { value: 1.0, source: Delta1Source::Empirical };
        assert!(extract_barrier_segment(&tr, &f, 1, floor).is_err());
    }
}
