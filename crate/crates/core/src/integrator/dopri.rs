//! Dormand–Prince 5(4) tableau with its fourth-order continuous extension.

pub(crate) const C2: f64 = 1.0 / 5.0;
pub(crate) const C3: f64 = 3.0 / 10.0;
pub(crate) const C4: f64 = 4.0 / 5.0;
pub(crate) const C5: f64 = 8.0 / 9.0;

pub(crate) const A21: f64 = 1.0 / 5.0;
pub(crate) const A31: f64 = 3.0 / 40.0;
pub(crate) const A32: f64 = 9.0 / 40.0;
pub(crate) const A41: f64 = 44.0 / 45.0;
pub(crate) const A42: f64 = -56.0 / 15.0;
pub(crate) const A43: f64 = 32.0 / 9.0;
pub(crate) const A51: f64 = 19372.0 / 6561.0;
pub(crate) const A52: f64 = -25360.0 / 2187.0;
pub(crate) const A53: f64 = 64448.0 / 6561.0;
pub(crate) const A54: f64 = -212.0 / 729.0;
pub(crate) const A61: f64 = 9017.0 / 3168.0;
pub(crate) const A62: f64 = -355.0 / 33.0;
pub(crate) const A63: f64 = 46732.0 / 5247.0;
pub(crate) const A64: f64 = 49.0 / 176.0;
pub(crate) const A65: f64 = -5103.0 / 18656.0;
pub(crate) const A71: f64 = 35.0 / 384.0;
pub(crate) const A73: f64 = 500.0 / 1113.0;
pub(crate) const A74: f64 = 125.0 / 192.0;
pub(crate) const A75: f64 = -2187.0 / 6784.0;
pub(crate) const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
pub(crate) const E1: f64 = 71.0 / 57600.0;
pub(crate) const E3: f64 = -71.0 / 16695.0;
pub(crate) const E4: f64 = 71.0 / 1920.0;
pub(crate) const E5: f64 = -17253.0 / 339200.0;
pub(crate) const E6: f64 = 22.0 / 525.0;
pub(crate) const E7: f64 = -1.0 / 40.0;

pub(crate) const D1: f64 = -12715105075.0 / 11282082432.0;
pub(crate) const D3: f64 = 87487479700.0 / 32700410799.0;
pub(crate) const D4: f64 = -10690763975.0 / 1880347072.0;
pub(crate) const D5: f64 = 701980252875.0 / 199316789632.0;
pub(crate) const D6: f64 = -1453857185.0 / 822651844.0;
pub(crate) const D7: f64 = 69997945.0 / 29380423.0;

/// Interpolation data of one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub enum DenseSegment {
    /// Hairer's five-coefficient continuous extension of the DP5 step.
    Dopri {
        t0: f64,
        h: f64,
        coeffs: [Vec<f64>; 5],
    },
    /// Cubic Hermite through two samples and their derivatives.
    Hermite {
        t0: f64,
        h: f64,
        y0: Vec<f64>,
        y1: Vec<f64>,
        f0: Vec<f64>,
        f1: Vec<f64>,
    },
}

impl DenseSegment {
    pub fn t0(&self) -> f64 {
        match self {
            DenseSegment::Dopri { t0, .. } | DenseSegment::Hermite { t0, .. } => *t0,
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            DenseSegment::Dopri { h, .. } | DenseSegment::Hermite { h, .. } => *h,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DenseSegment::Dopri { coeffs, .. } => coeffs[0].len(),
            DenseSegment::Hermite { y0, .. } => y0.len(),
        }
    }

    /// Component `i` at time `t` (expected within the segment).
    pub fn component(&self, t: f64, i: usize) -> f64 {
        match self {
            DenseSegment::Dopri { t0, h, coeffs } => {
                let s = (t - t0) / h;
                let s1 = 1.0 - s;
                coeffs[0][i]
                    + s * (coeffs[1][i] + s1 * (coeffs[2][i] + s * (coeffs[3][i] + s1 * coeffs[4][i])))
            }
            DenseSegment::Hermite { t0, h, y0, y1, f0, f1 } => {
                let s = (t - t0) / h;
                let s2 = s * s;
                let s3 = s2 * s;
                let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
                let h10 = s3 - 2.0 * s2 + s;
                let h01 = -2.0 * s3 + 3.0 * s2;
                let h11 = s3 - s2;
                h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i]
            }
        }
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.component(t, i);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }
}
