//! Named time profiles for source terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    /// `0` before `start`, `1` from `start` on.
    Step { start: f64 },
    /// `sin²`-smoothed ramp from `0` at `start` to `1` at `start + width`.
    SmoothRamp { start: f64, width: f64 },
    /// `exp(−((t − center)/width)²)`, cut to zero before `start`.
    GaussianPulse { center: f64, width: f64, #[serde(default)] start: f64 },
    /// `sin²` bump supported on `[start, start + width]`.
    Bump { start: f64, width: f64 },
    Zero,
}

impl TimeProfile {
    pub fn validate(&self) -> Result<()> {
        let bad_width = match *self {
            TimeProfile::SmoothRamp { width, .. } | TimeProfile::GaussianPulse { width, .. } | TimeProfile::Bump { width, .. } => {
                !(width > 0.0)
            }
            _ => false,
        };
        if bad_width {
            return Err(Error::Argument(format!("profile width must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        use std::f64::consts::FRAC_PI_2;
        match *self {
            TimeProfile::Step { start } => (t >= start) as u8 as f64,
            TimeProfile::SmoothRamp { start, width } => {
                if t <= start {
                    0.0
                } else if t >= start + width {
                    1.0
                } else {
                    (FRAC_PI_2 * (t - start) / width).sin().powi(2)
                }
            }
            TimeProfile::GaussianPulse { center, width, start } => {
                if t < start {
                    0.0
                } else {
                    (-((t - center) / width).powi(2)).exp()
                }
            }
            TimeProfile::Bump { start, width } => {
                if t <= start || t >= start + width {
                    0.0
                } else {
                    (std::f64::consts::PI * (t - start) / width).sin().powi(2)
                }
            }
            TimeProfile::Zero => 0.0,
        }
    }

    /// Evaluates in the working precision.
    pub fn at<T: Real>(&self, t: T) -> T {
        T::lit(self.eval(t.to_f64_lossy()))
    }

    /// Earliest time the profile can be nonzero.
    pub fn support_start(&self) -> f64 {
        match *self {
            TimeProfile::Step { start }
            | TimeProfile::SmoothRamp { start, .. }
            | TimeProfile::Bump { start, .. }
            | TimeProfile::GaussianPulse { start, .. } => start,
            TimeProfile::Zero => f64::INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        let r = TimeProfile::SmoothRamp { start: 1.0, width: 2.0 };
        assert_eq!(r.eval(0.5), 0.0);
        assert!((r.eval(2.0) - 0.5).abs() < 1e-15);
        assert_eq!(r.eval(4.0), 1.0);
        let s = TimeProfile::Step { start: 1.0 };
        assert_eq!((s.eval(0.999), s.eval(1.0)), (0.0, 1.0));
        let b = TimeProfile::Bump { start: 0.0, width: 1.0 };
        assert_eq!(b.eval(1.5), 0.0);
        assert!((b.eval(0.5) - 1.0).abs() < 1e-15);
        let g = TimeProfile::GaussianPulse { center: 1.0, width: 0.5, start: 0.2 };
        assert_eq!(g.eval(0.1), 0.0);
        assert_eq!(g.eval(1.0), 1.0);
        assert!(TimeProfile::Bump { start: 0.0, width: 0.0 }.validate().is_err());
    }
}
