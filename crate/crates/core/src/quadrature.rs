//! Composite Gauss–Legendre quadrature for log-integrands on the real line.
//!
//! The integrand is supplied as `ln f(u)`. Its effective support is bracketed
//! automatically (the region where `ln f` lies within `drop` of its maximum),
//! then integrated with equal-width Gauss–Legendre panels whose number is
//! doubled until two successive estimates agree. All sums are formed relative
//! to the running maximum, so integrals far outside the `f64` range are fine.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integrand does not decay on the {side} side before |u| = {limit}; integral is improper")]
    NonIntegrable { side: &'static str, limit: f64 },
    #[error("quadrature did not converge: log estimate {estimate}, last change {error}")]
    NotConverged { estimate: f64, error: f64 },
    #[error("integrand evaluated to NaN at u = {at}")]
    NotANumber { at: f64 },
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    pub initial_panels: usize,
    pub max_panels: usize,
    /// Convergence threshold on the change of the log integral between
    /// successive panel doublings.
    pub log_tol: f64,
    /// The bracket ends where `ln f` falls this far below its maximum.
    pub drop: f64,
    /// Initial step of the outward bracketing walk.
    pub step: f64,
    /// Bracketing gives up (improper integral) beyond `|u| > limit`.
    pub limit: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            order: 20,
            initial_panels: 4,
            max_panels: 4096,
            log_tol: 1e-11,
            drop: 40.0,
            step: 0.25,
            limit: 2000.0,
        }
    }
}

impl QuadratureConfig {
    fn validate(&self) -> Result<(), QuadratureError> {
        if self.order < 2 {
            return Err(QuadratureError::InvalidConfig("order must be at least 2"));
        }
        if self.initial_panels == 0 || self.max_panels < self.initial_panels {
            return Err(QuadratureError::InvalidConfig("panel counts"));
        }
        if !(self.log_tol > 0.0) || !(self.drop > 0.0) || !(self.step > 0.0) || !(self.limit > 0.0)
        {
            return Err(QuadratureError::InvalidConfig("tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogIntegral {
    pub log_value: f64,
    /// Absolute change of the log estimate at the final doubling.
    pub log_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub panels: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn eval<F: Fn(f64) -> f64>(log_f: &F, u: f64) -> Result<f64, QuadratureError> {
    let v = log_f(u);
    if v.is_nan() {
        Err(QuadratureError::NotANumber { at: u })
    } else {
        Ok(v)
    }
}

/// Finds `[lower, upper]` outside of which `ln f < max - drop`, walking
/// outward from `hint`. Returns the bracket and the largest value seen.
pub fn bracket<F: Fn(f64) -> f64>(
    log_f: &F,
    hint: f64,
    config: &QuadratureConfig,
) -> Result<(f64, f64, f64), QuadratureError> {
    config.validate()?;
    let f0 = eval(log_f, hint)?;
    let mut fmax = f0;
    // Outermost point on each side and the point walked from to reach it.
    let mut sides = [Walk::new(hint, f0, config.step), Walk::new(hint, f0, config.step)];
    loop {
        let mut settled = true;
        for (dir, side) in sides.iter_mut().enumerate() {
            let sign = if dir == 0 { -1.0 } else { 1.0 };
            while side.fx >= fmax - config.drop {
                settled = false;
                let nx = side.x + sign * side.step;
                if nx.abs() > config.limit {
                    return Err(QuadratureError::NonIntegrable {
                        side: if dir == 0 { "lower" } else { "upper" },
                        limit: config.limit,
                    });
                }
                let fnx = eval(log_f, nx)?;
                fmax = fmax.max(fnx);
                side.advance(nx, fnx, config.step);
            }
        }
        if settled {
            break;
        }
    }
    if fmax == f64::NEG_INFINITY {
        return Err(QuadratureError::NonIntegrable {
            side: "both",
            limit: config.limit,
        });
    }
    // Pull each end in to the threshold crossing inside the last walked
    // interval so narrow peaks are not diluted over a wide bracket.
    let threshold = fmax - config.drop;
    let mut ends = [0.0; 2];
    for (end, side) in ends.iter_mut().zip(&sides) {
        let (mut out, mut inn) = (side.x, side.prev_x);
        if side.prev_f >= threshold {
            for _ in 0..60 {
                let mid = 0.5 * (out + inn);
                if eval(log_f, mid)? < threshold {
                    out = mid;
                } else {
                    inn = mid;
                }
            }
        }
        *end = out;
    }
    Ok((ends[0], ends[1], fmax))
}

struct Walk {
    x: f64,
    fx: f64,
    prev_x: f64,
    prev_f: f64,
    step: f64,
}

impl Walk {
    fn new(x: f64, fx: f64, step: f64) -> Self {
        Self {
            x,
            fx,
            prev_x: x,
            prev_f: fx,
            step,
        }
    }

    fn advance(&mut self, x: f64, fx: f64, base_step: f64) {
        self.prev_x = self.x;
        self.prev_f = self.fx;
        self.x = x;
        self.fx = fx;
        self.step = (self.step * 1.5).min(64.0 * base_step);
    }
}

/// `ln ∫ exp(log_f(u)) du` over the bracketed support around `hint`.
pub fn integrate_log<F: Fn(f64) -> f64>(
    log_f: F,
    hint: f64,
    config: &QuadratureConfig,
) -> Result<LogIntegral, QuadratureError> {
    let (lower, upper, fmax) = bracket(&log_f, hint, config)?;
    integrate_log_on(&log_f, lower, upper, fmax, config)
}

/// Integrates over a fixed interval with panel doubling. `offset` should be
/// close to the maximum of `log_f` on the interval.
pub fn integrate_log_on<F: Fn(f64) -> f64>(
    log_f: &F,
    lower: f64,
    upper: f64,
    offset: f64,
    config: &QuadratureConfig,
) -> Result<LogIntegral, QuadratureError> {
    config.validate()?;
    let (nodes, weights) = gauss_legendre(config.order);
    let composite = |panels: usize| -> Result<f64, QuadratureError> {
        let width = (upper - lower) / panels as f64;
        let half = 0.5 * width;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = lower + (p as f64 + 0.5) * width;
            let mut acc = 0.0;
            for (z, w) in nodes.iter().zip(&weights) {
                let v = eval(log_f, mid + half * z)?;
                acc += w * (v - offset).exp();
            }
            total += acc * half;
        }
        Ok(total.ln() + offset)
    };
    let mut panels = config.initial_panels;
    let mut previous = composite(panels)?;
    loop {
        let next_panels = panels * 2;
        if next_panels > config.max_panels {
            return Err(QuadratureError::NotConverged {
                estimate: previous,
                error: f64::INFINITY,
            });
        }
        let current = composite(next_panels)?;
        let change = (current - previous).abs();
        if change <= config.log_tol || (current.is_infinite() && current == previous) {
            return Ok(LogIntegral {
                log_value: current,
                log_error: change,
                lower,
                upper,
                panels: next_panels,
            });
        }
        if next_panels * 2 > config.max_panels {
            return Err(QuadratureError::NotConverged {
                estimate: current,
                error: change,
            });
        }
        previous = current;
        panels = next_panels;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        for order in [2, 5, 16, 20] {
            let (x, w) = gauss_legendre(order);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            // Degree 2n-1 is exact: ∫ x^(2k) = 2/(2k+1).
            for k in 0..order {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * k as i32)).sum();
                if 2 * k < 2 * order {
                    assert_abs_diff_eq!(got, 2.0 / (2 * k + 1) as f64, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn gaussian_integral() {
        // ∫ exp(-u²/2) du = √(2π)
        let r = integrate_log(|u| -0.5 * u * u, 3.0, &QuadratureConfig::default()).unwrap();
        assert_abs_diff_eq!(r.log_value, 0.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-12);
    }

    #[test]
    fn narrow_peak_far_from_origin() {
        // N(500, 1e-4) scaled by e^900.
        let sd = 1e-4;
        let f = |u: f64| 900.0 - 0.5 * ((u - 500.0) / sd).powi(2);
        let r = integrate_log(f, 500.0, &QuadratureConfig::default()).unwrap();
        let exact = 900.0 + (sd * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert_abs_diff_eq!(r.log_value, exact, epsilon = 1e-10);
    }

    #[test]
    fn improper_integrand_is_reported() {
        // Flat integrand: 1/λ prior with no data.
        let err = integrate_log(|_| 0.0, 0.0, &QuadratureConfig::default()).unwrap_err();
        assert!(matches!(err, QuadratureError::NonIntegrable { .. }));
    }

    #[test]
    fn nan_is_reported() {
        let err = integrate_log(|_| f64::NAN, 0.0, &QuadratureConfig::default()).unwrap_err();
        assert!(matches!(err, QuadratureError::NotANumber { .. }));
    }

    #[test]
    fn too_few_panels_fails_to_converge() {
        let config = QuadratureConfig {
            order: 2,
            initial_panels: 1,
            max_panels: 2,
            ..Default::default()
        };
        let err = integrate_log(|u| -0.5 * u * u, 0.0, &config).unwrap_err();
        assert!(matches!(err, QuadratureError::NotConverged { .. }));
    }
}
