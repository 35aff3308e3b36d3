//! Moving-average kernels for the Gaussian environment.
//!
//! A kernel is a nonnegative function `q` on the lattice with `q(o) > 0`,
//! symmetric under x-reflection, and square summable. The field module
//! convolves it against i.i.d. standard normals over an L1 window.

use crate::Error;

/// Kernel families. `|x|` below is the Euclidean norm of the lattice point.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `q(x) = (2/pi)^(1/2) * exp(-|x|^2 / a^2)`; `a = 1` is the classical
    /// Bargmann-Fock kernel.
    BargmannFock { scale: f64 },
    /// `q(x) = (1 + |x|^2)^(-alpha/2)`.
    RationalQuadratic { alpha: f64 },
    /// `q(x) = exp(-|x|^2 / 5)`, the kernel used for the illustration plots.
    Figure1,
    /// `q(o) = 1` and zero elsewhere; the field reduces to the raw deviates.
    Indicator,
    /// Explicit finite support: entries `((dx, dy), weight)`. Must contain
    /// the origin with positive weight and be x-reflection symmetric.
    Table(Vec<((i64, i64), f64)>),
}

impl Kernel {
    /// Kernel weight at lattice offset `(dx, dy)`.
    pub fn q(&self, dx: i64, dy: i64) -> f64 {
        let r2 = (dx * dx + dy * dy) as f64;
        match self {
            Kernel::BargmannFock { scale } => {
                (2.0 / std::f64::consts::PI).sqrt() * (-r2 / (scale * scale)).exp()
            }
            Kernel::RationalQuadratic { alpha } => (1.0 + r2).powf(-alpha / 2.0),
            Kernel::Figure1 => (-r2 / 5.0).exp(),
            Kernel::Indicator => {
                if dx == 0 && dy == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Table(entries) => entries
                .iter()
                .find(|((x, y), _)| *x == dx && *y == dy)
                .map(|(_, w)| *w)
                .unwrap_or(0.0),
        }
    }

    /// Validate positivity at the origin, nonnegativity, reflection symmetry
    /// and parameter ranges.
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            Kernel::BargmannFock { scale } if !(*scale > 0.0) => Err(Error::InvalidParameter(
                "bargmann-fock scale must be positive".into(),
            )),
            Kernel::RationalQuadratic { alpha } if !(*alpha > 0.5) => Err(Error::InvalidParameter(
                "rational-quadratic exponent must exceed 1/2".into(),
            )),
            Kernel::Table(entries) => {
                if self.q(0, 0) <= 0.0 {
                    return Err(Error::InvalidParameter("table kernel needs q(o) > 0".into()));
                }
                for ((x, y), w) in entries {
                    if *w < 0.0 {
                        return Err(Error::InvalidParameter("kernel weights must be >= 0".into()));
                    }
                    if (self.q(*x, *y) - self.q(-*x, *y)).abs() > 0.0 {
                        return Err(Error::InvalidParameter(
                            "table kernel must satisfy q(x1,x2) = q(-x1,x2)".into(),
                        ));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Declared polynomial decay exponent `beta` with `q(x) <= c0 |x|^-beta`.
    /// Superpolynomial kernels report a conservative finite exponent; finite
    /// support reports infinity.
    pub fn decay(&self) -> (f64, f64) {
        match self {
            Kernel::BargmannFock { .. } | Kernel::Figure1 => {
                let beta = 6.0;
                (self.fitted_decay_constant(beta), beta)
            }
            Kernel::RationalQuadratic { alpha } => (1.0, *alpha),
            Kernel::Indicator | Kernel::Table(_) => (1.0, f64::INFINITY),
        }
    }

    fn fitted_decay_constant(&self, beta: f64) -> f64 {
        let mut c: f64 = self.q(0, 0).max(1.0);
        for dx in -40i64..=40 {
            for dy in -40i64..=40 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let r = ((dx * dx + dy * dy) as f64).sqrt();
                c = c.max(self.q(dx, dy) * r.powf(beta));
            }
        }
        c
    }

    /// Offsets and weights inside the L1 window `|y|_1 <= radius / 2`,
    /// restricted to nonzero weights.
    pub fn window_weights(&self, radius: i64) -> Vec<(i64, i64, f64)> {
        let half = radius / 2;
        let mut out = Vec::new();
        for dx in -half..=half {
            let rem = half - dx.abs();
            for dy in -rem..=rem {
                let w = self.q(dx, dy);
                if w != 0.0 {
                    out.push((dx, dy, w));
                }
            }
        }
        out
    }

    /// Variance of the truncated field: `sum of q(y)^2` over the window.
    pub fn truncated_variance(&self, radius: i64) -> f64 {
        self.window_weights(radius).iter().map(|&(_, _, w)| w * w).sum()
    }

    /// Tail mass `sum of q(y)^2` over `|y|_1 > radius / 2`, summed until the
    /// shells become negligible. Used to size the default truncation.
    pub fn tail_variance(&self, radius: i64) -> f64 {
        let half = radius / 2;
        let mut total = 0.0;
        for shell in (half + 1)..(half + 400) {
            let mut shell_sum = 0.0;
            for dx in -shell..=shell {
                let rem = shell - dx.abs();
                for dy in [-rem, rem] {
                    let w = self.q(dx, dy);
                    shell_sum += w * w;
                    if rem == 0 {
                        break;
                    }
                }
            }
            total += shell_sum;
            if shell_sum < 1e-18 * total.max(1e-300) && shell > half + 4 {
                break;
            }
        }
        total
    }

    /// Smallest even truncation radius such that the Gaussian tail bound
    /// `2 exp(-t^2 / (2 * tail_variance))` evaluated at one truncated
    /// standard deviation drops below 1e-6.
    pub fn default_truncation_radius(&self) -> i64 {
        for radius in (2..=200i64).step_by(2) {
            let sigma2 = self.truncated_variance(radius);
            let tail = self.tail_variance(radius);
            if tail == 0.0 {
                return radius;
            }
            let bound = 2.0 * (-sigma2 / (2.0 * tail)).exp();
            if bound < 1e-6 {
                return radius;
            }
        }
        200
    }
}

/// Exact covariance of the truncated field at a given lag: the sum of
/// `q(z) q(z - lag)` over offsets `z` with both factors inside their L1
/// windows of radius `radius / 2`.
pub fn covariance_exact(kernel: &Kernel, lag: (i64, i64), radius: i64) -> Result<f64, Error> {
    if radius < 2 {
        return Err(Error::InvalidParameter("truncation radius must be >= 2".into()));
    }
    let half = radius / 2;
    let mut sum = 0.0;
    for zx in -half..=half {
        let rem = half - zx.abs();
        for zy in -rem..=rem {
            if (zx - lag.0).abs() + (zy - lag.1).abs() <= half {
                sum += kernel.q(zx, zy) * kernel.q(zx - lag.0, zy - lag.1);
            }
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_covariance_is_delta() {
        assert_eq!(covariance_exact(&Kernel::Indicator, (0, 0), 4).unwrap(), 1.0);
        assert_eq!(covariance_exact(&Kernel::Indicator, (1, 0), 4).unwrap(), 0.0);
    }

    #[test]
    fn bargmann_fock_variance_matches_direct_summation() {
        // Independent oracle: literal double loop over the L1 ball of
        // radius 6 summing (2/pi) exp(-2 |y|^2).
        let mut oracle = 0.0;
        for dx in -6i64..=6 {
            for dy in -6i64..=6 {
                if dx.abs() + dy.abs() <= 6 {
                    oracle += (2.0 / std::f64::consts::PI)
                        * (-2.0 * (dx * dx + dy * dy) as f64).exp();
                }
            }
        }
        let got = covariance_exact(&Kernel::BargmannFock { scale: 1.0 }, (0, 0), 12).unwrap();
        assert!((got - oracle).abs() < 1e-14, "got {got}, oracle {oracle}");
        let var = Kernel::BargmannFock { scale: 1.0 }.truncated_variance(12);
        assert!((var - oracle).abs() < 1e-14);
    }

    #[test]
    fn covariance_respects_kernel_reflection_symmetry() {
        let k = Kernel::Figure1;
        for (lag_x, lag_y) in [(1, 2), (3, 1), (2, 0)] {
            let a = covariance_exact(&k, (lag_x, lag_y), 8).unwrap();
            let b = covariance_exact(&k, (-lag_x, lag_y), 8).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn decay_bound_actually_dominates() {
        for k in [
            Kernel::BargmannFock { scale: 1.0 },
            Kernel::Figure1,
            Kernel::RationalQuadratic { alpha: 3.0 },
        ] {
            let (c0, beta) = k.decay();
            for dx in -12i64..=12 {
                for dy in -12i64..=12 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let r = ((dx * dx + dy * dy) as f64).sqrt();
                    assert!(k.q(dx, dy) <= c0 * r.powf(-beta) * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn default_truncation_is_even_and_modest() {
        let r = Kernel::BargmannFock { scale: 1.0 }.default_truncation_radius();
        assert!(r % 2 == 0 && (2..=40).contains(&r), "radius {r}");
        assert_eq!(Kernel::Indicator.default_truncation_radius(), 2);
    }
}
