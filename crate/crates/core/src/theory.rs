//! Exact evaluation of the explicit constants of the crossing and
//! bootstrap arguments.
//!
//! Powers of the ellipticity constant stay exact rationals; the chained
//! constants `n`, `xi`, `c5` and the first branch of `h0` are evaluated in
//! certified interval arithmetic, with integer outputs accepted only when
//! both endpoints agree on the ceiling (re-running at doubled precision
//! otherwise).

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive};

use crate::bigfloat::{exp_interval, ln_interval, Dyadic, Interval};
use crate::Error;

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Inputs of the constant chain.
#[derive(Debug, Clone)]
pub struct TheoryInput {
    /// Ellipticity constant, in `(0, 1/2)`; the bootstrap fixes `1/4`.
    pub epsilon0: BigRational,
    /// Decoupling-rate constant of the environment.
    pub c6: BigRational,
    /// Decoupling decay exponent; must exceed `1 + 1/xi`.
    pub alpha: BigRational,
    /// Cap applied to the fluctuation exponent, in `(0, 1)`.
    pub xi0: BigRational,
}

impl TheoryInput {
    pub fn new(
        epsilon0: (i64, i64),
        c6: (i64, i64),
        alpha: (i64, i64),
        xi0: (i64, i64),
    ) -> Result<Self, Error> {
        let input = TheoryInput {
            epsilon0: ratio(epsilon0.0, epsilon0.1),
            c6: ratio(c6.0, c6.1),
            alpha: ratio(alpha.0, alpha.1),
            xi0: ratio(xi0.0, xi0.1),
        };
        let half = ratio(1, 2);
        if !(input.epsilon0 > BigRational::from_integer(BigInt::from(0))
            && input.epsilon0 < half)
        {
            return Err(Error::InvalidParameter("epsilon0 must lie in (0, 1/2)".into()));
        }
        if !input.c6.is_positive() {
            return Err(Error::InvalidParameter("c6 must be positive".into()));
        }
        if input.alpha <= ratio(2, 1) {
            return Err(Error::InvalidParameter("alpha must exceed 2".into()));
        }
        if !(input.xi0.is_positive() && input.xi0 < BigRational::one()) {
            return Err(Error::InvalidParameter("xi0 must lie in (0, 1)".into()));
        }
        Ok(input)
    }

    /// The canonical instantiation: ellipticity 1/4 as in the bootstrap,
    /// unit decoupling constant, and a decay exponent just above the
    /// `1 + 1/xi` requirement (about 10784 for the resulting `xi`).
    pub fn standard() -> Self {
        TheoryInput::new((1, 4), (1, 1), (10786, 1), (1, 2)).expect("valid standard input")
    }
}

/// The evaluated constant chain.
#[derive(Debug, Clone)]
pub struct TheoryConstants {
    /// Vertical crossing floor `epsilon0^360 / 16^30` (exact).
    pub c2_vertical_rsw: BigRational,
    /// Restricted-crossing threshold `epsilon0^16 / 16` (exact).
    pub gamma: BigRational,
    /// Horizontal crossing floor `epsilon0^54 / 2^10` (exact).
    pub h_rsw_floor: BigRational,
    /// Stretch count `ceil(ln 8 / -ln(1 - 2^-118))` (certified integer).
    pub n: BigInt,
    /// Fluctuation exponent `min(ln(129/128)/ln(4n), xi0)` (enclosure).
    pub xi: Interval,
    /// Whether the cap `xi0` was the minimum.
    pub xi_capped: bool,
    /// Scale prefactor `(4n)^-xi` (enclosure).
    pub c5: Interval,
    /// First branch of the base height: `ceil((80 c6 n)^(1/(alpha-2)))`.
    pub h0_first_branch: BigInt,
    /// Base height reading the second branch as `rsw + (64 min large)`.
    pub h0_tight: BigInt,
    /// Base height reading the second branch as `(rsw + 64) min large`.
    pub h0_loose: BigInt,
    /// Working precision of the enclosures, in bits.
    pub precision_bits: u32,
}

/// Thresholds that the base-height formula references only existentially;
/// callers supply concrete stand-ins (64 covers both in the default
/// reading).
#[derive(Debug, Clone, Copy)]
pub struct HeightThresholds {
    pub rsw_height: u64,
    pub large_height: u64,
}

impl Default for HeightThresholds {
    fn default() -> Self {
        HeightThresholds { rsw_height: 64, large_height: 64 }
    }
}

fn rational_pow(base: &BigRational, exp: u32) -> BigRational {
    let mut acc = BigRational::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        e >>= 1;
    }
    acc
}

/// Evaluate the full chain at the given precision (256 bits by default in
/// [`bootstrap_constants`]). Integer outputs retry at doubled precision
/// until certified.
pub fn bootstrap_constants_at(
    input: &TheoryInput,
    thresholds: HeightThresholds,
    precision_bits: u32,
) -> Result<TheoryConstants, Error> {
    let prec = precision_bits;

    // Exact rational constants.
    let sixteen_pow30 = rational_pow(&ratio(16, 1), 30);
    let c2 = rational_pow(&input.epsilon0, 360) / &sixteen_pow30;
    let gamma = rational_pow(&input.epsilon0, 16) / ratio(16, 1);
    let h_rsw_floor = rational_pow(&input.epsilon0, 54) / ratio(1 << 10, 1);

    // n = ceil(ln 8 / -ln(1 - 2^-118)).
    let ln8 = ln_interval(&Interval::from_int(8, prec), prec);
    let one_minus = Interval::point(
        Dyadic::new((BigInt::one() << 118u32) - BigInt::one(), -118),
        prec,
    );
    let denom = ln_interval(&one_minus, prec).neg();
    let n_enc = ln8.div(&denom);
    let n = n_enc
        .ceil_unique()
        .ok_or_else(|| Error::Estimation("n enclosure straddles an integer".into()))?;

    // xi = min(ln(129/128) / ln(4n), xi0).
    let ln_ratio = ln_interval(&Interval::from_ratio(&ratio(129, 128), prec), prec);
    let four_n = Interval::from_bigint(&(BigInt::from(4) * &n), prec);
    let ln_4n = ln_interval(&four_n, prec);
    let xi_raw = ln_ratio.div(&ln_4n);
    let xi0 = Interval::from_ratio(&input.xi0, prec);
    let (xi, xi_capped) = if xi_raw.hi.cmp_value(&xi0.lo) == std::cmp::Ordering::Less {
        (xi_raw, false)
    } else if xi_raw.lo.cmp_value(&xi0.hi) == std::cmp::Ordering::Greater {
        (xi0, true)
    } else {
        return Err(Error::Estimation("xi cap comparison is ambiguous at this precision".into()));
    };

    // alpha > 1 + 1/xi is required for the horizontal argument.
    let alpha = Interval::from_ratio(&input.alpha, prec);
    let needed = Interval::from_int(1, prec).add(&Interval::from_int(1, prec).div(&xi));
    if alpha.hi.cmp_value(&needed.hi) != std::cmp::Ordering::Greater {
        return Err(Error::InvalidParameter(format!(
            "alpha = {} does not exceed 1 + 1/xi (about {:.3})",
            input.alpha,
            needed.midpoint_f64()
        )));
    }

    // c5 = (4n)^-xi = exp(-xi ln(4n)).
    let c5 = exp_interval(&xi.mul(&ln_4n).neg(), prec);

    // h0 first branch: ceil((80 c6 n)^(1/(alpha-2))).
    let base = Interval::from_ratio(&(ratio(80, 1) * &input.c6), prec)
        .mul(&Interval::from_bigint(&n, prec));
    let inv_exp = Interval::from_int(1, prec)
        .div(&Interval::from_ratio(&(&input.alpha - ratio(2, 1)), prec));
    let first_enc = exp_interval(&ln_interval(&base, prec).mul(&inv_exp), prec);
    let h0_first_branch = first_enc
        .ceil_unique()
        .ok_or_else(|| Error::Estimation("h0 enclosure straddles an integer".into()))?;

    // Second branch, both parenthesizations of "rsw + 64 min large".
    let tight = BigInt::from(thresholds.rsw_height)
        + BigInt::from(64u64.min(thresholds.large_height));
    let loose = BigInt::from((thresholds.rsw_height + 64).min(thresholds.large_height));
    let h0_tight = h0_first_branch.clone().max(tight);
    let h0_loose = h0_first_branch.clone().max(loose);

    Ok(TheoryConstants {
        c2_vertical_rsw: c2,
        gamma,
        h_rsw_floor,
        n,
        xi,
        xi_capped,
        c5,
        h0_first_branch,
        h0_tight,
        h0_loose,
        precision_bits: prec,
    })
}

/// Evaluate at 256 working bits, retrying with doubled precision when an
/// integer output cannot be certified.
pub fn bootstrap_constants(
    input: &TheoryInput,
    thresholds: HeightThresholds,
) -> Result<TheoryConstants, Error> {
    let mut prec = 256u32;
    loop {
        match bootstrap_constants_at(input, thresholds, prec) {
            Ok(c) => return Ok(c),
            Err(Error::Estimation(_)) if prec < 4096 => prec *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Does the decay exponent clear the horizontal-crossing requirement
/// `alpha > 1 + 1/xi`? Returns the verdict and the exact margin.
pub fn decoupling_threshold(alpha: f64, xi: f64) -> (bool, f64) {
    let margin = alpha - (1.0 + 1.0 / xi);
    (margin > 0.0, margin)
}

/// The law-of-large-numbers regime: decay exponent
/// beyond 10.
pub fn lln_threshold(alpha: f64) -> (bool, f64) {
    (alpha > 10.0, alpha - 10.0)
}

/// Rows of the constants table printed by the command-line front end.
pub fn constants_table(c: &TheoryConstants) -> Vec<(String, String, String)> {
    let dec = |i: &Interval| format!("[{}, {}]", i.lo.to_decimal(40), i.hi.to_decimal(40));
    let rational = |r: &BigRational| {
        // Render powers of two compactly when exact.
        if r.numer() == &BigInt::one() {
            let d = r.denom();
            if d.bits() >= 1 && (d & (d - BigInt::one())) == BigInt::from(0) {
                return format!("2^-{}", d.bits() - 1);
            }
        }
        format!("{r}")
    };
    vec![
        (
            "c2_vertical_rsw".into(),
            rational(&c.c2_vertical_rsw),
            format!("{:e}", c.c2_vertical_rsw.to_f64().unwrap_or(0.0)),
        ),
        (
            "gamma".into(),
            rational(&c.gamma),
            format!("{:e}", c.gamma.to_f64().unwrap_or(0.0)),
        ),
        (
            "h_rsw_floor".into(),
            rational(&c.h_rsw_floor),
            format!("{:e}", c.h_rsw_floor.to_f64().unwrap_or(0.0)),
        ),
        ("n".into(), c.n.to_string(), format!("{:e}", c.n.to_f64().unwrap_or(0.0))),
        ("xi".into(), format!("capped={}", c.xi_capped), dec(&c.xi)),
        ("c5".into(), "(4n)^-xi".into(), dec(&c.c5)),
        ("h0_first_branch".into(), c.h0_first_branch.to_string(), String::new()),
        ("h0_tight".into(), c.h0_tight.to_string(), String::new()),
        ("h0_loose".into(), c.h0_loose.to_string(), String::new()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow2_ratio(neg_exp: u32) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::one() << neg_exp)
    }

    #[test]
    fn quarter_ellipticity_gives_exact_powers_of_two() {
        let c = bootstrap_constants(&TheoryInput::standard(), HeightThresholds::default()).unwrap();
        assert_eq!(c.c2_vertical_rsw, pow2_ratio(840));
        assert_eq!(c.gamma, pow2_ratio(36));
        assert_eq!(c.h_rsw_floor, pow2_ratio(118));
    }

    #[test]
    fn n_matches_independent_high_precision_evaluation() {
        // Oracle: evaluation of the same expression at 512 bits, performed
        // independently of the production precision ladder.
        let c = bootstrap_constants(&TheoryInput::standard(), HeightThresholds::default()).unwrap();
        let at512 =
            bootstrap_constants_at(&TheoryInput::standard(), HeightThresholds::default(), 512)
                .unwrap();
        assert_eq!(c.n, at512.n);
        // n ~ ln(8) * 2^118: the leading digits are fixed by the expansion
        // -ln(1 - x) = x (1 + x/2 + ...).
        let approx = 3.0 * std::f64::consts::LN_2 * 2f64.powi(118);
        let got = c.n.to_f64().unwrap();
        assert!((got / approx - 1.0).abs() < 1e-12, "n {got} vs {approx}");
    }

    #[test]
    fn uncapped_c5_is_128_over_129() {
        // (4n)^(-ln(129/128)/ln(4n)) collapses to exp(-ln(129/128)).
        let c = bootstrap_constants(&TheoryInput::standard(), HeightThresholds::default()).unwrap();
        assert!(!c.xi_capped);
        assert!(c.c5.contains_ratio(&ratio(128, 129)));
    }

    #[test]
    fn enclosures_shrink_under_doubled_precision() {
        let input = TheoryInput::standard();
        let a = bootstrap_constants_at(&input, HeightThresholds::default(), 256).unwrap();
        let b = bootstrap_constants_at(&input, HeightThresholds::default(), 512).unwrap();
        assert_eq!(a.n, b.n);
        assert!(a.xi.contains_interval(&b.xi));
        assert!(a.c5.contains_interval(&b.c5));
        assert!(
            b.xi.width().cmp_value(&a.xi.width()) == std::cmp::Ordering::Less,
            "xi enclosure did not shrink"
        );
        assert!(b.c5.width().cmp_value(&a.c5.width()) == std::cmp::Ordering::Less);
    }

    #[test]
    fn xi_monotone_in_n_and_h0_monotone_in_c6() {
        // Direct consequence of the defining formulas: larger n shrinks
        // ln(129/128)/ln(4n); larger c6 raises the first branch of h0.
        let a = bootstrap_constants(&TheoryInput::standard(), HeightThresholds::default()).unwrap();
        let bigger_c6 = TheoryInput::new((1, 4), (1000, 1), (10786, 1), (1, 2)).unwrap();
        let b = bootstrap_constants(&bigger_c6, HeightThresholds::default()).unwrap();
        assert!(b.h0_first_branch >= a.h0_first_branch);
        let xi_at = |n_mult: i64| {
            let four_n = Interval::from_bigint(&(BigInt::from(4 * n_mult) * &a.n), 256);
            ln_interval(&Interval::from_ratio(&ratio(129, 128), 256), 256)
                .div(&ln_interval(&four_n, 256))
        };
        assert!(
            xi_at(16).hi.cmp_value(&xi_at(1).lo) == std::cmp::Ordering::Less,
            "xi should decrease in n"
        );
    }

    #[test]
    fn threshold_predicates() {
        assert_eq!(decoupling_threshold(12.0, 0.1), (true, 1.0));
        let (ok, margin) = decoupling_threshold(11.0, 0.1);
        assert!(!ok && margin.abs() < 1e-12);
        let (ok2, margin2) = decoupling_threshold(10.01, 1.0);
        assert!(ok2 && (margin2 - 8.01).abs() < 1e-12);
        assert!(lln_threshold(10.5).0 && !lln_threshold(10.0).0);
    }

    #[test]
    fn alpha_below_horizontal_requirement_is_rejected() {
        // xi ~ 9.3e-5 forces alpha beyond ~10784; a small alpha must fail.
        let input = TheoryInput::new((1, 4), (1, 1), (3, 1), (1, 2)).unwrap();
        assert!(bootstrap_constants(&input, HeightThresholds::default()).is_err());
        // With xi capped low... and a matching alpha it passes.
        let ok = TheoryInput::new((1, 4), (1, 1), (20000, 1), (1, 2)).unwrap();
        assert!(bootstrap_constants(&ok, HeightThresholds::default()).is_ok());
    }
}
