//! Random environments `f: Z^2 -> {-1, 0, +1}` with lazy evaluation,
//! declared dependence range, and a decoupling rate of the polynomial form
//! `c (wh + (w+h) r + r^2) r^-e`.
//!
//! Three generators are provided: an i.i.d. baseline, a truncated
//! moving-average Gaussian field, and the confetti coloring. Each admits a
//! decoupled variant: a field that agrees with the original except with
//! probability bounded by the rate, and whose restrictions to a box and to
//! anything at L1 distance beyond `r` are exactly independent (they consume
//! disjoint sets of random keys).

use std::collections::HashMap;

use crate::confetti::{self, ConfettiSpec, RectF, Thinning};
use crate::kernel::Kernel;
use crate::rng::{self, Key, Tag};
use crate::Error;

/// Closed lattice rectangle `[x0, x0+w] x [y0, y0+h]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeRect {
    pub x0: i64,
    pub y0: i64,
    pub w: i64,
    pub h: i64,
}

impl LatticeRect {
    /// L1 distance from a lattice point to the rectangle (0 inside).
    pub fn l1_distance(&self, x: i64, y: i64) -> i64 {
        let dx = (self.x0 - x).max(0).max(x - (self.x0 + self.w));
        let dy = (self.y0 - y).max(0).max(y - (self.y0 + self.h));
        dx + dy
    }

    pub fn as_rect_f(&self) -> RectF {
        RectF {
            x0: self.x0 as f64,
            y0: self.y0 as f64,
            x1: (self.x0 + self.w) as f64,
            y1: (self.y0 + self.h) as f64,
        }
    }
}

/// Generator families.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    /// Site signs i.i.d.: `+1` w.p. `p_plus`, `-1` w.p. `p_minus`, else 0.
    Iid { p_plus: f64, p_minus: f64 },
    /// Sign of the truncated moving-average Gaussian field
    /// `g_x = sum over |y - x|_1 <= radius/2 of q(x - y) W_y`.
    Gaussian { kernel: Kernel, radius: i64 },
    /// Confetti coloring evaluated at lattice points.
    Confetti(ConfettiSpec),
}

/// Extra truncation window turning an environment into its decoupled
/// variant relative to a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoupleWindow {
    pub rect: LatticeRect,
    pub r: i64,
}

/// Declared decoupling rate `epsilon(w, h, r) = constant * (wh + (w+h) r +
/// r^2) * r^-exponent`, with constants derived at construction so that the
/// formula dominates the exact disagreement bound of the implemented
/// coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecouplingRate {
    pub constant: f64,
    pub exponent: f64,
}

/// Evaluate the polynomial decoupling rate shape.
pub fn epsilon_rate_formula(constant: f64, exponent: f64, w: f64, h: f64, r: f64) -> f64 {
    constant * (w * h + (w + h) * r + r * r) * r.powf(-exponent)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    kind: EnvKind,
    decouple: Option<DecoupleWindow>,
    rate: DecouplingRate,
    dependence_range: f64,
}

impl Environment {
    pub fn iid(p_plus: f64, p_minus: f64) -> Result<Self, Error> {
        if !(p_plus >= 0.0 && p_minus >= 0.0 && p_plus + p_minus <= 1.0) {
            return Err(Error::InvalidParameter(
                "iid sign probabilities must be nonnegative with sum <= 1".into(),
            ));
        }
        Ok(Environment {
            kind: EnvKind::Iid { p_plus, p_minus },
            decouple: None,
            rate: DecouplingRate { constant: 0.0, exponent: 1.0 },
            dependence_range: 0.0,
        })
    }

    /// Fair three-valued i.i.d. environment is the usual baseline.
    pub fn iid_symmetric() -> Self {
        Environment::iid(0.5, 0.5).expect("valid")
    }

    pub fn gaussian(kernel: Kernel, radius: i64) -> Result<Self, Error> {
        kernel.validate()?;
        if radius < 2 || radius % 2 != 0 {
            return Err(Error::InvalidParameter(
                "truncation radius must be an even integer >= 2".into(),
            ));
        }
        let rate = gaussian_rate(&kernel, radius);
        Ok(Environment {
            kind: EnvKind::Gaussian { kernel, radius },
            decouple: None,
            rate,
            dependence_range: radius as f64,
        })
    }

    /// Gaussian environment with the default truncation radius for the
    /// kernel (tail bound below 1e-6 at one truncated standard deviation).
    pub fn gaussian_default(kernel: Kernel) -> Result<Self, Error> {
        let radius = kernel.default_truncation_radius();
        Environment::gaussian(kernel, radius)
    }

    pub fn confetti(spec: ConfettiSpec) -> Result<Self, Error> {
        spec.validate()?;
        verify_tail_bound(&spec)?;
        let rate = confetti_rate(&spec);
        let range = 2.0 * spec.r_pad;
        Ok(Environment {
            kind: EnvKind::Confetti(spec),
            decouple: None,
            rate,
            dependence_range: range,
        })
    }

    pub fn kind(&self) -> &EnvKind {
        &self.kind
    }

    pub fn decouple_window(&self) -> Option<DecoupleWindow> {
        self.decouple
    }

    /// Distance beyond which field values are independent (L1 for the
    /// Gaussian window construction, Euclidean for confetti balls).
    pub fn dependence_range(&self) -> f64 {
        self.dependence_range
    }

    pub fn decoupling_rate(&self) -> DecouplingRate {
        self.rate
    }

    /// The declared decoupling decay rate at box dimensions `(w, h)` and
    /// separation `r`. The i.i.d. field is already independent, so its rate
    /// is identically zero for `r >= 1`.
    pub fn epsilon_bound(&self, w: f64, h: f64, r: f64) -> f64 {
        match self.kind {
            EnvKind::Iid { .. } => 0.0,
            _ => epsilon_rate_formula(self.rate.constant, self.rate.exponent, w, h, r),
        }
    }

    /// The decoupled variant `f^{C, r}`: same seed and generator, modified
    /// truncation schedule. Restrictions to `A` inside `rect` and to any set
    /// at L1 distance beyond `r` consume disjoint key sets.
    pub fn decoupled_variant(&self, rect: LatticeRect, r: i64) -> Result<Self, Error> {
        if r < 2 {
            return Err(Error::InvalidParameter("decoupling range must be >= 2".into()));
        }
        if rect.w < 1 || rect.h < 1 {
            return Err(Error::InvalidParameter("decoupling box needs width, height >= 1".into()));
        }
        match self.kind {
            EnvKind::Iid { .. } => Ok(self.clone()),
            _ => Ok(Environment {
                decouple: Some(DecoupleWindow { rect, r }),
                ..self.clone()
            }),
        }
    }

    /// Sign at a lattice site; a pure function of `(seed, site)`.
    pub fn sign_at(&self, seed: u64, site: (i64, i64)) -> i8 {
        self.sampler(seed).sign(site.0, site.1)
    }

    /// A cached evaluator for bulk reads under one seed.
    pub fn sampler(&self, seed: u64) -> EnvSampler<'_> {
        EnvSampler {
            env: self,
            seed,
            deviates: HashMap::new(),
            windows: HashMap::new(),
            signs: HashMap::new(),
        }
    }

    /// Truncation radius used by this environment (with its decoupling
    /// schedule applied) at a given site; Gaussian only.
    fn truncation_at(&self, radius: i64, x: i64, y: i64) -> i64 {
        match self.decouple {
            None => radius,
            Some(DecoupleWindow { rect, r }) => {
                let d = rect.l1_distance(x, y);
                radius.min(if d <= r { r } else { d })
            }
        }
    }

    fn confetti_thinning(&self) -> Option<Thinning> {
        self.decouple.map(|DecoupleWindow { rect, r }| Thinning {
            rect: rect.as_rect_f(),
            // Radius threshold r / (2 sqrt 2): any kept ball touching the
            // box then lies at L1 distance < r from whatever else it covers,
            // which is what makes the variant exactly r-range independent.
            threshold: r as f64 / (2.0 * std::f64::consts::SQRT_2),
        })
    }

    /// Exact upper bound on `P(f != f^{C,r})` for the implemented coupling:
    /// a per-site union bound for the Gaussian field, the expected number of
    /// dropped balls for confetti. This is the quantity the declared rate
    /// formula is calibrated to dominate.
    pub fn exact_disagreement_bound(&self, rect: LatticeRect, r: i64) -> f64 {
        match &self.kind {
            EnvKind::Iid { .. } => 0.0,
            EnvKind::Gaussian { kernel, radius } => {
                gaussian_union_bound(kernel, *radius, rect.w as f64, rect.h as f64, r)
            }
            EnvKind::Confetti(spec) => {
                confetti_expected_drops(spec, rect.w as f64, rect.h as f64, r)
            }
        }
    }

    /// Margin around the decoupling box outside of which base and variant
    /// agree surely; used by the empirical disagreement tests.
    pub fn decoupling_support_margin(&self) -> i64 {
        match &self.kind {
            EnvKind::Iid { .. } => 0,
            EnvKind::Gaussian { radius, .. } => *radius,
            EnvKind::Confetti(spec) => (2.0 * spec.r_pad).ceil() as i64 + 1,
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match &self.kind {
            EnvKind::Iid { p_plus, p_minus } => format!("iid({p_plus},{p_minus})"),
            EnvKind::Gaussian { kernel, radius } => format!("gaussian({kernel:?},R={radius})"),
            EnvKind::Confetti(spec) => format!("confetti({:?},pad={})", spec.law, spec.r_pad),
        }
    }
}

/// Truncated-field value `g^R_x` for a kernel and radius, outside of any
/// environment (used by tests and the covariance audits).
pub fn gaussian_value_at(kernel: &Kernel, radius: i64, seed: u64, site: (i64, i64)) -> f64 {
    let mut sum = 0.0;
    for (dx, dy, w) in kernel.window_weights(radius) {
        sum += w * rng::gaussian_at(Key::new(seed, Tag::EnvNoise, &[site.0 - dx, site.1 - dy]));
    }
    sum
}

/// Evaluator with per-seed caches for the deviates, window weights and
/// computed signs. Cheap to create; intended to live for one Monte Carlo
/// sample.
pub struct EnvSampler<'a> {
    env: &'a Environment,
    seed: u64,
    deviates: HashMap<(i64, i64), f64>,
    windows: HashMap<i64, std::rc::Rc<Vec<(i64, i64, f64)>>>,
    signs: HashMap<(i64, i64), i8>,
}

impl<'a> EnvSampler<'a> {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Environment sign at a lattice site.
    pub fn sign(&mut self, x: i64, n: i64) -> i8 {
        match &self.env.kind {
            EnvKind::Iid { p_plus, p_minus } => {
                let u = rng::uniform_at(Key::new(self.seed, Tag::EnvNoise, &[x, n]));
                if u < *p_plus {
                    1
                } else if u < p_plus + p_minus {
                    -1
                } else {
                    0
                }
            }
            EnvKind::Gaussian { .. } => {
                if let Some(&s) = self.signs.get(&(x, n)) {
                    return s;
                }
                let g = self.gaussian_value(x, n);
                // The zero set of the field has measure zero; collapsing it
                // into the positive branch keeps the step rule two-valued.
                let s = if g >= 0.0 { 1 } else { -1 };
                self.signs.insert((x, n), s);
                s
            }
            EnvKind::Confetti(spec) => {
                if let Some(&s) = self.signs.get(&(x, n)) {
                    return s;
                }
                let thin = self.env.confetti_thinning();
                let s = confetti::color_at(spec, self.seed, (x as f64, n as f64), thin.as_ref());
                self.signs.insert((x, n), s);
                s
            }
        }
    }

    /// Truncated-field value at a site, honoring the decoupling schedule.
    pub fn gaussian_value(&mut self, x: i64, n: i64) -> f64 {
        let EnvKind::Gaussian { kernel, radius } = &self.env.kind else {
            panic!("gaussian_value on a non-gaussian environment");
        };
        let trunc = self.env.truncation_at(*radius, x, n);
        let window = self
            .windows
            .entry(trunc)
            .or_insert_with(|| std::rc::Rc::new(kernel.window_weights(trunc)))
            .clone();
        let mut sum = 0.0;
        for &(dx, dy, w) in window.iter() {
            let site = (x - dx, n - dy);
            let dev = *self
                .deviates
                .entry(site)
                .or_insert_with(|| rng::gaussian_at(Key::new(self.seed, Tag::EnvNoise, &[site.0, site.1])));
            sum += w * dev;
        }
        sum
    }

    /// Walk noise `U` at a lattice node (independent stream from the signs).
    pub fn walk_uniform(&self, x: i64, n: i64) -> f64 {
        rng::uniform_at(Key::new(self.seed, Tag::WalkNoise, &[x, n]))
    }
}

// ---------------------------------------------------------------------------
// Rate-constant derivations.

/// Per-site disagreement probability between signs of the truncations at
/// radii `rho <= big` of the same field: for jointly Gaussian values the
/// orthant formula gives exactly `acos(corr) / pi`, and the correlation of
/// nested truncations is `sqrt(v(rho) / v(big))`.
fn gaussian_site_flip(kernel: &Kernel, v_big: f64, rho: i64) -> f64 {
    let v = kernel.truncated_variance(rho);
    if v >= v_big {
        return 0.0;
    }
    (v / v_big).sqrt().clamp(-1.0, 1.0).acos() / std::f64::consts::PI
}

fn gaussian_rate(kernel: &Kernel, radius: i64) -> DecouplingRate {
    let (_, beta) = kernel.decay();
    let exponent = if beta.is_finite() { beta - 1.5 } else { 8.5 };
    let v_big = kernel.truncated_variance(radius);
    let flip: Vec<f64> =
        (0..=radius).map(|rho| gaussian_site_flip(kernel, v_big, rho)).collect();
    let mut constant: f64 = 0.0;
    for r in 2..radius {
        let p_r = flip[r as usize];
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for k in (r + 1)..radius {
            s0 += flip[k as usize];
            s1 += k as f64 * flip[k as usize];
        }
        let rf = r as f64;
        // Union bound: p(r) * #{d(x,C) <= r} + sum over rings of
        // (2(w+h) + 4k) p(k), compared coefficientwise in {wh, w+h, 1}
        // against (wh + (w+h) r + r^2) r^-exponent.
        let scale = rf.powf(exponent);
        constant = constant
            .max(p_r * scale)
            .max((p_r * (1.0 + 2.0 * rf) + 2.0 * s0) * scale / rf)
            .max((p_r * (1.0 + 6.0 * rf + 2.0 * rf * rf) + 4.0 * s1) * scale / (rf * rf));
    }
    DecouplingRate { constant, exponent }
}

/// Exact union bound on the Gaussian variant disagreement for a `w x h` box
/// and separation `r`.
fn gaussian_union_bound(kernel: &Kernel, radius: i64, w: f64, h: f64, r: i64) -> f64 {
    if r >= radius {
        return 0.0;
    }
    let v_big = kernel.truncated_variance(radius);
    let p_r = gaussian_site_flip(kernel, v_big, r);
    let near_count =
        (w + 1.0) * (h + 1.0) + 2.0 * r as f64 * (w + h) + 2.0 * (r * (r + 1)) as f64;
    let mut total = p_r * near_count;
    for k in (r + 1)..radius {
        total += (2.0 * (w + h) + 4.0 * k as f64) * gaussian_site_flip(kernel, v_big, k);
    }
    total
}

fn verify_tail_bound(spec: &ConfettiSpec) -> Result<(), Error> {
    let (c1, alpha) = spec.law.tail_bound();
    let mut s = 0.05f64;
    while s < 64.0 {
        if spec.law.tail(s) > c1 * s.powf(-alpha) * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "declared tail bound ({c1}, {alpha}) violated at radius {s}"
            )));
        }
        s *= 1.07;
    }
    Ok(())
}

/// `(integral of tail, integral of rho * tail)` over `[a, b]`.
fn tail_integrals(law: &confetti::RadiusLaw, a: f64, b: f64) -> (f64, f64) {
    use confetti::RadiusLaw::*;
    if b <= a {
        return (0.0, 0.0);
    }
    let pareto = |alpha: f64, rm: f64| {
        // T = 1 on [a, min(b, rm)], (rm/rho)^alpha beyond.
        let flat_hi = b.min(rm).max(a);
        let mut i0 = (flat_hi - a).max(0.0);
        let mut i1 = (flat_hi * flat_hi - a * a).max(0.0) / 2.0;
        let lo = a.max(rm);
        if b > lo {
            let c = rm.powf(alpha);
            i0 += c * (b.powf(1.0 - alpha) - lo.powf(1.0 - alpha)) / (1.0 - alpha);
            i1 += c * (b.powf(2.0 - alpha) - lo.powf(2.0 - alpha)) / (2.0 - alpha);
        }
        (i0, i1)
    };
    match law {
        Deterministic { r0 } => {
            let hi = b.min(*r0);
            if hi <= a {
                (0.0, 0.0)
            } else {
                (hi - a, (hi * hi - a * a) / 2.0)
            }
        }
        Pareto { alpha, r_min } => pareto(*alpha, *r_min),
        ExpOfExponential { rate } => pareto(*rate, 1.0),
    }
}

/// Expected number of balls the variant drops relative to the base field:
/// balls with radius in `[r / (2 sqrt 2), r_pad)` touching the box.
fn confetti_expected_drops(spec: &ConfettiSpec, w: f64, h: f64, r: i64) -> f64 {
    let thr = r as f64 / (2.0 * std::f64::consts::SQRT_2);
    if thr >= spec.r_pad {
        return 0.0;
    }
    let t_pad = spec.law.tail(spec.r_pad);
    let t_thr = (spec.law.tail(thr) - t_pad).max(0.0);
    let near_area = w * h + 2.0 * thr * (w + h) + std::f64::consts::PI * thr * thr;
    let (i0_raw, i1_raw) = tail_integrals(&spec.law, thr, spec.r_pad);
    let i0 = (i0_raw - t_pad * (spec.r_pad - thr)).max(0.0);
    let i1 = (i1_raw - t_pad * (spec.r_pad * spec.r_pad - thr * thr) / 2.0).max(0.0);
    t_thr * near_area + 2.0 * (w + h) * i0 + 2.0 * std::f64::consts::PI * i1
}

fn confetti_rate(spec: &ConfettiSpec) -> DecouplingRate {
    let (_, alpha) = spec.law.tail_bound();
    let exponent = alpha;
    let r_max = (2.0 * std::f64::consts::SQRT_2 * spec.r_pad).ceil() as i64 + 1;
    let mut constant: f64 = 0.0;
    for r in 2..=r_max {
        let thr = r as f64 / (2.0 * std::f64::consts::SQRT_2);
        if thr >= spec.r_pad {
            continue;
        }
        let t_pad = spec.law.tail(spec.r_pad);
        let t_thr = (spec.law.tail(thr) - t_pad).max(0.0);
        let (i0_raw, i1_raw) = tail_integrals(&spec.law, thr, spec.r_pad);
        let i0 = (i0_raw - t_pad * (spec.r_pad - thr)).max(0.0);
        let i1 = (i1_raw - t_pad * (spec.r_pad * spec.r_pad - thr * thr) / 2.0).max(0.0);
        let rf = r as f64;
        let scale = rf.powf(exponent);
        constant = constant
            .max(t_thr * scale)
            .max((t_thr * 2.0 * thr + 2.0 * i0) * scale / rf)
            .max(
                (t_thr * std::f64::consts::PI * thr * thr + 2.0 * std::f64::consts::PI * i1)
                    * scale
                    / (rf * rf),
            );
    }
    DecouplingRate { constant, exponent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confetti::RadiusLaw;

    #[test]
    fn iid_degenerate_is_all_plus() {
        let env = Environment::iid(1.0, 0.0).unwrap();
        for site in [(0, 0), (5, -3), (-100, 77)] {
            assert_eq!(env.sign_at(42, site), 1);
        }
    }

    #[test]
    fn indicator_kernel_field_is_raw_deviate() {
        let env = Environment::gaussian(Kernel::Indicator, 4).unwrap();
        let mut sampler = env.sampler(7);
        for site in [(0i64, 0i64), (3, 9), (-2, 5)] {
            let g = sampler.gaussian_value(site.0, site.1);
            let w = rng::gaussian_at(Key::new(7, Tag::EnvNoise, &[site.0, site.1]));
            assert_eq!(g.to_bits(), w.to_bits());
        }
        // Sign symmetry of the raw deviate: binomial CI at n = 2e4.
        let n = 20_000u64;
        let plus = (0..n).filter(|&s| env.sign_at(s, (1, 1)) == 1).count() as f64;
        assert!((plus / n as f64 - 0.5).abs() < 0.011);
    }

    #[test]
    fn bargmann_fock_empirical_variance_matches_exact() {
        // Relative standard error of a variance over n samples is
        // sqrt(2/n); n = 2e4 gives 1%; tolerance 3 sigma.
        let kernel = Kernel::BargmannFock { scale: 1.0 };
        let env = Environment::gaussian(kernel.clone(), 12).unwrap();
        let n = 20_000u64;
        let mut s2 = 0.0;
        for seed in 0..n {
            let g = env.sampler(seed).gaussian_value(0, 0);
            s2 += g * g;
        }
        let var = s2 / n as f64;
        let exact = kernel.truncated_variance(12);
        assert!(
            (var / exact - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(),
            "var {var} vs exact {exact}"
        );
    }

    #[test]
    fn disjoint_windows_are_exactly_independent() {
        // Sites at L1 distance radius + 1 share no deviate keys; their
        // empirical correlation over seeds is pure noise (3/sqrt(n)).
        let env = Environment::gaussian(Kernel::BargmannFock { scale: 1.0 }, 8).unwrap();
        let n = 20_000u64;
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for seed in 0..n {
            let mut s = env.sampler(seed);
            let a = s.gaussian_value(0, 0);
            let b = s.gaussian_value(9, 0);
            sx += a;
            sy += b;
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        let nf = n as f64;
        let corr = (sxy / nf - sx * sy / (nf * nf))
            / ((sxx / nf - sx * sx / (nf * nf)) * (syy / nf - sy * sy / (nf * nf))).sqrt();
        assert!(corr.abs() < 3.0 / nf.sqrt() + 0.01, "corr {corr}");
    }

    #[test]
    fn epsilon_formula_trivial_arithmetic() {
        // (1*1 + 2*1 + 1) * 1^-e = 4 regardless of exponent.
        assert_eq!(epsilon_rate_formula(1.0, 2.5, 1.0, 1.0, 1.0), 4.0);
        // (6 + 10 + 4) * 2^-4 = 1.25.
        assert_eq!(epsilon_rate_formula(1.0, 4.0, 2.0, 3.0, 2.0), 1.25);
    }

    #[test]
    fn iid_epsilon_is_zero_and_variant_is_identity() {
        let env = Environment::iid_symmetric();
        assert_eq!(env.epsilon_bound(5.0, 7.0, 3.0), 0.0);
        let rect = LatticeRect { x0: 0, y0: 0, w: 4, h: 4 };
        let variant = env.decoupled_variant(rect, 2).unwrap();
        assert_eq!(variant, env);
    }

    #[test]
    fn gaussian_variant_matches_base_when_r_dominates() {
        let env = Environment::gaussian(Kernel::BargmannFock { scale: 1.0 }, 8).unwrap();
        let rect = LatticeRect { x0: -2, y0: -2, w: 4, h: 4 };
        let variant = env.decoupled_variant(rect, 8).unwrap();
        for seed in 0..50u64 {
            for x in -12..=12i64 {
                for y in -12..=12i64 {
                    assert_eq!(env.sign_at(seed, (x, y)), variant.sign_at(seed, (x, y)));
                }
            }
        }
    }

    #[test]
    fn declared_rate_dominates_exact_bound() {
        let envs = [
            Environment::gaussian(Kernel::BargmannFock { scale: 1.0 }, 12).unwrap(),
            Environment::confetti(ConfettiSpec {
                law: RadiusLaw::Pareto { alpha: 3.0, r_min: 1.0 },
                r_pad: 6.0,
            })
            .unwrap(),
        ];
        for env in envs {
            for (w, h) in [(1i64, 1i64), (4, 7), (20, 20), (3, 50)] {
                for r in 2..=20i64 {
                    let rect = LatticeRect { x0: 0, y0: 0, w, h };
                    let exact = env.exact_disagreement_bound(rect, r);
                    let declared = env.epsilon_bound(w as f64, h as f64, r as f64);
                    assert!(
                        exact <= declared * (1.0 + 1e-9) + 1e-12,
                        "{}: exact {exact} > declared {declared} at w={w} h={h} r={r}",
                        env.label()
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Environment::iid(0.7, 0.7).is_err());
        assert!(Environment::gaussian(Kernel::Indicator, 3).is_err());
        assert!(Environment::iid_symmetric()
            .decoupled_variant(LatticeRect { x0: 0, y0: 0, w: 2, h: 2 }, 1)
            .is_err());
        assert!(Environment::confetti(ConfettiSpec {
            law: RadiusLaw::Pareto { alpha: 1.5, r_min: 1.0 },
            r_pad: 4.0,
        })
        .is_err());
    }
}
