//! Deterministic, splittable randomness keyed by `(seed, domain tag, coordinates)`.
//!
//! Every value produced anywhere in the crate is a pure function of a
//! [`Key`]: there is no generator state to seed, advance or share. This is
//! what makes lazy infinite fields possible (evaluate any lattice site on
//! demand) and makes Monte Carlo runs independent of worker count and
//! scheduling order.
//!
//! The construction is a keyed counter generator: the key components are
//! absorbed one by one through the SplitMix64 finalizer (a full-avalanche
//! bijection on `u64`), and output word `j` is the finalizer applied to
//! `state + (j + 1) * GOLDEN`, i.e. the SplitMix64 sequence seeded at the
//! absorbed state. The whole pipeline is integer-only, so `uniform_at` is
//! bit-identical across platforms.

/// Domain separation tags. Streams with different tags are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Tag {
    /// Per-site environment noise (Gaussian field deviates `W_y`, i.i.d. signs).
    EnvNoise = 1,
    /// Per-node walk noise `U_u` driving the step rule.
    WalkNoise = 2,
    /// Per-cell germ counts of the confetti point process.
    GermCount = 3,
    /// Germ positions within a cell.
    GermPos = 4,
    /// Germ radii.
    GermRadius = 5,
    /// Germ colors.
    GermColor = 6,
    /// Germ tie-breaking weights.
    GermWeight = 7,
    /// Derivation of per-sample sub-seeds from a master seed.
    SampleIndex = 8,
    /// Anchor draws on the rhombus used by scale estimation.
    Anchor = 9,
    /// Bootstrap resampling inside confidence-interval construction.
    Bootstrap = 10,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: full-avalanche bijection on `u64`.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A fully determined source of randomness: master seed, domain tag and up
/// to four signed lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Key {
    state: u64,
}

impl Key {
    /// Build a key from its components. The coordinate count is absorbed as
    /// well, so `[1]` and `[1, 0]` produce unrelated streams.
    #[inline]
    pub fn new(seed: u64, tag: Tag, coords: &[i64]) -> Self {
        debug_assert!(coords.len() <= 4);
        let mut h = mix64(seed ^ GOLDEN);
        h = mix64(h ^ (tag as u64).wrapping_mul(GOLDEN) ^ ((coords.len() as u64) << 56));
        for &c in coords {
            h = mix64(h ^ (c as u64).wrapping_add(GOLDEN));
        }
        Key { state: h }
    }

    /// Output word `j` of this key's counter stream.
    #[inline]
    pub fn word(&self, j: u64) -> u64 {
        mix64(self.state.wrapping_add((j + 1).wrapping_mul(GOLDEN)))
    }
}

#[inline]
fn to_unit(w: u64) -> f64 {
    // Top 53 bits; exactly representable, value in [0, 1).
    (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform value in `[0, 1)`, a pure function of the key.
#[inline]
pub fn uniform_at(key: Key) -> f64 {
    to_unit(key.word(0))
}

/// Word `j` of the uniform stream attached to a key.
#[inline]
pub fn uniform_word(key: Key, j: u64) -> f64 {
    to_unit(key.word(j))
}

/// Standard normal deviate via the Box-Muller transform of output words 0
/// and 1. The transform is fixed once and for all; changing it would change
/// every field realization.
pub fn gaussian_at(key: Key) -> f64 {
    let u1 = to_unit(key.word(0));
    let u2 = to_unit(key.word(1));
    // 1 - u1 lies in (0, 1], keeping the logarithm finite.
    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
    r * (std::f64::consts::TAU * u2).cos()
}

/// Second deviate of the Box-Muller pair (the sine branch), for callers that
/// need two independent normals per key.
pub fn gaussian_pair_at(key: Key) -> (f64, f64) {
    let u1 = to_unit(key.word(0));
    let u2 = to_unit(key.word(1));
    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Poisson count with the given mean, deterministic in the key.
///
/// Means up to 10 are sampled by CDF inversion on one uniform word. Larger
/// means are split into `ceil(mean / 10)` independent components of equal
/// mean, each sampled by inversion on its own word; the sum is exactly
/// Poisson distributed.
pub fn poisson_count_at(key: Key, mean: f64) -> Result<u64, crate::Error> {
    if !(mean >= 0.0) {
        return Err(crate::Error::InvalidParameter(format!(
            "poisson mean must be nonnegative, got {mean}"
        )));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let parts = (mean / 10.0).ceil() as u64;
    let lambda = mean / parts as f64;
    let mut total = 0u64;
    for j in 0..parts {
        total += poisson_inversion(lambda, to_unit(key.word(j)));
    }
    Ok(total)
}

fn poisson_inversion(lambda: f64, u: f64) -> u64 {
    let mut p = (-lambda).exp();
    let mut cum = p;
    let mut k = 0u64;
    // Poisson(10) mass beyond k = 400 is below 1e-300; the loop terminates
    // long before the cap in all practical cases.
    while u >= cum && k < 400 {
        k += 1;
        p *= lambda / k as f64;
        cum += p;
    }
    k
}

/// Sub-seed for Monte Carlo sample `index`, derived from the master seed.
/// Each sample draws all of its randomness under this seed, so results do
/// not depend on how samples are distributed over workers.
#[inline]
pub fn sample_seed(master_seed: u64, index: u64) -> u64 {
    Key::new(master_seed, Tag::SampleIndex, &[index as i64]).word(0)
}
