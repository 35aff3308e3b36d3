//! The fluctuation scale `w(h)`: the width at which horizontal and vertical
//! crossings of a `w x h` box are equally likely when averaged over anchors
//! in the unit rhombus.
//!
//! The averaged horizontal probability `d1(w)` is estimated on shared
//! samples for an entire width grid at once: for one realization the walk
//! family from the left face is independent of the right face position, so
//! one pass records the maximal rightward reach and every `w` reads its
//! indicator off that number. The averaged vertical probability is
//! `d2 = 1 - d1` exactly, mirroring the complement identity between
//! reflected vertical crossings and reverse horizontal crossings.

use rayon::prelude::*;

use crate::cross::{deterministic_blocks, estimate_crossing, estimate_joint, CrossSpec};
use crate::env::Environment;
use crate::rng::{self, Key, Tag};
use crate::stats::{Estimate, Z_95};
use crate::walk::{at_node, carrier_move, representative_starts, step_at, FaceSeg, WalkParams};
use crate::Error;

/// One grid point of the balance curve.
#[derive(Debug, Clone)]
pub struct BalancePoint {
    pub w: f64,
    pub d1: Estimate,
}

/// The estimated fluctuation scale at one height.
#[derive(Debug, Clone)]
pub struct ScalePoint {
    pub h: f64,
    pub w_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_per_grid_point: u64,
}

/// Uniform draw on the rhombus `|x| + |y| <= 1` by rejection from the
/// square, using the sample's anchor stream.
pub fn anchor_in_rhombus(seed: u64) -> (f64, f64) {
    let key = Key::new(seed, Tag::Anchor, &[]);
    let mut j = 0u64;
    loop {
        let x = crate::walk::snap(2.0 * rng::uniform_word(key, 2 * j) - 1.0);
        let y = crate::walk::snap(2.0 * rng::uniform_word(key, 2 * j + 1) - 1.0);
        if x.abs() + y.abs() <= 1.0 {
            return (x, y);
        }
        j += 1;
    }
}

/// Maximal rightward displacement (relative to the left face) reached by
/// the coupled walk family started from the left face of `u + [0, .] x
/// [0, h]`, before leaving through that face, capped at the top. The
/// left-to-right crossing of width `w` occurs exactly when this is `>= w`.
pub fn max_right_reach(
    env: &Environment,
    params: &WalkParams,
    seed: u64,
    u: (f64, f64),
    h: f64,
) -> f64 {
    let u = (crate::walk::snap(u.0), crate::walk::snap(u.1));
    let h = crate::walk::snap(h);
    let left = u.0;
    let top = u.1 + h;
    let mut field = env.sampler(seed);
    let mut memo: std::collections::HashMap<(i64, i64), f64> = std::collections::HashMap::new();
    let starts = representative_starts(&FaceSeg::Vertical { x: left, y0: u.1, y1: top });
    let mut best = f64::NEG_INFINITY;

    'starts: for start in starts {
        let mut pos = start;
        // Deterministic pre-node portion along the face and the first funnel.
        loop {
            if pos.1 >= top {
                best = best.max(pos.0);
                continue 'starts;
            }
            if at_node(pos.0, pos.1) {
                break;
            }
            let m = carrier_move(pos, None).expect("non-node position");
            if m.slope == -1 {
                // Leaves through the left face immediately.
                best = best.max(pos.0);
                continue 'starts;
            }
            let dt = m.dt.min(top - pos.1);
            pos = (pos.0 + m.slope as f64 * dt, pos.1 + dt);
            best = best.max(pos.0);
            if dt < m.dt {
                continue 'starts; // capped at the top mid-move
            }
        }
        best = best.max(node_reach(
            &mut field,
            params,
            &mut memo,
            (pos.0 as i64, pos.1 as i64),
            left,
            top,
        ));
    }
    best - left
}

fn node_reach(
    field: &mut crate::env::EnvSampler<'_>,
    params: &WalkParams,
    memo: &mut std::collections::HashMap<(i64, i64), f64>,
    node: (i64, i64),
    left: f64,
    top: f64,
) -> f64 {
    let mut path: Vec<(i64, i64)> = Vec::new();
    let mut cur = node;
    let terminal: f64 = loop {
        if let Some(&m) = memo.get(&cur) {
            break m;
        }
        let (x, n) = cur;
        let xf = x as f64;
        if n as f64 >= top {
            break xf;
        }
        path.push(cur);
        let dir = step_at(field.sign(x, n), field.walk_uniform(x, n), params.delta);
        let dt_cap = top - n as f64;
        if dt_cap < 1.0 {
            // Truncated final move.
            break if dir == 1 { xf + dt_cap } else { xf };
        }
        if dir == -1 && (xf - 1.0) < left {
            // Departs through the left face mid-move.
            break xf;
        }
        cur = (x + dir as i64, n + 1);
    };
    let mut reach = terminal;
    for &(x, n) in path.iter().rev() {
        reach = reach.max(x as f64);
        memo.insert((x, n), reach);
    }
    reach
}

/// Shared-sample estimates of `d1` along a width grid.
pub fn balance_curve(
    env: &Environment,
    params: &WalkParams,
    h: f64,
    w_grid: &[f64],
    n_samples: u64,
    master_seed: u64,
) -> Result<Vec<BalancePoint>, Error> {
    let counts = balance_counts(env, params, h, w_grid, n_samples, master_seed)?;
    let totals = fold_counts(&counts, w_grid.len());
    Ok(w_grid
        .iter()
        .zip(totals)
        .map(|(&w, c)| BalancePoint {
            w,
            d1: Estimate::from_counts(c, n_samples, Z_95, master_seed),
        })
        .collect())
}

/// Per-block success counts for each grid width, for bootstrap resampling.
fn balance_counts(
    env: &Environment,
    params: &WalkParams,
    h: f64,
    w_grid: &[f64],
    n_samples: u64,
    master_seed: u64,
) -> Result<Vec<Vec<u64>>, Error> {
    if !(h >= 2.0) {
        return Err(Error::InvalidParameter("height must be >= 2".into()));
    }
    if w_grid.is_empty() || w_grid.windows(2).any(|p| p[0] >= p[1]) || w_grid[0] < 1.0 {
        return Err(Error::InvalidParameter("width grid must be increasing and start >= 1".into()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    Ok(deterministic_blocks(n_samples, |range| {
        let mut counts = vec![0u64; w_grid.len()];
        for i in range {
            let seed = rng::sample_seed(master_seed, i);
            let u = anchor_in_rhombus(seed);
            let reach = max_right_reach(env, params, seed, u, h);
            for (slot, &w) in counts.iter_mut().zip(w_grid) {
                if reach >= w {
                    *slot += 1;
                }
            }
        }
        counts
    }))
}

fn fold_counts(blocks: &[Vec<u64>], k: usize) -> Vec<u64> {
    let mut totals = vec![0u64; k];
    for b in blocks {
        for (t, &c) in totals.iter_mut().zip(b) {
            *t += c;
        }
    }
    totals
}

/// Pool-adjacent-violators fit of a nonincreasing sequence under weights.
pub fn isotonic_nonincreasing(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    // Fit nondecreasing on the negated values.
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new(); // (mean, weight, count)
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((-yi, wi, 1));
        while blocks.len() > 1 {
            let b = blocks[blocks.len() - 1];
            let a = blocks[blocks.len() - 2];
            if a.0 <= b.0 {
                break;
            }
            let merged =
                ((a.0 * a.1 + b.0 * b.1) / (a.1 + b.1), a.1 + b.1, a.2 + b.2);
            blocks.pop();
            blocks.pop();
            blocks.push(merged);
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (mean, _, count) in blocks {
        out.extend(std::iter::repeat_n(-mean, count));
    }
    out
}

/// Width at which a nonincreasing fit crosses 1/2, linearly interpolated on
/// the grid, clamped to `[grid_first, grid_last]`. `None` when the whole fit
/// stays above 1/2.
fn crossing_of_half(grid: &[f64], fit: &[f64]) -> Option<f64> {
    if fit[0] <= 0.5 {
        return Some(grid[0]);
    }
    for i in 1..fit.len() {
        if fit[i] <= 0.5 {
            let (x0, x1) = (grid[i - 1], grid[i]);
            let (y0, y1) = (fit[i - 1], fit[i]);
            if y0 == y1 {
                return Some(x1);
            }
            return Some(x0 + (x1 - x0) * (y0 - 0.5) / (y0 - y1));
        }
    }
    None
}

fn geometric_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64))
        .collect()
}

/// Estimate `w(h)` by isotonic regression of the balance curve and
/// interpolation of its crossing of 1/2, with a block-bootstrap confidence
/// interval and a refinement pass around the coarse bracket.
pub fn estimate_w_of_h(
    env: &Environment,
    params: &WalkParams,
    h: f64,
    n_samples: u64,
    grid_resolution: usize,
    master_seed: u64,
) -> Result<ScalePoint, Error> {
    if grid_resolution < 4 {
        return Err(Error::InvalidParameter("grid resolution must be >= 4".into()));
    }
    let coarse_grid = geometric_grid(1.0, h, grid_resolution);
    let coarse = balance_counts(env, params, h, &coarse_grid, n_samples, master_seed)?;
    let w0 = root_from_counts(&coarse_grid, &coarse, n_samples).ok_or_else(|| {
        Error::Estimation(format!(
            "balance curve stays above 1/2 at every width in [1, {h}]; the crossing scale is not resolved"
        ))
    })?;

    // Refine on a linear grid around the coarse bracket.
    let spread = (coarse_grid[1] / coarse_grid[0]).max(1.3);
    let lo = (w0 / spread).max(1.0);
    let hi = (w0 * spread).min(h);
    let fine_grid: Vec<f64> = if hi > lo {
        (0..grid_resolution)
            .map(|i| lo + (hi - lo) * i as f64 / (grid_resolution - 1) as f64)
            .collect()
    } else {
        coarse_grid.clone()
    };
    let refine_seed = Key::new(master_seed, Tag::Bootstrap, &[1]).word(0);
    let fine = balance_counts(env, params, h, &fine_grid, n_samples, refine_seed)?;
    let w_hat = root_from_counts(&fine_grid, &fine, n_samples)
        .unwrap_or(hi)
        .clamp(1.0, h);

    // Block bootstrap of the refined root.
    let boots = 200usize;
    let n_blocks = fine.len();
    let mut roots: Vec<f64> = (0..boots)
        .into_par_iter()
        .map(|b| {
            let key = Key::new(master_seed, Tag::Bootstrap, &[100 + b as i64]);
            let mut counts = vec![0u64; fine_grid.len()];
            let mut total = 0u64;
            for j in 0..n_blocks {
                let pick = (rng::uniform_word(key, j as u64) * n_blocks as f64) as usize;
                let pick = pick.min(n_blocks - 1);
                let block_len = block_size(pick, n_blocks, n_samples);
                total += block_len;
                for (slot, &c) in counts.iter_mut().zip(&fine[pick]) {
                    *slot += c;
                }
            }
            root_from_fractions(&fine_grid, &counts, total).unwrap_or(h).clamp(1.0, h)
        })
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ci_low = roots[(boots as f64 * 0.025) as usize];
    let ci_high = roots[((boots as f64 * 0.975) as usize).min(boots - 1)];

    Ok(ScalePoint { h, w_hat, ci_low, ci_high, n_per_grid_point: n_samples })
}

fn block_size(index: usize, n_blocks: usize, n_samples: u64) -> u64 {
    let block = 1024u64;
    if index + 1 < n_blocks {
        block
    } else {
        n_samples - block * (n_blocks as u64 - 1)
    }
}

fn root_from_counts(grid: &[f64], blocks: &[Vec<u64>], n: u64) -> Option<f64> {
    root_from_fractions(grid, &fold_counts(blocks, grid.len()), n)
}

fn root_from_fractions(grid: &[f64], counts: &[u64], n: u64) -> Option<f64> {
    let means: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let weights = vec![n as f64; means.len()];
    let fit = isotonic_nonincreasing(&means, &weights);
    crossing_of_half(grid, &fit)
}

/// Weighted least-squares exponent fit of `log w_hat` against `log h`.
/// Returns the slope with a 95% confidence interval.
pub fn fit_exponent(points: &[ScalePoint]) -> Result<(f64, (f64, f64)), Error> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 scale points".into()));
    }
    let mut hs: Vec<f64> = points.iter().map(|p| p.h).collect();
    hs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    hs.dedup();
    if hs.len() != points.len() {
        return Err(Error::InvalidParameter("heights must be distinct".into()));
    }
    let pts: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| {
            let se_log = if p.ci_high > p.ci_low && p.ci_low > 0.0 {
                ((p.ci_high.ln() - p.ci_low.ln()) / (2.0 * Z_95)).max(1e-6)
            } else {
                1e-6
            };
            (p.h.ln(), p.w_hat.ln(), 1.0 / (se_log * se_log))
        })
        .collect();
    let (slope, _intercept, se) = crate::stats::weighted_least_squares(&pts);
    Ok((slope, (slope - Z_95 * se, slope + Z_95 * se)))
}

/// One audited inequality: `lhs <= rhs` up to `3 sigma` of combined
/// statistical slack. Exact rows carry `sigma = 0`.
#[derive(Debug, Clone)]
pub struct AuditRow {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub sigma: f64,
    pub slack_sigmas: f64,
    pub pass: bool,
}

fn audit_row(id: &str, lhs: f64, rhs: f64, sigma: f64) -> AuditRow {
    let slack = rhs - lhs;
    let slack_sigmas = if sigma > 0.0 {
        slack / sigma
    } else if slack >= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    AuditRow { id: id.to_string(), lhs, rhs, sigma, slack_sigmas, pass: slack_sigmas >= -3.0 }
}

/// Report of the crossing-inequality audit at one height.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub h: f64,
    pub scale: ScalePoint,
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema=audit.v1 inequality_id,lhs,rhs,slack_sigmas,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.9},{:.9},{:.3},{}\n",
                r.id, r.lhs, r.rhs, r.slack_sigmas, r.pass
            ));
        }
        out
    }
}

/// Stretch inequality rows (vertical and horizontal) at integer base
/// geometry `(w, h)` and factor `k`. The spacer heights and widths are 2 or
/// 3, whichever makes the stacked dimension an even integer.
pub fn stretch_rows(
    env: &Environment,
    params: &WalkParams,
    w: f64,
    h: f64,
    k: u32,
    n_samples: u64,
    master_seed: u64,
) -> Result<Vec<AuditRow>, Error> {
    let mut rows = Vec::new();
    let u = (0.25, 0.0);
    let kf = k as f64;
    let even_spacer = |v: f64| if (v as i64) % 2 == 0 { 2.0 } else { 3.0 };

    // Vertical: P(V(w, k(h+h0))) <= P(V(w,h))^k + k eps(w,h,h0).
    let h0 = even_spacer(h);
    let tall = CrossSpec::v_cross(u, w, kf * (h + h0))?;
    let base = CrossSpec::v_cross(u, w, h)?;
    let e_tall = estimate_crossing(env, params, &tall, n_samples, master_seed)?;
    let e_base = estimate_crossing(env, params, &base, n_samples, master_seed ^ 0x5bd1)?;
    let eps = env.epsilon_bound(w, h, h0);
    let rhs = e_base.p_hat.powi(k as i32) + kf * eps;
    let sigma = (e_tall.std_err().powi(2)
        + (kf * e_base.p_hat.powf(kf - 1.0) * e_base.std_err()).powi(2))
    .sqrt();
    rows.push(audit_row(
        &format!("stretch-vertical-k{k}-w{w}-h{h}"),
        e_tall.p_hat,
        rhs,
        sigma,
    ));

    // Horizontal: P(H(k(w+w0), h)) <= P(H(w,h))^k + k eps(w,h,w0).
    let w0 = even_spacer(w);
    let wide = CrossSpec::h_cross(u, kf * (w + w0), h)?;
    let hbase = CrossSpec::h_cross(u, w, h)?;
    let e_wide = estimate_crossing(env, params, &wide, n_samples, master_seed ^ 0xa02b)?;
    let e_hbase = estimate_crossing(env, params, &hbase, n_samples, master_seed ^ 0x7f4a)?;
    let epsh = env.epsilon_bound(w, h, w0);
    let rhsh = e_hbase.p_hat.powi(k as i32) + kf * epsh;
    let sigmah = (e_wide.std_err().powi(2)
        + (kf * e_hbase.p_hat.powf(kf - 1.0) * e_hbase.std_err()).powi(2))
    .sqrt();
    rows.push(audit_row(
        &format!("stretch-horizontal-k{k}-w{w}-h{h}"),
        e_wide.p_hat,
        rhsh,
        sigmah,
    ));
    Ok(rows)
}

/// The structured crossing audit: complement identity, reflection symmetry,
/// stretch inequalities, anchored sup/inf comparisons, FKG positivity, the
/// bottom-middle crossing floor, and monotonicity in height.
pub fn rsw_audit(
    env: &Environment,
    params: &WalkParams,
    h: f64,
    n_samples: u64,
    master_seed: u64,
) -> Result<AuditReport, Error> {
    if !(h >= 4.0) {
        return Err(Error::InvalidParameter("audit needs h >= 4".into()));
    }
    let scale = estimate_w_of_h(env, params, h, n_samples, 12, master_seed)?;
    let w = scale.w_hat;
    let mut rows = Vec::new();

    // Complement identity on shared samples: exact.
    {
        let u = (0.375, 0.25);
        let (bw, bh) = (w.max(2.0), h);
        let v = CrossSpec::v_cross(u, bw, bh)?;
        let hrev = CrossSpec::h_cross_reversed(u, bw, bh)?;
        let joint = estimate_joint(env, params, &[v, hrev], n_samples.min(20_000), master_seed)?;
        rows.push(audit_row(
            "complement-v-plus-revh-equals-1",
            (joint.estimates[0].p_hat + joint.estimates[1].p_hat - 1.0).abs(),
            0.0,
            0.0,
        ));
    }

    // Reflection symmetry of H and reverse H at an anchor with
    // pi1(u) + w/2 integer: an even width anchored at the origin.
    {
        let bw = (2.0 * (w / 2.0).round()).max(2.0);
        let u = (0.0_f64, 0.0);
        let hf = CrossSpec::h_cross(u, bw, h)?;
        let hr = CrossSpec::h_cross_reversed(u, bw, h)?;
        let a = estimate_crossing(env, params, &hf, n_samples, master_seed ^ 0x11)?;
        let b = estimate_crossing(env, params, &hr, n_samples, master_seed ^ 0x12)?;
        let sigma = (a.std_err().powi(2) + b.std_err().powi(2)).sqrt();
        rows.push(audit_row("symmetry-h-vs-revh", (a.p_hat - b.p_hat).abs(), 0.0, sigma));
    }

    // Stretch inequalities for k = 2, 3.
    let wi = w.round().clamp(2.0, h - 1.0);
    for k in [2u32, 3] {
        rows.extend(stretch_rows(env, params, wi, h, k, n_samples, master_seed ^ k as u64)?);
    }

    // Anchored sup/inf chain: P(H^u(w+4, h)) <= P(H^0(w+2, h+2)) <=
    // P(H^u(w, h+4)) for u in the rhombus.
    {
        let u = (0.5, -0.25);
        let wa = (wi + 4.0).min(h);
        let specs = [
            CrossSpec::h_cross(u, wa, h)?,
            CrossSpec::h_cross((0.0, 0.0), wa - 2.0, h + 2.0)?,
            CrossSpec::h_cross(u, wa - 4.0, h + 4.0)?,
        ];
        let ests: Vec<Estimate> = specs
            .iter()
            .enumerate()
            .map(|(i, s)| estimate_crossing(env, params, s, n_samples, master_seed ^ (0x30 + i as u64)))
            .collect::<Result<_, _>>()?;
        for i in 0..2 {
            let sigma = (ests[i].std_err().powi(2) + ests[i + 1].std_err().powi(2)).sqrt();
            rows.push(audit_row(
                &format!("supinf-h-step{i}"),
                ests[i].p_hat,
                ests[i + 1].p_hat,
                sigma,
            ));
        }
    }

    // FKG: increasing crossing events are nonnegatively correlated.
    {
        let u = (0.25, 0.0);
        let bw = wi.max(2.0);
        let pairs: Vec<(CrossSpec, CrossSpec)> = vec![
            (CrossSpec::h_cross(u, bw, h)?, CrossSpec::h_cross((u.0, u.1 + 2.0), bw, h)?),
            (CrossSpec::h_cross(u, bw, h)?, CrossSpec::v_cross(u, bw, h)?),
            (CrossSpec::v_cross(u, bw, h)?, CrossSpec::v_cross((u.0 + 1.0, u.1), bw, h)?),
        ];
        for (i, (a, b)) in pairs.into_iter().enumerate() {
            let joint = estimate_joint(
                env,
                params,
                &[a, b],
                n_samples.min(20_000),
                master_seed ^ (0x40 + i as u64),
            )?;
            let pa = joint.estimates[0].p_hat;
            let pb = joint.estimates[1].p_hat;
            let cov = joint.covariance[0][1];
            let n = joint.estimates[0].n as f64;
            // Conservative standard error for the empirical covariance.
            let sigma = ((pa * (1.0 - pa) * pb * (1.0 - pb)).sqrt()
                + pa * pb)
                .sqrt()
                .max(1e-6)
                / n.sqrt();
            rows.push(audit_row(&format!("fkg-pair{i}"), -cov, 0.0, sigma));
        }
    }

    // Bottom-middle vertical crossing floor: P(Vdot(w+4, h-4)) > 1/8 at an
    // anchor with pi1(u) + (w+4)/2 integer.
    {
        let bw = wi + 4.0;
        let u0 = (bw / 2.0).round() - bw / 2.0;
        let vdot = CrossSpec::v_dot((u0, 0.0), bw, h - 4.0)?;
        let est = estimate_crossing(env, params, &vdot, n_samples, master_seed ^ 0x50)?;
        rows.push(audit_row("vdot-floor-one-eighth", 0.125, est.p_hat, est.std_err()));
    }

    // Monotonicity of d1 in h on a shared width.
    {
        let grid = [wi.max(1.0)];
        let lo = balance_curve(env, params, h, &grid, n_samples, master_seed ^ 0x60)?;
        let hi = balance_curve(env, params, h + 2.0, &grid, n_samples, master_seed ^ 0x61)?;
        let sigma =
            (lo[0].d1.std_err().powi(2) + hi[0].d1.std_err().powi(2)).sqrt();
        rows.push(audit_row("monotone-d1-in-h", lo[0].d1.p_hat, hi[0].d1.p_hat, sigma));
    }

    // Isotonic fit residual: how far the monotone fit moves the raw curve.
    {
        let grid = geometric_grid(1.0, h, 10);
        let curve = balance_curve(env, params, h, &grid, n_samples, master_seed ^ 0x62)?;
        let raw: Vec<f64> = curve.iter().map(|p| p.d1.p_hat).collect();
        let weights = vec![n_samples as f64; raw.len()];
        let fit = isotonic_nonincreasing(&raw, &weights);
        let worst =
            raw.iter().zip(&fit).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        let sigma = curve.iter().map(|p| p.d1.std_err()).fold(0.0f64, f64::max);
        rows.push(audit_row("isotonic-residual", worst, 0.0, sigma));
    }

    Ok(AuditReport { h, scale, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotonic_fit_matches_known_pav() {
        let y = [1.0, 0.9, 0.95, 0.4, 0.5, 0.1];
        let w = [1.0; 6];
        let fit = isotonic_nonincreasing(&y, &w);
        for p in fit.windows(2) {
            assert!(p[0] >= p[1] - 1e-12);
        }
        // Blocks: {1.0}, {0.9, 0.95} -> 0.925, {0.4, 0.5} -> 0.45, {0.1}.
        let expect = [1.0, 0.925, 0.925, 0.45, 0.45, 0.1];
        for (a, b) in fit.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exponent_fit_recovers_exact_power_laws() {
        let mk = |h: f64, w: f64| ScalePoint {
            h,
            w_hat: w,
            ci_low: w * 0.99,
            ci_high: w * 1.01,
            n_per_grid_point: 1,
        };
        let half: Vec<ScalePoint> =
            [8.0, 16.0, 32.0, 64.0].iter().map(|&h| mk(h, 3.0 * h.sqrt())).collect();
        let (xi, _) = fit_exponent(&half).unwrap();
        assert!((xi - 0.5).abs() < 1e-9, "xi {xi}");
        let flat: Vec<ScalePoint> = [8.0, 16.0, 32.0].iter().map(|&h| mk(h, 5.0)).collect();
        let (xi0, _) = fit_exponent(&flat).unwrap();
        assert!(xi0.abs() < 1e-9);
        assert!(fit_exponent(&half[..2]).is_err());
    }

    #[test]
    fn balance_validation_point_beyond_light_cone_is_zero() {
        let env = Environment::iid_symmetric();
        let params = WalkParams::with_max_ellipticity(0.0).unwrap();
        let h = 4.0;
        let pts =
            balance_curve(&env, &params, h, &[1.0, 2.0, h + 1.0], 2000, 99).unwrap();
        assert_eq!(pts[2].d1.p_hat, 0.0);
        // Already at the minimal height the unit-width crossing has
        // positive probability (a three-step corridor suffices).
        let low = balance_curve(&env, &params, 2.0, &[1.0], 2000, 98).unwrap();
        assert!(low[0].d1.p_hat > 0.0);
    }

    #[test]
    fn max_reach_indicator_matches_general_engine() {
        // The fast path and the generic crossing decision must agree sample
        // by sample, not just in law.
        let env = Environment::iid_symmetric();
        let params = WalkParams::with_max_ellipticity(0.15).unwrap();
        let h = 6.0;
        for seed in 0..400u64 {
            let u = anchor_in_rhombus(seed);
            let reach = max_right_reach(&env, &params, seed, u, h);
            for w in [1.0, 2.5, 4.0] {
                let spec = CrossSpec::h_cross(u, w, h).unwrap();
                let general = crate::cross::crossing_occurs(&env, &params, &spec, seed);
                assert_eq!(
                    reach >= w,
                    general,
                    "fast path disagrees at seed {seed} u {u:?} w {w} (reach {reach})"
                );
            }
        }
    }

    #[test]
    fn w_of_h_stays_in_range_and_is_deterministic() {
        let env = Environment::iid_symmetric();
        let params = WalkParams::with_max_ellipticity(0.0).unwrap();
        let a = estimate_w_of_h(&env, &params, 16.0, 4000, 8, 31).unwrap();
        let b = estimate_w_of_h(&env, &params, 16.0, 4000, 8, 31).unwrap();
        assert_eq!(a.w_hat, b.w_hat);
        assert!(a.w_hat >= 1.0 && a.w_hat <= 16.0);
        assert!(a.ci_low <= a.w_hat && a.w_hat <= a.ci_high);
    }
}
