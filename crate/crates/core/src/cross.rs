//! Box-crossing events and their Monte Carlo estimators.
//!
//! A crossing event asks whether some walk started in a source region
//! reaches a target region before first leaving the closed box, optionally
//! with reflection at the right face. One sample is decided by running the
//! finitely many representative starts of the source through the move
//! machinery, memoizing the hit-or-exit outcome per visited node, so coupled
//! walks that coalesce are never traced twice.
//!
//! Tie rules are fixed once: touching the target while on the box boundary
//! is a hit, and exiting means leaving the closed box. These make the
//! complement identity between vertical reflected crossings and reverse
//! horizontal crossings exact sample by sample.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::env::Environment;
use crate::rng::sample_seed;
use crate::stats::{Estimate, Z_95};
use crate::walk::{
    at_node, carrier_move, node_move, representative_starts, step_at, FaceSeg, FieldAccess, Move,
    Wall, WallSide, WalkParams,
};
use crate::Error;

/// The box `u + [0, w] x [0, h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpec {
    pub u: (f64, f64),
    pub w: f64,
    pub h: f64,
}

impl BoxSpec {
    /// Anchor and dimensions are snapped to the dyadic coordinate grid.
    pub fn new(u: (f64, f64), w: f64, h: f64) -> Result<Self, Error> {
        let (u, w, h) = ((crate::walk::snap(u.0), crate::walk::snap(u.1)), crate::walk::snap(w), crate::walk::snap(h));
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::InvalidParameter("box needs positive width and height".into()));
        }
        Ok(BoxSpec { u, w, h })
    }

    pub fn x1(&self) -> f64 {
        self.u.0 + self.w
    }

    pub fn y1(&self) -> f64 {
        self.u.1 + self.h
    }

    pub fn left(&self) -> FaceSeg {
        FaceSeg::Vertical { x: self.u.0, y0: self.u.1, y1: self.y1() }
    }

    pub fn right(&self) -> FaceSeg {
        FaceSeg::Vertical { x: self.x1(), y0: self.u.1, y1: self.y1() }
    }

    pub fn bottom(&self) -> FaceSeg {
        FaceSeg::Horizontal { x0: self.u.0, x1: self.x1(), y: self.u.1 }
    }

    pub fn top(&self) -> FaceSeg {
        FaceSeg::Horizontal { x0: self.u.0, x1: self.x1(), y: self.y1() }
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        (self.u.0..=self.x1()).contains(&p.0) && (self.u.1..=self.y1()).contains(&p.1)
    }

    fn face_on_boundary(&self, f: &FaceSeg) -> bool {
        match *f {
            FaceSeg::Vertical { x, y0, y1 } => {
                (x == self.u.0 || x == self.x1()) && y0 >= self.u.1 && y1 <= self.y1()
            }
            FaceSeg::Horizontal { x0, x1, y } => {
                (y == self.u.1 || y == self.y1()) && x0 >= self.u.0 && x1 <= self.x1()
            }
            FaceSeg::Point { x, y } => {
                self.contains((x, y))
                    && (x == self.u.0 || x == self.x1() || y == self.u.1 || y == self.y1())
            }
        }
    }
}

/// The event `[source -> target]` inside a box, with optional reflection at
/// the right face.
///
/// Two refinements pin down boundary ties so that the reflected vertical
/// crossing is the exact complement of the reverse horizontal crossing on
/// every sample: vertical-type walks die the moment they touch the left
/// face (a simultaneous target contact still wins), and horizontal-type
/// targets exclude their top corner, which belongs to the top face.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpec {
    pub bbox: BoxSpec,
    pub source: FaceSeg,
    pub target: FaceSeg,
    pub reflect_right: bool,
    /// A face whose mere contact kills the walk (strict exits elsewhere).
    pub kill_touch: Option<FaceSeg>,
    /// A single point carved out of the target.
    pub target_excludes: Option<(f64, f64)>,
    /// Label used in reports and CSV rows.
    pub name: String,
}

impl CrossSpec {
    fn build(
        bbox: BoxSpec,
        source: FaceSeg,
        target: FaceSeg,
        reflect_right: bool,
        kill_touch: Option<FaceSeg>,
        target_excludes: Option<(f64, f64)>,
        name: &str,
    ) -> Result<Self, Error> {
        let spec = CrossSpec {
            bbox,
            source,
            target,
            reflect_right,
            kill_touch,
            target_excludes,
            name: name.to_string(),
        };
        if !spec.bbox.face_on_boundary(&spec.source) {
            return Err(Error::InvalidParameter(format!(
                "{name}: source does not lie on the box boundary"
            )));
        }
        Ok(spec)
    }

    /// Left-to-right crossing.
    pub fn h_cross(u: (f64, f64), w: f64, h: f64) -> Result<Self, Error> {
        let b = BoxSpec::new(u, w, h)?;
        let corner = Some((b.x1(), b.y1()));
        CrossSpec::build(b, b.left(), b.right(), false, None, corner, "H")
    }

    /// Right-to-left crossing.
    pub fn h_cross_reversed(u: (f64, f64), w: f64, h: f64) -> Result<Self, Error> {
        let b = BoxSpec::new(u, w, h)?;
        let corner = Some((b.u.0, b.y1()));
        CrossSpec::build(b, b.right(), b.left(), false, None, corner, "Hrev")
    }

    /// Bottom-to-top crossing with reflection at the right face.
    pub fn v_cross(u: (f64, f64), w: f64, h: f64) -> Result<Self, Error> {
        let b = BoxSpec::new(u, w, h)?;
        CrossSpec::build(b, b.bottom(), b.top(), true, Some(b.left()), None, "V")
    }

    /// Vertical crossing from the bottom middle point, reflected.
    pub fn v_dot(u: (f64, f64), w: f64, h: f64) -> Result<Self, Error> {
        let b = BoxSpec::new(u, w, h)?;
        let src = FaceSeg::Point { x: b.u.0 + b.w / 2.0, y: b.u.1 };
        CrossSpec::build(b, src, b.top(), true, Some(b.left()), None, "Vdot")
    }

    /// Bottom middle point to the left portion `[0, z]` of the top face,
    /// reflected.
    pub fn v_dot_dot(u: (f64, f64), w: f64, h: f64, z: f64) -> Result<Self, Error> {
        if !(z >= 0.0 && z <= w) {
            return Err(Error::InvalidParameter("target width z must lie in [0, w]".into()));
        }
        let b = BoxSpec::new(u, w, h)?;
        let src = FaceSeg::Point { x: b.u.0 + b.w / 2.0, y: b.u.1 };
        let tgt = FaceSeg::Horizontal { x0: b.u.0, x1: b.u.0 + crate::walk::snap(z), y: b.y1() };
        CrossSpec::build(b, src, tgt, true, Some(b.left()), None, "Vdotdot")
    }

    pub fn wall(&self) -> Option<Wall> {
        self.reflect_right.then(|| Wall { a: self.bbox.x1(), side: WallSide::KeepLeft })
    }

    fn hits_at(&self, p: (f64, f64)) -> bool {
        self.target.contains(p) && self.target_excludes != Some(p)
    }
}

/// Earliest target contact within a move from `pos`, in `[0, dt]`.
fn target_hit(pos: (f64, f64), m: Move, target: &FaceSeg) -> Option<f64> {
    let (x, t) = pos;
    let s = m.slope as f64;
    match *target {
        FaceSeg::Vertical { x: xt, y0, y1 } => {
            if m.slope == 0 {
                if x != xt {
                    return None;
                }
                let tau = (y0 - t).max(0.0);
                (tau <= m.dt && t + tau <= y1).then_some(tau)
            } else {
                let tau = (xt - x) * s; // (xt - x) / s with s = +-1
                (tau >= 0.0 && tau <= m.dt && t + tau >= y0 && t + tau <= y1).then_some(tau)
            }
        }
        FaceSeg::Horizontal { x0, x1, y } => {
            let tau = y - t;
            (tau >= 0.0 && tau <= m.dt && {
                let xp = x + s * tau;
                (x0..=x1).contains(&xp)
            })
            .then_some(tau)
        }
        FaceSeg::Point { x: xt, y: yt } => {
            let tau = yt - t;
            (tau >= 0.0 && tau <= m.dt && x + s * tau == xt).then_some(tau)
        }
    }
}

/// First instant within a move after which the walk is strictly outside the
/// closed box, if any. Contact exactly at the move end is not a departure.
fn box_departure(pos: (f64, f64), m: Move, b: &BoxSpec) -> Option<f64> {
    let (x, t) = pos;
    let mut tau_e = f64::INFINITY;
    match m.slope {
        1 => {
            let tau = b.x1() - x;
            if tau < m.dt {
                tau_e = tau_e.min(tau);
            }
        }
        -1 => {
            let tau = x - b.u.0;
            if tau < m.dt {
                tau_e = tau_e.min(tau);
            }
        }
        _ => {}
    }
    let tau_top = b.y1() - t;
    if tau_top < m.dt {
        tau_e = tau_e.min(tau_top);
    }
    tau_e.is_finite().then_some(tau_e)
}

/// Outcome scanner shared by the sampler and the exact oracles.
pub(crate) enum Scan {
    Hit,
    Exit,
    Continue((f64, f64)),
}

pub(crate) fn scan_move(pos: (f64, f64), m: Move, spec: &CrossSpec) -> Scan {
    let hit = target_hit(pos, m, &spec.target).filter(|&tau| {
        let p = (pos.0 + m.slope as f64 * tau, pos.1 + tau);
        spec.target_excludes != Some(p)
    });
    // Contact with the kill face is terminal even on the boundary, while
    // the box proper is only exited by strictly leaving it.
    let kill = spec.kill_touch.as_ref().and_then(|f| target_hit(pos, m, f));
    let exit = box_departure(pos, m, &spec.bbox);
    let dead = match (kill, exit) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(f64::INFINITY).min(b.unwrap_or(f64::INFINITY))),
    };
    match (hit, dead) {
        (Some(th), Some(td)) if th <= td => Scan::Hit,
        (Some(_), None) => Scan::Hit,
        (_, Some(_)) => Scan::Exit,
        (None, None) => Scan::Continue((pos.0 + m.slope as f64 * m.dt, pos.1 + m.dt)),
    }
}

/// Terminal state at a position itself: target contact wins over kill-face
/// contact.
pub(crate) fn instant_state(pos: (f64, f64), spec: &CrossSpec) -> Option<bool> {
    if spec.hits_at(pos) {
        return Some(true);
    }
    if spec.kill_touch.as_ref().is_some_and(|f| f.contains(pos)) {
        return Some(false);
    }
    None
}

/// Decide one sample of a crossing event under a given field realization.
pub fn crossing_occurs_in<F: FieldAccess>(
    field: &mut F,
    params: &WalkParams,
    spec: &CrossSpec,
) -> bool {
    let starts = representative_starts(&spec.source);
    crossing_from_starts(field, params, spec, &starts)
}

/// Decide the event over an explicit start set (the dense-grid oracle
/// compares this against the representative reduction).
pub fn crossing_from_starts<F: FieldAccess>(
    field: &mut F,
    params: &WalkParams,
    spec: &CrossSpec,
    starts: &[(f64, f64)],
) -> bool {
    let wall = spec.wall();
    let mut memo: HashMap<(i64, i64), bool> = HashMap::new();
    for &start in starts {
        if decide_from(field, params, spec, wall.as_ref(), &mut memo, start) {
            return true;
        }
    }
    false
}

fn decide_from<F: FieldAccess>(
    field: &mut F,
    params: &WalkParams,
    spec: &CrossSpec,
    wall: Option<&Wall>,
    memo: &mut HashMap<(i64, i64), bool>,
    start: (f64, f64),
) -> bool {
    let mut pos = start;
    let mut path: Vec<(i64, i64)> = Vec::new();
    let decision = loop {
        if let Some(done) = instant_state(pos, spec) {
            break done;
        }
        let on_node = at_node(pos.0, pos.1);
        if on_node {
            let node = (pos.0 as i64, pos.1 as i64);
            if let Some(&d) = memo.get(&node) {
                break d;
            }
            if pos.1 == spec.bbox.y1() {
                // No move from the top edge stays inside; the node's noise
                // is never consulted.
                path.push(node);
                break false;
            }
            path.push(node);
        }
        let m = match carrier_move(pos, wall) {
            Some(m) => m,
            None => {
                let node = (pos.0 as i64, pos.1 as i64);
                let dir = step_at(field.sign(node.0, node.1), field.walk_uniform(node.0, node.1), params.delta);
                node_move(pos, dir, wall)
            }
        };
        match scan_move(pos, m, spec) {
            Scan::Hit => break true,
            Scan::Exit => break false,
            Scan::Continue(p) => pos = p,
        }
    };
    for node in path {
        memo.insert(node, decision);
    }
    decision
}

/// Decide one sample keyed by `(environment, seed)`.
pub fn crossing_occurs(
    env: &Environment,
    params: &WalkParams,
    spec: &CrossSpec,
    sample_seed: u64,
) -> bool {
    let mut field = env.sampler(sample_seed);
    crossing_occurs_in(&mut field, params, spec)
}

const BLOCK: u64 = 1024;

/// Run per-sample work in index blocks across the rayon pool and fold the
/// block results in index order, so the outcome is identical for any worker
/// count.
pub fn deterministic_blocks<T, W>(n_samples: u64, work: W) -> Vec<T>
where
    T: Send,
    W: Fn(std::ops::Range<u64>) -> T + Sync + Send,
{
    let blocks: Vec<std::ops::Range<u64>> = (0..n_samples)
        .step_by(BLOCK as usize)
        .map(|lo| lo..(lo + BLOCK).min(n_samples))
        .collect();
    blocks.into_par_iter().map(work).collect()
}

/// Monte Carlo estimate of a crossing probability with a Wilson interval.
pub fn estimate_crossing(
    env: &Environment,
    params: &WalkParams,
    spec: &CrossSpec,
    n_samples: u64,
    master_seed: u64,
) -> Result<Estimate, Error> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let counts = deterministic_blocks(n_samples, |range| {
        let mut c = 0u64;
        for i in range {
            if crossing_occurs(env, params, spec, sample_seed(master_seed, i)) {
                c += 1;
            }
        }
        c
    });
    let successes: u64 = counts.iter().sum();
    Ok(Estimate::from_counts(successes, n_samples, Z_95, master_seed))
}

/// Estimates of several events on the same samples, with the empirical
/// covariance matrix of their indicators.
#[derive(Debug, Clone)]
pub struct JointEstimates {
    pub estimates: Vec<Estimate>,
    pub covariance: Vec<Vec<f64>>,
}

pub fn estimate_joint(
    env: &Environment,
    params: &WalkParams,
    specs: &[CrossSpec],
    n_samples: u64,
    master_seed: u64,
) -> Result<JointEstimates, Error> {
    if n_samples == 0 || specs.is_empty() {
        return Err(Error::InvalidParameter("need samples and at least one event".into()));
    }
    let k = specs.len();
    let blocks = deterministic_blocks(n_samples, |range| {
        let mut single = vec![0u64; k];
        let mut joint = vec![0u64; k * k];
        for i in range {
            let seed = sample_seed(master_seed, i);
            let mut field = env.sampler(seed);
            let hits: Vec<bool> =
                specs.iter().map(|s| crossing_occurs_in(&mut field, params, s)).collect();
            for a in 0..k {
                if hits[a] {
                    single[a] += 1;
                    for b in 0..k {
                        if hits[b] {
                            joint[a * k + b] += 1;
                        }
                    }
                }
            }
        }
        (single, joint)
    });
    let mut single = vec![0u64; k];
    let mut joint = vec![0u64; k * k];
    for (s, j) in blocks {
        for a in 0..k {
            single[a] += s[a];
        }
        for ab in 0..k * k {
            joint[ab] += j[ab];
        }
    }
    let nf = n_samples as f64;
    let estimates: Vec<Estimate> =
        single.iter().map(|&c| Estimate::from_counts(c, n_samples, Z_95, master_seed)).collect();
    let mut covariance = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            let pab = joint[a * k + b] as f64 / nf;
            let pa = single[a] as f64 / nf;
            let pb = single[b] as f64 / nf;
            covariance[a][b] = (pab - pa * pb) * nf / (nf - 1.0).max(1.0);
        }
    }
    Ok(JointEstimates { estimates, covariance })
}
