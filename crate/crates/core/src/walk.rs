//! Graphical construction of the coupled walk family.
//!
//! Space-time is `(x, t)` with time increasing upward. Walks from every
//! start in the plane are driven by one environment realization and one
//! collection of per-node uniforms, which forces monotonicity in the start
//! point and coalescence on contact.
//!
//! Geometry: nodes live on the parity sublattice (`x + t` even, both
//! integers). Diagonal lines `x - t` even (northeast) and `x + t` even
//! (northwest) form the carrier lattice; the two families intersect only at
//! nodes. A walk started off the carrier rises vertically to the first
//! diagonal, funnels along it to its upper node, and from there moves node
//! to node, one time unit per step. Reflection at a vertical wall replaces
//! forbidden crossings by upward travel.
//!
//! All breakpoints are exact in `f64`: starts and walls are dyadic
//! rationals, and every duration below is produced by subtraction and
//! `rem_euclid(2.0)` of dyadics at small magnitude, which round nowhere.

use crate::Error;

/// All public geometry (starts, walls, box anchors and dimensions) is
/// quantized to this dyadic grid. Coordinates then carry at most 20
/// fractional bits, so every difference, parity reduction and breakpoint
/// below is computed exactly in `f64` as long as magnitudes stay under
/// `2^32`.
pub const GRID_BITS: u32 = 20;

/// Snap a coordinate to the dyadic grid.
#[inline]
pub fn snap(v: f64) -> f64 {
    let scale = (1u64 << GRID_BITS) as f64;
    (v * scale).round() / scale
}

/// Node of the parity sublattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeNode {
    pub x: i64,
    pub n: i64,
}

impl LatticeNode {
    pub fn new(x: i64, n: i64) -> Result<Self, Error> {
        if (x + n).rem_euclid(2) != 0 {
            return Err(Error::InvalidParameter(format!(
                "({x}, {n}) is not on the parity sublattice"
            )));
        }
        Ok(LatticeNode { x, n })
    }
}

/// Walk parameters: bias and the ellipticity floor `delta < 1/2 - epsilon0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub delta: f64,
    pub epsilon0: f64,
}

impl WalkParams {
    pub fn new(delta: f64, epsilon0: f64) -> Result<Self, Error> {
        if !(0.0..0.5).contains(&delta) {
            return Err(Error::InvalidParameter("delta must lie in [0, 1/2)".into()));
        }
        if !(epsilon0 > 0.0 && epsilon0 < 0.5 && delta < 0.5 - epsilon0) {
            return Err(Error::InvalidParameter(
                "need 0 < epsilon0 < 1/2 with delta < 1/2 - epsilon0".into(),
            ));
        }
        Ok(WalkParams { delta, epsilon0 })
    }

    /// Largest admissible ellipticity constant for a given bias.
    pub fn with_max_ellipticity(delta: f64) -> Result<Self, Error> {
        let eps = (0.5 - delta) * (1.0 - 1e-9);
        WalkParams::new(delta, eps.min(0.499_999_999))
    }
}

/// Which side of the wall the walk is confined to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallSide {
    /// Walk stays at `x <= a`; rightward crossings are reflected.
    KeepLeft,
    /// Walk stays at `x >= a`; leftward crossings are reflected.
    KeepRight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub a: f64,
    pub side: WallSide,
}

/// Access to one realization of environment signs and walk noise.
pub trait FieldAccess {
    fn sign(&mut self, x: i64, n: i64) -> i8;
    fn walk_uniform(&mut self, x: i64, n: i64) -> f64;
}

impl FieldAccess for crate::env::EnvSampler<'_> {
    fn sign(&mut self, x: i64, n: i64) -> i8 {
        crate::env::EnvSampler::sign(self, x, n)
    }
    fn walk_uniform(&mut self, x: i64, n: i64) -> f64 {
        crate::env::EnvSampler::walk_uniform(self, x, n)
    }
}

/// The step rule: `+1` iff the node's uniform is at least `1/2 - delta *
/// sign`.
#[inline]
pub fn step_at(sign: i8, u_value: f64, delta: f64) -> i8 {
    if u_value >= 0.5 - delta * sign as f64 {
        1
    } else {
        -1
    }
}

/// One linear piece of a trajectory: horizontal slope in `{-1, 0, +1}` and
/// a positive duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub slope: i8,
    pub dt: f64,
}

/// Is `(x, t)` on a northeast diagonal (`x - t` even)?
#[inline]
pub fn on_ne_line(x: f64, t: f64) -> bool {
    (x - t).rem_euclid(2.0) == 0.0
}

/// Is `(x, t)` on a northwest diagonal (`x + t` even)?
#[inline]
pub fn on_nw_line(x: f64, t: f64) -> bool {
    (x + t).rem_euclid(2.0) == 0.0
}

/// Is the position a node of the parity sublattice?
#[inline]
pub fn at_node(x: f64, t: f64) -> bool {
    on_ne_line(x, t) && on_nw_line(x, t)
}

/// The deterministic move from a non-node position: rising, funneling, or
/// traveling up a wall. Returns `None` exactly at nodes, where the next
/// move depends on the node's noise.
pub fn carrier_move(pos: (f64, f64), wall: Option<&Wall>) -> Option<Move> {
    let (x, t) = pos;
    let ne = on_ne_line(x, t);
    let nw = on_nw_line(x, t);
    if ne && nw {
        return None;
    }

    if ne || nw {
        if let Some(w) = wall {
            if x == w.a {
                // On the wall mid-line: by the reflection rule the walk
                // travels upward until the first diagonal pointing away.
                let away_is_nw = matches!(w.side, WallSide::KeepLeft);
                let on_away = if away_is_nw { nw } else { ne };
                if !on_away {
                    let dt = if away_is_nw {
                        (-x - t).rem_euclid(2.0)
                    } else {
                        (x - t).rem_euclid(2.0)
                    };
                    debug_assert!(dt > 0.0);
                    return Some(Move { slope: 0, dt });
                }
            }
        }
        // Funnel along the diagonal to its upper node. The parity of
        // floor(x) + floor(t) encodes the orientation.
        let k = (x.floor() + t.floor()) as i64;
        let dir: i8 = if k.rem_euclid(2) == 0 { 1 } else { -1 };
        let frac = x - x.floor();
        debug_assert!(frac > 0.0, "funnel from integer x is a node case");
        let dt = if dir == 1 { 1.0 - frac } else { frac };
        if let Some(w) = wall {
            if w.side == WallSide::KeepLeft && dir == 1 && x + dt > w.a {
                return Some(Move { slope: 1, dt: w.a - x });
            }
            if w.side == WallSide::KeepRight && dir == -1 && x - dt < w.a {
                return Some(Move { slope: -1, dt: x - w.a });
            }
        }
        return Some(Move { slope: dir, dt });
    }

    // Off the carrier: rise to the first diagonal in either family.
    let dt_ne = (x - t).rem_euclid(2.0);
    let dt_nw = (-x - t).rem_euclid(2.0);
    debug_assert!(dt_ne > 0.0 && dt_nw > 0.0);
    Some(Move { slope: 0, dt: dt_ne.min(dt_nw) })
}

/// The move taken from a node whose step rule chose `dir`, honoring the
/// wall: a suppressed jump into the wall becomes upward travel to the next
/// wall node, and a unit move across a non-lattice wall stops on it.
pub fn node_move(pos: (f64, f64), dir: i8, wall: Option<&Wall>) -> Move {
    let x = pos.0;
    if let Some(w) = wall {
        match w.side {
            WallSide::KeepLeft if x == w.a && dir == 1 => {
                return Move { slope: 0, dt: 2.0 };
            }
            WallSide::KeepRight if x == w.a && dir == -1 => {
                return Move { slope: 0, dt: 2.0 };
            }
            WallSide::KeepLeft if dir == 1 && x + 1.0 > w.a => {
                return Move { slope: 1, dt: w.a - x };
            }
            WallSide::KeepRight if dir == -1 && x - 1.0 < w.a => {
                return Move { slope: -1, dt: x - w.a };
            }
            _ => {}
        }
    }
    Move { slope: dir, dt: 1.0 }
}

/// The next move of the (possibly reflected) construction from an absolute
/// position. Exactly one move is emitted; positions landing on the wall or
/// on nodes are resolved on the following call.
pub fn next_move<F: FieldAccess>(
    field: &mut F,
    params: &WalkParams,
    pos: (f64, f64),
    wall: Option<&Wall>,
) -> Move {
    if let Some(m) = carrier_move(pos, wall) {
        return m;
    }
    // Both families meet only at nodes: x and t are integers of equal parity.
    let node = (pos.0 as i64, pos.1 as i64);
    debug_assert!(pos.0 == node.0 as f64 && pos.1 == node.1 as f64);
    let sign = field.sign(node.0, node.1);
    let u = field.walk_uniform(node.0, node.1);
    node_move(pos, step_at(sign, u, params.delta), wall)
}

/// A walk trajectory stored as exact segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    start: (f64, f64),
    moves: Vec<Move>,
    /// Cumulative walk times at the end of each move.
    breaks: Vec<f64>,
    duration: f64,
}

impl Trajectory {
    pub fn start(&self) -> (f64, f64) {
        self.start
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    /// Horizontal position at walk time `t` in `[0, duration]`, by linear
    /// interpolation inside the containing segment.
    pub fn position(&self, t: f64) -> f64 {
        assert!((0.0..=self.duration + 1e-12).contains(&t), "time out of range");
        let idx = self.breaks.partition_point(|&b| b < t);
        let mut x = self.start.0;
        for m in &self.moves[..idx] {
            x += m.slope as f64 * m.dt;
        }
        if idx < self.moves.len() {
            let seg_start = if idx == 0 { 0.0 } else { self.breaks[idx - 1] };
            x += self.moves[idx].slope as f64 * (t - seg_start);
        }
        x
    }

    /// Endpoints of every segment in absolute coordinates, starting at the
    /// start point.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts = vec![self.start];
        let (mut x, mut t) = self.start;
        for m in &self.moves {
            x += m.slope as f64 * m.dt;
            t += m.dt;
            pts.push((x, t));
        }
        pts
    }

    /// Largest horizontal position along the path.
    pub fn max_x(&self) -> f64 {
        self.points().iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn build_trajectory<F: FieldAccess>(
    field: &mut F,
    params: &WalkParams,
    start: (f64, f64),
    wall: Option<&Wall>,
    t_max: f64,
) -> Result<Trajectory, Error> {
    let start = (snap(start.0), snap(start.1));
    let t_max = snap(t_max);
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter("t_max must be positive".into()));
    }
    if let Some(w) = wall {
        let ok = match w.side {
            WallSide::KeepLeft => start.0 <= w.a,
            WallSide::KeepRight => start.0 >= w.a,
        };
        if !ok {
            return Err(Error::InvalidParameter(
                "start lies strictly beyond the reflecting wall".into(),
            ));
        }
    }
    let mut moves = Vec::new();
    let mut breaks = Vec::new();
    let mut pos = start;
    let mut elapsed = 0.0;
    while elapsed < t_max {
        let m = next_move(field, params, pos, wall);
        let remaining = t_max - elapsed;
        let dt = m.dt.min(remaining);
        moves.push(Move { slope: m.slope, dt });
        elapsed += dt;
        breaks.push(elapsed);
        pos = (pos.0 + m.slope as f64 * dt, pos.1 + dt);
    }
    Ok(Trajectory { start, moves, breaks, duration: elapsed })
}

/// Trajectory of the free construction from any start, up to walk time
/// `t_max`.
pub fn trajectory_from<F: FieldAccess>(
    field: &mut F,
    params: &WalkParams,
    start: (f64, f64),
    t_max: f64,
) -> Result<Trajectory, Error> {
    build_trajectory(field, params, start, None, t_max)
}

/// Trajectory with reflection at a vertical wall.
pub fn reflected_trajectory_from<F: FieldAccess>(
    field: &mut F,
    params: &WalkParams,
    start: (f64, f64),
    wall: &Wall,
    t_max: f64,
) -> Result<Trajectory, Error> {
    let wall = Wall { a: snap(wall.a), side: wall.side };
    build_trajectory(field, params, start, Some(&wall), t_max)
}

/// An environment realization, walk parameters, and a seed bundled as one
/// trajectory factory.
pub struct WalkSystem<'a> {
    pub env: &'a crate::env::Environment,
    pub seed: u64,
    pub params: WalkParams,
}

impl<'a> WalkSystem<'a> {
    pub fn new(env: &'a crate::env::Environment, seed: u64, params: WalkParams) -> Self {
        WalkSystem { env, seed, params }
    }

    /// Free trajectory from any start in the plane.
    pub fn trajectory_from(&self, start: (f64, f64), t_max: f64) -> Result<Trajectory, Error> {
        trajectory_from(&mut self.env.sampler(self.seed), &self.params, start, t_max)
    }

    /// Trajectory reflected at a vertical wall.
    pub fn reflected_trajectory_from(
        &self,
        start: (f64, f64),
        wall: &Wall,
        t_max: f64,
    ) -> Result<Trajectory, Error> {
        reflected_trajectory_from(&mut self.env.sampler(self.seed), &self.params, start, wall, t_max)
    }
}

/// A face of a box or a piece of one: the admissible source and target
/// regions of crossing events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceSeg {
    /// `{x} x [y0, y1]` (closed).
    Vertical { x: f64, y0: f64, y1: f64 },
    /// `[x0, x1] x {y}` (closed).
    Horizontal { x0: f64, x1: f64, y: f64 },
    Point { x: f64, y: f64 },
}

impl FaceSeg {
    /// The face with all coordinates on the dyadic grid.
    pub fn snapped(&self) -> FaceSeg {
        match *self {
            FaceSeg::Vertical { x, y0, y1 } => {
                FaceSeg::Vertical { x: snap(x), y0: snap(y0), y1: snap(y1) }
            }
            FaceSeg::Horizontal { x0, x1, y } => {
                FaceSeg::Horizontal { x0: snap(x0), x1: snap(x1), y: snap(y) }
            }
            FaceSeg::Point { x, y } => FaceSeg::Point { x: snap(x), y: snap(y) },
        }
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        match *self {
            FaceSeg::Vertical { x, y0, y1 } => p.0 == x && (y0..=y1).contains(&p.1),
            FaceSeg::Horizontal { x0, x1, y } => p.1 == y && (x0..=x1).contains(&p.0),
            FaceSeg::Point { x, y } => p == (x, y),
        }
    }
}

/// Finite set of starts whose coupled trajectories realize every crossing
/// decision the continuum of starts on the face realizes.
///
/// Vertical faces contribute their intersections with the carrier diagonals
/// plus the face endpoints. Horizontal faces contribute the funnel-interval
/// boundaries (the starts whose vertical ray runs straight into a node),
/// the midpoint witness of every funnel interval, and the endpoints.
pub fn representative_starts(face: &FaceSeg) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    match face.snapped() {
        FaceSeg::Point { x, y } => out.push((x, y)),
        FaceSeg::Vertical { x, y0, y1 } => {
            out.push((x, y0));
            out.push((x, y1));
            for class in [x, -x] {
                // Times on the face congruent to the class mod 2.
                let mut t = y0 + (class - y0).rem_euclid(2.0);
                while t <= y1 {
                    out.push((x, t));
                    t += 2.0;
                }
            }
        }
        FaceSeg::Horizontal { x0, x1, y } => {
            // Funnel intervals are delimited by starts whose vertical ray
            // runs straight into a carrier line endpoint: the two parity
            // classes (ray length zero on one family) and the integers (ray
            // meets both families at once, i.e. at a node).
            let mut kinks = vec![x0, x1];
            for class in [y, -y] {
                let mut x = x0 + (class - x0).rem_euclid(2.0);
                while x <= x1 {
                    kinks.push(x);
                    x += 2.0;
                }
            }
            let mut x = x0.ceil();
            while x <= x1 {
                kinks.push(x);
                x += 1.0;
            }
            kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            kinks.dedup();
            for pair in kinks.windows(2) {
                out.push((pair[0], y));
                out.push((0.5 * (pair[0] + pair[1]), y));
            }
            out.push((x1, y));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}
