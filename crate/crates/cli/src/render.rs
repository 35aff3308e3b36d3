//! Environment renders: one colored cell per lattice site, with optional
//! trajectory overlays, as resolution-independent SVG or binary PGM.

use rwde::env::Environment;
use rwde::walk::Trajectory;

use crate::config::ConfigError;

pub struct RenderSpec {
    pub window: (i64, i64, i64, i64), // x0, y0, x1, y1 inclusive
    pub colors: [String; 3],          // plus, minus, zero
    pub max_cells: u64,
}

impl RenderSpec {
    pub fn from_config(cfg: &crate::config::RunConfig) -> Result<Self, ConfigError> {
        let win = cfg.i64_list("render.window")?;
        if win.len() != 4 || win[0] >= win[2] || win[1] >= win[3] {
            return Err(ConfigError("render.window must be x0,y0,x1,y1 with x0<x1, y0<y1".into()));
        }
        let colors: Vec<String> =
            cfg.get("render.colors").split(',').map(|s| s.trim().to_string()).collect();
        if colors.len() != 3 {
            return Err(ConfigError("render.colors needs plus,minus,zero".into()));
        }
        let spec = RenderSpec {
            window: (win[0], win[1], win[2], win[3]),
            colors: [colors[0].clone(), colors[1].clone(), colors[2].clone()],
            max_cells: cfg.u64("render.max_cells")?,
        };
        if spec.cell_count() > spec.max_cells {
            return Err(ConfigError(format!(
                "window holds {} cells, above the limit {}",
                spec.cell_count(),
                spec.max_cells
            )));
        }
        Ok(spec)
    }

    pub fn cell_count(&self) -> u64 {
        let (x0, y0, x1, y1) = self.window;
        ((x1 - x0 + 1) * (y1 - y0 + 1)) as u64
    }
}

/// SVG with one unit square per site; time increases upward.
pub fn render_svg(
    env: &Environment,
    seed: u64,
    spec: &RenderSpec,
    trajectories: &[Trajectory],
) -> String {
    let (x0, y0, x1, y1) = spec.window;
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let scale = 8;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        w * scale,
        h * scale,
        w * scale,
        h * scale
    ));
    let mut sampler = env.sampler(seed);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let sign = sampler.sign(x, y);
            let color = match sign {
                1 => &spec.colors[0],
                -1 => &spec.colors[1],
                _ => &spec.colors[2],
            };
            // SVG y axis points down; flip so larger times sit higher.
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{scale}\" height=\"{scale}\" fill=\"{color}\"/>\n",
                (x - x0) * scale,
                (y1 - y) * scale,
            ));
        }
    }
    for traj in trajectories {
        let pts: Vec<String> = traj
            .points()
            .iter()
            .map(|(px, pt)| {
                format!(
                    "{:.2},{:.2}",
                    (px - x0 as f64 + 0.5) * scale as f64,
                    (y1 as f64 - pt + 0.5) * scale as f64
                )
            })
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#101010\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Binary PGM: 0 for minus, 128 for zero, 255 for plus.
pub fn render_pgm(env: &Environment, seed: u64, spec: &RenderSpec) -> Vec<u8> {
    let (x0, y0, x1, y1) = spec.window;
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    let mut sampler = env.sampler(seed);
    for y in (y0..=y1).rev() {
        for x in x0..=x1 {
            out.push(match sampler.sign(x, y) {
                1 => 255u8,
                -1 => 0,
                _ => 128,
            });
        }
    }
    out
}

/// Empirical sign-match frequency at a horizontal lag inside the window,
/// used by the render self-check: nearby sites agree more often than
/// distant ones for positively correlated fields.
#[cfg(test)]
pub fn sign_match_at_lag(env: &Environment, seed: u64, spec: &RenderSpec, lag: i64) -> f64 {
    let (x0, y0, x1, y1) = spec.window;
    let mut sampler = env.sampler(seed);
    let mut same = 0u64;
    let mut total = 0u64;
    for y in y0..=y1 {
        for x in x0..=(x1 - lag) {
            if sampler.sign(x, y) == sampler.sign(x + lag, y) {
                same += 1;
            }
            total += 1;
        }
    }
    same as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rwde::kernel::{covariance_exact, Kernel};

    fn spec(win: (i64, i64, i64, i64)) -> RenderSpec {
        RenderSpec {
            window: win,
            colors: ["#f00".into(), "#00f".into(), "#888".into()],
            max_cells: 1 << 20,
        }
    }

    #[test]
    fn all_plus_environment_renders_uniformly_red() {
        let env = Environment::iid(1.0, 0.0).unwrap();
        let svg = render_svg(&env, 5, &spec((0, 0, 3, 3)), &[]);
        assert!(svg.matches("#f00").count() == 16);
        assert!(!svg.contains("#00f"));
    }

    #[test]
    fn empty_confetti_renders_uniformly_gray() {
        // Deterministic radius above the pad: every ball is discarded.
        let env = Environment::confetti(rwde::confetti::ConfettiSpec {
            law: rwde::confetti::RadiusLaw::Deterministic { r0: 5.0 },
            r_pad: 1.0,
        })
        .unwrap();
        let pgm = render_pgm(&env, 3, &spec((0, 0, 7, 7)));
        assert!(pgm[pgm.len() - 64..].iter().all(|&b| b == 128));
    }

    #[test]
    fn kernel_scale_shows_in_autocorrelation() {
        // Oracle: covariance_exact at lags 1 and 10 for the smooth kernel;
        // positive lag-1 covariance forces a higher sign-match rate there.
        let kernel = Kernel::Figure1;
        let c1 = covariance_exact(&kernel, (1, 0), 12).unwrap();
        let c10 = covariance_exact(&kernel, (10, 0), 12).unwrap();
        assert!(c1 > 0.5 && c10 < 0.05, "oracle: c1 {c1}, c10 {c10}");
        let env = Environment::gaussian(kernel, 12).unwrap();
        let s = spec((-20, 0, 20, 28));
        let near = sign_match_at_lag(&env, 11, &s, 1);
        let far = sign_match_at_lag(&env, 11, &s, 10);
        assert!(near > far + 0.05, "near {near} far {far}");
    }
}
