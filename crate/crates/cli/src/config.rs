//! Flat dotted-key configuration with file values overridden by `--set`
//! flags. Every key has a documented default; unknown keys are rejected
//! with a single diagnostic.

use std::collections::BTreeMap;

use rwde::confetti::{ConfettiSpec, RadiusLaw};
use rwde::env::Environment;
use rwde::kernel::Kernel;
use rwde::walk::WalkParams;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

/// All configuration keys with their defaults.
pub fn default_entries() -> BTreeMap<String, String> {
    let pairs: &[(&str, &str)] = &[
        ("environment.kind", "iid"),              // iid | gaussian | confetti
        ("environment.p_plus", "0.5"),            // iid sign probabilities
        ("environment.p_minus", "0.5"),
        ("environment.kernel", "bargmann-fock"),  // bargmann-fock | rational-quadratic | figure1 | indicator
        ("environment.kernel_scale", "1"),        // scale a (bargmann-fock) or exponent (rational-quadratic)
        ("environment.truncation_radius", "0"),   // 0 = kernel default
        ("environment.radius_law", "pareto"),     // deterministic | pareto | exp-of-exponential
        ("environment.radius_r0", "1"),
        ("environment.pareto_alpha", "3"),
        ("environment.pareto_r_min", "1"),
        ("environment.exp_rate", "3"),
        ("environment.r_pad", "6"),
        ("walk.delta", "0"),
        ("walk.epsilon0", "0"),                   // 0 = largest admissible for delta
        ("walk.start_x", "0"),
        ("walk.start_y", "0"),
        ("walk.t_max", "32"),
        ("walk.wall", ""),                        // empty | "<a>,left" | "<a>,right"
        ("mc.samples", "10000"),
        ("mc.master_seed", "1"),
        ("mc.workers", "0"),                      // 0 = all cores; env RWDE_WORKERS overrides
        ("box.u_x", "0"),
        ("box.u_y", "0"),
        ("box.w", "4"),
        ("box.h", "8"),
        ("box.event", "h"),                       // h | hrev | v | vdot | vdotdot
        ("box.z", "2"),                           // vdotdot target width
        ("scale.h_list", "8,16,32"),
        ("scale.grid_resolution", "16"),
        ("audit.h", "16"),
        ("decouple.box_w", "12"),
        ("decouple.box_h", "12"),
        ("decouple.r_list", "4,6,8"),
        ("theory.epsilon0", "1/4"),
        ("theory.c6", "1/1"),
        ("theory.alpha", "10786/1"),
        ("theory.xi0", "1/2"),
        ("output.path", "out.csv"),
        ("render.format", "svg"),                 // svg | pgm
        ("render.window", "-24,0,24,32"),         // x0,y0,x1,y1 in lattice units
        ("render.colors", "#c8423c,#3c50c8,#c0c0c0"), // plus, minus, zero
        ("render.max_cells", "262144"),
    ];
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn load(file: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut entries = default_entries();
        let known: Vec<String> = entries.keys().cloned().collect();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    ConfigError(format!("{path}:{}: expected key = value", lineno + 1))
                })?;
                let key = k.trim().to_string();
                if !known.contains(&key) {
                    return Err(ConfigError(format!("{path}:{}: unknown key {key}", lineno + 1)));
                }
                entries.insert(key, v.trim().to_string());
            }
        }
        for item in overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("--set needs key=value, got {item}")))?;
            let key = k.trim().to_string();
            if !known.contains(&key) {
                return Err(ConfigError(format!("unknown key {key}")));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(RunConfig { entries })
    }

    pub fn get(&self, key: &str) -> &str {
        self.entries.get(key).map(|s| s.as_str()).unwrap_or_default()
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.get(key)
            .parse()
            .map_err(|_| ConfigError(format!("{key} must be a number, got '{}'", self.get(key))))
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        self.get(key)
            .parse()
            .map_err(|_| ConfigError(format!("{key} must be an integer, got '{}'", self.get(key))))
    }

    pub fn i64_list(&self, key: &str) -> Result<Vec<i64>, ConfigError> {
        self.get(key)
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| ConfigError(format!("{key}: bad integer '{s}'")))
            })
            .collect()
    }

    pub fn ratio(&self, key: &str) -> Result<(i64, i64), ConfigError> {
        let raw = self.get(key);
        let (n, d) = raw.split_once('/').unwrap_or((raw, "1"));
        let n = n.trim().parse().map_err(|_| ConfigError(format!("{key}: bad rational {raw}")))?;
        let d = d.trim().parse().map_err(|_| ConfigError(format!("{key}: bad rational {raw}")))?;
        Ok((n, d))
    }

    pub fn environment(&self) -> Result<Environment, ConfigError> {
        let wrap = |e: rwde::Error| ConfigError(e.to_string());
        match self.get("environment.kind") {
            "iid" => Environment::iid(self.f64("environment.p_plus")?, self.f64("environment.p_minus")?)
                .map_err(wrap),
            "gaussian" => {
                let scale = self.f64("environment.kernel_scale")?;
                let kernel = match self.get("environment.kernel") {
                    "bargmann-fock" => Kernel::BargmannFock { scale },
                    "rational-quadratic" => Kernel::RationalQuadratic { alpha: scale },
                    "figure1" => Kernel::Figure1,
                    "indicator" => Kernel::Indicator,
                    other => return Err(ConfigError(format!("unknown kernel {other}"))),
                };
                let radius = self.u64("environment.truncation_radius")? as i64;
                if radius == 0 {
                    Environment::gaussian_default(kernel).map_err(wrap)
                } else {
                    Environment::gaussian(kernel, radius).map_err(wrap)
                }
            }
            "confetti" => {
                let law = match self.get("environment.radius_law") {
                    "deterministic" => RadiusLaw::Deterministic { r0: self.f64("environment.radius_r0")? },
                    "pareto" => RadiusLaw::Pareto {
                        alpha: self.f64("environment.pareto_alpha")?,
                        r_min: self.f64("environment.pareto_r_min")?,
                    },
                    "exp-of-exponential" => {
                        RadiusLaw::ExpOfExponential { rate: self.f64("environment.exp_rate")? }
                    }
                    other => return Err(ConfigError(format!("unknown radius law {other}"))),
                };
                Environment::confetti(ConfettiSpec { law, r_pad: self.f64("environment.r_pad")? })
                    .map_err(wrap)
            }
            other => Err(ConfigError(format!("unknown environment kind {other}"))),
        }
    }

    pub fn walk_params(&self) -> Result<WalkParams, ConfigError> {
        let delta = self.f64("walk.delta")?;
        let eps = self.f64("walk.epsilon0")?;
        let wrap = |e: rwde::Error| ConfigError(e.to_string());
        if eps == 0.0 {
            WalkParams::with_max_ellipticity(delta).map_err(wrap)
        } else {
            WalkParams::new(delta, eps).map_err(wrap)
        }
    }

    pub fn workers(&self) -> Result<usize, ConfigError> {
        if let Ok(v) = std::env::var("RWDE_WORKERS") {
            return v
                .parse()
                .map_err(|_| ConfigError(format!("RWDE_WORKERS must be an integer, got {v}")));
        }
        Ok(self.u64("mc.workers")? as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_into_valid_objects() {
        let cfg = RunConfig::load(None, &[]).unwrap();
        assert!(cfg.environment().is_ok());
        assert!(cfg.walk_params().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::load(None, &["no.such.key=1".into()]).unwrap_err();
        assert!(err.0.contains("unknown key"));
    }

    #[test]
    fn overrides_win() {
        let cfg = RunConfig::load(None, &["mc.samples=77".into()]).unwrap();
        assert_eq!(cfg.u64("mc.samples").unwrap(), 77);
    }
}
