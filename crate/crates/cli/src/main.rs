//! Batch front end. All randomness flows from `mc.master_seed`; repeated
//! invocations with one config produce byte-identical outputs for any
//! worker count. Exit codes: 0 success, 1 configuration error, 2 audit
//! failure.

mod config;
mod render;

use clap::{Parser, Subcommand};

use config::{ConfigError, RunConfig};
use rwde::cross::{estimate_crossing, CrossSpec};
use rwde::rng::sample_seed;
use rwde::scale::{balance_curve, estimate_w_of_h, fit_exponent, rsw_audit, ScalePoint};
use rwde::theory::{bootstrap_constants, constants_table, HeightThresholds, TheoryInput};
use rwde::walk::{reflected_trajectory_from, trajectory_from, Wall, WallSide};

#[derive(Parser)]
#[command(name = "rwde", about = "Random walks on dynamic random environments", version)]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Override one configuration key, repeatable: --set mc.samples=100000.
    #[arg(long = "set", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump a sign grid of the configured environment.
    EnvSample,
    /// Dump one trajectory as CSV (and an SVG overlay when configured).
    Walk,
    /// Estimate one crossing probability.
    Cross,
    /// Balance curves and the fluctuation scale over scale.h_list.
    Scale,
    /// Fluctuation-exponent fit over scale.h_list.
    Exponent,
    /// Crossing-inequality audit; exits 2 when a row fails.
    Audit,
    /// Empirical decoupling check; exits 2 when a row fails.
    DecoupleTest,
    /// Exact constant chain table.
    Constants,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            1
        }
    };
    std::process::exit(code);
}

/// Write via a temporary sibling and rename, so outputs are atomic.
fn write_atomic(path: &str, bytes: &[u8]) -> Result<(), ConfigError> {
    let tmp = format!("{path}.tmp");
    std::fs::write(&tmp, bytes).map_err(|e| ConfigError(format!("writing {tmp}: {e}")))?;
    std::fs::rename(&tmp, path).map_err(|e| ConfigError(format!("renaming to {path}: {e}")))
}

fn wrap(e: rwde::Error) -> ConfigError {
    ConfigError(e.to_string())
}

fn run(cli: &Cli) -> Result<i32, ConfigError> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    let workers = cfg.workers()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    let pool = builder.build().map_err(|e| ConfigError(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<i32, ConfigError> {
    match cmd {
        Command::EnvSample => env_sample(cfg),
        Command::Walk => walk(cfg),
        Command::Cross => cross(cfg),
        Command::Scale => scale(cfg).map(|_| 0),
        Command::Exponent => exponent(cfg),
        Command::Audit => audit(cfg),
        Command::DecoupleTest => decouple_test(cfg),
        Command::Constants => constants(cfg),
    }
}

fn env_sample(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let env = cfg.environment()?;
    let seed = sample_seed(cfg.u64("mc.master_seed")?, 0);
    let spec = render::RenderSpec::from_config(cfg)?;
    let path = cfg.get("output.path").to_string();
    match cfg.get("render.format") {
        "svg" => write_atomic(&path, render::render_svg(&env, seed, &spec, &[]).as_bytes())?,
        "pgm" => write_atomic(&path, &render::render_pgm(&env, seed, &spec))?,
        other => return Err(ConfigError(format!("unknown render format {other}"))),
    }
    println!("wrote {path}");
    Ok(0)
}

fn parse_wall(cfg: &RunConfig) -> Result<Option<Wall>, ConfigError> {
    let raw = cfg.get("walk.wall");
    if raw.is_empty() {
        return Ok(None);
    }
    let (a, side) = raw
        .split_once(',')
        .ok_or_else(|| ConfigError("walk.wall must be '<abscissa>,left|right'".into()))?;
    let a: f64 = a.trim().parse().map_err(|_| ConfigError("bad wall abscissa".into()))?;
    let side = match side.trim() {
        "left" => WallSide::KeepLeft,
        "right" => WallSide::KeepRight,
        other => return Err(ConfigError(format!("bad wall side {other}"))),
    };
    Ok(Some(Wall { a, side }))
}

fn walk(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let env = cfg.environment()?;
    let params = cfg.walk_params()?;
    let seed = sample_seed(cfg.u64("mc.master_seed")?, 0);
    let start = (cfg.f64("walk.start_x")?, cfg.f64("walk.start_y")?);
    let t_max = cfg.f64("walk.t_max")?;
    let mut sampler = env.sampler(seed);
    let traj = match parse_wall(cfg)? {
        None => trajectory_from(&mut sampler, &params, start, t_max).map_err(wrap)?,
        Some(wall) => {
            reflected_trajectory_from(&mut sampler, &params, start, &wall, t_max).map_err(wrap)?
        }
    };
    let mut csv = String::from("# schema=walk.v1 t,x\n");
    for (x, t_abs) in traj.points() {
        csv.push_str(&format!("{:.6},{:.6}\n", t_abs - start.1, x));
    }
    let path = cfg.get("output.path").to_string();
    write_atomic(&path, csv.as_bytes())?;
    if cfg.get("render.format") == "svg" {
        let spec = render::RenderSpec::from_config(cfg)?;
        let svg_path = format!("{path}.svg");
        write_atomic(&svg_path, render::render_svg(&env, seed, &spec, &[traj]).as_bytes())?;
        println!("wrote {path} and {svg_path}");
    } else {
        println!("wrote {path}");
    }
    Ok(0)
}

fn box_spec(cfg: &RunConfig) -> Result<CrossSpec, ConfigError> {
    let u = (cfg.f64("box.u_x")?, cfg.f64("box.u_y")?);
    let (w, h) = (cfg.f64("box.w")?, cfg.f64("box.h")?);
    match cfg.get("box.event") {
        "h" => CrossSpec::h_cross(u, w, h),
        "hrev" => CrossSpec::h_cross_reversed(u, w, h),
        "v" => CrossSpec::v_cross(u, w, h),
        "vdot" => CrossSpec::v_dot(u, w, h),
        "vdotdot" => CrossSpec::v_dot_dot(u, w, h, cfg.f64("box.z")?),
        other => return Err(ConfigError(format!("unknown event {other}"))),
    }
    .map_err(wrap)
}

fn cross(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let env = cfg.environment()?;
    let params = cfg.walk_params()?;
    let spec = box_spec(cfg)?;
    let n = cfg.u64("mc.samples")?;
    let seed = cfg.u64("mc.master_seed")?;
    let est = estimate_crossing(&env, &params, &spec, n, seed).map_err(wrap)?;
    let mut csv = String::from(
        "# schema=cross.v1 master_seed,env,delta,u_x,u_y,w,h,event,reflect,n,p_hat,ci_low,ci_high\n",
    );
    csv.push_str(&format!(
        "{seed},{},{},{},{},{},{},{},{},{n},{:.9},{:.9},{:.9}\n",
        env.label(),
        params.delta,
        spec.bbox.u.0,
        spec.bbox.u.1,
        spec.bbox.w,
        spec.bbox.h,
        spec.name,
        spec.reflect_right,
        est.p_hat,
        est.ci_low,
        est.ci_high,
    ));
    let path = cfg.get("output.path").to_string();
    write_atomic(&path, csv.as_bytes())?;
    println!("p_hat = {:.6} [{:.6}, {:.6}]  -> {path}", est.p_hat, est.ci_low, est.ci_high);
    Ok(0)
}

fn scale(cfg: &RunConfig) -> Result<Vec<ScalePoint>, ConfigError> {
    let env = cfg.environment()?;
    let params = cfg.walk_params()?;
    let n = cfg.u64("mc.samples")?;
    let seed = cfg.u64("mc.master_seed")?;
    let grid_resolution = cfg.u64("scale.grid_resolution")? as usize;
    let heights = cfg.i64_list("scale.h_list")?;
    let prefix = cfg.get("output.path").trim_end_matches(".csv").to_string();

    let mut balance_csv = String::from("# schema=balance.v1 h,w,d1_hat,ci_low,ci_high,n\n");
    let mut scale_csv = String::from("# schema=scale.v1 h,w_hat,ci_low,ci_high\n");
    let mut points = Vec::new();
    for &h in &heights {
        let h = h as f64;
        let grid: Vec<f64> = (0..grid_resolution)
            .map(|i| 1.0 * (h / 1.0).powf(i as f64 / (grid_resolution - 1) as f64))
            .collect();
        let curve = balance_curve(&env, &params, h, &grid, n, seed).map_err(wrap)?;
        for bp in &curve {
            balance_csv.push_str(&format!(
                "{h},{:.6},{:.9},{:.9},{:.9},{n}\n",
                bp.w, bp.d1.p_hat, bp.d1.ci_low, bp.d1.ci_high
            ));
        }
        let sp = estimate_w_of_h(&env, &params, h, n, grid_resolution, seed).map_err(wrap)?;
        scale_csv.push_str(&format!(
            "{h},{:.6},{:.6},{:.6}\n",
            sp.w_hat, sp.ci_low, sp.ci_high
        ));
        points.push(sp);
    }
    write_atomic(&format!("{prefix}_balance.csv"), balance_csv.as_bytes())?;
    write_atomic(&format!("{prefix}_scale.csv"), scale_csv.as_bytes())?;
    println!("wrote {prefix}_balance.csv and {prefix}_scale.csv");
    Ok(points)
}

fn exponent(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let points = scale(cfg)?;
    let (xi, (lo, hi)) = fit_exponent(&points).map_err(wrap)?;
    let mut csv = String::from("# schema=exponent.v1 xi_hat,ci_low,ci_high\n");
    csv.push_str(&format!("{xi:.6},{lo:.6},{hi:.6}\n"));
    let prefix = cfg.get("output.path").trim_end_matches(".csv").to_string();
    write_atomic(&format!("{prefix}_exponent.csv"), csv.as_bytes())?;
    println!("xi_hat = {xi:.4} [{lo:.4}, {hi:.4}]");
    Ok(0)
}

fn audit(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let env = cfg.environment()?;
    let params = cfg.walk_params()?;
    let n = cfg.u64("mc.samples")?;
    let seed = cfg.u64("mc.master_seed")?;
    let h = cfg.u64("audit.h")? as f64;
    let report = rsw_audit(&env, &params, h, n, seed).map_err(wrap)?;
    write_atomic(cfg.get("output.path"), report.to_csv().as_bytes())?;
    for row in &report.rows {
        println!(
            "{}  lhs={:.6} rhs={:.6} slack={:.2}sigma  {}",
            if row.pass { "PASS" } else { "FAIL" },
            row.lhs,
            row.rhs,
            row.slack_sigmas,
            row.id
        );
    }
    Ok(if report.all_pass() { 0 } else { 2 })
}

fn decouple_test(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let env = cfg.environment()?;
    let n = cfg.u64("mc.samples")?;
    let master = cfg.u64("mc.master_seed")?;
    let w = cfg.u64("decouple.box_w")? as i64;
    let h = cfg.u64("decouple.box_h")? as i64;
    let mut csv =
        String::from("# schema=decouple.v1 w,h,r,empirical,bound,three_sigma,pass\n");
    let mut ok = true;
    for r in cfg.i64_list("decouple.r_list")? {
        let rect = rwde::env::LatticeRect { x0: 0, y0: 0, w, h };
        let variant = env.decoupled_variant(rect, r).map_err(wrap)?;
        let margin = env.decoupling_support_margin();
        let mut disagreements = 0u64;
        for i in 0..n {
            let seed = sample_seed(master, i);
            let mut differs = false;
            'sites: for x in (rect.x0 - margin)..=(rect.x0 + rect.w + margin) {
                for y in (rect.y0 - margin)..=(rect.y0 + rect.h + margin) {
                    if env.sign_at(seed, (x, y)) != variant.sign_at(seed, (x, y)) {
                        differs = true;
                        break 'sites;
                    }
                }
            }
            if differs {
                disagreements += 1;
            }
        }
        let p = disagreements as f64 / n as f64;
        let bound = env.epsilon_bound(w as f64, h as f64, r as f64);
        let sigma3 = 3.0 * (p.max(1e-9) * (1.0 - p.min(1.0 - 1e-9)) / n as f64).sqrt();
        let pass = p <= bound + sigma3;
        ok &= pass;
        csv.push_str(&format!("{w},{h},{r},{p:.6},{bound:.6},{sigma3:.6},{pass}\n"));
        println!(
            "{}  w={w} h={h} r={r}: empirical {p:.5} vs bound {bound:.5} (+{sigma3:.5})",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    write_atomic(cfg.get("output.path"), csv.as_bytes())?;
    Ok(if ok { 0 } else { 2 })
}

fn constants(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let input = TheoryInput::new(
        cfg.ratio("theory.epsilon0")?,
        cfg.ratio("theory.c6")?,
        cfg.ratio("theory.alpha")?,
        cfg.ratio("theory.xi0")?,
    )
    .map_err(wrap)?;
    let consts = bootstrap_constants(&input, HeightThresholds::default()).map_err(wrap)?;
    let mut csv = String::from("# schema=constants.v1 name,exact,decimal\n");
    for (name, exact, decimal) in constants_table(&consts) {
        println!("{name:>18}  {exact}  {decimal}");
        csv.push_str(&format!("{name},{exact},{decimal}\n"));
    }
    write_atomic(cfg.get("output.path"), csv.as_bytes())?;
    Ok(0)
}
