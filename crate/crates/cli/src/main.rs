//! `freebnd` — experiment runner for the free boundary laboratory.
//!
//! Experiments are configured by a TOML file (`--config`) or by inline
//! flags; each run writes its artifacts plus a manifest (config echo, input
//! hash, wall time, per-file checksums) into the output directory.
//!
//! Exit codes: 0 on success (numerical flags are recorded in the outputs),
//! 1 on numerical failure, 2 on usage or validation errors.

mod config;
mod experiments;

use clap::Parser;
use config::{ExperimentConfig, FlatnessConfig, GridConfig, HarnackConfig, PolesConfig, RadiiConfig, SyscheckConfig};
use freebnd::error::Error;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "freebnd", version, about = "free boundary laboratory experiment runner")]
struct Cli {
    /// List the domain zoo and exit
    #[arg(long)]
    list_domains: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(clap::Subcommand, Debug)]
enum Command {
    /// Run an experiment
    Run(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Experiment kind (solve, acf, frequency, monneau, density, beta,
    /// tangent, flatness, harnack, transmission, hodograph, syscheck)
    experiment: String,

    /// TOML config file; inline flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,

    /// Domain zoo name ("halfplane", "disk", "graph:<file>", "lewy3", "cone4")
    #[arg(long)]
    domain: Option<String>,

    /// Boundary point of interest, comma-separated coordinates
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    q: Option<String>,

    /// Grid cells per axis, comma-separated (or one value for all axes)
    #[arg(long, value_name = "NX,NY")]
    grid_n: Option<String>,

    /// Grid box as min and max per axis: x0,y0,x1,y1
    #[arg(long, value_name = "X0,Y0,X1,Y1", allow_hyphen_values = true)]
    grid_box: Option<String>,

    /// Plus-phase pole coordinates
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    pole_plus: Option<String>,

    /// Minus-phase pole coordinates
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    pole_minus: Option<String>,

    /// Explicit radius list, comma-separated
    #[arg(long, allow_hyphen_values = true)]
    radii: Option<String>,

    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    count: Option<usize>,

    /// syscheck weights: t1,t2,s1,s2,m1,m2,h1,h2,p1,p2,h0
    #[arg(long, allow_hyphen_values = true)]
    weights: Option<String>,

    /// harnack construction half-width
    #[arg(long)]
    eps: Option<f64>,

    /// flatness iteration start radius
    #[arg(long)]
    r0: Option<f64>,
    /// flatness iteration ratio
    #[arg(long)]
    rbar: Option<f64>,
    /// flatness iteration steps
    #[arg(long)]
    n_steps: Option<usize>,

    #[arg(long)]
    output_dir: Option<String>,

    #[arg(long)]
    seed: Option<u64>,

    /// Boundary sample count for tangent tables
    #[arg(long)]
    n_boundary_samples: Option<usize>,
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::validation(format!("{what}: bad number '{p}': {e}")))
        })
        .collect()
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| Error::validation(format!("{what}: bad integer '{p}': {e}")))
        })
        .collect()
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => ExperimentConfig {
            experiment: args.experiment.clone(),
            domain: None,
            grid: None,
            poles: None,
            radii: None,
            q: None,
            output_dir: "out".into(),
            seed: 0,
            n_boundary_samples: None,
            flatness: None,
            syscheck: None,
            harnack: None,
        },
    };
    cfg.experiment = args.experiment.clone();
    if let Some(d) = &args.domain {
        cfg.domain = Some(d.clone());
    }
    if let Some(q) = &args.q {
        cfg.q = Some(parse_f64_list(q, "--q")?);
    }
    if args.grid_n.is_some() || args.grid_box.is_some() {
        let default_box = cfg
            .grid
            .clone()
            .map(|g| (g.box_min, g.box_max))
            .unwrap_or((vec![-1.0, -1.0], vec![1.0, 1.0]));
        let (box_min, box_max) = match &args.grid_box {
            Some(b) => {
                let v = parse_f64_list(b, "--grid-box")?;
                if v.len() % 2 != 0 {
                    return Err(Error::validation("--grid-box needs an even coordinate count"));
                }
                let d = v.len() / 2;
                (v[..d].to_vec(), v[d..].to_vec())
            }
            None => default_box,
        };
        let n_cells = match &args.grid_n {
            Some(n) => {
                let v = parse_usize_list(n, "--grid-n")?;
                if v.len() == 1 {
                    vec![v[0]; box_min.len()]
                } else {
                    v
                }
            }
            None => cfg
                .grid
                .clone()
                .map(|g| g.n_cells)
                .unwrap_or_else(|| vec![256; box_min.len()]),
        };
        cfg.grid = Some(GridConfig {
            box_min,
            box_max,
            n_cells,
        });
    }
    if args.pole_plus.is_some() || args.pole_minus.is_some() {
        let defaults = cfg.poles.clone();
        let plus = match &args.pole_plus {
            Some(p) => parse_f64_list(p, "--pole-plus")?,
            None => defaults
                .clone()
                .map(|p| p.plus)
                .ok_or_else(|| Error::validation("--pole-minus given without --pole-plus or config"))?,
        };
        let minus = match &args.pole_minus {
            Some(p) => parse_f64_list(p, "--pole-minus")?,
            None => defaults
                .map(|p| p.minus)
                .ok_or_else(|| Error::validation("--pole-plus given without --pole-minus or config"))?,
        };
        cfg.poles = Some(PolesConfig { plus, minus });
    }
    if args.radii.is_some() || args.r_min.is_some() || args.r_max.is_some() || args.count.is_some()
    {
        cfg.radii = Some(RadiiConfig {
            list: match &args.radii {
                Some(r) => Some(parse_f64_list(r, "--radii")?),
                None => None,
            },
            r_min: args.r_min,
            r_max: args.r_max,
            count: args.count,
            log: true,
        });
    }
    if let Some(w) = &args.weights {
        let weights = w
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::validation(format!("--weights: '{p}': {e}")))
            })
            .collect::<Result<Vec<i64>, Error>>()?;
        let draws = cfg.syscheck.as_ref().map(|s| s.draws).unwrap_or(1000);
        cfg.syscheck = Some(SyscheckConfig { weights, draws });
    }
    if let Some(eps) = args.eps {
        cfg.harnack = Some(HarnackConfig { eps });
    }
    if args.r0.is_some() || args.rbar.is_some() || args.n_steps.is_some() {
        let base = cfg.flatness.clone().unwrap_or(FlatnessConfig {
            r0: 0.4,
            rbar: 0.25,
            n_steps: 4,
            eps_threshold: 0.5,
        });
        cfg.flatness = Some(FlatnessConfig {
            r0: args.r0.unwrap_or(base.r0),
            rbar: args.rbar.unwrap_or(base.rbar),
            n_steps: args.n_steps.unwrap_or(base.n_steps),
            eps_threshold: base.eps_threshold,
        });
    }
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.n_boundary_samples {
        cfg.n_boundary_samples = Some(n);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    format!("{:x}", hasher.finalize())
}

/// Write atomically: temp file in the same directory, then rename.
fn write_atomic(dir: &Path, name: &str, content: &str) -> std::io::Result<()> {
    let tmp = dir.join(format!("{name}.tmp"));
    std::fs::write(&tmp, content)?;
    std::fs::rename(tmp, dir.join(name))
}

fn input_hash(cfg: &ExperimentConfig) -> String {
    let mut payload = toml::to_string(cfg).unwrap_or_default();
    if let Some(name) = &cfg.domain {
        if let Some(path) = name.strip_prefix("graph:") {
            if let Ok(text) = std::fs::read_to_string(path) {
                payload.push_str(&text);
            }
        }
    }
    sha256_hex(payload.as_bytes())
}

fn run(cfg: &ExperimentConfig) -> Result<i32, Error> {
    let started = std::time::Instant::now();
    let out = experiments::run(cfg)?;
    let dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&dir)?;

    let mut files_json = Vec::new();
    for (name, content) in &out.files {
        write_atomic(&dir, name, content)?;
        files_json.push(serde_json::json!({
            "name": name,
            "sha256": sha256_hex(content.as_bytes()),
            "bytes": content.len(),
        }));
    }
    if !out.flags.is_empty() {
        let mut flag_rows = String::from("flag\n");
        for f in &out.flags {
            flag_rows.push_str(f);
            flag_rows.push('\n');
        }
        write_atomic(&dir, "flags.csv", &flag_rows)?;
        files_json.push(serde_json::json!({
            "name": "flags.csv",
            "sha256": sha256_hex(flag_rows.as_bytes()),
            "bytes": flag_rows.len(),
        }));
    }
    let grid_note = cfg
        .grid_spec()
        .ok()
        .map(|s| serde_json::json!({"h": s.h(), "n_cells": s.n_cells}));
    let manifest = serde_json::json!({
        "experiment": cfg.experiment,
        "config": serde_json::to_value(cfg).unwrap(),
        "grid": grid_note,
        "input_hash": input_hash(cfg),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "files": files_json,
    });
    write_atomic(
        &dir,
        "manifest.json",
        &serde_json::to_string_pretty(&manifest).unwrap(),
    )?;

    println!("{}", out.summary);
    for f in &out.flags {
        println!("flag: {f}");
    }
    Ok(0)
}

fn main() {
    let cli = Cli::parse();
    if cli.list_domains {
        for name in freebnd::domains::ZOO_NAMES {
            println!("{name}");
        }
        return;
    }
    let Some(Command::Run(args)) = cli.command else {
        eprintln!("nothing to do: pass `run <experiment>` or --list-domains");
        std::process::exit(2);
    };
    let cfg = match build_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    match run(&cfg) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::Validation(_) | Error::UnsupportedDimension { .. } => 2,
                _ => 1,
            };
            std::process::exit(code);
        }
    }
}
