use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use corrupt_recover::certificate::{check_theorem_conditions, verify_dual_certificate, CertificateTolerances};
use corrupt_recover::experiments::{
    run_image_experiment, run_phase_map, run_sparsity_curve, select_n_values, write_text, Corpus, ImageExpConfig,
    NMode, NSelection, PhaseMapConfig, SignalFamily,
};
use corrupt_recover::fourier::PRNG_NAME;
use corrupt_recover::io::{read_instance, read_solution, write_instance, write_solution};
use corrupt_recover::problem::{generate_synthetic, rre, ProblemInstance};
use corrupt_recover::{SolveStatus, SolverConfig, SyntheticConfig};
use log::info;
use serde_json::{json, Map, Value};

use crate::options::{KeySpec, Options};

pub type Input = (Option<PathBuf>, Vec<(&'static str, Option<String>)>);

const GRID_THETA_M: &str = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
const GRID_THETA_F: &str = "0.05,0.15,0.25,0.35";

/// Accumulates what a run did and writes it as JSON next to the outputs.
struct Manifest {
    command: &'static str,
    started: SystemTime,
    clock: Instant,
    config: Map<String, Value>,
    extra: Map<String, Value>,
    outputs: Vec<String>,
}

impl Manifest {
    fn new(command: &'static str, opts: &Options) -> Self {
        let config = opts
            .entries()
            .map(|(k, v)| (k.to_owned(), Value::String(v.to_owned())))
            .collect();
        Self {
            command,
            started: SystemTime::now(),
            clock: Instant::now(),
            config,
            extra: Map::new(),
            outputs: Vec::new(),
        }
    }

    fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.extra.insert(key.to_owned(), value.into());
    }

    fn output(&mut self, path: &Path, contents: &str) -> Result<()> {
        write_text(path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    fn finish(self, path: &Path) -> Result<()> {
        let started = self.started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
        let mut doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "prng": PRNG_NAME,
            "outputs": self.outputs,
            "started_unix_seconds": started,
            "wall_time_seconds": self.clock.elapsed().as_secs_f64(),
        });
        doc.as_object_mut().expect("object literal").extend(self.extra);
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        write_text(path, &text).with_context(|| format!("cannot write manifest {}", path.display()))?;
        info!("manifest written to {}", path.display());
        Ok(())
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn resolve(command: &'static str, spec: &[KeySpec], input: Input) -> Result<Options> {
    let (config, flags) = input;
    Options::resolve(command, spec, config.as_deref(), &flags)
}

fn solver_config(opts: &Options, lambda: f64) -> Result<SolverConfig> {
    let mut cfg = SolverConfig {
        lambda,
        ..SolverConfig::default()
    };
    if let Some(it) = opts.parse("max_iter")? {
        cfg.max_iter = it;
    }
    if let Some(tol) = opts.parse("tol")? {
        cfg.tol_primal = tol;
        cfg.tol_dual = tol;
    }
    if let Some(eta) = opts.parse("eta")? {
        cfg.eta = eta;
    }
    if let Some(s) = opts.parse("success_rre")? {
        cfg.success_rre = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn gen(input: Input) -> Result<ExitCode> {
    const SPEC: &[KeySpec] = &[
        ("n", Some("251")),
        ("theta_m", Some("0.9")),
        ("theta_f", Some("0.05")),
        ("lambda", Some("1")),
        ("seed", Some("0")),
        ("energy_ratio", Some("100")),
        ("out", Some("instance.txt")),
    ];
    let opts = resolve("gen", SPEC, input)?;
    let mut manifest = Manifest::new("gen", &opts);
    let cfg = SyntheticConfig {
        corruption_energy_ratio: opts.require("energy_ratio")?,
        lambda: opts.require("lambda")?,
        ..SyntheticConfig::new(
            opts.require("n")?,
            opts.require("theta_m")?,
            opts.require("theta_f")?,
            opts.require("seed")?,
        )
    };
    let inst = generate_synthetic(&cfg)?;
    let out = PathBuf::from(opts.require::<String>("out")?);
    manifest.output(&out, &write_instance(&inst, true))?;
    manifest.set("master_seed", cfg.seed);
    manifest.set("m", inst.m());
    manifest.set("sx_len", inst.s_x.len());
    manifest.set("sf_len", inst.s_f.len());
    manifest.finish(&sidecar(&out))?;
    println!(
        "m={} sx={} sf={} out={}",
        inst.m(),
        inst.s_x.len(),
        inst.s_f.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn solve(instance: &Path, input: Input) -> Result<ExitCode> {
    const SPEC: &[KeySpec] = &[
        ("lambda", None),
        ("eta", Some("0")),
        ("max_iter", Some("50000")),
        ("tol", Some("1e-10")),
        ("out", Some("solution.txt")),
    ];
    let opts = resolve("solve", SPEC, input)?;
    let mut manifest = Manifest::new("solve", &opts);
    let file =
        read_instance(&read_file(instance)?).with_context(|| format!("malformed instance {}", instance.display()))?;
    let lambda = opts.parse("lambda")?.unwrap_or(file.lambda);
    let cfg = solver_config(&opts, lambda)?;
    let sol = corrupt_recover::solve(&file.operator, &file.b, &cfg)?;
    let out = PathBuf::from(opts.require::<String>("out")?);
    manifest.output(&out, &write_solution(&sol, lambda))?;
    manifest.set("instance", instance.display().to_string());
    manifest.set("solver_digest", cfg.digest());
    manifest.set("iterations", sol.iterations);
    let converged = sol.status == SolveStatus::Converged;
    println!(
        "status={} iterations={} objective={:?} primal_residual={:?}",
        if converged { "converged" } else { "max_iter_reached" },
        sol.iterations,
        sol.objective,
        sol.primal_residual
    );
    if let Some(truth) = &file.truth {
        let e = rre(&sol.x_hat, &sol.f_hat, &truth.x0, &truth.f0)?;
        println!("rre={e:?}");
        manifest.set("rre", e);
    }
    manifest.finish(&sidecar(&out))?;
    Ok(if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

pub fn certify(instance: &Path, solution: Option<&Path>, input: Input) -> Result<ExitCode> {
    const SPEC: &[KeySpec] = &[
        ("epsilon", Some("0.1")),
        ("c", Some("0.5")),
        ("out", Some("certificate.txt")),
    ];
    let opts = resolve("certify", SPEC, input)?;
    let mut manifest = Manifest::new("certify", &opts);
    manifest.set("instance", instance.display().to_string());
    let file =
        read_instance(&read_file(instance)?).with_context(|| format!("malformed instance {}", instance.display()))?;
    let sol = solution
        .map(|p| {
            manifest.set("solution", p.display().to_string());
            read_solution(&read_file(p)?).with_context(|| format!("malformed solution {}", p.display()))
        })
        .transpose()?;

    // the conditions are stated for the ground-truth pair; without one the
    // solution pair stands in
    let subject = match (&file.truth, &sol) {
        (Some(t), _) => t.clone(),
        (None, Some(s)) => ProblemInstance::with_measurements(
            file.operator.clone(),
            file.lambda,
            s.x_hat.clone(),
            s.f_hat.clone(),
            file.b.clone(),
            file.seed,
        )?,
        (None, None) => bail!("{} has no ground truth; pass --solution", instance.display()),
    };
    let report = check_theorem_conditions(&subject, opts.require("epsilon")?, opts.require("c")?)?;
    let mut text = report.to_text();
    let mut pass = report.certified();
    if let (Some(s), Some(truth)) = (&sol, &file.truth) {
        let tol = CertificateTolerances::default();
        let check = verify_dual_certificate(truth, &s.x_hat, &s.f_hat, &tol)?;
        text.push_str(&format!("solution.certified = {}\n", check.pass));
        for r in check.records(&tol) {
            text.push_str(&format!(
                "solution.condition.{} = value={:?} threshold={:?} margin={:?} {}\n",
                r.name,
                r.value,
                r.threshold,
                r.margin,
                if r.pass { "pass" } else { "fail" }
            ));
        }
        pass &= check.pass;
    }
    let out = PathBuf::from(opts.require::<String>("out")?);
    manifest.output(&out, &text)?;
    manifest.set("certified", pass);
    manifest.finish(&sidecar(&out))?;
    let failed: Vec<&str> = report
        .conditions
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .collect();
    match report.xi_k {
        Some(xi) => println!("xi_k={xi:?}"),
        None => println!("xi_k=skipped"),
    }
    if !failed.is_empty() {
        println!("failed_conditions={}", failed.join(","));
    }
    println!("certified={pass}");
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn threads(opts: &Options) -> Result<Option<usize>> {
    opts.parse("threads")
}

fn out_dir(opts: &Options) -> Result<PathBuf> {
    let dir = PathBuf::from(opts.require::<String>("out")?);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

pub fn phase_map(input: Input) -> Result<ExitCode> {
    const SPEC: &[KeySpec] = &[
        ("theta_m", Some(GRID_THETA_M)),
        ("theta_f", Some(GRID_THETA_F)),
        ("n", None),
        ("n_mode", Some("primes")),
        ("n_range", Some("128:512")),
        ("n_count", Some("20")),
        ("runs", Some("25")),
        ("seed", Some("0")),
        ("lambda", Some("1")),
        ("max_iter", Some("50000")),
        ("tol", Some("1e-10")),
        ("success_rre", Some("1e-8")),
        ("threads", None),
        ("out", Some("phase-map")),
    ];
    let opts = resolve("phase-map", SPEC, input)?;
    let mut manifest = Manifest::new("phase-map", &opts);
    let lambda: f64 = opts.require("lambda")?;
    let n_selection = match opts.list::<usize>("n")? {
        Some(v) => NSelection::Explicit(v),
        None => NSelection::Random {
            mode: opts.require::<String>("n_mode")?.parse::<NMode>()?,
            range: opts.range("n_range")?.expect("has a default"),
            count: opts.require("n_count")?,
        },
    };
    let cfg = PhaseMapConfig {
        theta_m_grid: opts.list("theta_m")?.expect("has a default"),
        theta_f_grid: opts.list("theta_f")?.expect("has a default"),
        n_selection,
        runs_per_triple: opts.require("runs")?,
        success_rre: opts.require("success_rre")?,
        master_seed: opts.require("seed")?,
        lambda,
        solver: solver_config(&opts, lambda)?,
        threads: threads(&opts)?,
    };
    let dir = out_dir(&opts)?;
    info!(
        "phase map over dimensions {:?}",
        select_n_values(&cfg.n_selection, cfg.master_seed)?
    );
    let grid = run_phase_map(&cfg)?;
    manifest.output(&dir.join("phase_map.csv"), &grid.to_csv())?;
    manifest.output(
        &dir.join("phase_map.svg"),
        &grid.to_svg("success rate, RRE below threshold"),
    )?;
    manifest.set("master_seed", cfg.master_seed);
    manifest.set("n_values", grid.metadata.n_values.clone());
    manifest.set("solver_digest", grid.metadata.solver_digest.clone());
    manifest.finish(&dir.join("manifest.json"))?;
    println!("out={}", dir.display());
    Ok(ExitCode::SUCCESS)
}

pub fn image_exp(input: Input) -> Result<ExitCode> {
    const SPEC: &[KeySpec] = &[
        ("corpus", None),
        ("patch_size", Some("8,16,32")),
        ("runs", Some("200")),
        ("theta_m", Some(GRID_THETA_M)),
        ("theta_f", Some(GRID_THETA_F)),
        ("seed", Some("0")),
        ("lambda", Some("1")),
        ("energy_ratio", Some("100")),
        ("max_iter", Some("50000")),
        ("tol", Some("1e-10")),
        ("threads", None),
        ("out", Some("image-exp")),
    ];
    let opts = resolve("image-exp", SPEC, input)?;
    let mut manifest = Manifest::new("image-exp", &opts);
    let corpus: String = opts.require("corpus")?;
    if !Path::new(&corpus).is_dir() {
        bail!("corpus directory {corpus} does not exist");
    }
    let lambda: f64 = opts.require("lambda")?;
    let cfg = ImageExpConfig {
        patch_sizes: opts.list("patch_size")?.expect("has a default"),
        patches_per_cell: opts.require("runs")?,
        theta_m_grid: opts.list("theta_m")?.expect("has a default"),
        theta_f_grid: opts.list("theta_f")?.expect("has a default"),
        master_seed: opts.require("seed")?,
        lambda,
        corruption_energy_ratio: opts.require("energy_ratio")?,
        solver: solver_config(&opts, lambda)?,
        threads: threads(&opts)?,
        ..ImageExpConfig::new(&corpus)
    };
    let dir = out_dir(&opts)?;
    let grids = run_image_experiment(&cfg)?;
    for (size, grid) in &grids {
        manifest.output(&dir.join(format!("image_exp_{size}.csv")), &grid.to_csv())?;
        let title = format!("mean SRRE, {size}x{size} patches");
        manifest.output(&dir.join(format!("image_exp_{size}.svg")), &grid.to_svg(&title))?;
    }
    manifest.set("master_seed", cfg.master_seed);
    manifest.set("solver_digest", cfg.solver.digest());
    manifest.finish(&dir.join("manifest.json"))?;
    println!("out={}", dir.display());
    Ok(ExitCode::SUCCESS)
}

pub fn sparsity_curve(input: Input) -> Result<ExitCode> {
    const SPEC: &[KeySpec] = &[
        ("n", Some("1024")),
        ("runs", Some("200")),
        ("seed", Some("0")),
        ("corpus", None),
        ("out", Some("sparsity-curve")),
    ];
    let opts = resolve("sparsity-curve", SPEC, input)?;
    let mut manifest = Manifest::new("sparsity-curve", &opts);
    let corpus = opts.get("corpus").map(|dir| Corpus::load(Path::new(dir))).transpose()?;
    let mut families = vec![SignalFamily::Gaussian, SignalFamily::SyntheticSparse];
    if corpus.is_some() {
        families.push(SignalFamily::ImageSpectrum);
    } else {
        info!("no corpus given; the image-spectrum curve is omitted");
    }
    let seed: u64 = opts.require("seed")?;
    let dir = out_dir(&opts)?;
    let curves = run_sparsity_curve(
        &families,
        opts.require("n")?,
        opts.require("runs")?,
        seed,
        corpus.as_ref(),
    )?;
    manifest.output(&dir.join("sparsity_curve.csv"), &curves.to_csv())?;
    manifest.output(&dir.join("sparsity_curve.svg"), &curves.to_svg())?;
    manifest.set("master_seed", seed);
    manifest.finish(&dir.join("manifest.json"))?;
    println!("out={}", dir.display());
    Ok(ExitCode::SUCCESS)
}
