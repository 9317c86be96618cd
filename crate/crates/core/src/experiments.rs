//! Seeded experiment grids: synthetic success-rate maps, image-patch SRRE
//! maps and k-sparse indicator curves.
//!
//! Every trial draws its seed from its position in the grid,
//! `hash64(master_seed, row, col, n_index, run)`, so results do not depend on
//! scheduling. `hash64` chains the SplitMix64 finalizer:
//! `h₀ = mix(master_seed)`, `h_{i+1} = mix(h_i ⊕ v_i)`, where
//! `mix(z) = z + 0x9E3779B97F4A7C15`, then
//! `z ← (z ⊕ (z ≫ 30))·0xBF58476D1CE4E5B9`,
//! `z ← (z ⊕ (z ≫ 27))·0x94D049BB133111EB`, `z ⊕ (z ≫ 31)` (wrapping).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use log::{info, warn};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::certificate::is_prime;
use crate::error::{invalid, Error, Result};
use crate::fourier::{dft, PRNG_NAME};
use crate::problem::{
    generate_synthetic, instance_from_signal, rre, sigma_k_profile, signal_sparsity, srre, stream, SyntheticConfig,
};
use crate::solver::{solve, SolverConfig};
use crate::vecops::norm2;

/// Environment variable read for the worker count when none is configured.
pub const THREADS_ENV: &str = "CORRUPT_RECOVER_THREADS";

fn splitmix(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Position-derived trial seed.
pub fn hash64(master: u64, row: u64, col: u64, n_index: u64, run: u64) -> u64 {
    [row, col, n_index, run]
        .iter()
        .fold(splitmix(master), |h, &v| splitmix(h ^ v))
}

/// Builds the worker pool: explicit count, else the environment variable,
/// else rayon's default.
pub fn worker_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let threads = match threads {
        Some(t) => t,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| invalid(format!("{THREADS_ENV}={v} is not a thread count")))?,
            Err(_) => 0,
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NMode {
    Primes,
    Nonprimes,
}

impl std::str::FromStr for NMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primes" | "prime" => Ok(Self::Primes),
            "nonprimes" | "nonprime" => Ok(Self::Nonprimes),
            _ => Err(invalid(format!("n mode `{s}` is neither `primes` nor `nonprimes`"))),
        }
    }
}

/// How the signal dimensions of a phase map are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum NSelection {
    Explicit(Vec<usize>),
    /// `count` distinct values drawn uniformly from the primes (or the
    /// non-primes) in `range` (inclusive), seeded by the master seed.
    Random {
        mode: NMode,
        range: (usize, usize),
        count: usize,
    },
}

/// Draws the dimensions for `selection`, returned sorted.
pub fn select_n_values(selection: &NSelection, master_seed: u64) -> Result<Vec<usize>> {
    match selection {
        NSelection::Explicit(v) if v.is_empty() => Err(invalid("no signal dimensions given")),
        NSelection::Explicit(v) => Ok(v.clone()),
        &NSelection::Random {
            mode,
            range: (lo, hi),
            count,
        } => {
            if count == 0 {
                return Err(invalid("n_count must be at least 1"));
            }
            let pool: Vec<usize> = (lo..=hi).filter(|&n| is_prime(n) == (mode == NMode::Primes)).collect();
            if pool.len() < count {
                return Err(invalid(format!(
                    "only {} candidates in [{lo}, {hi}] for {count} dimensions",
                    pool.len()
                )));
            }
            let mut rng = stream(master_seed, 7);
            let mut out: Vec<usize> = sample(&mut rng, pool.len(), count)
                .into_iter()
                .map(|i| pool[i])
                .collect();
            out.sort_unstable();
            Ok(out)
        }
    }
}

fn default_theta_m() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_theta_f() -> Vec<f64> {
    vec![0.05, 0.15, 0.25, 0.35]
}

#[derive(Debug, Clone)]
pub struct PhaseMapConfig {
    pub theta_m_grid: Vec<f64>,
    pub theta_f_grid: Vec<f64>,
    pub n_selection: NSelection,
    pub runs_per_triple: usize,
    pub success_rre: f64,
    pub master_seed: u64,
    pub lambda: f64,
    pub solver: SolverConfig,
    pub threads: Option<usize>,
}

impl Default for PhaseMapConfig {
    fn default() -> Self {
        Self {
            theta_m_grid: default_theta_m(),
            theta_f_grid: default_theta_f(),
            n_selection: NSelection::Random {
                mode: NMode::Primes,
                range: (128, 512),
                count: 20,
            },
            runs_per_triple: 25,
            success_rre: 1e-8,
            master_seed: 0,
            lambda: 1.0,
            solver: SolverConfig::default(),
            threads: None,
        }
    }
}

/// One grid cell: the aggregated value over completed runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// Success rate or mean SRRE; NaN when every run was skipped.
    pub value: f64,
    pub runs: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridMetadata {
    /// `success_rate` or `mean_srre`.
    pub metric: String,
    pub master_seed: u64,
    pub n_values: Vec<usize>,
    pub lambda: f64,
    pub solver_digest: String,
    pub prng: String,
}

/// Values over `(ϑ_m, ϑ_f)`, stored row-major with `ϑ_m` as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub theta_m: Vec<f64>,
    pub theta_f: Vec<f64>,
    pub cells: Vec<Cell>,
    pub metadata: GridMetadata,
}

impl PhaseGrid {
    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row * self.theta_f.len() + col]
    }

    /// Cell at the grid point closest to `(theta_m, theta_f)`.
    pub fn at(&self, theta_m: f64, theta_f: f64) -> Option<&Cell> {
        let row = self.theta_m.iter().position(|&t| (t - theta_m).abs() < 1e-9)?;
        let col = self.theta_f.iter().position(|&t| (t - theta_f).abs() < 1e-9)?;
        Some(self.cell(row, col))
    }

    /// `theta_m,theta_f,value,runs,skipped` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_m,theta_f,value,runs,skipped\n");
        for (r, tm) in self.theta_m.iter().enumerate() {
            for (c, tf) in self.theta_f.iter().enumerate() {
                let cell = self.cell(r, c);
                let _ = writeln!(
                    out,
                    "{tm:.16e},{tf:.16e},{:.16e},{},{}",
                    cell.value, cell.runs, cell.skipped
                );
            }
        }
        out
    }

    /// Parses the CSV written by [`PhaseGrid::to_csv`]; metadata is left empty.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("theta_m,theta_f,value,runs,skipped") {
            return Err(Error::Parse {
                line: 1,
                msg: "unexpected CSV header".into(),
            });
        }
        let mut rows: Vec<(f64, f64, Cell)> = Vec::new();
        for (k, line) in lines.enumerate() {
            let bad = || Error::Parse {
                line: k + 2,
                msg: format!("bad CSV row `{line}`"),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
            rows.push((
                num(f[0])?,
                num(f[1])?,
                Cell {
                    value: num(f[2])?,
                    runs: int(f[3])?,
                    skipped: int(f[4])?,
                },
            ));
        }
        let mut theta_m: Vec<f64> = Vec::new();
        let mut theta_f: Vec<f64> = Vec::new();
        for (tm, tf, _) in &rows {
            if !theta_m.contains(tm) {
                theta_m.push(*tm);
            }
            if !theta_f.contains(tf) {
                theta_f.push(*tf);
            }
        }
        if rows.len() != theta_m.len() * theta_f.len() {
            return Err(Error::Parse {
                line: 0,
                msg: "CSV rows do not form a full grid".into(),
            });
        }
        let cells = rows.into_iter().map(|(_, _, c)| c).collect();
        Ok(Self {
            theta_m,
            theta_f,
            cells,
            metadata: GridMetadata::default(),
        })
    }

    /// Heat map with one `rect` per cell (`ϑ_m` increasing upwards, `ϑ_f`
    /// to the right) and a `title` child holding the exact value.
    pub fn to_svg(&self, title: &str) -> String {
        const CELL: usize = 48;
        const LEFT: usize = 64;
        const TOP: usize = 40;
        let rows = self.theta_m.len();
        let cols = self.theta_f.len();
        let width = LEFT + cols * CELL + 16;
        let height = TOP + rows * CELL + 48;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<text x="{LEFT}" y="20" font-size="13">{}</text>"#, escape(title));
        for r in 0..rows {
            let y = TOP + (rows - 1 - r) * CELL;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                LEFT - 6,
                y + CELL / 2 + 4,
                self.theta_m[r]
            );
            for c in 0..cols {
                let cell = self.cell(r, c);
                let x = LEFT + c * CELL;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"><title>theta_m={} theta_f={} value={:?} runs={} skipped={}</title></rect>"#,
                    ramp_color(cell.value),
                    self.theta_m[r],
                    self.theta_f[c],
                    cell.value,
                    cell.runs,
                    cell.skipped
                );
            }
        }
        let base = TOP + rows * CELL;
        for (c, tf) in self.theta_f.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{tf}</text>"#,
                LEFT + c * CELL + CELL / 2,
                base + 16
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">theta_f</text>"#,
            LEFT + cols * CELL / 2,
            base + 36
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">theta_m</text>"#,
            TOP + rows * CELL / 2,
            TOP + rows * CELL / 2
        );
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Colour for a value clamped to `[0, 1]`: red and green rise linearly from
/// `0x00` to `0xff`, blue falls from `0x80` to `0x00`, so a larger value
/// never gives a lexicographically smaller `#rrggbb` string. NaN is grey.
pub fn ramp_color(value: f64) -> String {
    if value.is_nan() {
        return "#808080".to_owned();
    }
    let t = value.clamp(0.0, 1.0);
    let up = (255.0 * t).round() as u8;
    let down = (128.0 * (1.0 - t)).round() as u8;
    format!("#{up:02x}{up:02x}{down:02x}")
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

pub fn write_grid_csv(grid: &PhaseGrid, path: &Path) -> Result<()> {
    write_text(path, &grid.to_csv())
}

pub fn write_grid_svg(grid: &PhaseGrid, path: &Path, title: &str) -> Result<()> {
    write_text(path, &grid.to_svg(title))
}

#[derive(Debug, Clone, Copy)]
enum Outcome {
    Value(f64),
    Skipped,
}

fn aggregate(outcomes: &[Outcome]) -> Cell {
    let mut sum = 0.0;
    let mut runs = 0;
    let mut skipped = 0;
    for o in outcomes {
        match o {
            Outcome::Value(v) => {
                sum += v;
                runs += 1;
            }
            Outcome::Skipped => skipped += 1,
        }
    }
    let value = if runs == 0 { f64::NAN } else { sum / runs as f64 };
    Cell { value, runs, skipped }
}

/// Synthetic success-rate map: for every cell, dimension and run, generate
/// an instance, solve it and count `RRE < success_rre`. A cell value is the
/// success fraction over the runs that were not skipped.
pub fn run_phase_map(cfg: &PhaseMapConfig) -> Result<PhaseGrid> {
    if cfg.theta_m_grid.is_empty() || cfg.theta_f_grid.is_empty() {
        return Err(invalid("theta grids must be non-empty"));
    }
    if cfg.runs_per_triple == 0 {
        return Err(invalid("runs_per_triple must be at least 1"));
    }
    let solver = SolverConfig {
        lambda: cfg.lambda,
        ..cfg.solver
    };
    solver.validate()?;
    let n_values = select_n_values(&cfg.n_selection, cfg.master_seed)?;
    let pool = worker_pool(cfg.threads)?;
    let cols = cfg.theta_f_grid.len();
    let per_cell = n_values.len() * cfg.runs_per_triple;

    let mut cells = Vec::with_capacity(cfg.theta_m_grid.len() * cols);
    for (r, &tm) in cfg.theta_m_grid.iter().enumerate() {
        for (c, &tf) in cfg.theta_f_grid.iter().enumerate() {
            let outcomes: Vec<Outcome> = pool.install(|| {
                (0..per_cell)
                    .into_par_iter()
                    .map(|t| {
                        let (ni, run) = (t / cfg.runs_per_triple, t % cfg.runs_per_triple);
                        let seed = hash64(cfg.master_seed, r as u64, c as u64, ni as u64, run as u64);
                        synthetic_trial(n_values[ni], tm, tf, seed, &solver, cfg.success_rre)
                    })
                    .collect()
            });
            let cell = aggregate(&outcomes);
            info!(
                "phase map theta_m={tm} theta_f={tf}: value {:.4} over {} runs ({} skipped)",
                cell.value, cell.runs, cell.skipped
            );
            cells.push(cell);
        }
    }
    Ok(PhaseGrid {
        theta_m: cfg.theta_m_grid.clone(),
        theta_f: cfg.theta_f_grid.clone(),
        cells,
        metadata: GridMetadata {
            metric: "success_rate".into(),
            master_seed: cfg.master_seed,
            n_values,
            lambda: cfg.lambda,
            solver_digest: solver.digest(),
            prng: PRNG_NAME.into(),
        },
    })
}

fn synthetic_trial(n: usize, tm: f64, tf: f64, seed: u64, solver: &SolverConfig, success_rre: f64) -> Outcome {
    let cfg = SyntheticConfig {
        lambda: solver.lambda,
        ..SyntheticConfig::new(n, tm, tf, seed)
    };
    let feasible = cfg.shape().is_ok_and(|s| s.sx_len < s.m && s.sx_len < n);
    if !feasible {
        return Outcome::Skipped;
    }
    let run = || -> Result<f64> {
        let inst = generate_synthetic(&cfg)?;
        let sol = solve(&inst.operator, &inst.b, solver)?;
        let e = rre(&sol.x_hat, &sol.f_hat, &inst.x0, &inst.f0)?;
        Ok(if e < success_rre { 1.0 } else { 0.0 })
    };
    match run() {
        Ok(v) => Outcome::Value(v),
        Err(e) => {
            warn!("trial n={n} theta_m={tm} theta_f={tf} seed={seed} skipped: {e}");
            Outcome::Skipped
        }
    }
}

/// 16-bit luminance raster.
pub type LumaImage = ImageBuffer<Luma<u16>, Vec<u16>>;

/// Decoded luminance rasters of a corpus directory.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub images: Vec<(PathBuf, LumaImage)>,
}

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "tif", "tiff", "bmp", "pgm", "ppm", "pnm", "gif"];

impl Corpus {
    /// Decodes every image file in `dir` (sorted by name). Undecodable files
    /// are skipped with a warning; an empty result is an error.
    pub fn load(dir: &Path) -> Result<Self> {
        let entries = fs::read_dir(dir).map_err(|e| Error::Corpus {
            path: dir.to_owned(),
            msg: e.to_string(),
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect();
        paths.sort();
        let images: Vec<_> = paths
            .into_iter()
            .filter_map(|p| match image::open(&p) {
                Ok(img) => Some((p, img.to_luma16())),
                Err(e) => {
                    warn!("skipping {}: {e}", p.display());
                    None
                }
            })
            .collect();
        if images.is_empty() {
            return Err(Error::Corpus {
                path: dir.to_owned(),
                msg: "no decodable images".into(),
            });
        }
        Ok(Self { images })
    }

    /// Indices of images at least `size × size`.
    fn fitting(&self, size: usize) -> Vec<usize> {
        (0..self.images.len())
            .filter(|&i| {
                let (w, h) = self.images[i].1.dimensions();
                w as usize >= size && h as usize >= size
            })
            .collect()
    }
}

/// Row-major `size × size` patch with values in `[0, 1]` at a uniformly
/// random top-left corner drawn from `rng`.
fn extract_patch<R: Rng + ?Sized>(img: &LumaImage, size: usize, rng: &mut R) -> Vec<f64> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let x0 = rng.random_range(0..=w - size);
    let y0 = rng.random_range(0..=h - size);
    let mut out = Vec::with_capacity(size * size);
    for y in y0..y0 + size {
        for x in x0..x0 + size {
            out.push(f64::from(img.get_pixel(x as u32, y as u32).0[0]) / 65535.0);
        }
    }
    out
}

/// Loads the luminance of one image and cuts a seeded random patch.
pub fn load_grayscale_patch(path: &Path, size: usize, seed: u64) -> Result<Vec<f64>> {
    if size == 0 {
        return Err(invalid("patch size must be positive"));
    }
    let img = image::open(path)
        .map_err(|e| Error::Corpus {
            path: path.to_owned(),
            msg: e.to_string(),
        })?
        .to_luma16();
    if (img.width() as usize) < size || (img.height() as usize) < size {
        return Err(Error::Corpus {
            path: path.to_owned(),
            msg: format!("{}x{} image is smaller than {size}x{size}", img.width(), img.height()),
        });
    }
    Ok(extract_patch(&img, size, &mut stream(seed, 4)))
}

#[derive(Debug, Clone)]
pub struct ImageExpConfig {
    pub patch_sizes: Vec<usize>,
    pub corpus_dir: PathBuf,
    pub patches_per_cell: usize,
    pub theta_m_grid: Vec<f64>,
    pub theta_f_grid: Vec<f64>,
    pub master_seed: u64,
    pub lambda: f64,
    pub corruption_energy_ratio: f64,
    pub solver: SolverConfig,
    pub threads: Option<usize>,
}

impl ImageExpConfig {
    pub fn new(corpus_dir: impl Into<PathBuf>) -> Self {
        Self {
            patch_sizes: vec![8, 16, 32],
            corpus_dir: corpus_dir.into(),
            patches_per_cell: 200,
            theta_m_grid: default_theta_m(),
            theta_f_grid: default_theta_f(),
            master_seed: 0,
            lambda: 1.0,
            corruption_energy_ratio: 100.0,
            solver: SolverConfig::default(),
            threads: None,
        }
    }
}

/// Spectrum recovery from corrupted pixel samples, as mean SRRE maps, one
/// per patch size.
///
/// For each patch the target is its unitary DFT `x̌`; the operator samples
/// rows of the conjugate DFT, so `A x̌` is the scaled pixel sample on `Λ`.
/// The reported error is the SRRE of `λ x̂` against `x̌`.
pub fn run_image_experiment(cfg: &ImageExpConfig) -> Result<Vec<(usize, PhaseGrid)>> {
    if cfg.patch_sizes.is_empty() || cfg.theta_m_grid.is_empty() || cfg.theta_f_grid.is_empty() {
        return Err(invalid("patch sizes and theta grids must be non-empty"));
    }
    if cfg.patches_per_cell == 0 {
        return Err(invalid("patches_per_cell must be at least 1"));
    }
    let corpus = Corpus::load(&cfg.corpus_dir)?;
    run_image_experiment_on(cfg, &corpus)
}

/// [`run_image_experiment`] on an already decoded corpus.
pub fn run_image_experiment_on(cfg: &ImageExpConfig, corpus: &Corpus) -> Result<Vec<(usize, PhaseGrid)>> {
    let solver = SolverConfig {
        lambda: cfg.lambda,
        ..cfg.solver
    };
    solver.validate()?;
    let pool = worker_pool(cfg.threads)?;
    let mut grids = Vec::new();
    for (si, &size) in cfg.patch_sizes.iter().enumerate() {
        let fitting = corpus.fitting(size);
        if fitting.len() < corpus.images.len() {
            warn!(
                "{} corpus images smaller than {size}x{size} are skipped",
                corpus.images.len() - fitting.len()
            );
        }
        let mut cells = Vec::new();
        for (r, &tm) in cfg.theta_m_grid.iter().enumerate() {
            for (c, &tf) in cfg.theta_f_grid.iter().enumerate() {
                let outcomes: Vec<Outcome> = pool.install(|| {
                    (0..cfg.patches_per_cell)
                        .into_par_iter()
                        .map(|p| {
                            if fitting.is_empty() {
                                return Outcome::Skipped;
                            }
                            let seed = hash64(cfg.master_seed, r as u64, c as u64, si as u64, p as u64);
                            image_trial(
                                corpus,
                                &fitting,
                                size,
                                tm,
                                tf,
                                seed,
                                cfg.corruption_energy_ratio,
                                &solver,
                            )
                        })
                        .collect()
                });
                let cell = aggregate(&outcomes);
                info!(
                    "image {size}x{size} theta_m={tm} theta_f={tf}: mean SRRE {:.4} over {} patches ({} skipped)",
                    cell.value, cell.runs, cell.skipped
                );
                cells.push(cell);
            }
        }
        grids.push((
            size,
            PhaseGrid {
                theta_m: cfg.theta_m_grid.clone(),
                theta_f: cfg.theta_f_grid.clone(),
                cells,
                metadata: GridMetadata {
                    metric: "mean_srre".into(),
                    master_seed: cfg.master_seed,
                    n_values: vec![size * size],
                    lambda: cfg.lambda,
                    solver_digest: solver.digest(),
                    prng: PRNG_NAME.into(),
                },
            },
        ));
    }
    Ok(grids)
}

/// SRRE of one image patch recovery.
#[allow(clippy::too_many_arguments)]
pub fn image_trial_srre(
    corpus: &Corpus,
    size: usize,
    theta_m: f64,
    theta_f: f64,
    seed: u64,
    energy_ratio: f64,
    solver: &SolverConfig,
) -> Result<f64> {
    let fitting = corpus.fitting(size);
    if fitting.is_empty() {
        return Err(invalid(format!("no corpus image holds a {size}x{size} patch")));
    }
    recover_patch(corpus, &fitting, size, theta_m, theta_f, seed, energy_ratio, solver)
}

#[allow(clippy::too_many_arguments)]
fn image_trial(
    corpus: &Corpus,
    fitting: &[usize],
    size: usize,
    tm: f64,
    tf: f64,
    seed: u64,
    energy_ratio: f64,
    solver: &SolverConfig,
) -> Outcome {
    match recover_patch(corpus, fitting, size, tm, tf, seed, energy_ratio, solver) {
        Ok(v) => Outcome::Value(v),
        Err(e) => {
            warn!("patch trial {size}x{size} theta_m={tm} theta_f={tf} seed={seed} skipped: {e}");
            Outcome::Skipped
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn recover_patch(
    corpus: &Corpus,
    fitting: &[usize],
    size: usize,
    tm: f64,
    tf: f64,
    seed: u64,
    energy_ratio: f64,
    solver: &SolverConfig,
) -> Result<f64> {
    let n = size * size;
    let m = (tm * n as f64).round() as usize;
    let sf_len = (tf * m as f64).round() as usize;
    let mut rng = stream(seed, 4);
    let img = &corpus.images[fitting[rng.random_range(0..fitting.len())]].1;
    let patch: Vec<Complex64> = extract_patch(img, size, &mut rng)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let spectrum = dft(&patch)?;
    let inst = instance_from_signal(spectrum, m, sf_len, energy_ratio, solver.lambda, seed, true)?;
    let sol = solve(&inst.operator, &inst.b, solver)?;
    srre(&sol.scaled_signal(solver.lambda), &inst.x0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFamily {
    Gaussian,
    SyntheticSparse,
    ImageSpectrum,
}

impl SignalFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::SyntheticSparse => "synthetic_sparse",
            Self::ImageSpectrum => "image_spectrum",
        }
    }
}

/// Mean `σ_k(y)₁ / ‖y‖₂` for `k = 0..=n`, per family.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityCurves {
    pub n: usize,
    pub samples: usize,
    pub curves: Vec<(SignalFamily, Vec<f64>)>,
}

impl SparsityCurves {
    pub fn curve(&self, family: SignalFamily) -> Option<&[f64]> {
        self.curves
            .iter()
            .find(|(f, _)| *f == family)
            .map(|(_, c)| c.as_slice())
    }

    /// `k,k_over_n,<family>...` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,k_over_n");
        for (f, _) in &self.curves {
            out.push(',');
            out.push_str(f.name());
        }
        out.push('\n');
        for k in 0..=self.n {
            let _ = write!(out, "{k},{:.16e}", k as f64 / self.n as f64);
            for (_, c) in &self.curves {
                let _ = write!(out, ",{:.16e}", c[k]);
            }
            out.push('\n');
        }
        out
    }

    /// Line chart over `k/n`, one polyline per family.
    pub fn to_svg(&self) -> String {
        const W: f64 = 480.0;
        const H: f64 = 320.0;
        const PAD: f64 = 48.0;
        let colors = ["#000000", "#1f4fbf", "#bf1f1f"];
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
            W + 2.0 * PAD,
            H + 2.0 * PAD
        );
        let top = self
            .curves
            .iter()
            .flat_map(|(_, c)| c.iter().copied())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let _ = writeln!(
            s,
            r##"<rect x="{PAD}" y="{PAD}" width="{W}" height="{H}" fill="none" stroke="#888888"/>"##
        );
        for (i, (family, curve)) in self.curves.iter().enumerate() {
            let pts: Vec<String> = curve
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let x = PAD + W * k as f64 / self.n as f64;
                    let y = PAD + H * (1.0 - v / top);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let color = colors[i % colors.len()];
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                pts.join(" "),
                family.name()
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                PAD + W - 110.0,
                PAD + 16.0 + 14.0 * i as f64,
                family.name()
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">k/n</text>"#,
            PAD + W / 2.0,
            PAD + H + 32.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">0</text>"#,
            PAD,
            PAD + H + 14.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">1</text>"#,
            PAD + W,
            PAD + H + 14.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{top:.3}</text>"#,
            PAD - 4.0,
            PAD + 4.0
        );
        s.push_str("</svg>\n");
        s
    }
}

const MAX_PATCH_DRAWS: usize = 1000;

/// k-sparse indicator curves. Gaussian draws are real standard normal;
/// synthetic-sparse draws use the synthetic generator's signal rule with the
/// same `n`; image spectra are DFTs of random `√n × √n` corpus patches, so
/// `n` must be a perfect square when that family is requested. All-black
/// patches are redrawn.
pub fn run_sparsity_curve(
    families: &[SignalFamily],
    n: usize,
    samples: usize,
    master_seed: u64,
    corpus: Option<&Corpus>,
) -> Result<SparsityCurves> {
    if n == 0 || samples == 0 {
        return Err(invalid("n and samples must be positive"));
    }
    let mut curves = Vec::new();
    for (fi, &family) in families.iter().enumerate() {
        let mut acc = vec![0.0; n + 1];
        let side = (n as f64).sqrt().round() as usize;
        let fitting = match family {
            SignalFamily::ImageSpectrum => {
                let corpus = corpus.ok_or_else(|| invalid("the image-spectrum family needs a corpus"))?;
                if side * side != n {
                    return Err(invalid(format!("image spectra need a square n, got {n}")));
                }
                let f = corpus.fitting(side);
                if f.is_empty() {
                    return Err(invalid(format!("no corpus image holds a {side}x{side} patch")));
                }
                f
            }
            _ => Vec::new(),
        };
        let sx_len = match family {
            SignalFamily::SyntheticSparse => signal_sparsity(n)?,
            _ => 0,
        };
        for s in 0..samples {
            let seed = hash64(master_seed, fi as u64, 0, 0, s as u64);
            let mut rng = stream(seed, 5);
            let y: Vec<Complex64> = match family {
                SignalFamily::Gaussian => (0..n)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
                    .collect(),
                SignalFamily::SyntheticSparse => {
                    let start = rng.random_range(0..=n - sx_len);
                    let mut y = vec![Complex64::ZERO; n];
                    for v in &mut y[start..start + sx_len] {
                        *v = Complex64::new(1.0 - rng.random::<f64>(), 0.0);
                    }
                    y
                }
                SignalFamily::ImageSpectrum => {
                    // all-black patches have no indicator; draw again
                    let corpus = corpus.expect("checked above");
                    let mut spectrum = None;
                    for _ in 0..MAX_PATCH_DRAWS {
                        let img = &corpus.images[fitting[rng.random_range(0..fitting.len())]].1;
                        let patch = extract_patch(img, side, &mut rng);
                        if patch.iter().any(|&v| v > 0.0) {
                            let patch: Vec<Complex64> = patch.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
                            spectrum = Some(dft(&patch)?);
                            break;
                        }
                    }
                    spectrum.ok_or_else(|| invalid(format!("{MAX_PATCH_DRAWS} consecutive all-black patches")))?
                }
            };
            let norm = norm2(&y);
            if norm == 0.0 {
                return Err(invalid("drew a zero vector; the indicator is undefined"));
            }
            for (a, v) in acc.iter_mut().zip(sigma_k_profile(&y)) {
                *a += v / norm;
            }
        }
        acc.iter_mut().for_each(|v| *v /= samples as f64);
        curves.push((family, acc));
    }
    Ok(SparsityCurves { n, samples, curves })
}
