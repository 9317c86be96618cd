use std::path::Path;

use corrupt_recover::experiments::{
    load_grayscale_patch, run_image_experiment, run_phase_map, run_sparsity_curve, Corpus, ImageExpConfig, NSelection,
    PhaseMapConfig, SignalFamily,
};
use image::{GrayImage, Luma};

fn small_map(threads: usize) -> PhaseMapConfig {
    PhaseMapConfig {
        theta_m_grid: vec![0.3, 0.9],
        theta_f_grid: vec![0.05, 0.25],
        n_selection: NSelection::Explicit(vec![31, 37]),
        runs_per_triple: 3,
        master_seed: 5,
        threads: Some(threads),
        ..PhaseMapConfig::default()
    }
}

#[test]
fn phase_map_does_not_depend_on_thread_count() {
    let a = run_phase_map(&small_map(1)).unwrap();
    let b = run_phase_map(&small_map(4)).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.metadata.metric, "success_rate");
    assert_eq!(a.metadata.n_values, vec![31, 37]);
    for cell in &a.cells {
        assert_eq!(cell.runs + cell.skipped, 6);
    }
}

#[test]
fn tiny_measurement_counts_are_skipped() {
    // n = 31 gives |s_x| = 3; theta_m = 0.05 leaves m = 2 < |s_x|
    let cfg = PhaseMapConfig {
        theta_m_grid: vec![0.05],
        theta_f_grid: vec![0.05],
        n_selection: NSelection::Explicit(vec![31]),
        runs_per_triple: 4,
        ..PhaseMapConfig::default()
    };
    let grid = run_phase_map(&cfg).unwrap();
    let cell = grid.cells[0];
    assert_eq!((cell.runs, cell.skipped), (0, 4));
    assert!(cell.value.is_nan());
}

fn write_gray(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> u8) {
    GrayImage::from_fn(w, h, |x, y| Luma([f(x, y)])).save(path).unwrap();
}

#[test]
fn patches_scale_pixels_into_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let white = dir.path().join("white.png");
    write_gray(&white, 20, 20, |_, _| 255);
    assert!(load_grayscale_patch(&white, 8, 1).unwrap().iter().all(|&v| v == 1.0));

    let ramp = dir.path().join("ramp.png");
    write_gray(&ramp, 16, 16, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 });
    let p = load_grayscale_patch(&ramp, 16, 3).unwrap();
    assert_eq!(p.len(), 256);
    assert_eq!((p[0], p[1], p[16]), (0.0, 1.0, 1.0));

    let grad = dir.path().join("grad.png");
    write_gray(&grad, 64, 64, |x, y| ((x * 3 + y * 5) % 256) as u8);
    assert_eq!(
        load_grayscale_patch(&grad, 8, 11).unwrap(),
        load_grayscale_patch(&grad, 8, 11).unwrap()
    );
    assert!(load_grayscale_patch(&grad, 65, 0).is_err());
}

#[test]
fn corpus_skips_undecodable_files_and_rejects_empty_dirs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(Corpus::load(dir.path()).is_err());
    std::fs::write(dir.path().join("broken.png"), b"not an image").unwrap();
    assert!(Corpus::load(dir.path()).is_err());
    write_gray(&dir.path().join("b.png"), 40, 40, |x, y| ((x * y) % 256) as u8);
    write_gray(&dir.path().join("a.png"), 40, 40, |x, _| (x * 6) as u8);
    let corpus = Corpus::load(dir.path()).unwrap();
    let names: Vec<_> = corpus
        .images
        .iter()
        .map(|(p, _)| p.file_name().unwrap().to_owned())
        .collect();
    assert_eq!(names, ["a.png", "b.png"]);
}

#[test]
fn image_experiment_on_a_generated_corpus() {
    let dir = tempfile::tempdir().unwrap();
    write_gray(&dir.path().join("smooth.png"), 48, 48, |x, y| {
        (100.0 + 60.0 * ((x as f64) / 9.0).sin() * ((y as f64) / 7.0).cos()) as u8
    });
    let cfg = ImageExpConfig {
        patch_sizes: vec![8],
        patches_per_cell: 4,
        theta_m_grid: vec![0.9],
        theta_f_grid: vec![0.05],
        master_seed: 2,
        threads: Some(2),
        ..ImageExpConfig::new(dir.path())
    };
    let grids = run_image_experiment(&cfg).unwrap();
    assert_eq!(grids.len(), 1);
    let (size, grid) = &grids[0];
    assert_eq!(*size, 8);
    assert_eq!(grid.metadata.metric, "mean_srre");
    let cell = grid.cells[0];
    assert_eq!(cell.runs + cell.skipped, 4);
    assert!(cell.value.is_finite() && cell.value >= 0.0);
    assert_eq!(run_image_experiment(&cfg).unwrap()[0].1.to_csv(), grid.to_csv());

    let missing = ImageExpConfig::new(dir.path().join("nope"));
    assert!(run_image_experiment(&missing).is_err());
}

#[test]
fn image_spectrum_curves_use_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    write_gray(
        &dir.path().join("half.png"),
        32,
        32,
        |x, _| if x < 16 { 0 } else { 200 },
    );
    let corpus = Corpus::load(dir.path()).unwrap();
    let curves = run_sparsity_curve(&[SignalFamily::ImageSpectrum], 64, 5, 4, Some(&corpus)).unwrap();
    let c = curves.curve(SignalFamily::ImageSpectrum).unwrap();
    assert_eq!(c.len(), 65);
    assert_eq!(c[64], 0.0);
    assert!(run_sparsity_curve(&[SignalFamily::ImageSpectrum], 60, 5, 4, Some(&corpus)).is_err());
}
