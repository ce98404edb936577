//! A reduced calibration grid for the reduction constants.
//!
//! `cargo run --release --example calibration`

use hiercluster::harness::{calibrate, CalibrationSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let settings = CalibrationSettings {
        p_grid: vec![0.75, 0.9, 1.0],
        n_grid: vec![32, 128],
        trials: 200,
        c_rounds_grid: vec![0.5, 1.0, 2.0, 4.0],
        c_keep_grid: vec![1.0, 2.0, 4.0],
        fit_trials: 0,
        ..CalibrationSettings::default()
    };
    let report = calibrate(&settings)?;
    print!("{}", report.to_text());
    Ok(())
}
