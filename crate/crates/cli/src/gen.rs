//! `ovi gen-toy`: write the two-Gaussian classification stream as CSV.

use std::fmt::Write as _;
use std::path::Path;

use ovi_core::data::gen_toy_classification;

use crate::error::CliError;
use crate::run::fmt_f64;

pub fn toy_csv(n: usize, seed: u64) -> Result<String, CliError> {
    if n == 0 {
        return Err(CliError::Config("n must be positive".into()));
    }
    let ds = gen_toy_classification(n, seed)?;
    let mut out = String::from("x1,x2,y\n");
    for (x, y) in ds.features.iter().zip(&ds.targets) {
        let _ = writeln!(out, "{},{},{}", fmt_f64(x[0]), fmt_f64(x[1]), *y as i64);
    }
    Ok(out)
}

pub fn cmd_gen_toy(n: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    let text = toy_csv(n, seed)?;
    std::fs::write(out, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))
}
