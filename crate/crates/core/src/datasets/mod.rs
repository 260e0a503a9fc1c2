//! Ground-truth dataset generation for the benchmark systems.
//!
//! Four systems have closed-form solutions evaluated directly; the
//! air-preheater is solved by the finite-difference scheme in [`aph`].
//! Sampling layouts:
//!
//! - diffusion: 101x101 grid on [0,1] x [0,1]
//! - diffusion-reaction: 101x101 grid on [-pi,pi] x [0,1]
//! - kovasznay: 101x101 grid on [-0.5,1.0] x [-0.5,1.5], Re = 20
//! - taylor-green: 25k points on [0,2]^2 with discrete times 0, 0.1, ..., 1
//! - air-preheater: the solver grid over (theta, z) in [0,1]^2
//!
//! Grid datasets of 10201 rows split 7500/2701 into outer train/test, with
//! a validation carve-out (default 10%) taken from the training share;
//! other sizes split proportionally. Held-out scoring uses a separate,
//! freshly sampled set of test points drawn uniformly over the domain.

#![allow(clippy::needless_range_loop)]

pub mod aph;

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};

use crate::matrix::Matrix;
pub use aph::{aph_fd_solve, AphConfig, AphField, AphSolution};

#[derive(Debug)]
pub enum DatasetError {
    UnknownSystem(String),
    UnknownOutput(String),
    InvalidConfig(String),
    NoConvergence { residual: f64, sweeps: usize },
    Format(String),
    Io(std::io::Error),
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetError::UnknownSystem(s) => write!(
                f,
                "unknown system `{s}` (expected diffusion, kovasznay, taylor_green, diffusion_reaction, or aph)"
            ),
            DatasetError::UnknownOutput(s) => write!(f, "unknown output variable `{s}`"),
            DatasetError::InvalidConfig(msg) => write!(f, "invalid dataset configuration: {msg}"),
            DatasetError::NoConvergence { residual, sweeps } => {
                write!(f, "solver did not converge within {sweeps} sweeps (last residual {residual:.3e})")
            }
            DatasetError::Format(msg) => write!(f, "dataset format error: {msg}"),
            DatasetError::Io(e) => write!(f, "dataset I/O error: {e}"),
        }
    }
}

impl std::error::Error for DatasetError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            DatasetError::Io(e) => Some(e),
            _ => None,
        }
    }
}

/// Row assignment. Train and validation both come from the outer training
/// share; test rows are never touched before final evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self, DatasetError> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(DatasetError::Format(format!("unknown split `{other}`"))),
        }
    }
}

/// Input coordinates with one target column per output variable and a
/// per-row split assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub variable_names: Vec<String>,
    pub inputs: Matrix,
    /// Output name -> column, in declaration order.
    pub targets: Vec<(String, Vec<f64>)>,
    pub split: Vec<Split>,
}

/// One output variable's rows, materialized for training or scoring. The
/// input columns are ordered to match the grammar's terminals.
#[derive(Clone, Debug)]
pub struct DataSlice {
    pub inputs: Matrix,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.inputs.rows()
    }

    pub fn target(&self, name: &str) -> Result<&[f64], DatasetError> {
        self.targets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, col)| col.as_slice())
            .ok_or_else(|| DatasetError::UnknownOutput(name.to_string()))
    }

    pub fn output_names(&self) -> Vec<String> {
        self.targets.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn split_count(&self, split: Split) -> usize {
        self.split.iter().filter(|&&s| s == split).count()
    }

    /// Extracts the rows of `split` for output `output`, with input columns
    /// reordered to `terminal_names`. Every terminal must name a dataset
    /// variable.
    pub fn slice(
        &self,
        output: &str,
        split: Split,
        terminal_names: &[String],
    ) -> Result<DataSlice, DatasetError> {
        let col_map: Vec<usize> = terminal_names
            .iter()
            .map(|t| {
                self.variable_names
                    .iter()
                    .position(|v| v == t)
                    .ok_or_else(|| DatasetError::Format(format!("terminal `{t}` is not a dataset variable")))
            })
            .collect::<Result<_, _>>()?;
        let target = self.target(output)?;
        let mut inputs = Matrix::with_cols(col_map.len());
        let mut targets = Vec::new();
        let mut row_buf = vec![0.0; col_map.len()];
        for r in 0..self.rows() {
            if self.split[r] != split {
                continue;
            }
            let row = self.inputs.row(r);
            for (j, &c) in col_map.iter().enumerate() {
                row_buf[j] = row[c];
            }
            inputs.push_row(&row_buf);
            targets.push(target[r]);
        }
        Ok(DataSlice { inputs, targets })
    }

    /// Writes the CSV form: optional provenance comment, header of variable
    /// columns then output columns then `split`, rows with full-precision
    /// decimals. Deterministic byte-for-byte.
    pub fn write_csv<W: Write>(&self, mut w: W, provenance: Option<&str>) -> Result<(), DatasetError> {
        let io = DatasetError::Io;
        if let Some(p) = provenance {
            writeln!(w, "# {p}").map_err(io)?;
        }
        let mut header: Vec<&str> = self.variable_names.iter().map(String::as_str).collect();
        for (name, _) in &self.targets {
            header.push(name);
        }
        header.push("split");
        writeln!(w, "{}", header.join(",")).map_err(DatasetError::Io)?;
        for r in 0..self.rows() {
            let mut fields: Vec<String> = self.inputs.row(r).iter().map(|v| format!("{v}")).collect();
            for (_, col) in &self.targets {
                fields.push(format!("{}", col[r]));
            }
            fields.push(self.split[r].as_str().to_string());
            writeln!(w, "{}", fields.join(",")).map_err(DatasetError::Io)?;
        }
        Ok(())
    }

    /// Reads the CSV form back. `n_inputs` tells how many leading columns
    /// are coordinates; the trailing column must be `split`.
    pub fn read_csv<R: BufRead>(reader: R, n_inputs: usize) -> Result<Self, DatasetError> {
        let mut lines = reader.lines();
        let mut header = loop {
            match lines.next() {
                Some(line) => {
                    let line = line.map_err(DatasetError::Io)?;
                    if line.starts_with('#') {
                        continue;
                    }
                    break line;
                }
                None => return Err(DatasetError::Format("empty dataset file".into())),
            }
        };
        if header.ends_with('\r') {
            header.pop();
        }
        let names: Vec<String> = header.split(',').map(str::to_string).collect();
        if names.len() < n_inputs + 2 || names.last().map(String::as_str) != Some("split") {
            return Err(DatasetError::Format(
                "header must list input columns, output columns, then `split`".into(),
            ));
        }
        let variable_names = names[..n_inputs].to_vec();
        let output_names = names[n_inputs..names.len() - 1].to_vec();
        let mut inputs = Matrix::with_cols(n_inputs);
        let mut targets: Vec<(String, Vec<f64>)> =
            output_names.iter().map(|n| (n.clone(), Vec::new())).collect();
        let mut split = Vec::new();
        let mut row_buf = vec![0.0; n_inputs];
        for (lineno, line) in lines.enumerate() {
            let mut line = line.map_err(DatasetError::Io)?;
            if line.ends_with('\r') {
                line.pop();
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != names.len() {
                return Err(DatasetError::Format(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    names.len()
                )));
            }
            for (j, item) in row_buf.iter_mut().enumerate() {
                *item = fields[j]
                    .parse::<f64>()
                    .map_err(|_| DatasetError::Format(format!("bad number `{}`", fields[j])))?;
            }
            inputs.push_row(&row_buf);
            for (j, (_, col)) in targets.iter_mut().enumerate() {
                let v = fields[n_inputs + j]
                    .parse::<f64>()
                    .map_err(|_| DatasetError::Format(format!("bad number `{}`", fields[n_inputs + j])))?;
                col.push(v);
            }
            split.push(Split::parse(fields[names.len() - 1])?);
        }
        Ok(Dataset { variable_names, inputs, targets, split })
    }
}

/// The five benchmark systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchmarkSystem {
    Diffusion,
    Kovasznay,
    TaylorGreen,
    DiffusionReaction,
    AirPreheater,
}

impl BenchmarkSystem {
    pub fn parse(id: &str) -> Result<Self, DatasetError> {
        match id.to_ascii_lowercase().as_str() {
            "diffusion" => Ok(BenchmarkSystem::Diffusion),
            "kovasznay" => Ok(BenchmarkSystem::Kovasznay),
            "taylor_green" | "taylor-green" => Ok(BenchmarkSystem::TaylorGreen),
            "diffusion_reaction" | "diffusion-reaction" => Ok(BenchmarkSystem::DiffusionReaction),
            "aph" | "air_preheater" | "air-preheater" => Ok(BenchmarkSystem::AirPreheater),
            other => Err(DatasetError::UnknownSystem(other.to_string())),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            BenchmarkSystem::Diffusion => "diffusion",
            BenchmarkSystem::Kovasznay => "kovasznay",
            BenchmarkSystem::TaylorGreen => "taylor_green",
            BenchmarkSystem::DiffusionReaction => "diffusion_reaction",
            BenchmarkSystem::AirPreheater => "aph",
        }
    }

    pub fn variable_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            BenchmarkSystem::Diffusion | BenchmarkSystem::DiffusionReaction => &["x", "t"],
            BenchmarkSystem::Kovasznay => &["x", "y"],
            BenchmarkSystem::TaylorGreen => &["x", "y", "t"],
            BenchmarkSystem::AirPreheater => &["theta", "z"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn output_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            BenchmarkSystem::Diffusion | BenchmarkSystem::DiffusionReaction => &["u"],
            BenchmarkSystem::Kovasznay | BenchmarkSystem::TaylorGreen => &["u", "v", "p"],
            BenchmarkSystem::AirPreheater => &["T_fg", "T_mg", "T_fa1", "T_ma1", "T_fa2", "T_ma2"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Headline metric used in the results table.
    pub fn headline_metric(self) -> &'static str {
        match self {
            BenchmarkSystem::AirPreheater => "mae",
            _ => "relative_l2",
        }
    }
}

/// u(x, t) = e^{-t} sin(pi x)
pub fn diffusion_truth(x: f64, t: f64) -> f64 {
    (-t).exp() * (PI * x).sin()
}

/// lambda(Re) = Re/2 - sqrt(Re^2/4 + 4 pi^2)
pub fn kovasznay_lambda(reynolds: f64) -> f64 {
    reynolds / 2.0 - (reynolds * reynolds / 4.0 + 4.0 * PI * PI).sqrt()
}

/// Steady Kovasznay flow: (u, v, p) at (x, y).
pub fn kovasznay_truth(x: f64, y: f64, reynolds: f64) -> (f64, f64, f64) {
    let lambda = kovasznay_lambda(reynolds);
    let e = (lambda * x).exp();
    let u = 1.0 - e * (2.0 * PI * y).cos();
    let v = lambda / (2.0 * PI) * e * (2.0 * PI * y).sin();
    let p = (1.0 - (2.0 * lambda * x).exp()) / 2.0;
    (u, v, p)
}

/// Decaying Taylor-Green vortex: (u, v, p) at (x, y, t).
pub fn taylor_green_truth(x: f64, y: f64, t: f64, nu: f64) -> (f64, f64, f64) {
    let decay = (-2.0 * PI * PI * nu * t).exp();
    let u = -(PI * x).cos() * (PI * y).sin() * decay;
    let v = (PI * x).sin() * (PI * y).cos() * decay;
    let p = -((2.0 * PI * x).cos() + (2.0 * PI * y).cos()) * decay / 4.0;
    (u, v, p)
}

/// u(x, t) = e^{-t} (p(x) + q(x)) with
/// p(x) = (12 sin(x)(1 + cos(x)) + 4 sin(3x)) / 12 and
/// q(x) = sin(4x)(1 + cos(4x)) / 4.
pub fn diffusion_reaction_truth(x: f64, t: f64) -> f64 {
    let p = (12.0 * x.sin() * (1.0 + x.cos()) + 4.0 * (3.0 * x).sin()) / 12.0;
    let q = (4.0 * x).sin() * (1.0 + (4.0 * x).cos()) / 4.0;
    (-t).exp() * (p + q)
}

/// Sampling parameters; defaults reproduce the benchmark setups.
#[derive(Clone, Debug)]
pub struct SampleParams {
    pub validation_fraction: f64,
    pub kovasznay_reynolds: f64,
    pub taylor_green_nu: f64,
    pub aph: AphConfig,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            validation_fraction: 0.1,
            kovasznay_reynolds: 20.0,
            taylor_green_nu: 0.01,
            aph: AphConfig::default(),
        }
    }
}

impl SampleParams {
    fn validate(&self) -> Result<(), DatasetError> {
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(DatasetError::InvalidConfig(format!(
                "validation_fraction {} must be in [0, 1)",
                self.validation_fraction
            )));
        }
        if self.kovasznay_reynolds <= 0.0 {
            return Err(DatasetError::InvalidConfig("kovasznay reynolds must be positive".into()));
        }
        if self.taylor_green_nu <= 0.0 {
            return Err(DatasetError::InvalidConfig("taylor-green viscosity must be positive".into()));
        }
        Ok(())
    }
}

const GRID_N: usize = 101;
const BASE_ROWS: usize = GRID_N * GRID_N; // 10201
const BASE_TEST: usize = 2701; // leaving 7500 for the training share

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Outer test count: 2701 of 10201 rows, proportional for other sizes.
fn outer_test_count(rows: usize) -> usize {
    if rows == BASE_ROWS {
        BASE_TEST
    } else {
        (rows * BASE_TEST + BASE_ROWS / 2) / BASE_ROWS
    }
}

/// Shuffled split assignment: `n_test` rows to test, a validation share of
/// the remainder, the rest to train. Deterministic in `seed`.
fn assign_splits(rows: usize, validation_fraction: f64, seed: u64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..rows).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_test = outer_test_count(rows);
    let n_outer_train = rows - n_test;
    let n_val = (n_outer_train as f64 * validation_fraction).round() as usize;
    let mut split = vec![Split::Train; rows];
    for &r in order.iter().take(n_test) {
        split[r] = Split::Test;
    }
    for &r in order.iter().skip(n_test).take(n_val) {
        split[r] = Split::Validation;
    }
    split
}

/// Generates the training dataset for `system`. Deterministic in `seed`.
pub fn sample_dataset(
    system: BenchmarkSystem,
    params: &SampleParams,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    params.validate()?;
    let (inputs, targets) = match system {
        BenchmarkSystem::Diffusion => {
            let mut inputs = Matrix::with_cols(2);
            let mut u = Vec::new();
            for &x in &linspace(0.0, 1.0, GRID_N) {
                for &t in &linspace(0.0, 1.0, GRID_N) {
                    inputs.push_row(&[x, t]);
                    u.push(diffusion_truth(x, t));
                }
            }
            (inputs, vec![("u".to_string(), u)])
        }
        BenchmarkSystem::DiffusionReaction => {
            let mut inputs = Matrix::with_cols(2);
            let mut u = Vec::new();
            for &x in &linspace(-PI, PI, GRID_N) {
                for &t in &linspace(0.0, 1.0, GRID_N) {
                    inputs.push_row(&[x, t]);
                    u.push(diffusion_reaction_truth(x, t));
                }
            }
            (inputs, vec![("u".to_string(), u)])
        }
        BenchmarkSystem::Kovasznay => {
            let mut inputs = Matrix::with_cols(2);
            let (mut u, mut v, mut p) = (Vec::new(), Vec::new(), Vec::new());
            for &x in &linspace(-0.5, 1.0, GRID_N) {
                for &y in &linspace(-0.5, 1.5, GRID_N) {
                    inputs.push_row(&[x, y]);
                    let (ui, vi, pi) = kovasznay_truth(x, y, params.kovasznay_reynolds);
                    u.push(ui);
                    v.push(vi);
                    p.push(pi);
                }
            }
            (inputs, vec![("u".to_string(), u), ("v".to_string(), v), ("p".to_string(), p)])
        }
        BenchmarkSystem::TaylorGreen => {
            let mut rng = StdRng::seed_from_u64(seed ^ 0x7467);
            let mut inputs = Matrix::with_cols(3);
            let (mut u, mut v, mut p) = (Vec::new(), Vec::new(), Vec::new());
            for _ in 0..25_000 {
                let x = rng.random_range(0.0..2.0);
                let y = rng.random_range(0.0..2.0);
                let t = 0.1 * rng.random_range(0..=10) as f64;
                inputs.push_row(&[x, y, t]);
                let (ui, vi, pi) = taylor_green_truth(x, y, t, params.taylor_green_nu);
                u.push(ui);
                v.push(vi);
                p.push(pi);
            }
            (inputs, vec![("u".to_string(), u), ("v".to_string(), v), ("p".to_string(), p)])
        }
        BenchmarkSystem::AirPreheater => {
            let solution = aph::aph_fd_solve(&params.aph)?;
            let mut inputs = Matrix::with_cols(2);
            let mut cols: Vec<(String, Vec<f64>)> = system
                .output_names()
                .into_iter()
                .map(|n| (n, Vec::new()))
                .collect();
            for i in 0..solution.n_phi() {
                for k in 0..solution.n_z() {
                    inputs.push_row(&[solution.phi(i), solution.z(k)]);
                    for (j, field) in AphField::ALL.iter().enumerate() {
                        cols[j].1.push(solution.value(*field, i, k));
                    }
                }
            }
            (inputs, cols)
        }
    };
    let split = assign_splits(inputs.rows(), params.validation_fraction, seed);
    Ok(Dataset { variable_names: system.variable_names(), inputs, targets, split })
}

/// Freshly sampled held-out evaluation points drawn uniformly over the
/// system's domain (air-preheater values are bilinearly interpolated from
/// the solver grid). Rows are all marked `Test`.
pub fn sample_test_points(
    system: BenchmarkSystem,
    params: &SampleParams,
    n: usize,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    params.validate()?;
    let mut rng = StdRng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let (inputs, targets) = match system {
        BenchmarkSystem::Diffusion => {
            let mut inputs = Matrix::with_cols(2);
            let mut u = Vec::new();
            for _ in 0..n {
                let x = rng.random_range(0.0..1.0);
                let t = rng.random_range(0.0..1.0);
                inputs.push_row(&[x, t]);
                u.push(diffusion_truth(x, t));
            }
            (inputs, vec![("u".to_string(), u)])
        }
        BenchmarkSystem::DiffusionReaction => {
            let mut inputs = Matrix::with_cols(2);
            let mut u = Vec::new();
            for _ in 0..n {
                let x = rng.random_range(-PI..PI);
                let t = rng.random_range(0.0..1.0);
                inputs.push_row(&[x, t]);
                u.push(diffusion_reaction_truth(x, t));
            }
            (inputs, vec![("u".to_string(), u)])
        }
        BenchmarkSystem::Kovasznay => {
            let mut inputs = Matrix::with_cols(2);
            let (mut u, mut v, mut p) = (Vec::new(), Vec::new(), Vec::new());
            for _ in 0..n {
                let x = rng.random_range(-0.5..1.0);
                let y = rng.random_range(-0.5..1.5);
                inputs.push_row(&[x, y]);
                let (ui, vi, pi) = kovasznay_truth(x, y, params.kovasznay_reynolds);
                u.push(ui);
                v.push(vi);
                p.push(pi);
            }
            (inputs, vec![("u".to_string(), u), ("v".to_string(), v), ("p".to_string(), p)])
        }
        BenchmarkSystem::TaylorGreen => {
            let mut inputs = Matrix::with_cols(3);
            let (mut u, mut v, mut p) = (Vec::new(), Vec::new(), Vec::new());
            for _ in 0..n {
                let x = rng.random_range(0.0..2.0);
                let y = rng.random_range(0.0..2.0);
                let t = rng.random_range(0.0..1.0);
                inputs.push_row(&[x, y, t]);
                let (ui, vi, pi) = taylor_green_truth(x, y, t, params.taylor_green_nu);
                u.push(ui);
                v.push(vi);
                p.push(pi);
            }
            (inputs, vec![("u".to_string(), u), ("v".to_string(), v), ("p".to_string(), p)])
        }
        BenchmarkSystem::AirPreheater => {
            let solution = aph::aph_fd_solve(&params.aph)?;
            let mut inputs = Matrix::with_cols(2);
            let mut cols: Vec<(String, Vec<f64>)> = system
                .output_names()
                .into_iter()
                .map(|name| (name, Vec::new()))
                .collect();
            for _ in 0..n {
                let theta = rng.random_range(0.0..1.0);
                let z = rng.random_range(0.0..1.0);
                inputs.push_row(&[theta, z]);
                for (j, field) in AphField::ALL.iter().enumerate() {
                    cols[j].1.push(solution.interpolate(*field, theta, z));
                }
            }
            (inputs, cols)
        }
    };
    let rows = inputs.rows();
    Ok(Dataset {
        variable_names: system.variable_names(),
        inputs,
        targets,
        split: vec![Split::Test; rows],
    })
}
