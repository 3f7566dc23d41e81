//! The experiment pipelines behind each subcommand:
//! correlation matrix → entanglement Hamiltonian → prediction → comparison.

use std::path::PathBuf;

use log::info;
use qpeh_core::analysis::{compare, renyi_exact, ComparisonReport};
use qpeh_core::corr::{dimer_correlation, gge_correlation, ring_oracle_correlation, CorrelationMatrix};
use qpeh_core::model::{dimer_occupation, QuenchSpec};
use qpeh_core::peschel::{coupling_profile, extract_eh, CouplingProfile, EntanglementHamiltonian};
use qpeh_core::qpp::{cft_factorization_check, gge_coupling, predict_profile, renyi_qpp, KernelPrediction};
use qpeh_core::C64;
use rayon::prelude::*;

use crate::config::{Command, RunConfig, TimeRatio};
use crate::output::{write_table, Cell, Header, Table};
use crate::CliError;

/// Largest closed-form versus ring-oracle entry difference accepted by `oracle-check`.
pub const ORACLE_THRESHOLD: f64 = 1e-8;
/// `cft-check` fails when a deviation exceeds this multiple of the quadrature tolerance.
pub const CFT_TOLERANCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// A check subcommand found a value beyond its threshold.
    pub breach: bool,
}

/// Runs `command` on a validated configuration, inside a pool of `cfg.threads`
/// workers when that is nonzero.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let go = || match command {
        Command::Figure1 => run_figure1(cfg),
        Command::Figure2 => run_figure2(cfg),
        Command::Entropy => run_entropy(cfg),
        Command::Gge => run_gge(cfg),
        Command::CftCheck => run_cft_check(cfg),
        Command::OracleCheck => run_oracle_check(cfg),
    };
    if cfg.threads == 0 {
        return go();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
        .install(go)
}

/// Subsystem correlations of the dimer quench; `t = ∞` gives the stationary state.
pub fn dimer_state(ell: usize, time: f64) -> Result<CorrelationMatrix, CliError> {
    Ok(if time.is_infinite() {
        gge_correlation(ell, &dimer_occupation())?
    } else {
        dimer_correlation(ell, time)?
    })
}

/// Exact and predicted couplings at one distance.
#[derive(Debug, Clone)]
pub struct DistanceData {
    pub distance: usize,
    pub exact: CouplingProfile,
    pub predicted: KernelPrediction,
    pub report: ComparisonReport,
}

#[derive(Debug, Clone)]
pub struct SliceData {
    pub ratio: TimeRatio,
    pub time: f64,
    pub hamiltonian: EntanglementHamiltonian,
    pub distances: Vec<DistanceData>,
}

/// Time ratios of a figure run, with the stationary slice appended when missing.
pub fn figure_ratios(cfg: &RunConfig) -> Vec<TimeRatio> {
    let mut ratios = cfg.time_ratios.clone();
    if !ratios.iter().any(|r| r.is_infinite()) {
        ratios.push(TimeRatio::INFINITE);
    }
    ratios
}

pub fn figure_slice(cfg: &RunConfig, ratio: TimeRatio) -> Result<SliceData, CliError> {
    let time = ratio.time(cfg.ell);
    info!("slice t/l = {ratio}: correlation matrix and entanglement Hamiltonian (l = {})", cfg.ell);
    let hamiltonian = extract_eh(&dimer_state(cfg.ell, time)?, cfg.cutoff)?;
    let spec = QuenchSpec::dimer(cfg.ell, time)?;
    let distances = cfg
        .z_list
        .iter()
        .map(|&z| {
            let exact = coupling_profile(&hamiltonian, z)?;
            let predicted = predict_profile(&spec, z, cfg.quad_tol, cfg.sampling.into())?;
            let report = compare(&exact, &predicted, cfg.exclusion)?;
            Ok(DistanceData { distance: z, exact, predicted, report })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(SliceData { ratio, time, hamiltonian, distances })
}

/// All slices of a figure run, in the order of [`figure_ratios`].
pub fn figure_data(cfg: &RunConfig) -> Result<Vec<SliceData>, CliError> {
    figure_ratios(cfg).into_par_iter().map(|r| figure_slice(cfg, r)).collect()
}

fn ratio_cell(r: TimeRatio) -> Cell {
    Cell::Float(r.0)
}

fn write_figure(cfg: &RunConfig, command: Command, slices: &[SliceData]) -> Result<Vec<PathBuf>, CliError> {
    let header = Header { command: command.name(), config: cfg };
    let prefix = command.name();
    let mut files = Vec::new();
    for (k, &z) in cfg.z_list.iter().enumerate() {
        let mut table =
            Table::new(vec!["t_over_l", "t", "j", "z", "re_exact", "im_exact", "re_pred", "im_pred"]);
        for s in slices {
            let d = &s.distances[k];
            for (i, (h, p)) in d.exact.values.iter().zip(&d.predicted.values).enumerate() {
                table.push(vec![
                    ratio_cell(s.ratio),
                    s.time.into(),
                    (i + 1).into(),
                    z.into(),
                    h.re.into(),
                    h.im.into(),
                    p.re.into(),
                    p.im.into(),
                ]);
            }
        }
        files.push(write_table(&cfg.output_dir, &format!("{prefix}_z{z}"), cfg.format, header, &table)?);
    }
    let mut summary = Table::new(vec![
        "t_over_l",
        "t",
        "z",
        "first_site",
        "last_site",
        "max_abs_error",
        "rms_error",
        "peak_coupling",
        "relative_error",
        "excluded_fraction",
        "parity_violation",
    ]);
    for s in slices {
        for d in &s.distances {
            let r = &d.report;
            summary.push(vec![
                ratio_cell(s.ratio),
                s.time.into(),
                d.distance.into(),
                r.first_site.into(),
                r.last_site.into(),
                r.max_abs_error.into(),
                r.rms_error.into(),
                r.peak_coupling.into(),
                r.relative_error().into(),
                r.excluded_fraction.into(),
                r.parity_violation.into(),
            ]);
        }
    }
    files.push(write_table(&cfg.output_dir, &format!("{prefix}_summary"), cfg.format, header, &summary)?);
    Ok(files)
}

/// Coupling profiles at every `(t/ℓ, z)`, one file per distance plus a summary.
pub fn run_figure1(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let slices = figure_data(cfg)?;
    Ok(RunOutcome { files: write_figure(cfg, Command::Figure1, &slices)?, breach: false })
}

/// 1-based site `j` whose pair `(j, j + z)` sits in the middle of the interval.
pub fn central_site(ell: usize, z: usize) -> usize {
    (ell - z) / 2 + 1
}

/// As [`run_figure1`], plus the stationary couplings against distance.
pub fn run_figure2(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let slices = figure_data(cfg)?;
    let mut files = write_figure(cfg, Command::Figure2, &slices)?;
    let stationary = slices.iter().find(|s| s.ratio.is_infinite()).expect("stationary slice is always present");
    let mut inset = Table::new(vec!["z", "re_gge", "im_gge", "re_exact_center", "im_exact_center"]);
    let occ = dimer_occupation();
    for &z in &cfg.z_list {
        let g = gge_coupling(z as i64, &occ, cfg.quad_tol)?;
        let j = central_site(cfg.ell, z);
        let h = stationary.hamiltonian.get(j - 1, j - 1 + z);
        inset.push(vec![z.into(), g.re.into(), g.im.into(), h.re.into(), h.im.into()]);
    }
    let header = Header { command: Command::Figure2.name(), config: cfg };
    files.push(write_table(&cfg.output_dir, "figure2_gge", cfg.format, header, &inset)?);
    Ok(RunOutcome { files, breach: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyRow {
    pub ratio: TimeRatio,
    pub time: f64,
    pub alpha: f64,
    pub exact: f64,
    pub predicted: f64,
}

impl EntropyRow {
    pub fn relative_error(&self) -> f64 {
        let diff = (self.exact - self.predicted).abs();
        if self.exact > 0.0 {
            diff / self.exact
        } else {
            diff
        }
    }
}

pub fn entropy_rows(cfg: &RunConfig) -> Result<Vec<EntropyRow>, CliError> {
    let per_time: Vec<Vec<EntropyRow>> = cfg
        .time_ratios
        .par_iter()
        .map(|&ratio| {
            let time = ratio.time(cfg.ell);
            let c = dimer_state(cfg.ell, time)?;
            let spec = QuenchSpec::dimer(cfg.ell, time)?;
            cfg.alpha_list
                .iter()
                .map(|&alpha| {
                    Ok(EntropyRow {
                        ratio,
                        time,
                        alpha,
                        exact: renyi_exact(&c, alpha)?,
                        predicted: renyi_qpp(alpha, &spec, cfg.quad_tol)?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(per_time.into_iter().flatten().collect())
}

/// Exact and quasiparticle Rényi entropies over the time grid.
pub fn run_entropy(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let mut table = Table::new(vec!["t_over_l", "t", "alpha", "s_exact", "s_qpp", "rel_error"]);
    for r in entropy_rows(cfg)? {
        table.push(vec![
            ratio_cell(r.ratio),
            r.time.into(),
            r.alpha.into(),
            r.exact.into(),
            r.predicted.into(),
            r.relative_error().into(),
        ]);
    }
    let header = Header { command: Command::Entropy.name(), config: cfg };
    Ok(RunOutcome { files: vec![write_table(&cfg.output_dir, "entropy", cfg.format, header, &table)?], breach: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryRow {
    pub distance: usize,
    pub predicted: C64,
    pub exact_center: C64,
}

pub fn stationary_rows(cfg: &RunConfig) -> Result<Vec<StationaryRow>, CliError> {
    let occ = dimer_occupation();
    let h = extract_eh(&gge_correlation(cfg.ell, &occ)?, cfg.cutoff)?;
    cfg.z_list
        .iter()
        .map(|&z| {
            let j = central_site(cfg.ell, z);
            Ok(StationaryRow {
                distance: z,
                predicted: gge_coupling(z as i64, &occ, cfg.quad_tol)?,
                exact_center: h.get(j - 1, j - 1 + z),
            })
        })
        .collect()
}

/// Stationary couplings against the central row of the stationary-state Hamiltonian.
pub fn run_gge(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let mut table = Table::new(vec!["z", "re_pred", "im_pred", "re_exact_center", "im_exact_center", "abs_diff"]);
    for r in stationary_rows(cfg)? {
        table.push(vec![
            r.distance.into(),
            r.predicted.re.into(),
            r.predicted.im.into(),
            r.exact_center.re.into(),
            r.exact_center.im.into(),
            (r.predicted - r.exact_center).norm().into(),
        ]);
    }
    let header = Header { command: Command::Gge.name(), config: cfg };
    Ok(RunOutcome { files: vec![write_table(&cfg.output_dir, "gge", cfg.format, header, &table)?], breach: false })
}

/// Factorization of the linear-band kernels; breach when a deviation exceeds `10 · quad_tol`.
pub fn run_cft_check(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let threshold = CFT_TOLERANCE_FACTOR * cfg.quad_tol;
    let cases: Vec<(f64, TimeRatio)> =
        cfg.beta_list.iter().flat_map(|&b| cfg.time_ratios.iter().map(move |&r| (b, r))).collect();
    let deviations = cases
        .par_iter()
        .map(|&(beta, r)| Ok(cft_factorization_check(beta, cfg.velocity, r.time(cfg.ell), cfg.ell, cfg.quad_tol)?))
        .collect::<Result<Vec<f64>, CliError>>()?;
    let mut table = Table::new(vec!["beta", "t_over_l", "t", "velocity", "max_deviation", "threshold", "pass"]);
    let mut breach = false;
    for (&(beta, r), &dev) in cases.iter().zip(&deviations) {
        let pass = dev <= threshold;
        breach |= !pass;
        table.push(vec![
            beta.into(),
            ratio_cell(r),
            r.time(cfg.ell).into(),
            cfg.velocity.into(),
            dev.into(),
            threshold.into(),
            pass.into(),
        ]);
    }
    let header = Header { command: Command::CftCheck.name(), config: cfg };
    Ok(RunOutcome { files: vec![write_table(&cfg.output_dir, "cft_check", cfg.format, header, &table)?], breach })
}

/// Largest entrywise difference between the closed form and the ring oracle.
pub fn oracle_deviation(ell: usize, ring: usize, time: f64) -> Result<f64, CliError> {
    let closed = dimer_correlation(ell, time)?;
    let oracle = ring_oracle_correlation(ell, ring, time)?;
    let mut worst: f64 = 0.0;
    for i in 0..ell {
        for j in 0..ell {
            worst = worst.max((closed.get(i, j) - oracle.get(i, j)).norm());
        }
    }
    Ok(worst)
}

/// Closed-form dimer correlations against brute-force ring evolution.
pub fn run_oracle_check(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let mut table = Table::new(vec!["ell", "t_over_l", "t", "ring", "max_abs_diff", "threshold", "pass"]);
    let mut breach = false;
    for &r in &cfg.time_ratios {
        let t = r.time(cfg.ell);
        let dev = oracle_deviation(cfg.ell, cfg.ring, t)?;
        let pass = dev <= ORACLE_THRESHOLD;
        breach |= !pass;
        table.push(vec![
            cfg.ell.into(),
            ratio_cell(r),
            t.into(),
            cfg.ring.into(),
            dev.into(),
            ORACLE_THRESHOLD.into(),
            pass.into(),
        ]);
    }
    let header = Header { command: Command::OracleCheck.name(), config: cfg };
    Ok(RunOutcome { files: vec![write_table(&cfg.output_dir, "oracle_check", cfg.format, header, &table)?], breach })
}
