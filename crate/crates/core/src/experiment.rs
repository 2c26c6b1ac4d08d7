//! Seeded alpha/eps sweeps with CSV output and scaling-law fits.

use crate::blockenc::HermitianOp;
use crate::error::{domain, Error, Result};
use crate::estimator::{ceil_log2, estimate_ee_with_schedule, AlphaSchedule, EEInstance, ProbabilityPath};
use crate::io::parse_matrix;
use crate::linalg::basis_vector;
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;

pub const SWEEP_HEADER: [&str; 15] = [
    "alpha",
    "eps",
    "gamma",
    "seed",
    "run_index",
    "mu_hat",
    "true_mu",
    "abs_error",
    "success",
    "T",
    "D",
    "degree",
    "n_samples",
    "iterations",
    "error",
];

/// Where the eigenvalue problem comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    /// `diag:v1,v2,...` with `psi = e_1`.
    Diagonal(Vec<f64>),
    /// Matrix file; `psi` is the eigenvector of the `eigen_index`-th smallest
    /// eigenvalue.
    MatrixFile { path: PathBuf, eigen_index: usize },
}

impl InstanceSpec {
    pub fn parse_builtin(spec: &str) -> Result<Self> {
        let Some(list) = spec.strip_prefix("diag:") else {
            return domain(format!("unknown builtin `{spec}`; expected diag:<v1,v2,...>"));
        };
        let values: std::result::Result<Vec<f64>, _> = list.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match values {
            Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(Self::Diagonal(v)),
            _ => domain(format!("bad diagonal list `{list}`")),
        }
    }

    pub fn resolve(&self, gamma: f64) -> Result<EEInstance> {
        match self {
            Self::Diagonal(values) => {
                let h = HermitianOp::diagonal(values)?;
                EEInstance::new(h, gamma, basis_vector(values.len(), 0))
            }
            Self::MatrixFile { path, eigen_index } => {
                let text = std::fs::read_to_string(path)?;
                let h = HermitianOp::new(parse_matrix(&text)?)?;
                EEInstance::from_eigen_index(h, gamma, *eigen_index)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub gamma: f64,
    pub runs: u64,
    pub seed: u64,
    pub instance: InstanceSpec,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.eps_list.is_empty() {
            return domain("alpha and eps lists must be non-empty");
        }
        if self.runs < 1 {
            return domain("runs must be at least 1");
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return domain(format!("alpha {a} outside [0, 1]"));
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(**e > 0.0 && **e < 4.0 * self.gamma)) {
            return domain(format!("eps {e} outside (0, 4 gamma)"));
        }
        Ok(())
    }
}

/// One estimation run. Measured fields are `None` when the cell failed.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub eps: f64,
    pub gamma: f64,
    pub seed: u64,
    pub run_index: u64,
    pub mu_hat: Option<f64>,
    pub true_mu: f64,
    pub abs_error: Option<f64>,
    pub success: bool,
    #[serde(rename = "T")]
    pub total_queries: Option<u64>,
    #[serde(rename = "D")]
    pub max_depth: Option<u64>,
    pub degree: Option<u64>,
    pub n_samples: Option<u64>,
    pub iterations: Option<u64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn record(&self) -> Vec<String> {
        let f = |v: f64| format!("{v:.16e}");
        let of = |v: Option<f64>| v.map(f).unwrap_or_default();
        let ou = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            f(self.alpha),
            f(self.eps),
            f(self.gamma),
            self.seed.to_string(),
            self.run_index.to_string(),
            of(self.mu_hat),
            f(self.true_mu),
            of(self.abs_error),
            self.success.to_string(),
            ou(self.total_queries),
            ou(self.max_depth),
            ou(self.degree),
            ou(self.n_samples),
            ou(self.iterations),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `(alpha, eps)` cells in which every run failed.
    pub failed_cells: Vec<(f64, f64)>,
}

/// Seed of run `run_index`; the row's `seed` column reproduces it alone.
pub fn run_seed(seed: u64, run_index: u64) -> u64 {
    seed.wrapping_add(run_index)
}

pub fn sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let inst = config.instance.resolve(config.gamma)?;
    let cells: Vec<(f64, f64)> = config
        .alphas
        .iter()
        .flat_map(|&a| config.eps_list.iter().map(move |&e| (a, e)))
        .collect();
    let schedules: Vec<std::result::Result<AlphaSchedule, String>> = cells
        .par_iter()
        .map(|&(a, e)| AlphaSchedule::new(a, e, config.gamma).map_err(|err| err.to_string()))
        .collect();

    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..config.runs).map(move |r| (c, r)))
        .collect();
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(c, run_index)| {
            let (alpha, eps) = cells[c];
            let seed = run_seed(config.seed, run_index);
            let mut row = SweepRow {
                alpha,
                eps,
                gamma: config.gamma,
                seed,
                run_index,
                mu_hat: None,
                true_mu: inst.true_mu,
                abs_error: None,
                success: false,
                total_queries: None,
                max_depth: None,
                degree: None,
                n_samples: None,
                iterations: None,
                error: None,
            };
            let outcome = schedules[c].as_ref().map_err(Clone::clone).and_then(|s| {
                estimate_ee_with_schedule(&inst, s, seed, ProbabilityPath::Eigenstate)
                    .map(|est| (s, est))
                    .map_err(|err| err.to_string())
            });
            match outcome {
                Ok((s, est)) => {
                    let abs_error = (est.mu_hat - inst.true_mu).abs();
                    row.mu_hat = Some(est.mu_hat);
                    row.abs_error = Some(abs_error);
                    row.success = abs_error <= eps;
                    row.total_queries = Some(est.ledger.total_queries);
                    row.max_depth = Some(est.ledger.max_depth);
                    row.degree = Some(s.degree() as u64);
                    row.n_samples = Some(s.n_samples);
                    row.iterations = Some(est.iterations as u64);
                }
                Err(msg) => row.error = Some(msg),
            }
            row
        })
        .collect();
    rows.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then(b.eps.total_cmp(&a.eps))
            .then(a.run_index.cmp(&b.run_index))
    });
    let failed_cells = cells
        .iter()
        .copied()
        .filter(|&(a, e)| {
            rows.iter()
                .filter(|r| r.alpha == a && r.eps == e)
                .all(|r| r.error.is_some())
        })
        .collect();
    Ok(SweepReport { rows, failed_cells })
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected sweep header `{}`", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Ordinary least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn least_squares(points: &[(f64, f64)]) -> Result<LineFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return domain("at least two points are needed for a fit");
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return domain("fit abscissae are all equal");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(LineFit {
        slope,
        intercept,
        residual,
    })
}

/// Depth and time scaling at one `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub alpha: f64,
    pub eps_count: usize,
    /// `log D` against `log(gamma / eps)`.
    pub depth: LineFit,
    /// `log(T / ceil(log2(4 gamma / eps))^2)` against `log(gamma / eps)`.
    pub time: LineFit,
}

/// Per-`alpha` slopes over rows without errors; each distinct `eps`
/// contributes the mean of its runs.
pub fn fit_scaling(rows: &[SweepRow]) -> Result<Vec<ScalingFit>> {
    // alpha -> eps -> (sum x, sum log D, sum log T', count)
    let mut groups: BTreeMap<u64, BTreeMap<u64, [f64; 4]>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.error.is_none()) {
        let (Some(t), Some(d)) = (row.total_queries, row.max_depth) else {
            continue;
        };
        let ratio = row.gamma / row.eps;
        let log_factor = ceil_log2(4.0 * ratio) as f64;
        let entry = groups
            .entry(row.alpha.to_bits())
            .or_default()
            .entry(row.eps.to_bits())
            .or_insert([0.0; 4]);
        entry[0] += ratio.ln();
        entry[1] += (d as f64).ln();
        entry[2] += (t as f64 / (log_factor * log_factor)).ln();
        entry[3] += 1.0;
    }
    if groups.is_empty() {
        return domain("no usable rows to fit");
    }
    let mut fits = Vec::new();
    for (alpha_bits, by_eps) in groups {
        let alpha = f64::from_bits(alpha_bits);
        if by_eps.len() < 3 {
            return domain(format!("alpha {alpha}: need at least 3 distinct eps, got {}", by_eps.len()));
        }
        let mean = |i: usize| -> Vec<(f64, f64)> { by_eps.values().map(|s| (s[0] / s[3], s[i] / s[3])).collect() };
        fits.push(ScalingFit {
            alpha,
            eps_count: by_eps.len(),
            depth: least_squares(&mean(1))?,
            time: least_squares(&mean(2))?,
        });
    }
    fits.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(alphas: Vec<f64>, eps_list: Vec<f64>, runs: u64) -> SweepConfig {
        SweepConfig {
            alphas,
            eps_list,
            gamma: 1.0,
            runs,
            seed: 0,
            instance: InstanceSpec::Diagonal(vec![0.5, -0.25]),
        }
    }

    #[test]
    fn builtin_parsing() {
        assert_eq!(
            InstanceSpec::parse_builtin("diag:0.5,-0.25").unwrap(),
            InstanceSpec::Diagonal(vec![0.5, -0.25])
        );
        assert!(InstanceSpec::parse_builtin("diag:").is_err());
        assert!(InstanceSpec::parse_builtin("diag:a,b").is_err());
        assert!(InstanceSpec::parse_builtin("eye:2").is_err());
        let inst = InstanceSpec::parse_builtin("diag:0.5,-0.25").unwrap().resolve(1.0).unwrap();
        assert_eq!(inst.true_mu, 0.5);
    }

    #[test]
    fn small_sweep_identities() {
        let report = sweep(&config(vec![0.5], vec![0.1], 3)).unwrap();
        assert_eq!(report.rows.len(), 3);
        for row in &report.rows {
            let t = row.total_queries.unwrap();
            assert_eq!(t, row.iterations.unwrap() * row.n_samples.unwrap() * row.degree.unwrap());
            assert_eq!(row.max_depth, row.degree);
            assert_eq!(row.success, row.abs_error.unwrap() <= row.eps);
        }
    }

    #[test]
    fn csv_round_trip_and_determinism() {
        let cfg = config(vec![0.0, 1.0], vec![0.2, 0.1], 2);
        let a = sweep_csv_string(&sweep(&cfg).unwrap().rows);
        let b = sweep_csv_string(&sweep(&cfg).unwrap().rows);
        assert_eq!(a, b);
        assert!(a.starts_with(&SWEEP_HEADER.join(",")));
        let rows = read_sweep_csv(a.as_bytes()).unwrap();
        assert_eq!(rows, sweep(&cfg).unwrap().rows);
    }

    #[test]
    fn error_rows_round_trip() {
        let report = sweep(&config(vec![0.0], vec![0.2], 1)).unwrap();
        assert!(report.failed_cells.is_empty());
        let err_row = SweepRow {
            mu_hat: None,
            abs_error: None,
            success: false,
            total_queries: None,
            max_depth: None,
            degree: None,
            n_samples: None,
            iterations: None,
            error: Some("capacity exceeded, with a comma".into()),
            ..report.rows[0].clone()
        };
        let text = sweep_csv_string(std::slice::from_ref(&err_row));
        assert_eq!(read_sweep_csv(text.as_bytes()).unwrap(), vec![err_row]);
    }

    fn synthetic_row(eps: f64, d: u64, t: u64) -> SweepRow {
        SweepRow {
            alpha: 0.5,
            eps,
            gamma: 1.0,
            seed: 0,
            run_index: 0,
            mu_hat: Some(0.0),
            true_mu: 0.0,
            abs_error: Some(0.0),
            success: true,
            total_queries: Some(t),
            max_depth: Some(d),
            degree: Some(d),
            n_samples: None,
            iterations: None,
            error: None,
        }
    }

    #[test]
    fn exact_power_law_fit() {
        // gamma/eps = 4^k so that D = (gamma/eps)^0.5 is an integer
        let rows: Vec<SweepRow> = [1u64, 2, 3]
            .iter()
            .map(|&k| {
                let ratio = 4u64.pow(k as u32);
                let lf = ceil_log2(4.0 * ratio as f64) as u64;
                let d = 2u64.pow(k as u32);
                synthetic_row(1.0 / ratio as f64, d, d * ratio * lf * lf)
            })
            .collect();
        let fit = &fit_scaling(&rows).unwrap()[0];
        assert_eq!(fit.eps_count, 3);
        assert!((fit.depth.slope - 0.5).abs() < 1e-6);
        assert!((fit.time.slope - 1.5).abs() < 1e-6);
        assert!(fit.depth.residual < 1e-9);
    }

    #[test]
    fn fit_needs_three_eps() {
        let report = sweep(&config(vec![1.0], vec![0.2, 0.1], 1)).unwrap();
        assert!(fit_scaling(&report.rows).is_err());
        assert!(fit_scaling(&[]).is_err());
    }
}
