//! Error-rate sweeps of the bit-stratified rule on the Lipschitz family.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_sampled, DEFAULT_MAX_STEPS};
use crate::error::{Error, Result};
use crate::model::{Problem, Strategy};
use crate::problems::lipschitz::{make_lipschitz_problem, FamilySpec};
use crate::problems::make_bit_restriction;
use crate::problems::strategies::bit_stratified_mc;

/// Cell counts of the default sweep.
pub const DEFAULT_CELLS: [usize; 6] = [8, 16, 32, 64, 128, 256];

pub const DEFAULT_SEEDS: u64 = 100;

pub fn default_seeds() -> Vec<u64> {
    (0..DEFAULT_SEEDS).collect()
}

/// Random bits spent per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitsRule {
    /// `⌈log2 n⌉` bits per cell.
    Log2,
    Fixed(usize),
}

impl BitsRule {
    pub fn bits(&self, n: usize) -> usize {
        match self {
            BitsRule::Log2 => (usize::BITS - (n.max(2) - 1).leading_zeros()) as usize,
            BitsRule::Fixed(b) => *b,
        }
    }

    pub fn label(&self) -> String {
        match self {
            BitsRule::Log2 => "log2".into(),
            BitsRule::Fixed(b) => b.to_string(),
        }
    }
}

impl std::str::FromStr for BitsRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log2" | "log" => Ok(BitsRule::Log2),
            other => other
                .parse::<usize>()
                .ok()
                .filter(|b| (1..=30).contains(b))
                .map(BitsRule::Fixed)
                .ok_or_else(|| Error::Parse(format!("bits must be `log2` or an integer in 1..=30, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesRow {
    pub n_cells: usize,
    pub bits_per_cell: usize,
    pub total_bits: usize,
    pub mean_error: f64,
    pub stderr: f64,
    pub seeds: u64,
    /// Member attaining `mean_error`.
    pub worst_member: String,
}

/// Family used when none is given: a line, a hat and the sawtooth whose
/// teeth match the finest sub-cell grid.
pub fn default_family(n_cells: usize, bits: usize) -> Vec<FamilySpec<f64>> {
    vec![
        FamilySpec::Linear { slope: 1.0, intercept: 0.0 },
        FamilySpec::Hat { center: 0.5, width: 0.5 },
        FamilySpec::Sawtooth {
            teeth: n_cells << bits,
            phase: 0.5,
            negative: false,
            centered: false,
        },
    ]
}

/// Mean absolute error per member over one run per seed; the row reports the worst.
pub fn rates_row(n_cells: usize, bits: usize, seeds: &[u64], family: &[FamilySpec<f64>]) -> Result<RatesRow> {
    if seeds.len() < 2 {
        return Err(Error::InsufficientSamples(seeds.len()));
    }
    let problem = make_lipschitz_problem(family)?;
    let strategy = bit_stratified_mc(n_cells, bits);
    let restriction = make_bit_restriction::<f64>();
    let mut worst: Option<RatesRow> = None;
    for member in problem.members() {
        let truth = problem.solution(member).first().to_owned();
        let errors = seeds
            .par_iter()
            .map(|&seed| {
                let run = run_sampled(&strategy as &dyn Strategy<f64>, &problem, member, &restriction, seed, DEFAULT_MAX_STEPS)?;
                Ok((run.output.first() - truth).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let row = RatesRow {
            n_cells,
            bits_per_cell: bits,
            total_bits: n_cells * bits,
            mean_error: mean,
            stderr: (var / n).sqrt(),
            seeds: seeds.len() as u64,
            worst_member: member.label().to_string(),
        };
        if worst.as_ref().is_none_or(|w| row.mean_error > w.mean_error) {
            worst = Some(row);
        }
    }
    Ok(worst.expect("family is nonempty"))
}

/// One row per cell count. Without an explicit family the default family is
/// rebuilt for each `n`.
pub fn rates_sweep(
    cells: &[usize],
    rule: BitsRule,
    seeds: &[u64],
    family: Option<&[FamilySpec<f64>]>,
) -> Result<Vec<RatesRow>> {
    cells
        .iter()
        .map(|&n| {
            let b = rule.bits(n);
            match family {
                Some(f) => rates_row(n, b, seeds, f),
                None => rates_row(n, b, seeds, &default_family(n, b)),
            }
        })
        .collect()
}

/// Least-squares slope of `log mean_error` against `log n_cells`.
pub fn fit_loglog_slope(rows: &[RatesRow]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mean_error > 0.0)
        .map(|r| ((r.n_cells as f64).ln(), r.mean_error.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientSamples(pts.len()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::BadParams("slope needs at least two distinct n".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

pub fn write_rates_csv<W: Write>(rows: &[RatesRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_cells", "bits_per_cell", "total_bits", "mean_error", "stderr", "seeds"])?;
    for r in rows {
        w.write_record([
            r.n_cells.to_string(),
            r.bits_per_cell.to_string(),
            r.total_bits.to_string(),
            format!("{:e}", r.mean_error),
            format!("{:e}", r.stderr),
            r.seeds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_rule() {
        assert_eq!(BitsRule::Log2.bits(8), 3);
        assert_eq!(BitsRule::Log2.bits(9), 4);
        assert_eq!(BitsRule::Log2.bits(256), 8);
        assert_eq!("2".parse::<BitsRule>().unwrap(), BitsRule::Fixed(2));
        assert!("0".parse::<BitsRule>().is_err());
        assert!("many".parse::<BitsRule>().is_err());
    }

    #[test]
    fn one_bit_sawtooth_error_is_deterministic() {
        // Every sample lands on a zero of sawtooth(2n): error 1/(8n) for any seed.
        let row = rates_row(8, 1, &(0..10).collect::<Vec<_>>(), &default_family(8, 1)).unwrap();
        assert!(row.worst_member.starts_with("sawtooth"));
        assert!((row.mean_error - 1.0 / 64.0).abs() < 1e-12);
        assert!(row.stderr < 1e-12);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let rows: Vec<RatesRow> = [8usize, 16, 32]
            .iter()
            .map(|&n| RatesRow {
                n_cells: n,
                bits_per_cell: 1,
                total_bits: n,
                mean_error: (n as f64).powf(-1.5),
                stderr: 0.0,
                seeds: 2,
                worst_member: String::new(),
            })
            .collect();
        assert!((fit_loglog_slope(&rows).unwrap() + 1.5).abs() < 1e-12);
        assert!(fit_loglog_slope(&rows[..1]).is_err());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_rates_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), "n_cells,bits_per_cell,total_bits,mean_error,stderr,seeds");
    }
}
