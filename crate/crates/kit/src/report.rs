//! Experiment reports: per-mesh metric rows, log-log rate fitting, CSV and
//! markdown emission.

use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct Row {
    pub experiment: String,
    pub k: i64,
    pub ell: i64,
    pub mesh: String,
    pub n: usize,
    pub h: f64,
    pub metric: String,
    pub value: f64,
    pub rate: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentReport {
    pub rows: Vec<Row>,
}

impl ExperimentReport {
    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// True iff no gated row failed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass.unwrap_or(true))
    }

    /// Fit and attach a rate to the rows of `metric` (series over h), gated
    /// against `min_rate` if provided. Uses the last three meshes, per the
    /// preasymptotic-pollution policy; errors below the absolute floor pass
    /// without a fit.
    pub fn fit_metric_rate(&mut self, metric: &str, min_rate: Option<f64>, floor: f64) -> Option<f64> {
        let series: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| (r.h, r.value))
            .collect();
        if series.len() < 2 {
            return None;
        }
        let all_tiny = series.iter().all(|&(_, e)| e <= floor);
        let rate = if all_tiny {
            None
        } else {
            let hs: Vec<f64> = series.iter().map(|s| s.0).collect();
            let es: Vec<f64> = series.iter().map(|s| s.1.max(1e-300)).collect();
            Some(fit_rate(&hs, &es))
        };
        let pass = match (min_rate, rate) {
            (Some(m), Some(r)) => Some(r >= m),
            (Some(_), None) => Some(true), // vanishing errors
            (None, _) => None,
        };
        for r in self.rows.iter_mut().filter(|r| r.metric == metric) {
            r.rate = rate;
            if pass.is_some() {
                r.pass = pass;
            }
        }
        rate
    }

    /// Gate max/min of a metric across meshes.
    pub fn gate_max_over_min(&mut self, metric: &str, bound: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| r.value)
            .collect();
        if vals.is_empty() {
            return None;
        }
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
        let pass = ratio <= bound;
        for r in self.rows.iter_mut().filter(|r| r.metric == metric) {
            r.pass = Some(pass);
        }
        Some(ratio)
    }

    pub fn merge(&mut self, other: ExperimentReport) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "experiment,k,ell,mesh,n,h,metric,value,rate,pass")?;
        for r in &self.rows {
            writeln!(
                f,
                "{},{},{},{},{},{:.6e},{},{:.12e},{},{}",
                r.experiment,
                r.k,
                r.ell,
                r.mesh,
                r.n,
                r.h,
                r.metric,
                r.value,
                r.rate.map_or(String::new(), |x| format!("{x:.4}")),
                r.pass.map_or(String::new(), |p| p.to_string()),
            )?;
        }
        Ok(())
    }

    pub fn write_markdown(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "| experiment | k | ell | mesh | n | h | metric | value | rate | pass |")?;
        writeln!(f, "|---|---|---|---|---|---|---|---|---|---|")?;
        for r in &self.rows {
            writeln!(
                f,
                "| {} | {} | {} | {} | {} | {:.3e} | {} | {:.6e} | {} | {} |",
                r.experiment,
                r.k,
                r.ell,
                r.mesh,
                r.n,
                r.h,
                r.metric,
                r.value,
                r.rate.map_or("-".into(), |x| format!("{x:.3}")),
                r.pass.map_or("-".into(), |p| p.to_string()),
            )?;
        }
        Ok(())
    }

    /// One line per metric group (used by the CLI summary).
    pub fn print_summary(&self) {
        for r in &self.rows {
            println!(
                "{:<16} {:<6} n={:<2} {:<34} {:>13.6e}  rate={}  {}",
                r.experiment,
                r.mesh,
                r.n,
                r.metric,
                r.value,
                r.rate.map_or("   -  ".into(), |x| format!("{x:+.3}")),
                match r.pass {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "",
                }
            );
        }
    }
}

/// Least-squares slope of log(e) against log(h), fitted on the last three
/// points (or all points when fewer).
pub fn fit_rate(h: &[f64], e: &[f64]) -> f64 {
    assert_eq!(h.len(), e.len());
    let take = h.len().min(3);
    let hs = &h[h.len() - take..];
    let es = &e[e.len() - take..];
    let n = hs.len() as f64;
    let lx: Vec<f64> = hs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = es.iter().map(|x| x.max(1e-300).ln()).collect();
    let sx: f64 = lx.iter().sum();
    let sy: f64 = ly.iter().sum();
    let sxx: f64 = lx.iter().map(|x| x * x).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_fitter_recovers_synthetic_slopes() {
        // e(h) = C h^p: recovered slope within 1e-10 of p.
        for p in [0.5, 1.0, 2.0, 3.25] {
            let h: Vec<f64> = vec![0.5, 0.25, 0.125, 0.0625];
            let e: Vec<f64> = h.iter().map(|x| 3.7 * x.powf(p)).collect();
            let got = fit_rate(&h, &e);
            assert!((got - p).abs() < 1e-10, "{got} vs {p}");
        }
        // Halving sequence -> slope 1.
        let h = vec![1.0, 0.5, 0.25];
        let e = vec![0.4, 0.2, 0.1];
        assert!((fit_rate(&h, &e) - 1.0).abs() < 1e-12);
    }
}
