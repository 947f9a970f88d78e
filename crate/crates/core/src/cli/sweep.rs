//! Scaling measurements of training work against dimension.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::learner::{DomainBox, LearnerConfig, Pool};
use crate::rng::streams;
use crate::synthdata::{gen_mixture_stream, paired_2d_spec, paired_spec_blocks, MixtureSpec, PAIR_DISTANCE_SIGMAS};

/// Per-dimension counts, all per training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dim: usize,
    pub planes: usize,
    pub band_hits: f64,
    pub mean_updates: f64,
    pub rotations: f64,
    /// Vector-operation count times `d`: the update work, excluding the
    /// one dot product every plane spends to test the sample.
    pub work: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Paired four-class benchmark for dimension `dim`: the 2-D layout for
/// `dim = 2`, otherwise up to four coordinates per within-pair direction.
pub fn sweep_spec(dim: usize) -> Result<MixtureSpec> {
    match dim {
        0 | 1 => Err(Error::invalid("sweep dimensions must be at least 2")),
        2 => paired_2d_spec(1.0, 3.0 * PAIR_DISTANCE_SIGMAS),
        _ => paired_spec_blocks(dim, 1.0, ((dim - 1) / 2).min(4)),
    }
}

pub fn run_sweep(dims: &[usize], planes_per_dim: usize, train: usize, seed: u64) -> Result<SweepReport> {
    if dims.len() < 2 {
        return Err(Error::invalid("a sweep needs at least two dimensions"));
    }
    if train == 0 {
        return Err(Error::invalid("a sweep needs training samples"));
    }
    let mut rows = Vec::with_capacity(dims.len());
    for &dim in dims {
        let spec = sweep_spec(dim)?;
        let data = gen_mixture_stream(&spec, train, seed, streams::TRAIN_SPLIT)?;
        let calib = gen_mixture_stream(&spec, 400, seed, streams::CALIB_SPLIT)?;
        let domain = DomainBox::from_samples(calib.iter().map(|s| s.x.as_slice()))?;
        let mut pool = Pool::init_grid(&domain, planes_per_dim, LearnerConfig::scaled(spec.mean_sigma()))?;
        let start = Instant::now();
        pool.train(data.iter().map(|s| s.x.as_slice()), train, None)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let n = train as f64;
        let st = &pool.stats;
        rows.push(SweepRow {
            dim,
            planes: pool.len(),
            band_hits: st.band_hits as f64 / n,
            mean_updates: st.mean_updates as f64 / n,
            rotations: st.rotations as f64 / n,
            work: (st.vector_ops() as f64) * dim as f64 / n,
            wall_ms,
        });
    }
    Ok(SweepReport { rows })
}

/// Least-squares slope of `ln y` against `ln x`. Points with `y ≤ 0` are
/// skipped; `None` with fewer than two usable points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

impl SweepReport {
    fn column(&self, f: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn work_exponent(&self) -> Option<f64> {
        loglog_slope(&self.column(|r| r.dim as f64), &self.column(|r| r.work))
    }

    /// One row per dimension, then a row of fitted exponents. With
    /// `include_wall` false the wall-clock column is zeroed.
    pub fn to_csv(&self, include_wall: bool) -> String {
        let mut out = String::from("row,dim,planes,band_hits,mean_updates,rotations,work,wall_ms\n");
        for r in &self.rows {
            let wall = if include_wall { r.wall_ms } else { 0.0 };
            let _ = writeln!(
                out,
                "measure,{},{},{},{},{},{},{:.3}",
                r.dim, r.planes, r.band_hits, r.mean_updates, r.rotations, r.work, wall
            );
        }
        let dims = self.column(|r| r.dim as f64);
        let slope = |ys: Vec<f64>| loglog_slope(&dims, &ys).map(|s| format!("{s:.4}")).unwrap_or_default();
        let wall = if include_wall {
            slope(self.column(|r| r.wall_ms))
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "exponent,,{},{},{},{},{},{}",
            slope(self.column(|r| r.planes as f64)),
            slope(self.column(|r| r.band_hits)),
            slope(self.column(|r| r.mean_updates)),
            slope(self.column(|r| r.rotations)),
            slope(self.column(|r| r.work)),
            wall
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [10.0, 50.0, 200.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.2)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 1.2).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
        assert!(loglog_slope(&[2.0, 2.0], &[1.0, 3.0]).is_none());
    }

    #[test]
    fn two_dims_give_two_rows_and_exponents() {
        let report = run_sweep(&[4, 10], 2, 300, 1).unwrap();
        let csv = report.to_csv(false);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("measure,4,8,"));
        assert!(lines[2].starts_with("measure,10,20,"));
        assert!(lines[3].starts_with("exponent,,1.0000,"));
        assert_eq!(csv, run_sweep(&[4, 10], 2, 300, 1).unwrap().to_csv(false));
    }

    #[test]
    fn doubling_grid_density_doubles_pool() {
        let a = run_sweep(&[3, 5], 2, 10, 1).unwrap();
        let b = run_sweep(&[3, 5], 4, 10, 1).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(2 * x.planes, y.planes);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(run_sweep(&[10], 2, 10, 1).is_err());
        assert!(run_sweep(&[1, 10], 2, 10, 1).is_err());
        assert!(run_sweep(&[5, 10], 2, 0, 1).is_err());
    }
}
