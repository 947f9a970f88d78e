//! Seeded spherical Gaussian mixtures, the paired four-class benchmarks, and a
//! Monte-Carlo Bayes-error oracle.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::Label;

/// Within-pair mean distance, in units of σ, that gives a two-class Bayes
/// error of 0.02: `Q(Δ / 2σ) = 0.02`.
pub const PAIR_DISTANCE_SIGMAS: f64 = 4.107;

/// Distance between the two pair centres, in units of the within-pair distance.
pub const PAIR_SEPARATION: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub prior: f64,
    pub mean: Vec<f64>,
    /// Isotropic standard deviation (covariance `σ²I`).
    pub sigma: f64,
    pub class_label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub label: Label,
}

impl MixtureSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let spec = Self { components };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .components
            .first()
            .ok_or_else(|| Error::invalid("mixture needs at least one component"))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::invalid("component means must be non-empty"));
        }
        let mut total = 0.0;
        for c in &self.components {
            check_dim(dim, c.mean.len())?;
            if !(c.prior > 0.0 && c.prior <= 1.0) {
                return Err(Error::invalid(format!("prior {} outside (0, 1]", c.prior)));
            }
            if !(c.sigma > 0.0 && c.sigma.is_finite()) {
                return Err(Error::invalid(format!("sigma {} must be positive", c.sigma)));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::invalid("component means must be finite"));
            }
            total += c.prior;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("priors sum to {total}, expected 1")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    /// Distinct class labels in ascending order.
    pub fn labels(&self) -> Vec<Label> {
        let mut v: Vec<Label> = self.components.iter().map(|c| c.class_label).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Average component standard deviation, weighted by prior.
    pub fn mean_sigma(&self) -> f64 {
        self.components.iter().map(|c| c.prior * c.sigma).sum()
    }

    /// Multiplies every mean and σ by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    prior: c.prior,
                    mean: c.mean.iter().map(|m| m * factor).collect(),
                    sigma: c.sigma * factor,
                    class_label: c.class_label,
                })
                .collect(),
        }
    }

    /// Label of the class with the largest prior-weighted density at `x`.
    /// Ties go to the smallest label.
    pub fn bayes_classify(&self, x: &[f64]) -> Label {
        let d = x.len() as f64;
        let mut per_class: BTreeMap<Label, Vec<f64>> = BTreeMap::new();
        for c in &self.components {
            let sq: f64 = x.iter().zip(&c.mean).map(|(a, b)| (a - b) * (a - b)).sum();
            let log = c.prior.ln() - d * c.sigma.ln() - sq / (2.0 * c.sigma * c.sigma);
            per_class.entry(c.class_label).or_default().push(log);
        }
        let mut best = (Label::MIN, f64::NEG_INFINITY);
        for (label, logs) in per_class {
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
            if lse > best.1 {
                best = (label, lse);
            }
        }
        best.0
    }
}

fn draw<R: Rng>(spec: &MixtureSpec, rng: &mut R) -> LabeledSample {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = spec.components.last().expect("validated non-empty");
    for c in &spec.components {
        acc += c.prior;
        if u < acc {
            chosen = c;
            break;
        }
    }
    let x = chosen
        .mean
        .iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            m + chosen.sigma * z
        })
        .collect();
    LabeledSample {
        x,
        label: chosen.class_label,
    }
}

/// `n` i.i.d. draws on random stream `stream_id` of `seed`.
pub fn gen_mixture_stream(spec: &MixtureSpec, n: usize, seed: u64, stream_id: u64) -> Result<Vec<LabeledSample>> {
    spec.validate()?;
    let mut rng = rng::stream(seed, stream_id);
    Ok((0..n).map(|_| draw(spec, &mut rng)).collect())
}

/// `n` i.i.d. draws: component by prior, then an isotropic Gaussian draw.
pub fn gen_mixture(spec: &MixtureSpec, n: usize, seed: u64) -> Result<Vec<LabeledSample>> {
    gen_mixture_stream(spec, n, seed, rng::streams::MIXTURE)
}

/// Monte-Carlo error of the Bayes classifier for `spec`.
pub fn bayes_error_mc(spec: &MixtureSpec, n_mc: usize, seed: u64) -> Result<f64> {
    if n_mc == 0 {
        return Err(Error::invalid("n_mc must be at least 1"));
    }
    spec.validate()?;
    let mut rng = rng::stream(seed, rng::streams::BAYES_MC);
    let mut errors = 0usize;
    for _ in 0..n_mc {
        let s = draw(spec, &mut rng);
        if spec.bayes_classify(&s.x) != s.label {
            errors += 1;
        }
    }
    Ok(errors as f64 / n_mc as f64)
}

/// Writes samples as CSV with header `f0,...,f{dim-1},label`. The header is
/// written even when there are no samples. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_samples<W: std::io::Write>(out: W, dim: usize, samples: &[LabeledSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..dim).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (i, s) in samples.iter().enumerate() {
        if s.x.len() != dim {
            return Err(Error::StreamDimension {
                index: i,
                expected: dim,
                found: s.x.len(),
            });
        }
        let mut row: Vec<String> = s.x.iter().map(|v| v.to_string()).collect();
        row.push(s.label.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Reads samples in the layout produced by [`write_samples`]. The last
/// column is the label; every other column is a feature.
pub fn read_samples<R: std::io::Read>(input: R) -> Result<Vec<LabeledSample>> {
    Ok(read_sample_table(input)?.1)
}

/// Like [`read_samples`], also returning the feature count from the header,
/// which is known even when the file has no rows.
pub fn read_sample_table<R: std::io::Read>(input: R) -> Result<(usize, Vec<LabeledSample>)> {
    let mut r = csv::Reader::from_reader(input);
    let width = r.headers()?.len();
    if width < 2 {
        return Err(Error::invalid("sample file needs at least one feature and a label column"));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |j: usize| -> Result<f64> {
            rec[j]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("row {}: bad number {:?}", i + 1, &rec[j])))
        };
        let x = (0..width - 1).map(parse).collect::<Result<Vec<f64>>>()?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("row {}: non-finite feature", i + 1)));
        }
        let label = rec[width - 1]
            .trim()
            .parse::<Label>()
            .map_err(|_| Error::invalid(format!("row {}: bad label {:?}", i + 1, &rec[width - 1])))?;
        out.push(LabeledSample { x, label });
    }
    Ok((width - 1, out))
}

/// Geometry of the paired four-class benchmark in `dim ≥ 3` dimensions.
///
/// Coordinates are split into three blocks: `0..k` carries the difference
/// between classes 0 and 1 (pair A), `k..2k` the difference between classes 2
/// and 3 (pair B), and `2k..dim` the offset between the two pair centres.
/// Each difference is spread evenly over its block, so its direction is a
/// block diagonal.
pub fn paired_spec_blocks(dim: usize, sigma: f64, within: usize) -> Result<MixtureSpec> {
    if within == 0 || dim < 2 * within + 1 {
        return Err(Error::invalid(format!(
            "paired benchmark with {within} coordinates per pair needs at least {} dimensions",
            2 * within + 1
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let delta = PAIR_DISTANCE_SIGMAS * sigma;
    let sep = PAIR_SEPARATION * delta;
    let spread = |block: std::ops::Range<usize>, length: f64| {
        let mut v = vec![0.0; dim];
        let each = length / (block.len() as f64).sqrt();
        v[block].iter_mut().for_each(|x| *x = each);
        v
    };
    let half_a = spread(0..within, 0.5 * delta);
    let half_b = spread(within..2 * within, 0.5 * delta);
    let center_b = spread(2 * within..dim, sep);
    let comp = |mean: Vec<f64>, class_label: Label| Component {
        prior: 0.25,
        mean,
        sigma,
        class_label,
    };
    MixtureSpec::new(vec![
        comp(half_a.iter().map(|v| -v).collect(), 0),
        comp(half_a.clone(), 1),
        comp(crate::vecgeom::axpy(&center_b, -1.0, &half_b), 2),
        comp(crate::vecgeom::axpy(&center_b, 1.0, &half_b), 3),
    ])
}

/// Two-dimensional paired benchmark. Both pairs differ along the first axis;
/// pair B sits `PAIR_SEPARATION·Δ` above pair A and is shifted right by
/// `offset` (in σ) so the two within-pair valleys do not line up.
pub fn paired_2d_spec(sigma: f64, offset: f64) -> Result<MixtureSpec> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let half = 0.5 * PAIR_DISTANCE_SIGMAS * sigma;
    let sep = PAIR_SEPARATION * PAIR_DISTANCE_SIGMAS * sigma;
    let bx = offset * sigma;
    let comp = |mean: Vec<f64>, class_label: Label| Component {
        prior: 0.25,
        mean,
        sigma,
        class_label,
    };
    MixtureSpec::new(vec![
        comp(vec![-half, 0.0], 0),
        comp(vec![half, 0.0], 1),
        comp(vec![bx - half, sep], 2),
        comp(vec![bx + half, sep], 3),
    ])
}

/// Builtin 2-D benchmark: pair B shifted sideways by `3Δ`.
pub fn paper_2d_spec(sigma: f64) -> Result<MixtureSpec> {
    paired_2d_spec(sigma, 3.0 * PAIR_DISTANCE_SIGMAS)
}

/// Builtin 50-D benchmark: each within-pair difference spread over four
/// coordinates.
pub fn paper_50d_spec(sigma: f64) -> Result<MixtureSpec> {
    paired_spec_blocks(50, sigma, 4)
}

/// Dimension and separation of the builtin unequal-spread benchmark.
pub const UNEQUAL_DIM: usize = 150;
pub const UNEQUAL_SEP: f64 = 6.0;

/// Builtin unequal-spread benchmark, `unequal_spec(UNEQUAL_DIM, σ, UNEQUAL_SEP)`.
pub fn unequal_benchmark_spec(sigma: f64) -> Result<MixtureSpec> {
    unequal_spec(UNEQUAL_DIM, sigma, UNEQUAL_SEP)
}

/// Four classes with priors {0.4, 0.3, 0.2, 0.1} and spreads {σ, σ, 2σ, 2σ},
/// class `k` centred at `sep·σ` along axis `k`. Used to exhibit k-Means
/// mis-clustering.
pub fn unequal_spec(dim: usize, sigma: f64, sep: f64) -> Result<MixtureSpec> {
    if dim < 4 {
        return Err(Error::invalid("unequal benchmark needs at least four dimensions"));
    }
    let priors = [0.4, 0.3, 0.2, 0.1];
    let spreads = [1.0, 1.0, 2.0, 2.0];
    MixtureSpec::new(
        (0..4)
            .map(|k| {
                let mut mean = vec![0.0; dim];
                mean[k] = sep * sigma;
                Component {
                    prior: priors[k],
                    mean,
                    sigma: spreads[k] * sigma,
                    class_label: k as Label,
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(mean: Vec<f64>) -> MixtureSpec {
        MixtureSpec::new(vec![Component {
            prior: 1.0,
            mean,
            sigma: 1.0,
            class_label: 7,
        }])
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(MixtureSpec::new(vec![]).is_err());
        let mut bad = paper_2d_spec(1.0).unwrap();
        bad.components[0].prior = 0.3;
        assert!(bad.validate().is_err());
        let mut bad = paper_2d_spec(1.0).unwrap();
        bad.components[1].mean.push(0.0);
        assert!(bad.validate().is_err());
        let mut bad = paper_2d_spec(1.0).unwrap();
        bad.components[2].sigma = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_draw() {
        assert!(gen_mixture(&single(vec![0.0]), 0, 1).unwrap().is_empty());
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let m = vec![1.5, -2.0, 0.25];
        let n = 100_000;
        let s = gen_mixture(&single(m.clone()), n, 42).unwrap();
        for i in 0..3 {
            let mean = s.iter().map(|x| x.x[i]).sum::<f64>() / n as f64;
            assert!((mean - m[i]).abs() < 3.0 / (n as f64).sqrt(), "{i}: {mean}");
        }
        assert!(s.iter().all(|x| x.label == 7));
    }

    #[test]
    fn class_counts_within_binomial_bound() {
        let spec = MixtureSpec::new(vec![
            Component { prior: 0.5, mean: vec![0.0], sigma: 1.0, class_label: 0 },
            Component { prior: 0.5, mean: vec![5.0], sigma: 1.0, class_label: 1 },
        ])
        .unwrap();
        let n = 100_000;
        let s = gen_mixture(&spec, n, 9).unwrap();
        let zeros = s.iter().filter(|x| x.label == 0).count() as f64;
        assert!((zeros - n as f64 / 2.0).abs() < 3.0 * (n as f64 / 4.0).sqrt());
    }

    #[test]
    fn deterministic_and_scale_equivariant() {
        let spec = paper_2d_spec(1.0).unwrap();
        let a = gen_mixture(&spec, 500, 3).unwrap();
        assert_eq!(a, gen_mixture(&spec, 500, 3).unwrap());
        assert_ne!(a, gen_mixture(&spec, 500, 4).unwrap());
        let b = gen_mixture(&spec.scaled(2.5), 500, 3).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.label, q.label);
            for (u, v) in p.x.iter().zip(&q.x) {
                assert!((u * 2.5 - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let spec = paper_2d_spec(1.0).unwrap();
        let a = gen_mixture(&spec, 50, 9).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, 2, &a).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f0,f1,label\n"));
        assert_eq!(text.lines().count(), 51);
        assert_eq!(read_samples(buf.as_slice()).unwrap(), a);

        let mut empty = Vec::new();
        write_samples(&mut empty, 3, &[]).unwrap();
        assert_eq!(read_sample_table(empty.as_slice()).unwrap(), (3, vec![]));
        assert!(write_samples(Vec::new(), 3, &a).is_err());
    }

    #[test]
    fn csv_rejects_bad_rows() {
        assert!(read_samples("f0,label\n1.0,x\n".as_bytes()).is_err());
        assert!(read_samples("f0,label\nnan,1\n".as_bytes()).is_err());
        assert!(read_samples("f0,label\n1.0\n".as_bytes()).is_err());
        assert!(read_samples("label\n1\n".as_bytes()).is_err());
        assert!(read_samples("f0,label\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn paired_geometry() {
        // 2-D: 4Δ vertically and 3Δ sideways, so the centres are 5Δ apart
        for (spec, dim, centres) in [
            (paper_2d_spec(1.0).unwrap(), 2, 5.0),
            (paper_50d_spec(1.0).unwrap(), 50, 4.0),
        ] {
            assert_eq!(spec.dim(), dim);
            assert!(spec.components.iter().all(|c| c.mean.len() == dim));
            let d = |a: usize, b: usize| {
                let m = &spec.components;
                crate::vecgeom::norm(&crate::vecgeom::sub(&m[a].mean, &m[b].mean))
            };
            assert!((d(0, 1) - 4.107).abs() < 1e-9);
            assert!((d(2, 3) - 4.107).abs() < 1e-9);
            let ca: Vec<f64> = crate::vecgeom::axpy(&spec.components[0].mean, 1.0, &spec.components[1].mean);
            let cb: Vec<f64> = crate::vecgeom::axpy(&spec.components[2].mean, 1.0, &spec.components[3].mean);
            let sep = crate::vecgeom::norm(&crate::vecgeom::sub(&ca, &cb)) / 2.0;
            assert!((sep - centres * 4.107).abs() < 1e-9);
            if dim == 50 {
                // within-pair directions and the centre offset are mutually orthogonal
                let da = crate::vecgeom::sub(&spec.components[1].mean, &spec.components[0].mean);
                let db = crate::vecgeom::sub(&spec.components[3].mean, &spec.components[2].mean);
                let dc = crate::vecgeom::sub(&cb, &ca);
                assert!(crate::vecgeom::dot(&da, &db).abs() < 1e-12);
                assert!(crate::vecgeom::dot(&da, &dc).abs() < 1e-12);
                assert!(crate::vecgeom::dot(&db, &dc).abs() < 1e-12);
            }
        }
        let s3 = paper_2d_spec(3.0).unwrap();
        let s1 = paper_2d_spec(1.0).unwrap().scaled(3.0);
        for (a, b) in s3.components.iter().zip(&s1.components) {
            assert_eq!(a.sigma, b.sigma);
            assert!(a.mean.iter().zip(&b.mean).all(|(u, v)| (u - v).abs() < 1e-12));
        }
    }

    #[test]
    fn bayes_trivial_cases() {
        let same = MixtureSpec::new(vec![
            Component { prior: 0.5, mean: vec![0.0, 0.0], sigma: 1.0, class_label: 0 },
            Component { prior: 0.5, mean: vec![0.0, 0.0], sigma: 1.0, class_label: 1 },
        ])
        .unwrap();
        let e = bayes_error_mc(&same, 20_000, 1).unwrap();
        assert!((e - 0.5).abs() < 0.02, "{e}");
        assert_eq!(bayes_error_mc(&single(vec![0.0, 1.0]), 1000, 1).unwrap(), 0.0);
        assert!(bayes_error_mc(&same, 0, 1).is_err());
    }

    #[test]
    fn paired_bayes_matches_gaussian_tail() {
        use statrs::distribution::{ContinuousCDF, Normal};
        // each sample is only at risk from its partner, Δ away
        let q = 1.0 - Normal::standard().cdf(0.5 * PAIR_DISTANCE_SIGMAS);
        assert!((q - 0.02).abs() < 2e-4, "{q}");
        let n = 200_000;
        let tol = 4.0 * (q * (1.0 - q) / n as f64).sqrt();
        for spec in [paper_2d_spec(1.0).unwrap(), paper_50d_spec(1.0).unwrap()] {
            let e = bayes_error_mc(&spec, n, 3).unwrap();
            assert!((e - q).abs() < tol, "{e} vs {q}");
        }
    }
}
