//! The hyperplane pool and its local, per-sample learning rules.
//!
//! Every plane keeps its own state and reacts only to samples that fall close
//! to it: samples inside the activity band `|w·x − θ| ≤ Φ` shift the threshold
//! away from them and rotate the normal about the point where the plane cuts
//! the segment between its two side-mean estimates. Samples inside the wider
//! band `β` feed those side means. Over a stream, planes drift out of dense
//! regions and settle in the low-density valleys between classes.

use std::time::Instant;

use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::evalkit::{Checkpoint, Probe, RunTrace};
use crate::rng;
use crate::vecgeom::{self, dot, RotationFrame};

/// Shift-branch activations a plane needs before it may rotate.
pub const DEFAULT_WARMUP_SHIFTS: u64 = 100;

/// Optional linear schedule for the shift step and rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    /// Samples after which the schedule reaches `floor`.
    pub horizon: u64,
    /// Smallest multiplier applied to `ε` and `α`.
    pub floor: f64,
}

impl Decay {
    pub fn factor(&self, samples_seen: u64) -> f64 {
        if self.horizon == 0 {
            return self.floor;
        }
        (1.0 - samples_seen as f64 / self.horizon as f64).max(self.floor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Shift step.
    pub epsilon: f64,
    /// Half-width of the activity band.
    pub phi: f64,
    /// Rotation angle in radians.
    pub alpha: f64,
    /// Half-width of the band feeding the side-mean estimates.
    pub beta: f64,
    pub warmup_shifts: u64,
    pub rng_seed: u64,
    #[serde(default)]
    pub decay: Option<Decay>,
}

impl LearnerConfig {
    /// The tuned defaults, expressed relative to the class spread `sigma`:
    /// `ε = 0.0033σ`, `Φ = 2σ`, `α = 0.04`, `β = 8σ`.
    pub fn scaled(sigma: f64) -> Self {
        Self {
            epsilon: 0.0033 * sigma,
            phi: 2.0 * sigma,
            alpha: 0.04,
            beta: 8.0 * sigma,
            warmup_shifts: DEFAULT_WARMUP_SHIFTS,
            rng_seed: 0,
            decay: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("phi", self.phi),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if self.epsilon >= self.phi {
            return Err(Error::invalid("epsilon must be smaller than phi"));
        }
        if self.alpha >= 0.5 {
            return Err(Error::invalid("alpha must be below 0.5 rad"));
        }
        if self.beta < self.phi {
            return Err(Error::invalid("beta must be at least phi"));
        }
        if let Some(decay) = self.decay {
            if !(0.0..=1.0).contains(&decay.floor) {
                return Err(Error::invalid("decay floor must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self::scaled(1.0)
    }
}

/// Axis-aligned box enclosing the region the pool is spread over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::invalid("domain must have at least one dimension"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(h > l) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::invalid("domain requires finite hi > lo in every dimension"));
        }
        Ok(Self { lo, hi })
    }

    /// Hypercube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// Cube of edge `edge` centred on `center`.
    pub fn centered(center: &[f64], edge: f64) -> Result<Self> {
        let half = 0.5 * edge;
        Self::new(
            center.iter().map(|c| c - half).collect(),
            center.iter().map(|c| c + half).collect(),
        )
    }

    /// Per-coordinate bounding box of `samples`.
    pub fn from_samples<'a, I>(samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut it = samples.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::invalid("cannot derive a domain from zero samples"))?;
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for x in it {
            check_dim(lo.len(), x.len())?;
            for (i, &v) in x.iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
            if *h <= *l {
                *l -= 0.5;
                *h += 0.5;
            }
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn edge(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }
}

/// One discriminator and its complete learning state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub id: usize,
    pub w: Vec<f64>,
    pub theta: f64,
    /// Self-timer: samples that landed inside the activity band.
    pub t: u64,
    pub shift_count: u64,
    /// Mean estimate of the `w·x ≤ θ` side.
    pub mu1: Option<Vec<f64>>,
    /// Mean estimate of the `w·x > θ` side.
    pub mu2: Option<Vec<f64>>,
    pub c1: f64,
    pub c2: f64,
}

/// What a single plane did with a single sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlaneEvent {
    pub in_band: bool,
    pub mean_updated: bool,
    pub shifted: bool,
    pub rotated: bool,
    pub degenerate: bool,
}

impl Hyperplane {
    pub fn new(id: usize, mut w: Vec<f64>, theta: f64) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::invalid("normal must be non-empty"));
        }
        let n = vecgeom::normalize(&mut w);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("normal must be a finite non-zero vector"));
        }
        Ok(Self {
            id,
            w,
            theta,
            t: 0,
            shift_count: 0,
            mu1: None,
            mu2: None,
            c1: 0.0,
            c2: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) - self.theta
    }

    pub fn has_means(&self) -> bool {
        self.mu1.is_some() && self.mu2.is_some()
    }

    /// Threshold update: samples just above the plane push it down by `ε`,
    /// samples on or just below push it up. A sample exactly on the plane
    /// takes the upward branch.
    pub fn shift_update(&mut self, x: &[f64], cfg: &LearnerConfig) -> bool {
        self.shift_with(dot(&self.w, x), cfg.epsilon, cfg.phi)
    }

    fn shift_with(&mut self, proj: f64, epsilon: f64, phi: f64) -> bool {
        let theta = self.theta;
        if proj > theta && proj <= theta + phi {
            self.theta = theta - epsilon;
        } else if proj <= theta && proj >= theta - phi {
            self.theta = theta + epsilon;
        } else {
            return false;
        }
        self.shift_count += 1;
        true
    }

    /// Side-mean update with a unit weight inside the `β` band. The first
    /// in-band sample seeds both sides: its own side gets the sample, the other
    /// side its mirror image through the plane.
    pub fn mean_update(&mut self, x: &[f64], cfg: &LearnerConfig) -> bool {
        let dist = self.signed_distance(x);
        if dist.abs() > cfg.beta {
            return false;
        }
        let lower = dist <= 0.0;
        match (&mut self.mu1, &mut self.mu2) {
            (Some(mu1), Some(mu2)) => {
                let (mu, c) = if lower {
                    (mu1, &mut self.c1)
                } else {
                    (mu2, &mut self.c2)
                };
                let next = *c + 1.0;
                for (m, xi) in mu.iter_mut().zip(x) {
                    *m = (*c * *m + xi) / next;
                }
                *c = next;
            }
            _ => {
                let mirror = vecgeom::axpy(x, -2.0 * dist, &self.w);
                if lower {
                    self.mu1 = Some(x.to_vec());
                    self.mu2 = Some(mirror);
                } else {
                    self.mu2 = Some(x.to_vec());
                    self.mu1 = Some(mirror);
                }
                self.c1 += 1.0;
                self.c2 += 1.0;
            }
        }
        true
    }

    /// Rotates the plane by `α` about the intersection point `C` of the plane
    /// with the side-mean segment, in the sense that moves the plane away from
    /// `x`, then re-anchors `θ` so that `C` stays on the plane.
    ///
    /// Returns `Ok(false)` when the plane is not eligible (outside the band,
    /// warm-up pending, no mean estimates) and `Err(DegenerateFrame)` when the
    /// frame cannot be built; the plane is untouched in both cases.
    pub fn rotate_update(&mut self, x: &[f64], cfg: &LearnerConfig) -> Result<bool> {
        self.rotate_with(x, cfg.alpha, cfg)
    }

    fn rotate_with(&mut self, x: &[f64], alpha: f64, cfg: &LearnerConfig) -> Result<bool> {
        if self.shift_count < cfg.warmup_shifts || self.signed_distance(x).abs() > cfg.phi {
            return Ok(false);
        }
        let (Some(mu1), Some(mu2)) = (&self.mu1, &self.mu2) else {
            return Ok(false);
        };
        let frame = RotationFrame::build(x, &self.w, self.theta, mu1, mu2)?;
        let candidate = |angle: f64| -> Result<(Vec<f64>, f64, f64)> {
            let mut w = vecgeom::rotate_in_plane(&self.w, &frame.u, &frame.v, angle)?;
            vecgeom::normalize(&mut w);
            let theta = dot(&w, &frame.c);
            let reach = (dot(&w, x) - theta).abs();
            Ok((w, theta, reach))
        };
        let plus = candidate(alpha)?;
        let minus = candidate(-alpha)?;
        let (w, theta, _) = if minus.2 > plus.2 { minus } else { plus };
        self.w = w;
        self.theta = theta;
        Ok(true)
    }

    /// Runs the full per-sample update in the order mean, shift, rotate,
    /// self-timer. `scale` multiplies `ε` and `α` (decay schedule).
    pub fn learn(&mut self, x: &[f64], cfg: &LearnerConfig, scale: f64) -> PlaneEvent {
        let mut event = PlaneEvent::default();
        let proj = dot(&self.w, x);
        let dist = proj - self.theta;
        if dist.abs() > cfg.beta {
            return event;
        }
        event.mean_updated = self.mean_update(x, cfg);
        if dist.abs() > cfg.phi {
            return event;
        }
        event.in_band = true;
        event.shifted = self.shift_with(proj, cfg.epsilon * scale, cfg.phi);
        if self.shift_count >= cfg.warmup_shifts && self.has_means() {
            match self.rotate_with(x, cfg.alpha * scale, cfg) {
                Ok(rotated) => event.rotated = rotated,
                Err(_) => event.degenerate = true,
            }
        }
        self.t += 1;
        event
    }
}

/// Counters accumulated by [`Pool::step`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    pub samples: u64,
    pub band_hits: u64,
    pub mean_updates: u64,
    pub shifts: u64,
    pub rotations: u64,
    pub degenerate_frames: u64,
}

impl PoolStats {
    fn record(&mut self, e: &PlaneEvent) {
        self.band_hits += e.in_band as u64;
        self.mean_updates += e.mean_updated as u64;
        self.shifts += e.shifted as u64;
        self.rotations += e.rotated as u64;
        self.degenerate_frames += e.degenerate as u64;
    }

    /// Update work in length-`d` vector operations: one per side-mean update
    /// and eight per fired rotation (frame plus two candidate rotations).
    pub fn vector_ops(&self) -> u64 {
        self.mean_updates + 8 * self.rotations
    }
}

/// Per-sample summary returned by [`Pool::step`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    pub band_hits: usize,
    pub mean_updates: usize,
    pub shifts: usize,
    pub rotations: usize,
    pub degenerate_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub dim: usize,
    pub config: LearnerConfig,
    pub planes: Vec<Hyperplane>,
    /// Samples consumed so far; drives the optional decay schedule.
    #[serde(default)]
    pub samples_seen: u64,
    #[serde(skip)]
    pub stats: PoolStats,
}

impl Pool {
    pub fn new(dim: usize, config: LearnerConfig, planes: Vec<Hyperplane>) -> Result<Self> {
        config.validate()?;
        let pool = Self {
            dim,
            config,
            planes,
            samples_seen: 0,
            stats: PoolStats::default(),
        };
        pool.validate()?;
        Ok(pool)
    }

    /// Checks the structural invariants, e.g. after loading a snapshot.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.dim == 0 {
            return Err(Error::invalid("pool dimension must be positive"));
        }
        for (i, p) in self.planes.iter().enumerate() {
            if p.id != i {
                return Err(Error::invalid(format!("plane at index {i} has id {}", p.id)));
            }
            check_dim(self.dim, p.w.len())?;
            if (vecgeom::norm(&p.w) - 1.0).abs() > 1e-8 {
                return Err(Error::invalid(format!("plane {i} normal is not unit length")));
            }
            match (&p.mu1, &p.mu2) {
                (Some(a), Some(b)) => {
                    check_dim(self.dim, a.len())?;
                    check_dim(self.dim, b.len())?;
                }
                (None, None) => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "plane {i} has only one side-mean estimate"
                    )))
                }
            }
        }
        Ok(())
    }

    /// `planes_per_dim` axis-aligned planes per dimension, evenly spaced in
    /// the interior of the domain at `lo + o·(k + ½)/planes_per_dim`.
    pub fn init_grid(domain: &DomainBox, planes_per_dim: usize, config: LearnerConfig) -> Result<Self> {
        if planes_per_dim == 0 {
            return Err(Error::invalid("planes_per_dim must be at least 1"));
        }
        let dim = domain.dim();
        let mut planes = Vec::with_capacity(dim * planes_per_dim);
        for axis in 0..dim {
            let mut w = vec![0.0; dim];
            w[axis] = 1.0;
            for k in 0..planes_per_dim {
                let offset = domain.lo[axis]
                    + domain.edge(axis) * (k as f64 + 0.5) / planes_per_dim as f64;
                planes.push(Hyperplane::new(planes.len(), w.clone(), offset)?);
            }
        }
        Self::new(dim, config, planes)
    }

    /// `count` planes with isotropic random normals, each through a uniform
    /// random point of the domain.
    pub fn init_random(domain: &DomainBox, count: usize, seed: u64, config: LearnerConfig) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("count must be at least 1"));
        }
        let dim = domain.dim();
        let mut rng = rng::stream(seed, rng::streams::POOL_INIT);
        let unit = Uniform::new(0.0, 1.0).expect("valid range");
        let mut planes = Vec::with_capacity(count);
        for id in 0..count {
            let mut w: Vec<f64> = loop {
                let w: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                if vecgeom::norm(&w) > 1e-12 {
                    break w;
                }
            };
            vecgeom::normalize(&mut w);
            let point: Vec<f64> = (0..dim)
                .map(|i| domain.lo[i] + domain.edge(i) * unit.sample(&mut rng))
                .collect();
            let theta = dot(&w, &point);
            planes.push(Hyperplane::new(id, w, theta)?);
        }
        Self::new(dim, config, planes)
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    /// Output code: `max{0, w_j·x − θ_j}` for every plane.
    pub fn output_code(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .planes
            .iter()
            .map(|p| p.signed_distance(x).max(0.0))
            .collect())
    }

    fn decay_factor(&self) -> f64 {
        self.config
            .decay
            .map_or(1.0, |d| d.factor(self.samples_seen))
    }

    /// Presents one sample to every plane. Planes only read their own state.
    pub fn step(&mut self, x: &[f64]) -> Result<StepReport> {
        check_dim(self.dim, x.len())?;
        let scale = self.decay_factor();
        let mut report = StepReport::default();
        for plane in &mut self.planes {
            let e = plane.learn(x, &self.config, scale);
            self.stats.record(&e);
            report.band_hits += e.in_band as usize;
            report.mean_updates += e.mean_updated as usize;
            report.shifts += e.shifted as usize;
            report.rotations += e.rotated as usize;
            report.degenerate_frames += e.degenerate as usize;
        }
        self.samples_seen += 1;
        self.stats.samples += 1;
        Ok(report)
    }

    /// Single pass over `stream`. When a probe is supplied it is called every
    /// `cadence` samples and after the last one; each call becomes a
    /// checkpoint of the returned trace.
    pub fn train<'a, I>(
        &mut self,
        stream: I,
        cadence: usize,
        mut probe: Option<&mut Probe<'_>>,
    ) -> Result<RunTrace>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        if cadence == 0 {
            return Err(Error::invalid("checkpoint cadence must be positive"));
        }
        let start = Instant::now();
        let base = self.stats;
        let mut trace = RunTrace::default();
        let mut iter = stream.into_iter().enumerate().peekable();
        while let Some((index, x)) = iter.next() {
            if x.len() != self.dim {
                return Err(Error::StreamDimension {
                    index,
                    expected: self.dim,
                    found: x.len(),
                });
            }
            self.step(x)?;
            let done = index + 1;
            let due = done % cadence == 0 || iter.peek().is_none();
            if let (true, Some(probe)) = (due, probe.as_deref_mut()) {
                let topn_errors = probe(self)?;
                trace.push(Checkpoint {
                    sample_index: done,
                    topn_errors,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    shifts_fired: self.stats.shifts - base.shifts,
                    rotations_fired: self.stats.rotations - base.rotations,
                })?;
            }
        }
        Ok(trace)
    }
}
