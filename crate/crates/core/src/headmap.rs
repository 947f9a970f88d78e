//! Mapping machine hyperplanes to human class labels after training.
//!
//! Each class is assigned the single `(plane, polarity)` pair that best
//! separates it from all other classes on a small labelled calibration set
//! (one-vs-all). A sample is then ranked against every class by its signed
//! margin to that class's plane.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::learner::Pool;
use crate::synthdata::LabeledSample;
use crate::Label;

/// How the two one-vs-all counts are combined into a score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Mean of the in-class hit rate and the out-of-class rejection rate.
    #[default]
    Balanced,
    /// Fraction of all calibration samples classified consistently.
    RawCount,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationConfig {
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHead {
    #[serde(rename = "class")]
    pub class_label: Label,
    #[serde(rename = "plane")]
    pub plane_id: usize,
    /// `+1` when the class lies on the `w·x > θ` side.
    pub polarity: i8,
    pub score: f64,
}

impl ClassHead {
    pub fn margin(&self, pool: &Pool, x: &[f64]) -> f64 {
        // + 0.0 folds -0.0 into +0.0 so points on the plane tie exactly
        f64::from(self.polarity) * pool.planes[self.plane_id].signed_distance(x) + 0.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HeadSet {
    pub heads: Vec<ClassHead>,
}

impl HeadSet {
    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn get(&self, label: Label) -> Option<&ClassHead> {
        self.heads.iter().find(|h| h.class_label == label)
    }

    /// Checks the head set against the pool it will be applied to.
    pub fn validate(&self, pool: &Pool) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for h in &self.heads {
            if h.plane_id >= pool.len() {
                return Err(Error::invalid(format!(
                    "head for class {} references plane {} of a pool with {} planes",
                    h.class_label,
                    h.plane_id,
                    pool.len()
                )));
            }
            if h.polarity != 1 && h.polarity != -1 {
                return Err(Error::invalid("polarity must be +1 or -1"));
            }
            if !seen.insert(h.class_label) {
                return Err(Error::invalid(format!("duplicate head for class {}", h.class_label)));
            }
        }
        Ok(())
    }

    /// The `n` classes with the largest margins, best first. Equal margins
    /// are ordered by ascending label.
    pub fn classify_topn(&self, pool: &Pool, x: &[f64], n: usize) -> Result<Vec<Label>> {
        check_dim(pool.dim, x.len())?;
        if n == 0 || n > self.heads.len() {
            return Err(Error::invalid(format!(
                "n = {n} outside 1..={}",
                self.heads.len()
            )));
        }
        let mut ranked: Vec<(f64, Label)> = self
            .heads
            .iter()
            .map(|h| (h.margin(pool, x), h.class_label))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(ranked.into_iter().take(n).map(|(_, l)| l).collect())
    }
}

/// Picks, for every class in `calib`, the highest-scoring `(plane, polarity)`.
/// Ties go to the lowest plane id, then to polarity `+1`.
pub fn associate_labels(pool: &Pool, calib: &[LabeledSample], cfg: &AssociationConfig) -> Result<HeadSet> {
    if calib.is_empty() {
        return Err(Error::invalid("calibration set is empty"));
    }
    if pool.is_empty() {
        return Err(Error::invalid("pool has no planes"));
    }
    let mut class_index: BTreeMap<Label, usize> = BTreeMap::new();
    for s in calib {
        check_dim(pool.dim, s.x.len())?;
        let next = class_index.len();
        class_index.entry(s.label).or_insert(next);
    }
    // stable ordering: class slot i corresponds to the i-th smallest label
    let labels: Vec<Label> = class_index.keys().copied().collect();
    let slot: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();

    let mut class_count = vec![0u64; labels.len()];
    for s in calib {
        class_count[slot[&s.label]] += 1;
    }
    if let Some(i) = class_count.iter().position(|c| *c == 0) {
        return Err(Error::EmptyClass(labels[i]));
    }
    let total = calib.len() as u64;

    // positives[j][c]: class-c samples strictly on the w side of plane j
    let mut positives = vec![vec![0u64; labels.len()]; pool.len()];
    for s in calib {
        let c = slot[&s.label];
        for (j, plane) in pool.planes.iter().enumerate() {
            if plane.signed_distance(&s.x) > 0.0 {
                positives[j][c] += 1;
            }
        }
    }

    let mut heads = Vec::with_capacity(labels.len());
    for (c, &label) in labels.iter().enumerate() {
        let n_in = class_count[c];
        let n_out = total - n_in;
        let mut best: Option<ClassHead> = None;
        for (j, pos) in positives.iter().enumerate() {
            let pos_total: u64 = pos.iter().sum();
            let pos_in = pos[c];
            let pos_out = pos_total - pos_in;
            for polarity in [1i8, -1] {
                let (hit_in, reject_out) = if polarity == 1 {
                    (pos_in, n_out - pos_out)
                } else {
                    (n_in - pos_in, pos_out)
                };
                let score = match cfg.weighting {
                    Weighting::Balanced => {
                        let out_rate = if n_out == 0 { 0.0 } else { reject_out as f64 / n_out as f64 };
                        0.5 * (hit_in as f64 / n_in as f64) + 0.5 * out_rate
                    }
                    Weighting::RawCount => (hit_in + reject_out) as f64 / total as f64,
                };
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(ClassHead {
                        class_label: label,
                        plane_id: j,
                        polarity,
                        score,
                    });
                }
            }
        }
        heads.push(best.expect("pool is non-empty"));
    }
    Ok(HeadSet { heads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{Hyperplane, LearnerConfig};

    fn pool_1d(thetas: &[f64]) -> Pool {
        let planes = thetas
            .iter()
            .enumerate()
            .map(|(i, t)| Hyperplane::new(i, vec![1.0], *t).unwrap())
            .collect();
        Pool::new(1, LearnerConfig::default(), planes).unwrap()
    }

    fn sample(x: f64, label: Label) -> LabeledSample {
        LabeledSample { x: vec![x], label }
    }

    #[test]
    fn boundary_plane_wins_with_opposite_polarities() {
        // two classes around ±3 with a few stragglers across the boundary
        let mut calib = Vec::new();
        for i in 0..100 {
            let off = i as f64 * 0.01;
            calib.push(sample(-3.0 + off, 0));
            calib.push(sample(3.0 - off, 1));
        }
        calib[0].x[0] = 0.5;
        calib[1].x[0] = -0.5;
        let pool = pool_1d(&[-5.0, 0.0, 5.0]);
        let heads = associate_labels(&pool, &calib, &AssociationConfig::default()).unwrap();
        let h0 = heads.get(0).unwrap();
        let h1 = heads.get(1).unwrap();
        assert_eq!((h0.plane_id, h0.polarity), (1, -1));
        assert_eq!((h1.plane_id, h1.polarity), (1, 1));
        assert!((h0.score - 0.99).abs() < 1e-12);
        assert!((h1.score - 0.99).abs() < 1e-12);

        // brute-force oracle over every (plane, polarity)
        for &label in &[0, 1] {
            let mut best = (f64::MIN, 0, 0i8);
            for j in 0..pool.len() {
                for s in [1i8, -1] {
                    let (mut hit, mut n_in, mut rej, mut n_out) = (0.0, 0.0, 0.0, 0.0);
                    for c in &calib {
                        let side = if pool.planes[j].signed_distance(&c.x) > 0.0 { 1 } else { -1 };
                        if c.label == label {
                            n_in += 1.0;
                            hit += f64::from((side * s as i32 == 1) as u8);
                        } else {
                            n_out += 1.0;
                            rej += f64::from((side * s as i32 == -1) as u8);
                        }
                    }
                    let score = 0.5 * hit / n_in + 0.5 * rej / n_out;
                    if score > best.0 {
                        best = (score, j, s);
                    }
                }
            }
            let h = heads.get(label).unwrap();
            assert_eq!((h.plane_id, h.polarity), (best.1, best.2));
            assert_eq!(h.score, best.0);
        }
    }

    #[test]
    fn non_discriminating_plane_scores_half() {
        let calib = vec![sample(1.0, 0), sample(2.0, 1), sample(3.0, 2)];
        let pool = pool_1d(&[-10.0]);
        let heads = associate_labels(&pool, &calib, &AssociationConfig::default()).unwrap();
        assert!(heads.heads.iter().all(|h| h.score == 0.5 && h.polarity == 1));
    }

    #[test]
    fn duplicate_planes_break_ties_to_lower_id() {
        let calib = vec![sample(-1.0, 0), sample(1.0, 1)];
        let pool = pool_1d(&[0.0, 0.0]);
        let heads = associate_labels(&pool, &calib, &AssociationConfig::default()).unwrap();
        assert!(heads.heads.iter().all(|h| h.plane_id == 0 && h.score == 1.0));
    }

    #[test]
    fn raw_count_weighting() {
        // 1 sample of class 0, 9 of class 1; plane at 0 separates perfectly
        let mut calib = vec![sample(-1.0, 0)];
        calib.extend((0..9).map(|i| sample(1.0 + i as f64, 1)));
        let pool = pool_1d(&[5.0, 0.0]);
        let cfg = AssociationConfig { weighting: Weighting::RawCount };
        let heads = associate_labels(&pool, &calib, &cfg).unwrap();
        assert_eq!(heads.get(0).unwrap().plane_id, 1);
        assert_eq!(heads.get(0).unwrap().score, 1.0);
    }

    #[test]
    fn association_errors() {
        let pool = pool_1d(&[0.0]);
        assert!(associate_labels(&pool, &[], &AssociationConfig::default()).is_err());
        let bad = vec![LabeledSample { x: vec![0.0, 1.0], label: 0 }];
        assert!(associate_labels(&pool, &bad, &AssociationConfig::default()).is_err());
    }

    #[test]
    fn topn_ranking() {
        let pool = pool_1d(&[0.0]);
        let heads = HeadSet {
            heads: vec![
                ClassHead { class_label: 0, plane_id: 0, polarity: -1, score: 1.0 },
                ClassHead { class_label: 1, plane_id: 0, polarity: 1, score: 1.0 },
            ],
        };
        assert_eq!(heads.classify_topn(&pool, &[0.3], 1).unwrap(), vec![1]);
        assert_eq!(heads.classify_topn(&pool, &[-0.3], 1).unwrap(), vec![0]);
        assert_eq!(heads.classify_topn(&pool, &[-0.3], 2).unwrap(), vec![0, 1]);
        assert!(heads.classify_topn(&pool, &[0.0], 3).is_err());
        assert!(heads.classify_topn(&pool, &[0.0], 0).is_err());
        // on the plane both margins are zero: lower label first
        assert_eq!(heads.classify_topn(&pool, &[0.0], 1).unwrap(), vec![0]);
    }

    #[test]
    fn topn_three_classes() {
        // margins 0.9, 0.2, -0.4 at x = 0 (planes at -0.9, -0.2, 0.4 with polarity +1)
        let pool = pool_1d(&[-0.9, -0.2, 0.4]);
        let heads = HeadSet {
            heads: vec![
                ClassHead { class_label: 5, plane_id: 2, polarity: 1, score: 0.0 },
                ClassHead { class_label: 6, plane_id: 0, polarity: 1, score: 0.0 },
                ClassHead { class_label: 7, plane_id: 1, polarity: 1, score: 0.0 },
            ],
        };
        let mut oracle: Vec<(f64, Label)> = heads
            .heads
            .iter()
            .map(|h| (h.margin(&pool, &[0.0]), h.class_label))
            .collect();
        oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let top2: Vec<Label> = oracle.iter().take(2).map(|p| p.1).collect();
        assert_eq!(top2, vec![6, 7]);
        assert_eq!(heads.classify_topn(&pool, &[0.0], 2).unwrap(), top2);
    }

    #[test]
    fn headset_json_layout() {
        let heads = HeadSet {
            heads: vec![ClassHead { class_label: 3, plane_id: 1, polarity: -1, score: 0.75 }],
        };
        let json = serde_json::to_string(&heads).unwrap();
        assert_eq!(json, r#"{"heads":[{"class":3,"plane":1,"polarity":-1,"score":0.75}]}"#);
    }
}
