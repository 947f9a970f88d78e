//! Reference methods: supervised k-nearest-neighbours and unsupervised
//! k-Means (Lloyd iterations from k-means++ seeding).

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::evalkit::Confusion;
use crate::rng;
use crate::synthdata::LabeledSample;
use crate::Label;

pub const DEFAULT_KNN_K: usize = 5;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    points: Vec<LabeledSample>,
    k: usize,
    labels: Vec<Label>,
}

impl KnnModel {
    pub fn new(points: Vec<LabeledSample>, k: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("kNN model needs at least one point"));
        }
        if k == 0 || k.is_multiple_of(2) {
            return Err(Error::invalid(format!("k must be a positive odd integer, got {k}")));
        }
        if k > points.len() {
            return Err(Error::invalid(format!("k = {k} exceeds {} points", points.len())));
        }
        let dim = points[0].x.len();
        for p in &points {
            check_dim(dim, p.x.len())?;
        }
        let mut labels: Vec<Label> = points.iter().map(|p| p.label).collect();
        labels.sort_unstable();
        labels.dedup();
        Ok(Self { points, k, labels })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Classes ranked by neighbour votes, then by mean neighbour distance,
    /// then by label. Classes without a vote follow, ordered by the distance
    /// to their nearest training point.
    pub fn classify(&self, x: &[f64], n: usize) -> Result<Vec<Label>> {
        check_dim(self.points[0].x.len(), x.len())?;
        if n == 0 || n > self.labels.len() {
            return Err(Error::invalid(format!("n = {n} outside 1..={}", self.labels.len())));
        }
        let mut dists: Vec<(f64, Label)> = self
            .points
            .iter()
            .map(|p| (sq_dist(&p.x, x), p.label))
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut votes: BTreeMap<Label, (usize, f64)> = BTreeMap::new();
        for (d, l) in &dists[..self.k] {
            let e = votes.entry(*l).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += d.sqrt();
        }
        let mut ranked: Vec<(usize, f64, Label)> = votes
            .into_iter()
            .map(|(l, (c, s))| (c, s / c as f64, l))
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut out: Vec<Label> = ranked.into_iter().map(|r| r.2).collect();
        if out.len() < n {
            for (_, l) in &dists {
                if !out.contains(l) {
                    out.push(*l);
                    if out.len() == n {
                        break;
                    }
                }
            }
        }
        out.truncate(n);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansModel {
    pub centroids: Vec<Vec<f64>>,
    pub k: usize,
    /// Sum of squared distances to the assigned centroid after the last
    /// assignment.
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KmeansModel {
    pub fn assign(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x).0
    }
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn kmeans_pp<R: Rng>(data: &[&[f64]], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![data[rng.random_range(0..data.len())].to_vec()];
    let mut d2: Vec<f64> = data.iter().map(|x| sq_dist(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = data.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    idx = i;
                    break;
                }
            }
            idx
        } else {
            rng.random_range(0..data.len())
        };
        let c = data[pick].to_vec();
        for (d, x) in d2.iter_mut().zip(data) {
            *d = d.min(sq_dist(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd iterations from k-means++ seeding. Stops at an assignment fixpoint
/// or after `max_iters` updates. A cluster left empty is re-seeded at the
/// point farthest from its current centroid.
pub fn kmeans_fit(data: &[&[f64]], k: usize, max_iters: usize, seed: u64) -> Result<KmeansModel> {
    if k == 0 || k > data.len() {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={}", data.len())));
    }
    let dim = data[0].len();
    for x in data {
        check_dim(dim, x.len())?;
    }
    let mut rng = rng::stream(seed, rng::streams::KMEANS);
    let mut centroids = kmeans_pp(data, k, &mut rng);
    let mut assignment = vec![usize::MAX; data.len()];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let mut changed = false;
        let mut inertia = 0.0;
        for (a, x) in assignment.iter_mut().zip(data) {
            let (c, d) = nearest(&centroids, x);
            inertia += d;
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed {
            converged = true;
            break;
        }
        if iterations == max_iters {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (a, x) in assignment.iter().zip(data) {
            counts[*a] += 1;
            for (s, v) in sums[*a].iter_mut().zip(x.iter()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = assignment
                    .iter()
                    .zip(data)
                    .map(|(a, x)| sq_dist(x, &centroids[*a]))
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(i, _)| i)
                    .expect("data is non-empty");
                centroids[c] = data[far].to_vec();
                assignment[far] = c;
            }
        }
    }
    Ok(KmeansModel {
        centroids,
        k,
        inertia: *history.last().expect("at least one assignment"),
        inertia_history: history,
        iterations,
        converged,
    })
}

/// Class-versus-cluster counts plus the majority-mapping pathologies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Rows are true classes, columns cluster ids.
    pub matrix: Confusion,
    /// Majority cluster of every class.
    pub majority: BTreeMap<Label, Label>,
    /// Classes with at least `min_share` of their samples in two or more
    /// clusters, with those clusters.
    pub split_classes: Vec<(Label, Vec<Label>)>,
    /// Clusters that are the majority cluster of more than one class.
    pub shared_clusters: Vec<(Label, Vec<Label>)>,
}

impl ClusterReport {
    pub fn has_pathology(&self) -> bool {
        !self.split_classes.is_empty() || !self.shared_clusters.is_empty()
    }
}

/// Share of a class a cluster must hold to count toward a split.
pub const DEFAULT_SPLIT_SHARE: f64 = 0.2;

pub fn kmeans_confusion(model: &KmeansModel, samples: &[LabeledSample], min_share: f64) -> ClusterReport {
    let mut rows: Vec<Label> = samples.iter().map(|s| s.label).collect();
    rows.sort_unstable();
    rows.dedup();
    let cols: Vec<Label> = (0..model.k as Label).collect();
    let mut counts = vec![vec![0u64; cols.len()]; rows.len()];
    for s in samples {
        let r = rows.binary_search(&s.label).expect("label collected above");
        counts[r][model.assign(&s.x)] += 1;
    }
    let mut majority = BTreeMap::new();
    let mut split_classes = Vec::new();
    let mut claims: BTreeMap<Label, Vec<Label>> = BTreeMap::new();
    for (r, row) in counts.iter().enumerate() {
        let total: u64 = row.iter().sum();
        let (best, _) = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("k >= 1");
        majority.insert(rows[r], best as Label);
        claims.entry(best as Label).or_default().push(rows[r]);
        let holders: Vec<Label> = row
            .iter()
            .enumerate()
            .filter(|(_, &c)| total > 0 && c as f64 >= min_share * total as f64)
            .map(|(j, _)| j as Label)
            .collect();
        if holders.len() >= 2 {
            split_classes.push((rows[r], holders));
        }
    }
    let shared_clusters = claims.into_iter().filter(|(_, v)| v.len() > 1).collect();
    ClusterReport {
        matrix: Confusion { rows, cols, counts },
        majority,
        split_classes,
        shared_clusters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &[f64], label: Label) -> LabeledSample {
        LabeledSample { x: x.to_vec(), label }
    }

    #[test]
    fn knn_self_retrieval() {
        let m = KnnModel::new(vec![s(&[0.0, 0.0], 1), s(&[5.0, 5.0], 2), s(&[9.0, 1.0], 3)], 1).unwrap();
        assert_eq!(m.classify(&[5.0, 5.0], 1).unwrap(), vec![2]);
        assert_eq!(m.classify(&[5.0, 5.0], 3).unwrap(), vec![2, 3, 1]);
    }

    #[test]
    fn knn_unanimous_neighbours() {
        let m = KnnModel::new(
            vec![s(&[0.0], 0), s(&[0.1], 0), s(&[0.2], 0), s(&[10.0], 1)],
            3,
        )
        .unwrap();
        assert_eq!(m.classify(&[0.05], 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn knn_majority_vote() {
        let pts = vec![
            s(&[0.0], 0),
            s(&[1.0], 0),
            s(&[1.5], 1),
            s(&[5.0], 1),
            s(&[6.0], 0),
        ];
        // brute force: nearest three to 1.2 are 1.0 (0), 1.5 (1), 0.0 (0)
        let x = [1.2];
        let mut order: Vec<(f64, Label)> = pts.iter().map(|p| ((p.x[0] - x[0]).abs(), p.label)).collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let zeros = order[..3].iter().filter(|p| p.1 == 0).count();
        assert_eq!(zeros, 2);
        let m = KnnModel::new(pts, 3).unwrap();
        assert_eq!(m.classify(&x, 1).unwrap(), vec![0]);
    }

    #[test]
    fn knn_rejects_bad_parameters() {
        assert!(KnnModel::new(vec![], 1).is_err());
        assert!(KnnModel::new(vec![s(&[0.0], 0), s(&[1.0], 0)], 2).is_err());
        assert!(KnnModel::new(vec![s(&[0.0], 0)], 3).is_err());
        let m = KnnModel::new(vec![s(&[0.0], 0)], 1).unwrap();
        assert!(m.classify(&[0.0], 2).is_err());
        assert!(m.classify(&[0.0, 1.0], 1).is_err());
    }

    #[test]
    fn kmeans_on_exactly_k_points() {
        let pts = [[0.0, 0.0], [3.0, 1.0], [-2.0, 7.0]];
        let data: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let m = kmeans_fit(&data, 3, 50, 1).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut cs = m.centroids.clone();
        cs.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(cs, vec![vec![-2.0, 7.0], vec![0.0, 0.0], vec![3.0, 1.0]]);
        assert!(kmeans_fit(&data, 4, 10, 1).is_err());
    }

    #[test]
    fn kmeans_inertia_monotone() {
        let spec = crate::synthdata::unequal_spec(4, 1.0, 6.0).unwrap();
        let samples = crate::synthdata::gen_mixture(&spec, 2000, 5).unwrap();
        let data: Vec<&[f64]> = samples.iter().map(|s| s.x.as_slice()).collect();
        let m = kmeans_fit(&data, 4, 100, 3).unwrap();
        for w in m.inertia_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "{:?}", m.inertia_history);
        }
        assert!(m.converged);
        // at a fixpoint every point is already with its nearest centroid
        let again: f64 = data.iter().map(|x| nearest(&m.centroids, x).1).sum();
        assert!((again - m.inertia).abs() < 1e-9 * m.inertia);
    }

    #[test]
    fn confusion_structures() {
        let model = KmeansModel {
            centroids: vec![vec![0.0], vec![10.0], vec![20.0]],
            k: 3,
            inertia: 0.0,
            inertia_history: vec![],
            iterations: 0,
            converged: true,
        };
        let perfect = vec![s(&[0.0], 5), s(&[10.0], 6), s(&[20.0], 7), s(&[1.0], 5)];
        let r = kmeans_confusion(&model, &perfect, DEFAULT_SPLIT_SHARE);
        assert_eq!(r.matrix.counts, vec![vec![2, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert!(!r.has_pathology());
        assert_eq!(r.matrix.row_sums(), vec![2, 1, 1]);

        let split = vec![s(&[0.0], 1), s(&[10.0], 1), s(&[20.0], 2), s(&[19.0], 2)];
        let r = kmeans_confusion(&model, &split, DEFAULT_SPLIT_SHARE);
        assert_eq!(r.matrix.counts[0], vec![1, 1, 0]);
        assert_eq!(r.split_classes, vec![(1, vec![0, 1])]);

        let merged = vec![s(&[0.0], 1), s(&[1.0], 2), s(&[20.0], 3)];
        let r = kmeans_confusion(&model, &merged, DEFAULT_SPLIT_SHARE);
        assert_eq!(r.shared_clusters, vec![(0, vec![1, 2])]);
    }
}
