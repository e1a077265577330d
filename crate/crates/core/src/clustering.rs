//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub sizes: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step, starting with the seeding.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Point indices in cluster `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.assignments.iter().enumerate().filter(|&(_, &a)| a == c).map(|(i, _)| i).collect()
    }
}

/// k-means on the rows of `x`, deterministic for a fixed seed.
pub fn kmeans(x: &Matrix, k: usize, seed: u64) -> Result<Clustering> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids = kmeans_pp_seeds(x, k, &mut rng)?;
    lloyd(x, centroids)
}

/// k-means++ seeding: the first centre uniformly, each next one with
/// probability proportional to the squared distance to the nearest chosen centre.
pub fn kmeans_pp_seeds<R: Rng + ?Sized>(x: &Matrix, k: usize, rng: &mut R) -> Result<Matrix> {
    let n = x.rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must be in 1..={n}")));
    }
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut d2: Vec<f64> = x.row_iter().map(|r| squared_distance(r, x.row(first))).collect();

    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            pick.expect("positive total weight")
        } else {
            // every remaining point coincides with a centre
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        for (i, r) in x.row_iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(r, x.row(next)));
        }
    }
    Ok(x.select_rows(&chosen))
}

fn assign(x: &Matrix, centroids: &Matrix) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let assignments = x
        .row_iter()
        .map(|r| {
            let (mut best, mut best_d) = (0, f64::INFINITY);
            for (c, cr) in centroids.row_iter().enumerate() {
                let d = squared_distance(r, cr);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            inertia += best_d;
            best
        })
        .collect();
    (assignments, inertia)
}

fn update_centroids(x: &Matrix, assignments: &[usize], k: usize) -> (Matrix, Vec<usize>) {
    let d = x.cols();
    let mut c = Matrix::zeros(k, d);
    let mut sizes = vec![0usize; k];
    for (r, &a) in x.row_iter().zip(assignments) {
        sizes[a] += 1;
        for (dst, v) in c.row_mut(a).iter_mut().zip(r) {
            *dst += v;
        }
    }
    for (a, &s) in sizes.iter().enumerate() {
        if s > 0 {
            c.row_mut(a).iter_mut().for_each(|v| *v /= s as f64);
        }
    }
    (c, sizes)
}

/// Moves each empty centre onto the point farthest from its own centre,
/// taking donors only from clusters with more than one member.
fn repair_empty(x: &Matrix, centroids: &mut Matrix, assignments: &mut [usize], sizes: &mut [usize]) {
    for c in 0..sizes.len() {
        if sizes[c] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &a) in assignments.iter().enumerate() {
            if sizes[a] < 2 {
                continue;
            }
            let d = squared_distance(x.row(i), centroids.row(a));
            if d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        let Some(p) = far else { return };
        sizes[assignments[p]] -= 1;
        assignments[p] = c;
        sizes[c] = 1;
        centroids.row_mut(c).copy_from_slice(x.row(p));
    }
}

/// Lloyd iterations from the given centres until the assignment stops
/// changing or `MAX_ITERATIONS` is reached.
pub fn lloyd(x: &Matrix, initial: Matrix) -> Result<Clustering> {
    let k = initial.rows();
    if k == 0 || k > x.rows() {
        return Err(Error::invalid(format!("k = {k} must be in 1..={}", x.rows())));
    }
    if initial.cols() != x.cols() {
        return Err(Error::DimensionMismatch { expected: x.cols(), got: initial.cols() });
    }
    let (mut assignments, inertia0) = assign(x, &initial);
    let mut trace = vec![inertia0];
    let mut centroids;
    let mut sizes;
    let mut converged = false;
    let mut iterations = 0;
    loop {
        (centroids, sizes) = update_centroids(x, &assignments, k);
        repair_empty(x, &mut centroids, &mut assignments, &mut sizes);
        if converged || iterations == MAX_ITERATIONS {
            break;
        }
        let (next, inertia) = assign(x, &centroids);
        trace.push(inertia);
        iterations += 1;
        converged = next == assignments;
        assignments = next;
    }
    let inertia = x.row_iter().zip(&assignments).map(|(r, &a)| squared_distance(r, centroids.row(a))).sum();
    Ok(Clustering { assignments, centroids, sizes, inertia, inertia_trace: trace, iterations, converged })
}

/// Member of `cluster` closest to its centroid; ties go to the lowest index.
pub fn closest_to_centroid(x: &Matrix, clustering: &Clustering, cluster: usize) -> Result<usize> {
    if cluster >= clustering.k() {
        return Err(Error::invalid(format!("cluster {cluster} out of range")));
    }
    let centre = clustering.centroids.row(cluster);
    let mut best: Option<(usize, f64)> = None;
    for (i, &a) in clustering.assignments.iter().enumerate() {
        if a != cluster {
            continue;
        }
        let d = squared_distance(x.row(i), centre);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| Error::invalid(format!("cluster {cluster} is empty")))
}
