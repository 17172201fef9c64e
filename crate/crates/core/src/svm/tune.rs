//! Hyperparameter selection by exhaustive grid search over (sigma, C) with
//! stratified k-fold cross validation.
//!
//! All trainings for one sigma share a kernel matrix derived from a cached
//! squared-distance matrix, so the grid search costs little more than the SMO
//! solves themselves. Fold assignment uses a fixed seeded shuffle and is fully
//! reproducible.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{real, Vec2};

use super::smo::{self, SmoSettings};

/// Logarithmically spaced grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (llo, lhi) = (real::ln(lo), real::ln(hi));
    (0..count)
        .map(|i| real::exp(llo + (lhi - llo) * i as f64 / (count - 1) as f64))
        .collect()
}

/// Stratified fold assignment: per-class seeded shuffle, then round-robin.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    /// Fold index per training point.
    pub assignment: Vec<usize>,
    pub folds: usize,
}

impl FoldPlan {
    pub fn stratified(labels: &[i8], folds: usize, seed: u64) -> Result<FoldPlan> {
        if folds < 2 {
            return Err(Error::Parameter(format!("need at least 2 folds, got {folds}")));
        }
        if labels.len() < folds {
            return Err(Error::Training(format!(
                "{} points cannot fill {folds} folds",
                labels.len()
            )));
        }
        // a fold's training complement must keep both classes
        for class in [1i8, -1] {
            let m = labels.iter().filter(|&&y| y == class).count();
            if m < 2 {
                return Err(Error::Training(format!(
                    "class {class} has {m} members; cross validation needs at least 2"
                )));
            }
        }
        let mut attempt_seed = seed;
        for _ in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
            let mut assignment = vec![0usize; labels.len()];
            for class in [1i8, -1] {
                let mut idx: Vec<usize> = (0..labels.len())
                    .filter(|&i| labels[i] == class)
                    .collect();
                idx.shuffle(&mut rng);
                for (k, &i) in idx.iter().enumerate() {
                    assignment[i] = k % folds;
                }
            }
            let plan = FoldPlan { assignment, folds };
            if plan.training_sets_have_both_classes(labels) {
                return Ok(plan);
            }
            attempt_seed = attempt_seed.wrapping_add(1);
        }
        Err(Error::Training(
            "could not build folds whose training sets keep both classes".into(),
        ))
    }

    fn training_sets_have_both_classes(&self, labels: &[i8]) -> bool {
        for fold in 0..self.folds {
            let mut pos = false;
            let mut neg = false;
            for (i, &f) in self.assignment.iter().enumerate() {
                if f != fold {
                    pos |= labels[i] == 1;
                    neg |= labels[i] == -1;
                }
            }
            if !(pos && neg) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneResult {
    pub sigma: f64,
    pub c: f64,
    /// Mean misclassification rate across folds at the returned pair.
    pub cv_loss: f64,
}

struct DistanceMatrix {
    d2: Vec<f64>,
}

impl DistanceMatrix {
    fn new(points: &[Vec2]) -> Self {
        let n = points.len();
        let mut d2 = vec![0.0f64; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = points[i].dist(points[j]).powi(2);
                d2[i * n + j] = v;
                d2[j * n + i] = v;
            }
        }
        DistanceMatrix { d2 }
    }

    fn kernel(&self, sigma: f64, out: &mut Vec<f64>) {
        let inv = -1.0 / (2.0 * sigma * sigma);
        out.clear();
        out.extend(self.d2.iter().map(|&d| real::exp(d * inv)));
    }
}

/// Mean CV misclassification of one (sigma, C) pair under a fixed fold plan.
/// `kernel_full` must be the full n x n kernel at `sigma`.
fn fold_loss(
    kernel_full: &[f64],
    n: usize,
    labels: &[i8],
    plan: &FoldPlan,
    c: f64,
    settings: &SmoSettings,
) -> Result<f64> {
    let mut total = 0.0;
    for fold in 0..plan.folds {
        let train: Vec<usize> = (0..n).filter(|&i| plan.assignment[i] != fold).collect();
        let test: Vec<usize> = (0..n).filter(|&i| plan.assignment[i] == fold).collect();
        if test.is_empty() {
            continue;
        }
        let nt = train.len();
        let mut k_train = Vec::with_capacity(nt * nt);
        for &i in &train {
            let row = &kernel_full[i * n..(i + 1) * n];
            for &j in &train {
                k_train.push(row[j]);
            }
        }
        let y_train: Vec<i8> = train.iter().map(|&i| labels[i]).collect();
        let (alpha, bias, _) = smo::solve(&k_train, &y_train, c, settings)?;

        let mut errors = 0usize;
        for &t in &test {
            let row = &kernel_full[t * n..(t + 1) * n];
            let mut f = bias;
            for (ai, &i) in alpha.iter().zip(&train) {
                if *ai > 0.0 {
                    f += ai * labels[i] as f64 * row[i];
                }
            }
            if (f >= 0.0) != (labels[t] > 0) {
                errors += 1;
            }
        }
        total += errors as f64 / test.len() as f64;
    }
    Ok(total / plan.folds as f64)
}

fn pick_best(results: &[(f64, f64, Result<f64>)]) -> Result<TuneResult> {
    let mut best: Option<TuneResult> = None;
    let mut failures = 0usize;
    for (sigma, c, loss) in results {
        let loss = match loss {
            Ok(l) => *l,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let better = match &best {
            None => true,
            // ties prefer smaller C, then smaller sigma
            Some(b) => {
                loss < b.cv_loss
                    || (loss == b.cv_loss && (*c < b.c || (*c == b.c && *sigma < b.sigma)))
            }
        };
        if better {
            best = Some(TuneResult { sigma: *sigma, c: *c, cv_loss: loss });
        }
    }
    best.ok_or_else(|| {
        Error::Convergence(format!(
            "all {failures} grid points failed to converge during cross validation"
        ))
    })
}

/// Exhaustive grid search minimizing the mean k-fold misclassification rate.
/// Grid points whose SMO solve does not converge are skipped; if every point
/// fails, a convergence error is returned.
pub fn tune_hyperparameters(
    points: &[Vec2],
    labels: &[i8],
    sigma_grid: &[f64],
    c_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<TuneResult> {
    validate_grids(points, labels, sigma_grid, c_grid)?;
    let plan = FoldPlan::stratified(labels, folds, seed)?;
    let settings = SmoSettings::cross_validation();
    let dist = DistanceMatrix::new(points);
    let n = points.len();

    let mut results = Vec::with_capacity(sigma_grid.len() * c_grid.len());
    let mut kernel = Vec::new();
    for &sigma in sigma_grid {
        dist.kernel(sigma, &mut kernel);
        for &c in c_grid {
            let loss = fold_loss(&kernel, n, labels, &plan, c, &settings);
            results.push((sigma, c, loss));
        }
    }
    pick_best(&results)
}

/// Threaded variant of [`tune_hyperparameters`]: the C axis of the grid is
/// spread over `threads` scoped workers. Results are identical to the serial
/// path for any thread count.
#[cfg(feature = "std")]
pub fn tune_hyperparameters_threaded(
    points: &[Vec2],
    labels: &[i8],
    sigma_grid: &[f64],
    c_grid: &[f64],
    folds: usize,
    seed: u64,
    threads: usize,
) -> Result<TuneResult> {
    if threads <= 1 {
        return tune_hyperparameters(points, labels, sigma_grid, c_grid, folds, seed);
    }
    validate_grids(points, labels, sigma_grid, c_grid)?;
    let plan = FoldPlan::stratified(labels, folds, seed)?;
    let settings = SmoSettings::cross_validation();
    let dist = DistanceMatrix::new(points);
    let n = points.len();

    let mut results = Vec::with_capacity(sigma_grid.len() * c_grid.len());
    let mut kernel = Vec::new();
    for &sigma in sigma_grid {
        dist.kernel(sigma, &mut kernel);
        let kernel_ref = &kernel;
        let plan_ref = &plan;
        let settings_ref = &settings;
        let mut sigma_results: Vec<(f64, f64, Result<f64>)> = std::thread::scope(|scope| {
            let chunk = c_grid.len().div_ceil(threads);
            let handles: Vec<_> = c_grid
                .chunks(chunk)
                .map(|cs| {
                    scope.spawn(move || {
                        cs.iter()
                            .map(|&c| {
                                let loss = fold_loss(
                                    kernel_ref, n, labels, plan_ref, c, settings_ref,
                                );
                                (sigma, c, loss)
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
        });
        results.append(&mut sigma_results);
    }
    pick_best(&results)
}

fn validate_grids(
    points: &[Vec2],
    labels: &[i8],
    sigma_grid: &[f64],
    c_grid: &[f64],
) -> Result<()> {
    if sigma_grid.is_empty() || c_grid.is_empty() {
        return Err(Error::Parameter("hyperparameter grids must be nonempty".into()));
    }
    if sigma_grid.iter().chain(c_grid).any(|&v| !(v > 0.0)) {
        return Err(Error::Parameter("grid values must be positive".into()));
    }
    if points.len() != labels.len() {
        return Err(Error::Training("points and labels differ in length".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn separable_set(n_per: usize, seed: u64) -> (Vec<Vec2>, Vec<i8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_per {
            points.push(Vec2::new(rng.gen_range(-1.0..-0.3), rng.gen_range(-1.0..1.0)));
            labels.push(-1i8);
            points.push(Vec2::new(rng.gen_range(0.3..1.0), rng.gen_range(-1.0..1.0)));
            labels.push(1i8);
        }
        (points, labels)
    }

    #[test]
    fn log_grid_endpoints_and_monotone() {
        let g = log_grid(0.1, 1e4, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 0.1).abs() < 1e-12);
        assert!((g[6] - 1e4).abs() < 1e-8);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn separable_data_reaches_zero_cv_loss() {
        let (points, labels) = separable_set(25, 2);
        let r = tune_hyperparameters(&points, &labels, &[0.3, 0.6], &[10.0, 1000.0], 5, 42)
            .unwrap();
        assert_eq!(r.cv_loss, 0.0);
    }

    #[test]
    fn single_pair_grid_returns_that_pair() {
        let (points, labels) = separable_set(15, 3);
        let r = tune_hyperparameters(&points, &labels, &[0.5], &[10.0], 4, 42).unwrap();
        assert_eq!(r.sigma, 0.5);
        assert_eq!(r.c, 10.0);
        assert!(r.cv_loss >= 0.0);
    }

    #[test]
    fn noisy_labels_keep_cv_loss_moderate() {
        let (points, mut labels) = separable_set(60, 4);
        // flip 5% of the labels deterministically
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = labels.len();
        for _ in 0..(n / 20) {
            let i = rng.gen_range(0..n);
            labels[i] = -labels[i];
        }
        let sig = log_grid(0.1, 2.0, 4);
        let cs = log_grid(0.1, 1e3, 4);
        let r = tune_hyperparameters(&points, &labels, &sig, &cs, 5, 42).unwrap();
        assert!(r.cv_loss <= 0.10, "cv loss {}", r.cv_loss);
    }

    #[test]
    fn fold_plan_is_stratified_and_deterministic() {
        let labels: Vec<i8> = (0..40).map(|i| if i < 30 { 1 } else { -1 }).collect();
        let a = FoldPlan::stratified(&labels, 5, 42).unwrap();
        let b = FoldPlan::stratified(&labels, 5, 42).unwrap();
        assert_eq!(a.assignment, b.assignment);
        for fold in 0..5 {
            let pos = (0..40).filter(|&i| a.assignment[i] == fold && labels[i] == 1).count();
            let neg = (0..40).filter(|&i| a.assignment[i] == fold && labels[i] == -1).count();
            assert_eq!(pos, 6);
            assert!(neg >= 2, "fold {fold}: {neg} negatives");
        }
    }

    #[test]
    fn tiny_class_is_rejected() {
        let labels = [1i8, 1, 1, 1, -1];
        assert!(matches!(
            FoldPlan::stratified(&labels, 3, 42),
            Err(Error::Training(_))
        ));
    }

    #[cfg(feature = "std")]
    #[test]
    fn threaded_matches_serial() {
        let (points, labels) = separable_set(20, 6);
        let sig = [0.3, 0.8];
        let cs = [1.0, 50.0, 500.0];
        let serial = tune_hyperparameters(&points, &labels, &sig, &cs, 4, 42).unwrap();
        let par = tune_hyperparameters_threaded(&points, &labels, &sig, &cs, 4, 42, 3).unwrap();
        assert_eq!(serial, par);
    }
}
