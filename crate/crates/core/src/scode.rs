//! Spherical co-occurrence data embedding.
//!
//! Word types `x` and substitutes `y` get unit vectors `phi(x)` and `psi(y)`
//! under the model
//!
//! ```text
//! p(x, y) = p̄(x) p̄(y) exp(-|phi(x) - psi(y)|²) / Z
//! ```
//!
//! The exact routines enumerate all `|X| * |Y|` pairs and are meant for
//! small instances. [`train`] is the stochastic trainer: one attraction
//! update per observed pair and one repulsion update per noise pair drawn
//! from `p̄(x) p̄(y)`, with `Z` replaced by a constant.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::discretize::CooccurrencePair;
use crate::error::{Error, Result};

/// Empirical joint and marginal frequencies of a pair sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    px: Vec<f64>,
    py: Vec<f64>,
    pxy: BTreeMap<(u32, u32), f64>,
    n: u64,
}

impl EmpiricalDistribution {
    /// Frequencies over `x in 0..n_x`, `y in 0..n_y`.
    pub fn from_pairs(pairs: &[CooccurrencePair], n_x: usize, n_y: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("no co-occurrence pairs".into()));
        }
        let mut joint: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        let mut cx = vec![0u64; n_x];
        let mut cy = vec![0u64; n_y];
        for p in pairs {
            if p.x as usize >= n_x {
                return Err(Error::UnknownId(p.x));
            }
            if p.y as usize >= n_y {
                return Err(Error::UnknownId(p.y));
            }
            *joint.entry((p.x, p.y)).or_insert(0) += 1;
            cx[p.x as usize] += 1;
            cy[p.y as usize] += 1;
        }
        let n = pairs.len() as u64;
        let freq = |c: u64| c as f64 / n as f64;
        Ok(EmpiricalDistribution {
            px: cx.into_iter().map(freq).collect(),
            py: cy.into_iter().map(freq).collect(),
            pxy: joint.into_iter().map(|(k, c)| (k, freq(c))).collect(),
            n,
        })
    }

    /// Sizes taken from the largest ids present.
    pub fn from_pairs_auto(pairs: &[CooccurrencePair]) -> Result<Self> {
        let n_x = pairs.iter().map(|p| p.x as usize + 1).max().unwrap_or(0);
        let n_y = pairs.iter().map(|p| p.y as usize + 1).max().unwrap_or(0);
        Self::from_pairs(pairs, n_x, n_y)
    }

    pub fn px(&self) -> &[f64] {
        &self.px
    }

    pub fn py(&self) -> &[f64] {
        &self.py
    }

    pub fn pxy(&self, x: u32, y: u32) -> f64 {
        self.pxy.get(&(x, y)).copied().unwrap_or(0.0)
    }

    /// Nonzero joint entries in `(x, y)` order.
    pub fn joint(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.pxy.iter().map(|(&k, &v)| (k, v))
    }

    pub fn n_pairs(&self) -> u64 {
        self.n
    }

    pub fn n_x(&self) -> usize {
        self.px.len()
    }

    pub fn n_y(&self) -> usize {
        self.py.len()
    }
}

/// Unit vectors for both sides, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl EmbeddingSet {
    /// Builds a set from raw rows. Rows are not normalized here.
    pub fn from_rows(dim: usize, phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("scode.d", "must be at least 1"));
        }
        if !phi.len().is_multiple_of(dim) || !psi.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                left: phi.len(),
                right: dim,
            });
        }
        Ok(EmbeddingSet { dim, phi, psi })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_x(&self) -> usize {
        self.phi.len() / self.dim
    }

    pub fn n_y(&self) -> usize {
        self.psi.len() / self.dim
    }

    pub fn phi(&self, x: u32) -> &[f64] {
        let d = self.dim;
        &self.phi[x as usize * d..(x as usize + 1) * d]
    }

    pub fn psi(&self, y: u32) -> &[f64] {
        let d = self.dim;
        &self.psi[y as usize * d..(y as usize + 1) * d]
    }

    pub fn phi_mut(&mut self, x: u32) -> &mut [f64] {
        let d = self.dim;
        &mut self.phi[x as usize * d..(x as usize + 1) * d]
    }

    pub fn psi_mut(&mut self, y: u32) -> &mut [f64] {
        let d = self.dim;
        &mut self.psi[y as usize * d..(y as usize + 1) * d]
    }

    pub fn phi_rows(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi_rows(&self) -> &[f64] {
        &self.psi
    }

    /// All vector norms, phi first.
    pub fn norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.phi
            .chunks(self.dim)
            .chain(self.psi.chunks(self.dim))
            .map(norm)
    }

    pub fn distance2(&self, x: u32, y: u32) -> f64 {
        sq_dist(self.phi(x), self.psi(y))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `sum_i (u_i - v_i)²`.
pub fn squared_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(sq_dist(u, v))
}

/// `v / |v|`.
pub fn project_to_sphere(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if !(n > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|a| a / n).collect())
}

/// Normalizes in place. A zero or non-finite result leaves `v` at `fallback`.
fn renormalize(v: &mut [f64], fallback: &[f64]) {
    let n = norm(v);
    if n > 0.0 && n.is_finite() {
        v.iter_mut().for_each(|a| *a /= n);
    } else {
        v.copy_from_slice(fallback);
    }
}

/// Draws every vector uniformly on the sphere (Gaussian components, then
/// normalized).
pub fn init_embeddings(n_x: usize, n_y: usize, dim: usize, seed: u64) -> Result<EmbeddingSet> {
    if dim == 0 {
        return Err(Error::config("scode.d", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| {
        let mut rows = Vec::with_capacity(count * dim);
        for _ in 0..count {
            loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                if let Ok(u) = project_to_sphere(&v) {
                    rows.extend(u);
                    break;
                }
            }
        }
        rows
    };
    let phi = draw(n_x);
    let psi = draw(n_y);
    EmbeddingSet::from_rows(dim, phi, psi)
}

/// `Z = sum_{x,y} p̄(x) p̄(y) exp(-d²(x, y))`.
pub fn partition_function(emb: &EmbeddingSet, emp: &EmpiricalDistribution) -> f64 {
    let mut z = 0.0;
    for (x, &px) in emp.px.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, &py) in emp.py.iter().enumerate() {
            if py == 0.0 {
                continue;
            }
            z += px * py * (-emb.distance2(x as u32, y as u32)).exp();
        }
    }
    z
}

/// `sum_{x,y} p̄(x,y) ln p(x,y)` with the exact normalizer.
pub fn exact_log_likelihood(emb: &EmbeddingSet, emp: &EmpiricalDistribution) -> f64 {
    let ln_z = partition_function(emb, emp).ln();
    emp.joint()
        .map(|((x, y), p)| {
            let model =
                emp.px[x as usize].ln() + emp.py[y as usize].ln() - emb.distance2(x, y) - ln_z;
            p * model
        })
        .sum()
}

/// Gradient of [`exact_log_likelihood`] with respect to every vector,
/// laid out like the embedding rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Exact gradient. The attraction term is `2 p̄(x,y) (psi - phi)`; the
/// repulsion term, from `-ln Z`, is `(2 / Z) p̄(x) p̄(y) (phi - psi) exp(-d²)`.
pub fn exact_gradient(emb: &EmbeddingSet, emp: &EmpiricalDistribution) -> Gradient {
    let d = emb.dim;
    let mut g = Gradient {
        phi: vec![0.0; emb.phi.len()],
        psi: vec![0.0; emb.psi.len()],
    };
    for ((x, y), p) in emp.joint() {
        let (u, v) = (emb.phi(x), emb.psi(y));
        for i in 0..d {
            let diff = v[i] - u[i];
            g.phi[x as usize * d + i] += 2.0 * p * diff;
            g.psi[y as usize * d + i] -= 2.0 * p * diff;
        }
    }
    let z = partition_function(emb, emp);
    for (x, &px) in emp.px.iter().enumerate() {
        for (y, &py) in emp.py.iter().enumerate() {
            if px == 0.0 || py == 0.0 {
                continue;
            }
            let (u, v) = (emb.phi(x as u32), emb.psi(y as u32));
            let w = 2.0 / z * px * py * (-sq_dist(u, v)).exp();
            for i in 0..d {
                let diff = u[i] - v[i];
                g.phi[x * d + i] += w * diff;
                g.psi[y * d + i] -= w * diff;
            }
        }
    }
    g
}

/// Full-batch projected gradient ascent with the exact normalizer.
/// Returns the log-likelihood before the first step and after each step.
pub fn exact_ascent(
    emb: &mut EmbeddingSet,
    emp: &EmpiricalDistribution,
    step: f64,
    iterations: usize,
) -> Vec<f64> {
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(exact_log_likelihood(emb, emp));
    let d = emb.dim;
    for _ in 0..iterations {
        let g = exact_gradient(emb, emp);
        for (rows, grad) in [(&mut emb.phi, &g.phi), (&mut emb.psi, &g.psi)] {
            for (row, grow) in rows.chunks_mut(d).zip(grad.chunks(d)) {
                let old = row.to_vec();
                row.iter_mut().zip(grow).for_each(|(a, b)| *a += step * b);
                renormalize(row, &old);
            }
        }
        trace.push(exact_log_likelihood(emb, emp));
    }
    trace
}

/// Default normalizer approximation.
pub const DEFAULT_Z: f64 = 0.166;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub z_constant: f64,
    pub lambda0: f64,
    pub nu: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 50,
            z_constant: DEFAULT_Z,
            lambda0: 0.5,
            nu: 50.0,
            epochs: 20,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::config("scode.d", "must be at least 1"));
        }
        if !(self.z_constant > 0.0) || !self.z_constant.is_finite() {
            return Err(Error::config("scode.z_constant", "must be positive"));
        }
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return Err(Error::config("scode.lambda0", "must be positive"));
        }
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::config("scode.nu", "must be positive"));
        }
        Ok(())
    }

    /// Step size after `updates` previous updates of the same vector.
    pub fn step_size(&self, updates: u64) -> f64 {
        self.lambda0 * self.nu / (self.nu + updates as f64)
    }
}

/// Step sizes for the four vectors touched by one update:
/// `phi(x)`, `psi(y)`, `phi(x')`, `psi(y')`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSizes(pub [f64; 4]);

fn apply_step(
    emb: &mut EmbeddingSet,
    pair: CooccurrencePair,
    noise: CooccurrencePair,
    z_constant: f64,
    rates: StepSizes,
) {
    let d = emb.dim;
    let [a_phi, a_psi, r_phi, r_psi] = rates.0;

    // Attraction pulls phi(x) and psi(y) together.
    let (px, py) = (pair.x as usize * d, pair.y as usize * d);
    let old_phi = emb.phi[px..px + d].to_vec();
    let old_psi = emb.psi[py..py + d].to_vec();
    for i in 0..d {
        let diff = old_psi[i] - old_phi[i];
        emb.phi[px + i] += a_phi * 2.0 * diff;
        emb.psi[py + i] -= a_psi * 2.0 * diff;
    }
    renormalize(&mut emb.phi[px..px + d], &old_phi);
    renormalize(&mut emb.psi[py..py + d], &old_psi);

    // Repulsion pushes the noise pair apart.
    let (nx, ny) = (noise.x as usize * d, noise.y as usize * d);
    let old_phi = emb.phi[nx..nx + d].to_vec();
    let old_psi = emb.psi[ny..ny + d].to_vec();
    let w = (-sq_dist(&old_phi, &old_psi)).exp() / z_constant;
    for i in 0..d {
        let diff = old_phi[i] - old_psi[i];
        emb.phi[nx + i] += r_phi * w * diff;
        emb.psi[ny + i] -= r_psi * w * diff;
    }
    renormalize(&mut emb.phi[nx..nx + d], &old_phi);
    renormalize(&mut emb.psi[ny..ny + d], &old_psi);
}

/// One stochastic update with a single step size for all touched vectors.
pub fn sgd_step(
    emb: &mut EmbeddingSet,
    pair: CooccurrencePair,
    noise: CooccurrencePair,
    config: &TrainConfig,
    step: f64,
) -> Result<()> {
    for (x, y) in [(pair.x, pair.y), (noise.x, noise.y)] {
        if x as usize >= emb.n_x() {
            return Err(Error::UnknownId(x));
        }
        if y as usize >= emb.n_y() {
            return Err(Error::UnknownId(y));
        }
    }
    if step != 0.0 {
        apply_step(emb, pair, noise, config.z_constant, StepSizes([step; 4]));
    }
    Ok(())
}

/// Enumerating `Z` costs `|X| * |Y|`; beyond this the trainer skips it.
pub const EXACT_LIKELIHOOD_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub embeddings: EmbeddingSet,
    /// Exact log-likelihood at initialization, for enumerable instances.
    pub initial_log_likelihood: Option<f64>,
    pub final_log_likelihood: Option<f64>,
    pub steps: u64,
}

/// Stochastic training over `epochs` passes of one seeded shuffle of the
/// pairs. Each observed pair is followed by a noise pair whose `x'` and `y'`
/// are drawn independently from the empirical marginals. Each vector keeps
/// its own update counter for the step-size schedule.
pub fn train(
    pairs: &[CooccurrencePair],
    n_x: usize,
    n_y: usize,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no co-occurrence pairs".into()));
    }
    if let Some(p) = pairs
        .iter()
        .find(|p| p.x as usize >= n_x || p.y as usize >= n_y)
    {
        return Err(Error::UnknownId(if p.x as usize >= n_x {
            p.x
        } else {
            p.y
        }));
    }

    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let init_seed: u64 = seeder.random();
    let order_seed: u64 = seeder.random();
    let noise_seed: u64 = seeder.random();

    let mut emb = init_embeddings(n_x, n_y, config.dim, init_seed)?;
    let emp = (n_x.saturating_mul(n_y) <= EXACT_LIKELIHOOD_LIMIT)
        .then(|| EmpiricalDistribution::from_pairs(pairs, n_x, n_y))
        .transpose()?;
    let initial_log_likelihood = emp.as_ref().map(|e| exact_log_likelihood(&emb, e));

    let mut order: Vec<u32> = (0..pairs.len() as u32).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(order_seed));

    let mut noise_rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut phi_updates = vec![0u64; n_x];
    let mut psi_updates = vec![0u64; n_y];
    let mut steps = 0u64;
    let n = pairs.len();
    for _ in 0..config.epochs {
        for &i in &order {
            let pair = pairs[i as usize];
            let noise = CooccurrencePair {
                x: pairs[noise_rng.random_range(0..n)].x,
                y: pairs[noise_rng.random_range(0..n)].y,
            };
            let rate = |counter: &mut u64| {
                let r = config.step_size(*counter);
                *counter += 1;
                r
            };
            let rates = StepSizes([
                rate(&mut phi_updates[pair.x as usize]),
                rate(&mut psi_updates[pair.y as usize]),
                rate(&mut phi_updates[noise.x as usize]),
                rate(&mut psi_updates[noise.y as usize]),
            ]);
            apply_step(&mut emb, pair, noise, config.z_constant, rates);
            steps += 1;
        }
    }

    let final_log_likelihood = emp.as_ref().map(|e| exact_log_likelihood(&emb, e));
    Ok(TrainOutcome {
        embeddings: emb,
        initial_log_likelihood,
        final_log_likelihood,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(x: u32, y: u32) -> CooccurrencePair {
        CooccurrencePair { x, y }
    }

    #[test]
    fn marginals_of_two_pairs() {
        let e = EmpiricalDistribution::from_pairs_auto(&[pair(0, 0), pair(0, 1)]).unwrap();
        assert_eq!(e.px(), [1.0]);
        assert_eq!(e.py(), [0.5, 0.5]);
        assert_eq!(e.pxy(0, 0), 0.5);
        assert_eq!(e.pxy(0, 1), 0.5);
    }

    #[test]
    fn single_pair_is_a_point_mass() {
        let e = EmpiricalDistribution::from_pairs_auto(&[pair(0, 0)]).unwrap();
        assert_eq!((e.px(), e.py(), e.pxy(0, 0)), (&[1.0][..], &[1.0][..], 1.0));
        assert!(EmpiricalDistribution::from_pairs_auto(&[]).is_err());
    }

    #[test]
    fn squared_distance_examples() {
        assert_eq!(squared_distance(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(squared_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 4.0);
        assert_eq!(squared_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!(squared_distance(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = project_to_sphere(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.8, epsilon = 1e-15);
        assert_eq!(project_to_sphere(&[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);
        assert!(matches!(
            project_to_sphere(&[0.0, 0.0]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn collapsed_embedding_likelihood() {
        let pairs = [pair(0, 0), pair(0, 1), pair(1, 0), pair(1, 1)];
        let e = EmpiricalDistribution::from_pairs_auto(&pairs).unwrap();
        let emb =
            EmbeddingSet::from_rows(2, vec![1.0, 0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(partition_function(&emb, &e), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            exact_log_likelihood(&emb, &e),
            -1.386_294_361_119_89,
            epsilon = 1e-12
        );
    }

    #[test]
    fn one_by_one_gradient_vanishes() {
        // With a single x and y the likelihood is identically zero.
        let e = EmpiricalDistribution::from_pairs_auto(&[pair(0, 0)]).unwrap();
        for (phi, psi) in [([1.0, 0.0], [1.0, 0.0]), ([1.0, 0.0], [0.0, 1.0])] {
            let emb = EmbeddingSet::from_rows(2, phi.to_vec(), psi.to_vec()).unwrap();
            assert_abs_diff_eq!(exact_log_likelihood(&emb, &e), 0.0, epsilon = 1e-15);
            let g = exact_gradient(&emb, &e);
            for v in g.phi.iter().chain(&g.psi) {
                assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn init_is_unit_and_seeded() {
        let a = init_embeddings(20, 30, 7, 5).unwrap();
        assert!(a.norms().all(|n| (n - 1.0).abs() < 1e-12));
        assert_eq!(a, init_embeddings(20, 30, 7, 5).unwrap());
        assert_ne!(a, init_embeddings(20, 30, 7, 6).unwrap());
        assert!(init_embeddings(1, 1, 0, 5).is_err());
    }

    #[test]
    fn zero_step_leaves_embeddings_unchanged() {
        let mut emb = init_embeddings(3, 3, 4, 1).unwrap();
        let before = emb.clone();
        let cfg = TrainConfig::default();
        sgd_step(&mut emb, pair(0, 1), pair(2, 2), &cfg, 0.0).unwrap();
        assert_eq!(emb, before);
        assert!(sgd_step(&mut emb, pair(3, 1), pair(2, 2), &cfg, 0.1).is_err());
    }

    #[test]
    fn steps_keep_unit_norm() {
        let mut emb = init_embeddings(4, 4, 3, 2).unwrap();
        let cfg = TrainConfig::default();
        for t in 0..200u32 {
            sgd_step(
                &mut emb,
                pair(t % 4, (t / 2) % 4),
                pair((t / 3) % 4, t % 4),
                &cfg,
                0.3,
            )
            .unwrap();
            assert!(emb.norms().all(|n| (n - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let cfg = TrainConfig {
            epochs: 0,
            dim: 3,
            ..TrainConfig::default()
        };
        let pairs = [pair(0, 1), pair(1, 0)];
        let out = train(&pairs, 2, 2, &cfg).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.initial_log_likelihood, out.final_log_likelihood);
        let again = train(&pairs, 2, 2, &cfg).unwrap();
        assert_eq!(out.embeddings, again.embeddings);
    }

    #[test]
    fn config_validation_names_keys() {
        let bad = TrainConfig {
            z_constant: 0.0,
            ..TrainConfig::default()
        };
        let err = train(&[pair(0, 0)], 1, 1, &bad).unwrap_err();
        assert!(err.to_string().contains("scode.z_constant"));
        let bad = TrainConfig {
            dim: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("scode.d"));
    }

    #[test]
    fn step_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.step_size(0), 0.5);
        assert_abs_diff_eq!(cfg.step_size(50), 0.25, epsilon = 1e-15);
    }
}
