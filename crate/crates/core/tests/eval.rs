use std::io::BufReader;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use subscode::eval::{export_scaled, nearest_neighbors};
use subscode::scode::project_to_sphere;
use subscode::WordVectors;

fn unit_table(n: usize, dim: usize, seed: u64) -> WordVectors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        data.extend(project_to_sphere(&v).unwrap());
    }
    WordVectors::new((0..n).map(|i| format!("w{i}")).collect(), dim, data).unwrap()
}

fn ranking(v: &WordVectors, word: &str, k: usize) -> Vec<u32> {
    nearest_neighbors(v, word, k)
        .unwrap()
        .neighbors
        .into_iter()
        .map(|n| n.0)
        .collect()
}

#[test]
fn neighbors_match_brute_force() {
    let v = unit_table(300, 6, 1);
    for q in (0..300).step_by(17) {
        let query = v.vector(q);
        let mut all: Vec<(f64, u32)> = (0..300u32)
            .filter(|&i| i != q)
            .map(|i| {
                let d: f64 = query
                    .iter()
                    .zip(v.vector(i))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                (d, i)
            })
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want: Vec<u32> = all.iter().take(10).map(|p| p.1).collect();
        assert_eq!(ranking(&v, &format!("w{q}"), 10), want);
    }
}

#[test]
fn cosine_and_distance_rank_alike_on_the_sphere() {
    let v = unit_table(200, 5, 2);
    for q in 0..20u32 {
        let query = v.vector(q);
        let mut by_cos: Vec<(f64, u32)> = (0..200u32)
            .filter(|&i| i != q)
            .map(|i| {
                (
                    -query
                        .iter()
                        .zip(v.vector(i))
                        .map(|(a, b)| a * b)
                        .sum::<f64>(),
                    i,
                )
            })
            .collect();
        by_cos.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want: Vec<u32> = by_cos.iter().take(15).map(|p| p.1).collect();
        assert_eq!(ranking(&v, &format!("w{q}"), 15), want);
    }
}

#[test]
fn exported_scaled_file_preserves_rankings() {
    let v = unit_table(150, 8, 3);
    let mut plain = Vec::new();
    export_scaled(&v, 1.0, &mut plain).unwrap();
    let mut scaled = Vec::new();
    export_scaled(&v, 0.1, &mut scaled).unwrap();
    let mut direct = Vec::new();
    v.write(&mut direct, 1.0).unwrap();
    assert_eq!(plain, direct);
    let a = WordVectors::read(BufReader::new(&plain[..]), "plain").unwrap();
    let b = WordVectors::read(BufReader::new(&scaled[..]), "scaled").unwrap();
    for q in (0..150).step_by(7) {
        let w = format!("w{q}");
        assert_eq!(ranking(&a, &w, 20), ranking(&b, &w, 20));
    }
}

proptest! {
    #[test]
    fn uniform_scaling_preserves_order(seed in any::<u64>(), sigma in 0.01f64..100.0) {
        let v = unit_table(40, 4, seed);
        let data: Vec<f64> = (0..40u32).flat_map(|i| v.vector(i).iter().map(|x| x * sigma).collect::<Vec<_>>()).collect();
        let s = WordVectors::new(v.words().to_vec(), 4, data).unwrap();
        for q in 0..5 {
            let w = format!("w{q}");
            prop_assert_eq!(ranking(&v, &w, 39), ranking(&s, &w, 39));
        }
    }
}
