use std::sync::OnceLock;

use adasa_core::conditions::{check_ebc, ebc_points, estimate_ebc, EbcOptions};
use adasa_core::linalg::dist2;
use adasa_core::problems::{registry, SharedProblem, StochasticProblem};
use adasa_core::rng::stream;
use proptest::prelude::*;

fn instances() -> &'static [SharedProblem] {
    static CELL: OnceLock<Vec<SharedProblem>> = OnceLock::new();
    CELL.get_or_init(|| registry().unwrap())
}

/// Grid over the bounding box of `W` at spacing `h`, restricted to `W`.
/// The excess threshold for "optimal" grid points must stay tiny: on the
/// quartic a gap of ε admits points up to ε^(1/4) away from the minimizer.
fn grid(p: &dyn StochasticProblem, h: f64) -> Vec<Vec<f64>> {
    let d = p.meta().d;
    let r = p.meta().diameter_r;
    let k = (2.0 * r / h).round() as usize;
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let w: Vec<f64> = idx.iter().map(|&i| -r + h * i as f64).collect();
        if p.set().violation(&w) <= 1e-12 {
            out.push(w);
        }
        let mut j = 0;
        while j < d {
            idx[j] += 1;
            if idx[j] <= k {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == d {
            return out;
        }
    }
}

#[test]
fn distance_to_optimal_matches_grid_search() {
    for p in instances().iter().filter(|p| p.meta().d <= 3) {
        let h = if p.meta().d == 1 { 1e-4 } else { 1e-3 };
        let g = grid(p.as_ref(), h);
        let excess: Vec<f64> = g.iter().map(|w| p.excess_risk(w).unwrap()).collect();
        let floor = excess
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let optimal: Vec<&Vec<f64>> = g
            .iter()
            .zip(&excess)
            .filter(|(_, e)| **e <= floor + 1e-13)
            .map(|(w, _)| w)
            .collect();
        let mut rng = stream(5, 0);
        for _ in 0..50 {
            let x = p.set().sample_uniform(&mut rng).unwrap();
            let brute = optimal
                .iter()
                .map(|w| dist2(w, &x))
                .fold(f64::INFINITY, f64::min);
            let exact = p.distance_to_optimal(&x).unwrap();
            assert!(
                (brute - exact).abs() <= 2e-3,
                "{}: grid {brute} vs {exact} at {x:?}",
                p.name()
            );
        }
    }
}

#[test]
fn own_ebc_metadata_has_no_violations() {
    for (i, p) in instances().iter().enumerate() {
        let e = p.meta().ebc.unwrap();
        let pts = ebc_points(p.as_ref(), 100_000, &mut stream(21, i as u64)).unwrap();
        let v = check_ebc(p.as_ref(), e.theta, e.alpha, &pts).unwrap();
        assert!(
            v.is_empty(),
            "{}: {} violations, first {:?}",
            p.name(),
            v.len(),
            v.first()
        );
    }
}

#[test]
fn ebc_recovered_on_dense_samples() {
    for (i, p) in instances().iter().enumerate() {
        let e = p.meta().ebc.unwrap();
        let pts = ebc_points(p.as_ref(), 100_000, &mut stream(22, i as u64)).unwrap();
        let opts = EbcOptions {
            excess_floor: Some(1e-6),
            alpha_cap: Some(10.0 * e.alpha),
            ..Default::default()
        };
        let est = estimate_ebc(p.as_ref(), &pts, &opts).unwrap();
        let t = est.recommended_theta.unwrap();
        assert!(
            (t - e.theta).abs() <= 0.15 + 1e-9,
            "{}: {t} vs {}",
            p.name(),
            e.theta
        );
    }
}

proptest! {
    #[test]
    fn risk_never_below_pstar(seed in any::<u64>(), which in 0usize..6) {
        let p = &instances()[which];
        let w = p.set().sample_uniform(&mut stream(seed, 0)).unwrap();
        prop_assert!(p.risk(&w).unwrap() >= p.meta().pstar.unwrap() - 1e-9);
        prop_assert!(p.distance_to_optimal(&w).unwrap() >= 0.0);
    }
}
