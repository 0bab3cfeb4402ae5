use adasa_core::geometry::{mirror_step_pnorm, project_cap, prox_l1, BallCap, FeasibleSet};
use adasa_core::linalg::dist2;
use adasa_core::rng::stream;
use proptest::prelude::*;
use rand::Rng;

fn set_strategy() -> impl Strategy<Value = FeasibleSet> {
    (1usize..=5, 0usize..4, 0.1f64..2.0).prop_flat_map(|(d, kind, r)| {
        prop::collection::vec(-1.0f64..1.0, d).prop_map(move |c| match kind {
            0 => FeasibleSet::L2Ball {
                center: c,
                radius: r,
            },
            1 => FeasibleSet::L1Ball {
                center: c,
                radius: r,
            },
            2 => FeasibleSet::Box {
                upper: c.iter().map(|v| v + r).collect(),
                lower: c,
            },
            _ => FeasibleSet::NonnegativeBox {
                upper: c.iter().map(|v| v.abs() + 0.1).collect(),
            },
        })
    })
}

fn point(d: usize, seed: u64, k: u64, scale: f64) -> Vec<f64> {
    let mut rng = stream(seed, k);
    (0..d).map(|_| rng.gen_range(-scale..scale)).collect()
}

proptest! {
    #[test]
    fn projection_is_feasible_idempotent_nonexpansive(set in set_strategy(), seed in any::<u64>()) {
        let d = set.dim();
        let (x, y) = (point(d, seed, 0, 4.0), point(d, seed, 1, 4.0));
        let (px, py) = (set.project(&x).unwrap(), set.project(&y).unwrap());
        prop_assert!(set.violation(&px) <= 1e-9);
        prop_assert!(dist2(&set.project(&px).unwrap(), &px) <= 1e-12);
        prop_assert!(dist2(&px, &py) <= dist2(&x, &y) + 1e-9);
    }

    #[test]
    fn cap_projection_beats_random_feasible_points(set in set_strategy(), seed in any::<u64>()) {
        let d = set.dim();
        let mut rng = stream(seed, 2);
        let center = set.sample_uniform(&mut rng).unwrap();
        let radius = rng.gen_range(0.05..1.0) * set.diameter();
        let cap = BallCap::new(set.clone(), center.clone(), radius).unwrap();
        let x = point(d, seed, 3, 4.0);
        let q = project_cap(&cap, &x).unwrap();
        prop_assert!(set.violation(&q) <= 1e-8);
        prop_assert!(dist2(&q, &center) <= radius + 1e-8);
        let best = dist2(&q, &x);
        let mut tried = 0;
        while tried < 10_000 {
            let z = set.sample_uniform(&mut rng).unwrap();
            if dist2(&z, &center) <= radius {
                prop_assert!(best <= dist2(&z, &x) + 1e-9);
                tried += 1;
            } else {
                // pull the draw into the ball so that small caps still get tested
                let s = radius / dist2(&z, &center) * rng.gen::<f64>();
                let z: Vec<f64> = center.iter().zip(&z).map(|(c, v)| c + s * (v - c)).collect();
                if set.violation(&z) <= 1e-12 {
                    prop_assert!(best <= dist2(&z, &x) + 1e-9);
                    tried += 1;
                }
            }
        }
    }

    #[test]
    fn prox_l1_matches_grid_oracle_on_boxes(seed in any::<u64>(), d in 1usize..=5, t in 0.0f64..2.0) {
        let lo = point(d, seed, 4, 1.0);
        let hi: Vec<f64> = lo.iter().map(|v| v + 0.5 + v.abs()).collect();
        let set = FeasibleSet::Box { lower: lo.clone(), upper: hi.clone() };
        let x = point(d, seed, 5, 3.0);
        let p = prox_l1(&x, t, &set).unwrap();
        for i in 0..d {
            // nested grids: 1001 points, then zoom around the best twice
            let f = |u: f64| 0.5 * (u - x[i]).powi(2) + t * u.abs();
            let (mut a, mut b) = (lo[i], hi[i]);
            let mut best = a;
            for _ in 0..4 {
                let h = (b - a) / 1000.0;
                best = (0..=1000).map(|k| a + h * k as f64).min_by(|u, v| f(*u).total_cmp(&f(*v))).unwrap();
                a = (best - h).max(lo[i]);
                b = (best + h).min(hi[i]);
            }
            prop_assert!((p[i] - best).abs() <= 1e-6, "coordinate {}: {} vs {}", i, p[i], best);
        }
    }
}

#[test]
fn mirror_step_with_p2_is_the_euclidean_step() {
    let mut rng = stream(11, 0);
    for _ in 0..1000 {
        let d = rng.gen_range(1..=5);
        let set = FeasibleSet::l1_ball(d, rng.gen_range(0.5..3.0)).unwrap();
        let w = set.sample_uniform(&mut rng).unwrap();
        let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let step = rng.gen_range(0.01..1.0);
        let m = mirror_step_pnorm(&w, &g, step, 2.0, &set).unwrap();
        let e: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        assert!(dist2(&m, &set.project(&e).unwrap()) <= 1e-10);
    }
}
