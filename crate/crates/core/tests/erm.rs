use adasa_core::erm::solve_erm;
use adasa_core::problems::{registry, Datum};
use adasa_core::rng::stream;

#[test]
fn inner_solver_is_deterministic() {
    for p in registry().unwrap() {
        let mut rng = stream(2, 0);
        let samples: Vec<Datum> = (0..300).map(|_| p.sample(&mut rng)).collect();
        let a = solve_erm(p.as_ref(), &samples, 1e-6);
        let b = solve_erm(p.as_ref(), &samples, 1e-6);
        match (a, b) {
            (Ok(a), Ok(b)) => assert_eq!(a, b, "{}", p.name()),
            (Err(a), Err(b)) => assert_eq!(a, b, "{}", p.name()),
            _ => panic!("{}: outcomes differ", p.name()),
        }
    }
}
