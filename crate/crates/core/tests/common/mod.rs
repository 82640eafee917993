#![allow(dead_code)]

use powersched::Instance;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Releases in [0, 10], works in (0, 10], alpha in {2, 3}.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, equal_work: bool, processors: usize) -> Instance {
    let n = rng.gen_range(1..=max_n);
    let alpha = if rng.gen_bool(0.5) { 2.0 } else { 3.0 };
    let common = rng.gen_range(0.1..10.0);
    let jobs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let w = if equal_work { common } else { rng.gen_range(0.1..10.0) };
            (rng.gen_range(0.0..10.0), w)
        })
        .collect();
    Instance::new(&jobs, alpha, processors).unwrap()
}

/// A budget that runs all work at a speed between 0.2 and 3.
pub fn random_budget(rng: &mut ChaCha8Rng, instance: &Instance) -> f64 {
    let speed: f64 = rng.gen_range(0.2..3.0);
    instance.total_work() * speed.powf(instance.alpha() - 1.0)
}
