//! Seeded agreement suite between the solvers and the reference optimizers.

use powersched::flow::{min_flow_for_energy, FlowSolverConfig};
use powersched::makespan::inc_merge;
use powersched::multi::{cyclic_assign, multi_flow_equal_work, multi_makespan_equal_work};
use powersched::oracle::{convex_multi_oracle, convex_oracle_release_order, Metric, OracleConfig};
use powersched::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::CliResult;

pub const TOLERANCE: f64 = 1e-4;

#[derive(Serialize)]
pub struct Check {
    pub name: &'static str,
    pub instances: usize,
    pub worst_relative_gap: f64,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct Report {
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn instance(rng: &mut ChaCha8Rng, max_jobs: usize, equal: bool, processors: usize) -> CliResult<Instance> {
    let n = rng.gen_range(1..=max_jobs);
    let alpha = if rng.gen_bool(0.5) { 2.0 } else { 3.0 };
    let w = rng.gen_range(0.1..10.0);
    let jobs: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..10.0), if equal { w } else { rng.gen_range(0.1..10.0) }))
        .collect();
    Ok(Instance::new(&jobs, alpha, processors)?)
}

fn budget(rng: &mut ChaCha8Rng, inst: &Instance) -> f64 {
    let speed: f64 = rng.gen_range(0.2..3.0);
    inst.total_work() * speed.powf(inst.alpha() - 1.0)
}

fn gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn run(seed: u64, count: usize, max_jobs: usize) -> CliResult<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let oracle = OracleConfig::default();
    let flow_cfg = FlowSolverConfig::default();
    let mut worst = [0.0f64; 4];
    for _ in 0..count {
        let inst = instance(&mut rng, max_jobs, false, 1)?;
        let e = budget(&mut rng, &inst);
        let fast = inc_merge(&inst, e)?.makespan();
        let slow = convex_oracle_release_order(&inst, e, Metric::Makespan, &oracle)?.value;
        worst[0] = worst[0].max(gap(fast, slow));

        let inst = instance(&mut rng, max_jobs, true, 1)?;
        let e = budget(&mut rng, &inst);
        let fast = min_flow_for_energy(&inst, e, &flow_cfg)?.flow;
        let slow = convex_oracle_release_order(&inst, e, Metric::Flow, &oracle)?.value;
        worst[1] = worst[1].max(gap(fast, slow));

        let m = rng.gen_range(2..=3);
        let inst = instance(&mut rng, max_jobs, true, m)?;
        let e = budget(&mut rng, &inst);
        let assignment = cyclic_assign(inst.len(), m)?;
        let fast = multi_makespan_equal_work(&inst, e)?.value;
        let slow = convex_multi_oracle(&inst, &assignment, e, Metric::Makespan, &oracle)?.value;
        worst[2] = worst[2].max(gap(fast, slow));
        let fast = multi_flow_equal_work(&inst, e, &flow_cfg)?.value;
        let slow = convex_multi_oracle(&inst, &assignment, e, Metric::Flow, &oracle)?.value;
        worst[3] = worst[3].max(gap(fast, slow));
    }
    let names = ["makespan", "flow", "multi-makespan", "multi-flow"];
    let checks: Vec<Check> = names
        .iter()
        .zip(worst)
        .map(|(&name, w)| Check {
            name,
            instances: count,
            worst_relative_gap: w,
            passed: w <= TOLERANCE,
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(Report {
        seed,
        tolerance: TOLERANCE,
        checks,
        passed,
    })
}
