//! Slow reference optimizers for cross-checking the solvers.
//!
//! With the job order on a processor fixed, only the completion times
//! `C_1 <= ... <= C_n` remain free. Writing `S_k = max(r_k, C_{k-1})` and
//! `d_k = C_k - S_k`, the energy `sum w_k^a d_k^(1-a)` is convex in the
//! completions and both metrics are linear in them. Flow is minimized through
//! the Lagrangian `flow + lambda * energy`; makespan through the least energy
//! that meets a common deadline. Both inner problems are solved by cyclic
//! coordinate descent, each coordinate set to the root of its monotone
//! subderivative. The non-smooth part couples only neighbouring coordinates
//! through a separable term, so a coordinate-wise minimum is a global one.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{check_budget, Instance, Job, Schedule, ScheduledJob};
use crate::multi::{self, Assignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Makespan,
    Flow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Coordinate descent stops once no completion time moves by more than
    /// this (relative to `max(1, |C|)`).
    pub duration_tolerance: f64,
    pub max_rounds: usize,
    /// Largest job count [`enumerate_assignments`] accepts.
    pub assignment_cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            duration_tolerance: 1e-11,
            max_rounds: 20_000,
            assignment_cap: 16,
        }
    }
}

/// Hard ceiling on [`OracleConfig::assignment_cap`].
pub const MAX_ASSIGNMENT_CAP: usize = 16;

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.duration_tolerance > 0.0) || self.max_rounds == 0 {
            return Err(invalid("oracle tolerance and round limit must be positive"));
        }
        if self.assignment_cap == 0 || self.assignment_cap > MAX_ASSIGNMENT_CAP {
            return Err(invalid(format!(
                "assignment cap must lie in 1..={MAX_ASSIGNMENT_CAP}, got {}",
                self.assignment_cap
            )));
        }
        Ok(())
    }
}

/// Oracle result for one processor. Vectors follow the processing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub order: Vec<usize>,
    pub durations: Vec<f64>,
    pub completions: Vec<f64>,
    pub value: f64,
    pub energy: f64,
    pub rounds: usize,
}

impl OracleSolution {
    /// The schedule on processor 1 of `instance`.
    pub fn schedule(&self, instance: &Instance) -> Result<Schedule> {
        build_schedule(instance, &[(1, self)])
    }
}

/// Oracle result over several processors under one budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiOracleSolution {
    /// `(processor, solution)` for every processor that received jobs.
    pub lanes: Vec<(usize, OracleSolution)>,
    pub value: f64,
    pub energy: f64,
}

impl MultiOracleSolution {
    pub fn schedule(&self, instance: &Instance) -> Result<Schedule> {
        let parts: Vec<(usize, &OracleSolution)> = self.lanes.iter().map(|(p, s)| (*p, s)).collect();
        build_schedule(instance, &parts)
    }
}

fn build_schedule(instance: &Instance, parts: &[(usize, &OracleSolution)]) -> Result<Schedule> {
    let mut items = Vec::new();
    for (p, sol) in parts {
        for ((&id, &d), &c) in sol.order.iter().zip(&sol.durations).zip(&sol.completions) {
            let job = *instance
                .job_by_id(id)
                .ok_or_else(|| invalid(format!("no job with id {id}")))?;
            items.push(ScheduledJob {
                job,
                start: c - d,
                speed: job.work / d,
                processor: *p,
            });
        }
    }
    Schedule::new(instance, items)
}

/// Jobs of one processor in processing order plus the current completions.
#[derive(Debug, Clone)]
struct Lane {
    jobs: Vec<Job>,
    r: Vec<f64>,
    wa: Vec<f64>,
    c: Vec<f64>,
    rounds: usize,
}

impl Lane {
    fn new(jobs: Vec<Job>, alpha: f64) -> Self {
        let r: Vec<f64> = jobs.iter().map(|j| j.release).collect();
        let wa = jobs.iter().map(|j| j.work.powf(alpha)).collect();
        let mut lane = Self {
            c: vec![0.0; jobs.len()],
            jobs,
            r,
            wa,
            rounds: 0,
        };
        lane.reset(1.0);
        lane
    }

    fn len(&self) -> usize {
        self.jobs.len()
    }

    /// Runs every job at `speed` as early as possible.
    fn reset(&mut self, speed: f64) {
        let mut t = f64::NEG_INFINITY;
        for k in 0..self.len() {
            t = t.max(self.r[k]) + self.jobs[k].work / speed;
            self.c[k] = t;
        }
    }

    fn start(&self, k: usize) -> f64 {
        if k == 0 {
            self.r[0]
        } else {
            self.r[k].max(self.c[k - 1])
        }
    }

    fn max_release(&self) -> f64 {
        self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn duration(&self, k: usize) -> f64 {
        self.c[k] - self.start(k)
    }

    fn energy(&self, alpha: f64) -> f64 {
        (0..self.len())
            .map(|k| self.wa[k] * self.duration(k).powf(1.0 - alpha))
            .sum()
    }

    fn flow(&self) -> f64 {
        self.c.iter().zip(&self.r).map(|(c, r)| c - r).sum()
    }

    fn makespan(&self) -> f64 {
        self.c[self.len() - 1]
    }

    /// Makes the last completion equal `deadline`, compressing the schedule
    /// when the current one cannot accommodate it.
    fn fit_deadline(&mut self, deadline: f64) {
        let n = self.len();
        if deadline <= self.start(n - 1) {
            let mut speed = 1.0;
            self.reset(speed);
            while self.c[n - 1] >= deadline {
                speed *= 2.0;
                self.reset(speed);
            }
        }
        self.c[n - 1] = deadline;
    }

    /// Minimizes over coordinate `k`; returns the relative move.
    fn update(&mut self, k: usize, alpha: f64, lambda: f64, coef: f64, fixed_last: bool) -> f64 {
        let n = self.len();
        let s = self.start(k);
        let a1 = alpha - 1.0;
        let wa = self.wa[k];
        let old = self.c[k];
        let new = if k + 1 == n {
            if fixed_last {
                return 0.0;
            }
            s + (a1 * wa * lambda / coef).powf(1.0 / alpha)
        } else {
            let (r1, c1, wa1) = (self.r[k + 1], self.c[k + 1], self.wa[k + 1]);
            // right derivative of the Lagrangian in C_k
            let h = |x: f64| -> f64 {
                let mut v = coef - lambda * a1 * wa * (x - s).powf(-alpha);
                if x > r1 {
                    v += lambda * a1 * wa1 * (c1 - x).powf(-alpha);
                }
                v
            };
            let (mut lo, mut hi) = (s, c1);
            if r1 > lo && r1 < hi {
                if h(r1) >= 0.0 {
                    hi = r1;
                } else {
                    lo = r1;
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if h(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        self.c[k] = new;
        (new - old).abs() / old.abs().max(1.0)
    }

    fn descend(&mut self, alpha: f64, lambda: f64, metric: Metric, config: &OracleConfig) -> Result<()> {
        let n = self.len();
        let fixed_last = metric == Metric::Makespan;
        let coef = if fixed_last { 0.0 } else { 1.0 };
        for _ in 0..config.max_rounds {
            self.rounds += 1;
            let mut moved = 0.0f64;
            for k in (0..n).chain((0..n).rev()) {
                moved = moved.max(self.update(k, alpha, lambda, coef, fixed_last));
            }
            if moved <= config.duration_tolerance {
                return Ok(());
            }
        }
        let best = match metric {
            Metric::Flow => self.flow(),
            Metric::Makespan => self.makespan(),
        };
        Err(Error::Convergence {
            what: "coordinate descent",
            iterations: config.max_rounds,
            best,
        })
    }

    fn solution(&self, alpha: f64, metric: Metric) -> OracleSolution {
        OracleSolution {
            order: self.jobs.iter().map(|j| j.id).collect(),
            durations: (0..self.len()).map(|k| self.duration(k)).collect(),
            completions: self.c.clone(),
            value: match metric {
                Metric::Flow => self.flow(),
                Metric::Makespan => self.makespan(),
            },
            energy: self.energy(alpha),
            rounds: self.rounds,
        }
    }
}

struct Problem {
    lanes: Vec<Lane>,
    alpha: f64,
    metric: Metric,
    config: OracleConfig,
}

impl Problem {
    /// Total energy at the outer parameter: the multiplier for flow, the
    /// deadline for makespan.
    fn energy_at(&mut self, param: f64) -> Result<f64> {
        let mut total = 0.0;
        for lane in &mut self.lanes {
            match self.metric {
                Metric::Flow => lane.descend(self.alpha, param, Metric::Flow, &self.config)?,
                Metric::Makespan => {
                    lane.fit_deadline(param);
                    lane.descend(self.alpha, 1.0, Metric::Makespan, &self.config)?;
                }
            }
            total += lane.energy(self.alpha);
        }
        Ok(total)
    }

    /// Solves for the outer parameter that spends `budget`.
    fn solve(&mut self, budget: f64) -> Result<()> {
        let floor = self.lanes.iter().map(Lane::max_release).fold(f64::NEG_INFINITY, f64::max);
        let work: f64 = self.lanes.iter().flat_map(|l| &l.jobs).map(|j| j.work).sum();
        // both parametrizations make log-energy decreasing in x
        let metric = self.metric;
        let to_param = move |x: f64| match metric {
            Metric::Flow => x.exp(),
            Metric::Makespan => floor + x.exp(),
        };
        let target = budget.ln();
        let g = |p: &mut Problem, x: f64| -> Result<f64> { Ok(p.energy_at(to_param(x))?.ln() - target) };

        let x0 = match metric {
            Metric::Flow => 0.0,
            Metric::Makespan => work.ln(),
        };
        let (mut a, mut ga, mut b, mut gb);
        let g0 = g(self, x0)?;
        if g0 > 0.0 {
            (a, ga) = (x0, g0);
            b = x0;
            loop {
                b += 2.0;
                gb = g(self, b)?;
                if gb <= 0.0 {
                    break;
                }
                (a, ga) = (b, gb);
                if b > 700.0 {
                    return Err(Error::Internal("oracle failed to bracket the budget".into()));
                }
            }
        } else {
            (b, gb) = (x0, g0);
            a = x0;
            loop {
                a -= 2.0;
                ga = g(self, a)?;
                if ga >= 0.0 {
                    break;
                }
                (b, gb) = (a, ga);
                if a < -700.0 {
                    return Err(Error::Internal("oracle failed to bracket the budget".into()));
                }
            }
        }

        // Illinois regula falsi on g(a) >= 0 >= g(b)
        let mut side = 0i8;
        let mut best = if ga.abs() < gb.abs() { a } else { b };
        for _ in 0..200 {
            if ga == 0.0 || gb == 0.0 || (b - a).abs() <= 1e-15 * a.abs().max(b.abs()).max(1.0) {
                break;
            }
            let x = (a * gb - b * ga) / (gb - ga);
            let x = if x > a.min(b) && x < a.max(b) { x } else { 0.5 * (a + b) };
            let gx = g(self, x)?;
            if gx.abs() < 1e-13 {
                best = x;
                break;
            }
            if gx > 0.0 {
                (a, ga) = (x, gx);
                if side == 1 {
                    gb *= 0.5;
                }
                side = 1;
            } else {
                (b, gb) = (x, gx);
                if side == -1 {
                    ga *= 0.5;
                }
                side = -1;
            }
            best = x;
        }
        g(self, best)?;
        Ok(())
    }
}

fn check_order(instance: &Instance, order: &[usize]) -> Result<Vec<Job>> {
    let mut seen = vec![false; instance.len()];
    let mut jobs = Vec::with_capacity(order.len());
    for &id in order {
        let job = instance
            .job_by_id(id)
            .ok_or_else(|| invalid(format!("no job with id {id}")))?;
        let pos = instance.jobs().iter().position(|j| j.id == id).expect("present");
        if std::mem::replace(&mut seen[pos], true) {
            return Err(invalid(format!("job {id} appears twice in the order")));
        }
        jobs.push(*job);
    }
    if jobs.len() != instance.len() {
        return Err(invalid("order must list every job exactly once"));
    }
    Ok(jobs)
}

/// Minimizes `metric` on one processor with the jobs processed in `order`
/// (job ids) using at most `energy_budget`.
pub fn convex_oracle(
    instance: &Instance,
    order: &[usize],
    energy_budget: f64,
    metric: Metric,
    config: &OracleConfig,
) -> Result<OracleSolution> {
    config.validate()?;
    check_budget(energy_budget)?;
    if instance.processors() != 1 {
        return Err(invalid("convex_oracle works on one processor"));
    }
    let jobs = check_order(instance, order)?;
    let mut problem = Problem {
        lanes: vec![Lane::new(jobs, instance.alpha())],
        alpha: instance.alpha(),
        metric,
        config: *config,
    };
    problem.solve(energy_budget)?;
    Ok(problem.lanes[0].solution(instance.alpha(), metric))
}

/// [`convex_oracle`] in release order.
pub fn convex_oracle_release_order(
    instance: &Instance,
    energy_budget: f64,
    metric: Metric,
    config: &OracleConfig,
) -> Result<OracleSolution> {
    let order: Vec<usize> = instance.jobs().iter().map(|j| j.id).collect();
    convex_oracle(instance, &order, energy_budget, metric, config)
}

/// Oracle for a fixed assignment on several processors sharing one budget;
/// each processor runs its jobs in release order.
pub fn convex_multi_oracle(
    instance: &Instance,
    assignment: &Assignment,
    energy_budget: f64,
    metric: Metric,
    config: &OracleConfig,
) -> Result<MultiOracleSolution> {
    config.validate()?;
    check_budget(energy_budget)?;
    assignment.check(instance)?;
    let mut procs = Vec::new();
    let mut lanes = Vec::new();
    for p in 1..=assignment.processors() {
        let jobs: Vec<Job> = instance
            .jobs()
            .iter()
            .zip(assignment.mapping())
            .filter(|(_, &q)| q == p)
            .map(|(j, _)| *j)
            .collect();
        if !jobs.is_empty() {
            procs.push(p);
            lanes.push(Lane::new(jobs, instance.alpha()));
        }
    }
    let mut problem = Problem {
        lanes,
        alpha: instance.alpha(),
        metric,
        config: *config,
    };
    problem.solve(energy_budget)?;
    let lanes: Vec<(usize, OracleSolution)> = procs
        .into_iter()
        .zip(problem.lanes.iter().map(|l| l.solution(instance.alpha(), metric)))
        .collect();
    let value = match metric {
        Metric::Flow => lanes.iter().map(|(_, s)| s.value).sum(),
        Metric::Makespan => lanes.iter().map(|(_, s)| s.value).fold(f64::NEG_INFINITY, f64::max),
    };
    let energy = lanes.iter().map(|(_, s)| s.energy).sum();
    Ok(MultiOracleSolution { lanes, value, energy })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    pub assignment: Assignment,
    pub value: f64,
    /// Number of assignments evaluated.
    pub evaluated: usize,
}

/// Value of one assignment: exact solvers where they apply, otherwise the
/// convex oracle.
pub fn evaluate_assignment(
    instance: &Instance,
    assignment: &Assignment,
    energy_budget: f64,
    metric: Metric,
    config: &OracleConfig,
) -> Result<f64> {
    match metric {
        Metric::Makespan => Ok(multi::makespan_for_assignment(instance, assignment, energy_budget)?.value),
        Metric::Flow if instance.equal_work().is_some() => Ok(multi::flow_for_assignment(
            instance,
            assignment,
            energy_budget,
            &Default::default(),
        )?
        .value),
        Metric::Flow => Ok(convex_multi_oracle(instance, assignment, energy_budget, metric, config)?.value),
    }
}

/// Best assignment of jobs to the instance's processors by exhaustion.
///
/// Processors are identical, so only assignments in which processor labels
/// first appear in increasing order are evaluated; every other assignment is
/// a relabelling of one of these.
pub fn enumerate_assignments(
    instance: &Instance,
    energy_budget: f64,
    metric: Metric,
    config: &OracleConfig,
) -> Result<EnumerationResult> {
    config.validate()?;
    check_budget(energy_budget)?;
    let n = instance.len();
    if n > config.assignment_cap {
        return Err(Error::TooLarge {
            n,
            cap: config.assignment_cap,
        });
    }
    let m = instance.processors();
    let mut mapping = vec![1usize; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut evaluated = 0;
    loop {
        let assignment = Assignment::new(mapping.clone(), m)?;
        let value = evaluate_assignment(instance, &assignment, energy_budget, metric, config)?;
        evaluated += 1;
        if best.as_ref().map_or(true, |(_, v)| value < *v) {
            best = Some((mapping.clone(), value));
        }
        if !next_restricted_growth(&mut mapping, m) {
            break;
        }
    }
    let (mapping, value) = best.expect("at least one assignment");
    Ok(EnumerationResult {
        assignment: Assignment::new(mapping, m)?,
        value,
        evaluated,
    })
}

/// Advances a restricted growth string over labels `1..=m`: each entry is at
/// most one more than the largest label before it.
fn next_restricted_growth(s: &mut [usize], m: usize) -> bool {
    let n = s.len();
    for i in (1..n).rev() {
        let prefix_max = s[..i].iter().copied().max().unwrap_or(0);
        if s[i] <= prefix_max && s[i] < m {
            s[i] += 1;
            for x in &mut s[i + 1..] {
                *x = 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn single_job() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0)], 3.0).unwrap();
        for metric in [Metric::Makespan, Metric::Flow] {
            let sol = convex_oracle(&inst, &[1], 1.0, metric, &OracleConfig::default()).unwrap();
            assert!(rel(sol.durations[0], 1.0) < 1e-9, "{sol:?}");
            assert!(rel(sol.value, 1.0) < 1e-9);
        }
    }

    #[test]
    fn sample_instance_single_block() {
        let inst = Instance::uniprocessor(&[(0.0, 5.0), (5.0, 2.0), (6.0, 1.0)], 3.0).unwrap();
        let sol = convex_oracle_release_order(&inst, 2.0, Metric::Makespan, &OracleConfig::default()).unwrap();
        assert!(rel(sol.value, 16.0) < 1e-6, "{}", sol.value);
        assert!(rel(sol.energy, 2.0) < 1e-9);
        let sched = sol.schedule(&inst).unwrap();
        assert!(rel(sched.makespan(), 16.0) < 1e-6);
    }

    #[test]
    fn simultaneous_unit_jobs_flow() {
        // all released at 0: flow = n d_1 + (n-1) d_2 + ... so speeds go as k^(1/3)
        let inst = Instance::uniprocessor(&[(0.0, 1.0), (0.0, 1.0)], 3.0).unwrap();
        let sol = convex_oracle_release_order(&inst, 3.0, Metric::Flow, &OracleConfig::default()).unwrap();
        let s = (3.0 / (1.0 + 2f64.powf(2.0 / 3.0))).sqrt();
        let want = 2.0 / (2f64.cbrt() * s) + 1.0 / s;
        assert!(rel(sol.value, want) < 1e-8, "{} vs {want}", sol.value);
    }

    #[test]
    fn order_validation() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0), (1.0, 1.0)], 3.0).unwrap();
        let cfg = OracleConfig::default();
        assert!(convex_oracle(&inst, &[1], 1.0, Metric::Flow, &cfg).is_err());
        assert!(convex_oracle(&inst, &[1, 1], 1.0, Metric::Flow, &cfg).is_err());
        assert!(convex_oracle(&inst, &[2, 1], 1.0, Metric::Flow, &cfg).is_ok());
    }

    #[test]
    fn round_limit_reports_convergence_error() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0), (0.5, 2.0), (0.7, 1.0)], 3.0).unwrap();
        let cfg = OracleConfig {
            max_rounds: 1,
            ..OracleConfig::default()
        };
        assert!(matches!(
            convex_oracle_release_order(&inst, 5.0, Metric::Flow, &cfg),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn restricted_growth_counts() {
        let count = |n: usize, m: usize| {
            let mut s = vec![1; n];
            let mut c = 1;
            while next_restricted_growth(&mut s, m) {
                c += 1;
            }
            c
        };
        assert_eq!(count(4, 2), 8);
        assert_eq!(count(3, 3), 5);
        assert_eq!(count(1, 3), 1);
    }

    #[test]
    fn cap_enforced() {
        let jobs: Vec<(f64, f64)> = (0..17).map(|i| (i as f64, 1.0)).collect();
        let inst = Instance::new(&jobs, 3.0, 2).unwrap();
        assert!(matches!(
            enumerate_assignments(&inst, 10.0, Metric::Makespan, &OracleConfig::default()),
            Err(Error::TooLarge { n: 17, cap: 16 })
        ));
        let bad = OracleConfig {
            assignment_cap: 17,
            ..OracleConfig::default()
        };
        assert!(enumerate_assignments(&inst, 10.0, Metric::Makespan, &bad).is_err());
    }

    #[test]
    fn one_job_three_processors() {
        let inst = Instance::new(&[(1.0, 2.0)], 3.0, 3).unwrap();
        let res = enumerate_assignments(&inst, 4.0, Metric::Flow, &OracleConfig::default()).unwrap();
        assert_eq!(res.evaluated, 1);
        assert!(rel(res.value, 2.0 / 2f64.sqrt()) < 1e-9);
    }

    #[test]
    fn partition_instance_makespan() {
        let inst = Instance::new(&[(0.0, 1.0), (0.0, 2.0), (0.0, 3.0), (0.0, 4.0)], 3.0, 2).unwrap();
        let res = enumerate_assignments(&inst, 10.0, Metric::Makespan, &OracleConfig::default()).unwrap();
        assert!(rel(res.value, 5.0) < 1e-9);
    }
}
