//! Several identical processors sharing one energy budget.
//!
//! For equal-work jobs dealing them out cyclically in release order is
//! optimal for both metrics. Given an assignment, an optimal makespan
//! schedule finishes every processor at the same time and an optimal flow
//! schedule runs every processor's last job at the same speed, so each
//! reduces to a one-dimensional search over per-processor solutions.
//!
//! With unequal works the makespan problem is NP-hard; the Partition
//! reduction below turns a multiset into a two-processor instance whose
//! optimal makespan reaches half the total work exactly when the multiset
//! splits evenly.

use serde::Serialize;

use crate::curve::Frontier;
use crate::error::{invalid, Error, Result};
use crate::flow::{solve_common_tail, FlowSolverConfig};
use crate::makespan::inc_merge;
use crate::model::{check_budget, Instance, Schedule};
use crate::oracle::{enumerate_assignments, Metric, OracleConfig};

/// Processor of every job, indexed by release-order position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    mapping: Vec<usize>,
    processors: usize,
}

impl Assignment {
    pub fn new(mapping: Vec<usize>, processors: usize) -> Result<Self> {
        if processors == 0 {
            return Err(invalid("processor count must be positive"));
        }
        if let Some((i, p)) = mapping.iter().enumerate().find(|(_, &p)| p == 0 || p > processors) {
            return Err(invalid(format!("job {} mapped to processor {p} outside 1..={processors}", i + 1)));
        }
        Ok(Self { mapping, processors })
    }

    /// `mapping()[i]` is the processor of the job at position `i + 1`.
    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn processors(&self) -> usize {
        self.processors
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub(crate) fn check(&self, instance: &Instance) -> Result<()> {
        if self.mapping.len() != instance.len() {
            return Err(invalid(format!(
                "assignment covers {} jobs, instance has {}",
                self.mapping.len(),
                instance.len()
            )));
        }
        if self.processors != instance.processors() {
            return Err(invalid(format!(
                "assignment uses {} processors, instance has {}",
                self.processors,
                instance.processors()
            )));
        }
        Ok(())
    }

    /// Job ids on processor `p`, in release order.
    pub fn jobs_on(&self, instance: &Instance, p: usize) -> Vec<usize> {
        instance
            .jobs()
            .iter()
            .zip(&self.mapping)
            .filter(|(_, &q)| q == p)
            .map(|(j, _)| j.id)
            .collect()
    }

    /// Sub-instances of the non-empty processors.
    fn parts(&self, instance: &Instance) -> Result<Vec<(usize, Instance)>> {
        self.check(instance)?;
        (1..=self.processors)
            .filter_map(|p| {
                let ids = self.jobs_on(instance, p);
                (!ids.is_empty()).then(|| instance.subset(&ids).map(|sub| (p, sub)))
            })
            .collect()
    }
}

/// Job `i` (1-based release order) goes to processor `(i mod m) + 1`.
pub fn cyclic_assign(n: usize, m: usize) -> Result<Assignment> {
    if n == 0 {
        return Err(invalid("no jobs to assign"));
    }
    Assignment::new((1..=n).map(|i| i % m.max(1) + 1).collect(), m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSolution {
    pub assignment: Assignment,
    pub schedule: Schedule,
    /// Makespan or total flow.
    pub value: f64,
    /// Common finishing time (makespan) or common last-job speed (flow).
    pub coupling: f64,
}

impl MultiSolution {
    pub fn per_processor(&self) -> Vec<Schedule> {
        self.schedule.split_by_processor()
    }
}

fn combine(instance: &Instance, parts: Vec<(usize, Schedule)>) -> Result<Schedule> {
    Schedule::combine(parts, instance.model(), instance.processors())
}

/// Least total energy for the assignment to finish by `deadline`.
pub fn energy_for_deadline_with(instance: &Instance, assignment: &Assignment, deadline: f64) -> Result<f64> {
    let parts = assignment.parts(instance)?;
    let mut total = 0.0;
    for (_, part) in &parts {
        total += Frontier::build(part)?.energy_for_makespan(deadline)?;
    }
    Ok(total)
}

/// Least total energy for equal-work jobs to finish by `deadline`.
pub fn multi_energy_for_deadline_equal_work(instance: &Instance, deadline: f64) -> Result<f64> {
    check_equal_work(instance)?;
    energy_for_deadline_with(instance, &cyclic_assign(instance.len(), instance.processors())?, deadline)
}

/// Optimal makespan for a fixed assignment (any works).
pub fn makespan_for_assignment(instance: &Instance, assignment: &Assignment, energy_budget: f64) -> Result<MultiSolution> {
    check_budget(energy_budget)?;
    let parts = assignment.parts(instance)?;
    if let [(p, part)] = parts.as_slice() {
        let schedule = inc_merge(part, energy_budget)?;
        let value = schedule.makespan();
        return Ok(MultiSolution {
            assignment: assignment.clone(),
            schedule: combine(instance, vec![(*p, schedule)])?,
            value,
            coupling: value,
        });
    }

    let frontiers = parts
        .iter()
        .map(|(_, part)| Frontier::build(part))
        .collect::<Result<Vec<_>>>()?;
    let energy = |t: f64| -> Result<f64> {
        let mut total = 0.0;
        for f in &frontiers {
            match f.energy_for_makespan(t) {
                Ok(e) => total += e,
                Err(Error::InfeasibleDeadline { .. }) => return Ok(f64::INFINITY),
                Err(e) => return Err(e),
            }
        }
        Ok(total)
    };

    let floor = parts
        .iter()
        .map(|(_, part)| part.last_release())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut width = instance.total_work().max(1.0);
    let mut hi = floor + width;
    let mut guard = 0;
    while energy(hi)? > energy_budget {
        width *= 2.0;
        hi = floor + width;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Internal("failed to bracket the common deadline".into()));
        }
    }
    let mut lo = floor;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if energy(mid)? > energy_budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut schedules = Vec::with_capacity(parts.len());
    for ((p, part), f) in parts.iter().zip(&frontiers) {
        schedules.push((*p, inc_merge(part, f.energy_for_makespan(hi)?)?));
    }
    let schedule = combine(instance, schedules)?;
    Ok(MultiSolution {
        assignment: assignment.clone(),
        value: schedule.makespan(),
        schedule,
        coupling: hi,
    })
}

/// Approximately optimal total flow for a fixed assignment of equal-work jobs.
pub fn flow_for_assignment(
    instance: &Instance,
    assignment: &Assignment,
    energy_budget: f64,
    config: &FlowSolverConfig,
) -> Result<MultiSolution> {
    check_equal_work(instance)?;
    let parts = assignment.parts(instance)?;
    let subs: Vec<Instance> = parts.iter().map(|(_, s)| s.clone()).collect();
    let (tails, _) = solve_common_tail(&subs, energy_budget, config)?;
    let sigma = tails[0].sigma_n;
    let schedule = combine(
        instance,
        parts.iter().map(|(p, _)| *p).zip(tails.into_iter().map(|t| t.schedule)).collect(),
    )?;
    Ok(MultiSolution {
        assignment: assignment.clone(),
        value: schedule.total_flow(),
        schedule,
        coupling: sigma,
    })
}

fn check_equal_work(instance: &Instance) -> Result<()> {
    instance
        .equal_work()
        .map(|_| ())
        .ok_or_else(|| Error::UnsupportedInstance("multiprocessor solvers need equal-work jobs".into()))
}

/// Minimum makespan for equal-work jobs on the instance's processors.
pub fn multi_makespan_equal_work(instance: &Instance, energy_budget: f64) -> Result<MultiSolution> {
    check_equal_work(instance)?;
    let assignment = cyclic_assign(instance.len(), instance.processors())?;
    makespan_for_assignment(instance, &assignment, energy_budget)
}

/// Approximately minimum total flow for equal-work jobs on the instance's processors.
pub fn multi_flow_equal_work(instance: &Instance, energy_budget: f64, config: &FlowSolverConfig) -> Result<MultiSolution> {
    check_equal_work(instance)?;
    let assignment = cyclic_assign(instance.len(), instance.processors())?;
    flow_for_assignment(instance, &assignment, energy_budget, config)
}

/// A multiset of positive integers to be split into two equal-sum halves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionInstance {
    elements: Vec<u64>,
}

impl PartitionInstance {
    pub fn new(elements: Vec<u64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(invalid("empty multiset"));
        }
        if elements.contains(&0) {
            return Err(invalid("multiset elements must be positive"));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn total(&self) -> u64 {
        self.elements.iter().sum()
    }

    /// Half the total.
    pub fn target(&self) -> f64 {
        self.total() as f64 / 2.0
    }
}

/// Two processors, one job per element released at 0 with that much work,
/// enough energy to run all work at speed 1, and the target makespan.
pub fn partition_to_instance(partition: &PartitionInstance, alpha: f64) -> Result<(Instance, f64, f64)> {
    let jobs: Vec<(f64, f64)> = partition.elements.iter().map(|&a| (0.0, a as f64)).collect();
    let instance = Instance::new(&jobs, alpha, 2)?;
    Ok((instance, partition.total() as f64, partition.target()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionOutcome {
    pub decision: bool,
    /// Best makespan over all assignments; absent for an odd total.
    pub makespan: Option<f64>,
    pub target: f64,
    /// The two halves when the multiset splits evenly.
    pub witness: Option<(Vec<u64>, Vec<u64>)>,
}

/// Decides Partition by computing the optimal two-processor makespan.
pub fn solve_partition_via_schedule(
    partition: &PartitionInstance,
    alpha: f64,
    config: &OracleConfig,
) -> Result<PartitionOutcome> {
    let target = partition.target();
    if partition.total() % 2 == 1 {
        return Ok(PartitionOutcome {
            decision: false,
            makespan: None,
            target,
            witness: None,
        });
    }
    let (instance, budget, target) = partition_to_instance(partition, alpha)?;
    let best = enumerate_assignments(&instance, budget, Metric::Makespan, config)?;
    let decision = best.value <= target * (1.0 + 1e-9);
    let witness = decision.then(|| {
        let side = |p: usize| -> Vec<u64> {
            partition
                .elements
                .iter()
                .zip(best.assignment.mapping())
                .filter(|(_, &q)| q == p)
                .map(|(&a, _)| a)
                .collect()
        };
        (side(1), side(2))
    });
    Ok(PartitionOutcome {
        decision,
        makespan: Some(best.value),
        target,
        witness,
    })
}

/// [`solve_partition_via_schedule`] with cubic power and default limits.
pub fn decide_partition_via_schedule(partition: &PartitionInstance) -> Result<bool> {
    Ok(solve_partition_via_schedule(partition, 3.0, &OracleConfig::default())?.decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::min_flow_for_energy;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn cyclic_examples() {
        assert_eq!(cyclic_assign(5, 2).unwrap().mapping(), &[2, 1, 2, 1, 2]);
        assert_eq!(cyclic_assign(3, 1).unwrap().mapping(), &[1, 1, 1]);
        assert_eq!(cyclic_assign(2, 4).unwrap().mapping(), &[2, 3]);
        assert!(cyclic_assign(0, 2).is_err());
        assert!(cyclic_assign(2, 0).is_err());
    }

    #[test]
    fn four_unit_jobs_two_processors() {
        let inst = Instance::new(&[(0.0, 1.0); 4], 3.0, 2).unwrap();
        let sol = multi_makespan_equal_work(&inst, 4.0).unwrap();
        assert!(rel(sol.value, 2.0) < 1e-9);
        for it in sol.schedule.items() {
            assert!(rel(it.speed, 1.0) < 1e-9);
        }
    }

    #[test]
    fn two_jobs_two_processors() {
        let inst = Instance::new(&[(0.0, 1.0), (0.0, 1.0)], 3.0, 2).unwrap();
        let mk = multi_makespan_equal_work(&inst, 2.0).unwrap();
        assert!(rel(mk.value, 1.0) < 1e-9);
        let fl = multi_flow_equal_work(&inst, 2.0, &FlowSolverConfig::default()).unwrap();
        assert!(rel(fl.value, 2.0) < 1e-9);
    }

    #[test]
    fn one_processor_matches_uniprocessor_solvers() {
        let sample = Instance::uniprocessor(&[(0.0, 5.0), (5.0, 2.0), (6.0, 1.0)], 3.0).unwrap();
        let sol = makespan_for_assignment(&sample, &cyclic_assign(3, 1).unwrap(), 17.0).unwrap();
        assert!(rel(sol.value, 6.5) < 1e-12);

        let inst = crate::flow::impossibility_instance();
        let cfg = FlowSolverConfig::default();
        let multi = multi_flow_equal_work(&inst, 9.0, &cfg).unwrap();
        let uni = min_flow_for_energy(&inst, 9.0, &cfg).unwrap();
        assert_eq!(multi.schedule.items(), uni.schedule().items());
    }

    #[test]
    fn last_speeds_equal_across_processors() {
        let inst = Instance::new(&[(0.0, 1.0); 4], 3.0, 2).unwrap();
        let sol = multi_flow_equal_work(&inst, 7.3, &FlowSolverConfig::default()).unwrap();
        let lasts: Vec<f64> = sol
            .schedule
            .lanes()
            .values()
            .map(|lane| lane.last().unwrap().speed)
            .collect();
        assert!(rel(lasts[0], lasts[1]) < 1e-12);
        assert!(rel(sol.schedule.total_energy(), 7.3) < 1e-9);
    }

    #[test]
    fn finish_times_equalize() {
        let inst = Instance::new(&[(0.0, 1.0), (0.2, 1.0), (0.3, 1.0), (1.5, 1.0), (4.0, 1.0)], 2.5, 2).unwrap();
        let sol = multi_makespan_equal_work(&inst, 6.0).unwrap();
        let ends: Vec<f64> = sol.per_processor().iter().map(Schedule::makespan).collect();
        assert!(rel(ends[0], ends[1]) < 1e-7, "{ends:?}");
        assert!(rel(sol.schedule.total_energy(), 6.0) < 1e-9);
    }

    #[test]
    fn unequal_work_rejected() {
        let inst = Instance::new(&[(0.0, 1.0), (0.0, 2.0)], 3.0, 2).unwrap();
        assert!(matches!(multi_makespan_equal_work(&inst, 1.0), Err(Error::UnsupportedInstance(_))));
        assert!(matches!(
            multi_flow_equal_work(&inst, 1.0, &FlowSolverConfig::default()),
            Err(Error::UnsupportedInstance(_))
        ));
    }

    #[test]
    fn partition_to_instance_examples() {
        let (inst, b, t) = partition_to_instance(&PartitionInstance::new(vec![1, 2, 3, 4]).unwrap(), 3.0).unwrap();
        assert_eq!((b, t, inst.processors()), (10.0, 5.0, 2));
        let works: Vec<f64> = inst.jobs().iter().map(|j| j.work).collect();
        assert_eq!(works, vec![1.0, 2.0, 3.0, 4.0]);
        let (_, b, t) = partition_to_instance(&PartitionInstance::new(vec![1]).unwrap(), 3.0).unwrap();
        assert_eq!((b, t), (1.0, 0.5));
        let (_, b, t) = partition_to_instance(&PartitionInstance::new(vec![2, 2]).unwrap(), 3.0).unwrap();
        assert_eq!((b, t), (4.0, 2.0));
    }

    #[test]
    fn partition_decisions() {
        let yes = |v: Vec<u64>| decide_partition_via_schedule(&PartitionInstance::new(v).unwrap()).unwrap();
        assert!(yes(vec![1, 2, 3, 4]));
        assert!(!yes(vec![1, 1, 3]));
        assert!(yes(vec![3, 3, 4, 4, 5, 5]));
        assert!(!yes(vec![1, 1, 4]));
    }

    #[test]
    fn partition_witness_balances() {
        let p = PartitionInstance::new(vec![3, 3, 4, 4, 5, 5]).unwrap();
        let out = solve_partition_via_schedule(&p, 3.0, &OracleConfig::default()).unwrap();
        let (a, b) = out.witness.unwrap();
        assert_eq!(a.iter().sum::<u64>(), 12);
        assert_eq!(b.iter().sum::<u64>(), 12);
    }

    #[test]
    fn partition_validation() {
        assert!(PartitionInstance::new(vec![]).is_err());
        assert!(PartitionInstance::new(vec![1, 0]).is_err());
        let big = PartitionInstance::new(vec![1; 18]).unwrap();
        assert!(matches!(decide_partition_via_schedule(&big), Err(Error::TooLarge { .. })));
    }
}
