//! Uniprocessor makespan under an energy budget (IncMerge) and its inverse.
//!
//! The optimal schedule splits the release-ordered jobs into blocks. Every
//! block starts at the release of its first job and runs at one speed; a
//! block other than the last finishes exactly when the next block's first
//! job is released, so its speed is forced by the releases. The last block
//! spends whatever energy the earlier blocks leave over. Block speeds are
//! non-decreasing, which is what IncMerge restores by merging.

use serde::Serialize;

use crate::curve::Frontier;
use crate::error::{invalid, Error, Result};
use crate::model::{check_budget, same_release, Instance, Schedule, ScheduledJob};
use crate::tol;

/// A maximal run of jobs sharing one speed. `first` and `last` are 1-based
/// positions in the instance's release order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Block {
    pub first: usize,
    pub last: usize,
    pub start: f64,
    pub speed: f64,
    pub work: f64,
    /// Speed forced by the next release rather than set by the budget.
    pub fixed: bool,
}

impl Block {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn completion(&self) -> f64 {
        self.start + self.work / self.speed
    }
}

/// IncMerge result: the final blocks and how many merges it took.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRun {
    pub blocks: Vec<Block>,
    pub merges: usize,
}

impl BlockRun {
    pub fn to_schedule(&self, instance: &Instance) -> Result<Schedule> {
        let jobs = instance.jobs();
        let mut items = Vec::with_capacity(jobs.len());
        for block in &self.blocks {
            let mut t = block.start;
            for job in &jobs[block.first - 1..block.last] {
                items.push(ScheduledJob {
                    job: *job,
                    start: t,
                    speed: block.speed,
                    processor: 1,
                });
                t += job.work / block.speed;
            }
        }
        Schedule::from_parts(items, instance.model(), 1)
    }
}

/// Block on the IncMerge stack; positions are 0-based.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StackBlock {
    pub first: usize,
    pub last: usize,
    pub work: f64,
    pub speed: f64,
    /// Energy of all blocks beneath this one.
    pub energy_below: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum LastBlock {
    /// The last block spends the remaining budget.
    Budget(f64),
    /// Unlimited energy: the last block is never merged for speed reasons.
    Unbounded,
}

/// Speed of a non-last block `first..=last`: its work spread up to the next
/// release. Infinite when the next release coincides with the block start.
fn forced_speed(releases: &[f64], work: f64, first: usize, last: usize) -> f64 {
    let (start, next) = (releases[first], releases[last + 1]);
    if same_release(start, next) || next <= start {
        f64::INFINITY
    } else {
        work / (next - start)
    }
}

pub(crate) fn run_inc_merge(instance: &Instance, last_block: LastBlock) -> (Vec<StackBlock>, usize) {
    let model = instance.model();
    let releases = instance.releases();
    let n = releases.len();
    let mut stack: Vec<StackBlock> = Vec::new();
    let mut merges = 0usize;

    let speed_of = |b: &StackBlock| -> f64 {
        if b.last + 1 < n {
            forced_speed(&releases, b.work, b.first, b.last)
        } else {
            match last_block {
                LastBlock::Budget(energy) => {
                    let remaining = energy - b.energy_below;
                    if remaining > 0.0 {
                        model.run_speed(b.work, remaining)
                    } else {
                        0.0
                    }
                }
                LastBlock::Unbounded => f64::INFINITY,
            }
        }
    };

    for (j, job) in instance.jobs().iter().enumerate() {
        let energy_below = stack
            .last()
            .map(|b| b.energy_below + model.run_energy(b.work, b.speed))
            .unwrap_or(0.0);
        let mut block = StackBlock {
            first: j,
            last: j,
            work: job.work,
            speed: 0.0,
            energy_below,
        };
        block.speed = speed_of(&block);
        stack.push(block);

        while stack.len() >= 2 {
            let top = stack[stack.len() - 1];
            let prev = stack[stack.len() - 2];
            let unbounded_last = top.last + 1 == n && matches!(last_block, LastBlock::Unbounded);
            let merge = if unbounded_last {
                prev.speed.is_infinite()
            } else {
                tol::definitely_less(top.speed, prev.speed)
            };
            if !merge {
                break;
            }
            stack.pop();
            let mut merged = StackBlock {
                first: prev.first,
                last: top.last,
                work: prev.work + top.work,
                speed: 0.0,
                energy_below: prev.energy_below,
            };
            merged.speed = speed_of(&merged);
            *stack.last_mut().expect("nonempty") = merged;
            merges += 1;
        }
    }
    (stack, merges)
}

fn check_uniprocessor(instance: &Instance) -> Result<()> {
    if instance.processors() != 1 {
        return Err(invalid(format!(
            "uniprocessor solver called on a {}-processor instance",
            instance.processors()
        )));
    }
    Ok(())
}

/// Speed `(w_i + ... + w_j) / (r_{j+1} - r_i)` of a non-last block `(i, j)`, 1-based.
pub fn fixed_block_speed(instance: &Instance, i: usize, j: usize) -> Result<f64> {
    let n = instance.len();
    if i == 0 || i > j || j > n {
        return Err(invalid(format!("block ({i}, {j}) is out of range for {n} jobs")));
    }
    if j == n {
        return Err(invalid("the last block has no release-forced speed"));
    }
    let jobs = instance.jobs();
    let (start, next) = (jobs[i - 1].release, jobs[j].release);
    if same_release(start, next) {
        return Err(Error::DegenerateRelease {
            first: i,
            next: j + 1,
            release: start,
        });
    }
    let work: f64 = jobs[i - 1..j].iter().map(|job| job.work).sum();
    Ok(work / (next - start))
}

/// Runs IncMerge and returns the blocks of the optimal schedule.
pub fn inc_merge_blocks(instance: &Instance, energy_budget: f64) -> Result<BlockRun> {
    check_uniprocessor(instance)?;
    check_budget(energy_budget)?;
    let releases = instance.releases();
    let (stack, merges) = run_inc_merge(instance, LastBlock::Budget(energy_budget));
    let n = instance.len();
    let blocks = stack
        .iter()
        .map(|b| Block {
            first: b.first + 1,
            last: b.last + 1,
            start: releases[b.first],
            speed: b.speed,
            work: b.work,
            fixed: b.last + 1 < n,
        })
        .collect::<Vec<_>>();
    if blocks.iter().any(|b| !(b.speed > 0.0 && b.speed.is_finite())) {
        return Err(Error::Internal(format!("IncMerge produced a non-positive block speed at budget {energy_budget}")));
    }
    Ok(BlockRun { blocks, merges })
}

/// Minimum-makespan schedule that uses exactly `energy_budget`.
pub fn inc_merge(instance: &Instance, energy_budget: f64) -> Result<Schedule> {
    inc_merge_blocks(instance, energy_budget)?.to_schedule(instance)
}

/// Least energy whose optimal schedule finishes by `deadline`.
pub fn energy_for_deadline(instance: &Instance, deadline: f64) -> Result<f64> {
    check_uniprocessor(instance)?;
    Frontier::build(instance)?.energy_for_makespan(deadline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_canonical;

    fn sample() -> Instance {
        Instance::uniprocessor(&[(0.0, 5.0), (5.0, 2.0), (6.0, 1.0)], 3.0).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        tol::approx_eq(a, b)
    }

    #[test]
    fn fixed_block_speed_examples() {
        let inst = sample();
        assert!(close(fixed_block_speed(&inst, 1, 1).unwrap(), 1.0));
        assert!(close(fixed_block_speed(&inst, 2, 2).unwrap(), 2.0));
        assert!(close(fixed_block_speed(&inst, 1, 2).unwrap(), 7.0 / 6.0));
    }

    #[test]
    fn fixed_block_speed_errors() {
        let inst = sample();
        assert!(matches!(fixed_block_speed(&inst, 1, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(fixed_block_speed(&inst, 2, 1), Err(Error::InvalidArgument(_))));
        let tied = Instance::uniprocessor(&[(0.0, 1.0), (0.0, 1.0), (1.0, 1.0)], 3.0).unwrap();
        assert!(matches!(fixed_block_speed(&tied, 1, 1), Err(Error::DegenerateRelease { .. })));
    }

    #[test]
    fn sample_instance_at_breakpoint_17() {
        let run = inc_merge_blocks(&sample(), 17.0).unwrap();
        let speeds: Vec<f64> = run.blocks.iter().map(|b| b.speed).collect();
        assert_eq!(run.blocks.len(), 3);
        assert!(close(speeds[0], 1.0) && close(speeds[1], 2.0) && close(speeds[2], 2.0));
        let s = run.to_schedule(&sample()).unwrap();
        assert!(close(s.makespan(), 6.5));
        assert!(close(s.total_energy(), 17.0));
    }

    #[test]
    fn sample_instance_single_block() {
        let run = inc_merge_blocks(&sample(), 2.0).unwrap();
        assert_eq!(run.blocks.len(), 1);
        assert!(close(run.blocks[0].speed, 0.5));
        let s = run.to_schedule(&sample()).unwrap();
        assert!(close(s.makespan(), 16.0));
        assert!(check_canonical(&s).unwrap().all());
    }

    #[test]
    fn single_job() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0)], 3.0).unwrap();
        let s = inc_merge(&inst, 1.0).unwrap();
        assert_eq!(s.items()[0].speed, 1.0);
        assert_eq!(s.makespan(), 1.0);
    }

    #[test]
    fn tied_releases_merge() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0), (0.0, 1.0), (0.0, 2.0), (3.0, 1.0)], 2.0).unwrap();
        for e in [0.5, 3.0, 50.0] {
            let run = inc_merge_blocks(&inst, e).unwrap();
            assert_eq!(run.blocks[0].first, 1);
            assert!(run.blocks[0].last >= 3);
            let s = run.to_schedule(&inst).unwrap();
            assert!(check_canonical(&s).unwrap().all());
            assert!(close(s.total_energy(), e));
        }
    }

    #[test]
    fn nonpositive_budget_rejected() {
        assert!(inc_merge(&sample(), 0.0).is_err());
        assert!(inc_merge(&sample(), -1.0).is_err());
        assert!(inc_merge(&sample(), f64::NAN).is_err());
    }

    #[test]
    fn energy_for_deadline_examples() {
        let inst = sample();
        assert!(close(energy_for_deadline(&inst, 6.5).unwrap(), 17.0));
        assert!(close(energy_for_deadline(&inst, 8.0).unwrap(), 8.0));
        assert!(close(energy_for_deadline(&inst, 16.0).unwrap(), 2.0));
    }

    #[test]
    fn infeasible_deadline() {
        let inst = sample();
        assert!(matches!(
            energy_for_deadline(&inst, 6.0),
            Err(Error::InfeasibleDeadline { .. })
        ));
        assert!(matches!(
            energy_for_deadline(&inst, 3.0),
            Err(Error::InfeasibleDeadline { .. })
        ));
    }

    #[test]
    fn multiprocessor_instance_rejected() {
        let inst = sample().with_processors(2).unwrap();
        assert!(inc_merge(&inst, 5.0).is_err());
    }
}
