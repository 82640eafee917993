use std::collections::{BTreeMap, HashMap};

use super::{Instance, Job, PowerModel};
use crate::error::{invalid, Result};
use crate::tol;

/// One job execution: constant speed from `start` on `processor` (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledJob {
    pub job: Job,
    pub start: f64,
    pub speed: f64,
    pub processor: usize,
}

impl ScheduledJob {
    pub fn completion(&self) -> f64 {
        self.start + self.job.work / self.speed
    }

    pub fn duration(&self) -> f64 {
        self.job.work / self.speed
    }
}

/// A complete schedule of an instance.
///
/// Every job appears exactly once and executions on one processor never overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    items: Vec<ScheduledJob>,
    model: PowerModel,
    processors: usize,
}

impl Schedule {
    /// Validates `items` against `instance`.
    pub fn new(instance: &Instance, items: Vec<ScheduledJob>) -> Result<Self> {
        let jobs = instance.jobs();
        let contiguous = jobs.iter().enumerate().all(|(i, j)| j.id == i + 1);
        let index: HashMap<usize, usize> = if contiguous {
            HashMap::new()
        } else {
            jobs.iter().enumerate().map(|(i, j)| (j.id, i)).collect()
        };
        let mut seen = vec![false; instance.len()];
        for item in &items {
            let pos = if contiguous {
                Some(item.job.id.wrapping_sub(1)).filter(|&p| p < jobs.len())
            } else {
                index.get(&item.job.id).copied()
            }
            .ok_or_else(|| invalid(format!("job {} is not part of the instance", item.job.id)))?;
            if seen[pos] {
                return Err(invalid(format!("job {} scheduled twice", item.job.id)));
            }
            seen[pos] = true;
            let expected = instance.jobs()[pos];
            if expected.release != item.job.release || expected.work != item.job.work {
                return Err(invalid(format!("job {} does not match the instance", item.job.id)));
            }
        }
        if let Some(pos) = seen.iter().position(|s| !s) {
            return Err(invalid(format!("job {} is not scheduled", instance.jobs()[pos].id)));
        }
        Self::from_parts(items, instance.model(), instance.processors())
    }

    /// Checks per-item and per-processor validity without an instance.
    pub(crate) fn from_parts(
        items: Vec<ScheduledJob>,
        model: PowerModel,
        processors: usize,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(invalid("schedule has no items"));
        }
        for item in &items {
            if !(item.speed > 0.0 && item.speed.is_finite()) {
                return Err(invalid(format!("job {}: speed must be positive, got {}", item.job.id, item.speed)));
            }
            if !item.start.is_finite() || tol::definitely_less(item.start, item.job.release) {
                return Err(invalid(format!(
                    "job {} starts at {} before its release {}",
                    item.job.id, item.start, item.job.release
                )));
            }
            if item.processor == 0 || item.processor > processors {
                return Err(invalid(format!("job {}: processor {} out of range", item.job.id, item.processor)));
            }
        }
        let schedule = Self { items, model, processors };
        for lane in schedule.lanes().values() {
            for pair in lane.windows(2) {
                if tol::definitely_less(pair[1].start, pair[0].completion()) {
                    return Err(invalid(format!(
                        "jobs {} and {} overlap on processor {}",
                        pair[0].job.id, pair[1].job.id, pair[0].processor
                    )));
                }
            }
        }
        Ok(schedule)
    }

    pub fn items(&self) -> &[ScheduledJob] {
        &self.items
    }

    pub fn model(&self) -> PowerModel {
        self.model
    }

    pub fn alpha(&self) -> f64 {
        self.model.alpha()
    }

    pub fn processors(&self) -> usize {
        self.processors
    }

    pub fn item(&self, job_id: usize) -> Option<&ScheduledJob> {
        self.items.iter().find(|it| it.job.id == job_id)
    }

    /// Items grouped by processor, each lane ordered by start time.
    pub fn lanes(&self) -> BTreeMap<usize, Vec<ScheduledJob>> {
        let mut lanes: BTreeMap<usize, Vec<ScheduledJob>> = BTreeMap::new();
        for item in &self.items {
            lanes.entry(item.processor).or_default().push(*item);
        }
        for lane in lanes.values_mut() {
            lane.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.job.id.cmp(&b.job.id)));
        }
        lanes
    }

    /// One schedule per non-empty processor, keeping processor labels.
    pub fn split_by_processor(&self) -> Vec<Schedule> {
        self.lanes()
            .into_values()
            .map(|items| Schedule {
                items,
                model: self.model,
                processors: self.processors,
            })
            .collect()
    }

    /// Concatenates per-processor schedules, relabelling each part's items
    /// with the paired processor.
    pub(crate) fn combine(parts: Vec<(usize, Schedule)>, model: PowerModel, processors: usize) -> Result<Self> {
        let mut items = Vec::new();
        for (p, part) in parts {
            items.extend(part.items.into_iter().map(|mut it| {
                it.processor = p;
                it
            }));
        }
        items.sort_by_key(|it| it.job.id);
        Self::from_parts(items, model, processors)
    }

    pub fn makespan(&self) -> f64 {
        self.items
            .iter()
            .map(ScheduledJob::completion)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total_flow(&self) -> f64 {
        self.items.iter().map(|it| it.completion() - it.job.release).sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.items
            .iter()
            .map(|it| self.model.run_energy(it.job.work, it.speed))
            .sum()
    }
}

/// Latest completion time.
pub fn makespan(schedule: &Schedule) -> Result<f64> {
    nonempty(schedule)?;
    Ok(schedule.makespan())
}

/// Sum over jobs of completion minus release.
pub fn total_flow(schedule: &Schedule) -> Result<f64> {
    nonempty(schedule)?;
    Ok(schedule.total_flow())
}

/// Sum of per-job run energies.
pub fn total_energy(schedule: &Schedule) -> Result<f64> {
    nonempty(schedule)?;
    Ok(schedule.total_energy())
}

fn nonempty(schedule: &Schedule) -> Result<()> {
    if schedule.items.is_empty() {
        Err(invalid("empty schedule"))
    } else {
        Ok(())
    }
}
