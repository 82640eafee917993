//! Jobs, instances, the power-law energy model and schedules.

mod canonical;
mod io;
mod schedule;

pub use canonical::{check_canonical, CanonicalReport};
pub use io::{InstanceFile, InstanceLoadError, JobFile, ScheduleReport, ScheduledJobReport, DEFAULT_ALPHA};
pub use schedule::{makespan, total_energy, total_flow, Schedule, ScheduledJob};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tol;

/// A job with a release time and a work requirement.
///
/// `id` is the 1-based position of the job in its release-sorted instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: usize,
    pub release: f64,
    pub work: f64,
}

/// Power is `speed^alpha`; running `w` units of work at speed `s` costs `w * s^(alpha - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    alpha: f64,
}

impl PowerModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(invalid(format!("alpha must be a finite number > 1, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Energy of running `work` at constant `speed`.
    pub fn energy_of_run(&self, work: f64, speed: f64) -> Result<f64> {
        if !(work > 0.0 && work.is_finite()) {
            return Err(invalid(format!("work must be positive, got {work}")));
        }
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(invalid(format!("speed must be positive, got {speed}")));
        }
        Ok(self.run_energy(work, speed))
    }

    /// Speed at which `work` consumes exactly `energy`.
    pub fn speed_for_energy(&self, work: f64, energy: f64) -> Result<f64> {
        if !(work > 0.0 && work.is_finite()) {
            return Err(invalid(format!("work must be positive, got {work}")));
        }
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(invalid(format!("energy must be positive, got {energy}")));
        }
        Ok(self.run_speed(work, energy))
    }

    /// Energy needed to finish `work` in `duration` at constant speed: `w^a / d^(a-1)`.
    pub fn energy_for_duration(&self, work: f64, duration: f64) -> f64 {
        work.powf(self.alpha) / duration.powf(self.alpha - 1.0)
    }

    #[inline]
    pub(crate) fn run_energy(&self, work: f64, speed: f64) -> f64 {
        work * speed.powf(self.alpha - 1.0)
    }

    #[inline]
    pub(crate) fn run_speed(&self, work: f64, energy: f64) -> f64 {
        (energy / work).powf(1.0 / (self.alpha - 1.0))
    }
}

/// Energy of running `work` at `speed` under `model`.
pub fn energy_of_run(work: f64, speed: f64, model: PowerModel) -> Result<f64> {
    model.energy_of_run(work, speed)
}

/// Inverse of [`energy_of_run`] in the speed argument.
pub fn speed_for_energy(work: f64, energy: f64, model: PowerModel) -> Result<f64> {
    model.speed_for_energy(work, energy)
}

/// A validated problem instance: jobs sorted by release (ties by input order).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    jobs: Vec<Job>,
    model: PowerModel,
    processors: usize,
}

impl Instance {
    /// Builds an instance from `(release, work)` pairs in any order.
    pub fn new(jobs: &[(f64, f64)], alpha: f64, processors: usize) -> Result<Self> {
        let model = PowerModel::new(alpha)?;
        if jobs.is_empty() {
            return Err(invalid("instance has no jobs"));
        }
        if processors == 0 {
            return Err(invalid("processor count must be positive"));
        }
        for (i, &(release, work)) in jobs.iter().enumerate() {
            if !(release.is_finite() && release >= 0.0) {
                return Err(invalid(format!("job {}: release must be finite and >= 0, got {release}", i + 1)));
            }
            if !(work.is_finite() && work > 0.0) {
                return Err(invalid(format!("job {}: work must be finite and > 0, got {work}", i + 1)));
            }
        }
        let mut order: Vec<usize> = (0..jobs.len()).collect();
        if !jobs.windows(2).all(|w| w[0].0 <= w[1].0) {
            order.sort_by(|&a, &b| jobs[a].0.total_cmp(&jobs[b].0));
        }
        let jobs = order
            .into_iter()
            .enumerate()
            .map(|(pos, i)| Job {
                id: pos + 1,
                release: jobs[i].0,
                work: jobs[i].1,
            })
            .collect();
        Ok(Self { jobs, model, processors })
    }

    /// Uniprocessor instance.
    pub fn uniprocessor(jobs: &[(f64, f64)], alpha: f64) -> Result<Self> {
        Self::new(jobs, alpha, 1)
    }

    /// Sub-instance holding the given jobs (by id), keeping their ids.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        if ids.is_empty() {
            return Err(invalid("empty job subset"));
        }
        let mut jobs = Vec::with_capacity(ids.len());
        for &id in ids {
            let job = self
                .job_by_id(id)
                .ok_or_else(|| invalid(format!("no job with id {id}")))?;
            jobs.push(*job);
        }
        jobs.sort_by(|a, b| a.release.total_cmp(&b.release).then(a.id.cmp(&b.id)));
        Ok(Self {
            jobs,
            model: self.model,
            processors: 1,
        })
    }

    pub fn with_processors(&self, processors: usize) -> Result<Self> {
        if processors == 0 {
            return Err(invalid("processor count must be positive"));
        }
        Ok(Self {
            processors,
            ..self.clone()
        })
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.model.alpha()
    }

    pub fn model(&self) -> PowerModel {
        self.model
    }

    pub fn processors(&self) -> usize {
        self.processors
    }

    pub fn job_by_id(&self, id: usize) -> Option<&Job> {
        match self.jobs.get(id.wrapping_sub(1)) {
            Some(job) if job.id == id => Some(job),
            _ => self.jobs.iter().find(|j| j.id == id),
        }
    }

    pub fn total_work(&self) -> f64 {
        self.jobs.iter().map(|j| j.work).sum()
    }

    pub fn last_release(&self) -> f64 {
        self.jobs.last().map(|j| j.release).unwrap_or(0.0)
    }

    /// The common work requirement if every job needs the same work.
    pub fn equal_work(&self) -> Option<f64> {
        let w = self.jobs[0].work;
        self.jobs
            .iter()
            .all(|j| (j.work - w).abs() <= 1e-12 * w)
            .then_some(w)
    }

    pub(crate) fn releases(&self) -> Vec<f64> {
        self.jobs.iter().map(|j| j.release).collect()
    }
}

pub(crate) fn check_budget(energy: f64) -> Result<()> {
    if energy > 0.0 && energy.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("energy budget must be positive and finite, got {energy}")))
    }
}

pub(crate) fn same_release(a: f64, b: f64) -> bool {
    tol::approx_eq(a, b)
}
