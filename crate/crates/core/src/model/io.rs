//! JSON shapes for instances and schedules.

use serde::{Deserialize, Serialize};

use super::{Instance, Schedule, ScheduledJob};
use crate::error::{invalid, Result};

/// Exponent assumed when an instance file omits `alpha`.
pub const DEFAULT_ALPHA: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobFile {
    pub release: f64,
    pub work: f64,
}

/// `{"alpha": 3, "processors": 1, "jobs": [{"release": 0, "work": 5}, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_processors")]
    pub processors: usize,
    pub jobs: Vec<JobFile>,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_processors() -> usize {
    1
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<Instance> {
        let jobs: Vec<(f64, f64)> = self.jobs.iter().map(|j| (j.release, j.work)).collect();
        Instance::new(&jobs, self.alpha, self.processors)
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        Self {
            alpha: inst.alpha(),
            processors: inst.processors(),
            jobs: inst
                .jobs()
                .iter()
                .map(|j| JobFile { release: j.release, work: j.work })
                .collect(),
        }
    }
}

impl Instance {
    /// Parses and validates an instance; jobs may be listed in any order.
    pub fn from_json_str(text: &str) -> std::result::Result<Self, InstanceLoadError> {
        let file: InstanceFile = serde_json::from_str(text).map_err(InstanceLoadError::Json)?;
        file.to_instance().map_err(InstanceLoadError::Invalid)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceLoadError {
    #[error("malformed instance JSON: {0}")]
    Json(serde_json::Error),
    #[error("{0}")]
    Invalid(crate::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledJobReport {
    pub job: usize,
    pub start: f64,
    pub speed: f64,
    pub completion: f64,
}

/// Serialized schedule: one array per processor plus summary metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub processors: Vec<Vec<ScheduledJobReport>>,
    pub makespan: f64,
    pub total_flow: f64,
    pub energy: f64,
}

impl From<&Schedule> for ScheduleReport {
    fn from(s: &Schedule) -> Self {
        let lanes = s.lanes();
        let processors = (1..=s.processors())
            .map(|p| {
                lanes
                    .get(&p)
                    .map(|lane| {
                        lane.iter()
                            .map(|it| ScheduledJobReport {
                                job: it.job.id,
                                start: it.start,
                                speed: it.speed,
                                completion: it.completion(),
                            })
                            .collect()
                    })
                    .unwrap_or_default()
            })
            .collect();
        Self {
            processors,
            makespan: s.makespan(),
            total_flow: s.total_flow(),
            energy: s.total_energy(),
        }
    }
}

impl ScheduleReport {
    /// Rebuilds and revalidates the schedule against `instance`.
    ///
    /// Reported completions and summary metrics must agree with the values
    /// recomputed from starts and speeds.
    pub fn to_schedule(&self, instance: &Instance) -> Result<Schedule> {
        if self.processors.len() != instance.processors() {
            return Err(invalid(format!(
                "report has {} processors, instance has {}",
                self.processors.len(),
                instance.processors()
            )));
        }
        let mut items = Vec::new();
        for (p, lane) in self.processors.iter().enumerate() {
            for rec in lane {
                let job = *instance
                    .job_by_id(rec.job)
                    .ok_or_else(|| invalid(format!("unknown job {}", rec.job)))?;
                let item = ScheduledJob {
                    job,
                    start: rec.start,
                    speed: rec.speed,
                    processor: p + 1,
                };
                if !crate::tol::approx_eq(item.completion(), rec.completion) {
                    return Err(invalid(format!("job {}: completion does not match start and speed", rec.job)));
                }
                items.push(item);
            }
        }
        let schedule = Schedule::new(instance, items)?;
        let checks = [
            ("makespan", schedule.makespan(), self.makespan),
            ("total_flow", schedule.total_flow(), self.total_flow),
            ("energy", schedule.total_energy(), self.energy),
        ];
        for (name, got, reported) in checks {
            if !crate::tol::approx_eq(got, reported) {
                return Err(invalid(format!("{name} {reported} disagrees with recomputed {got}")));
            }
        }
        Ok(schedule)
    }
}
