use serde::Serialize;

use super::Schedule;
use crate::error::{invalid, Result};
use crate::tol;

/// Outcome of the five structural checks that characterize the optimal
/// uniprocessor makespan schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CanonicalReport {
    /// Every job runs exactly once at one positive speed.
    pub single_speed: bool,
    /// Jobs execute in non-decreasing release order.
    pub release_order: bool,
    /// No idle time between the first release and the last completion.
    pub no_idle: bool,
    /// Jobs sharing a block run at the same speed.
    pub block_constant_speed: bool,
    /// Block speeds never decrease.
    pub nondecreasing_block_speeds: bool,
}

impl CanonicalReport {
    pub fn all(&self) -> bool {
        self.as_array().iter().all(|&b| b)
    }

    pub fn as_array(&self) -> [bool; 5] {
        [
            self.single_speed,
            self.release_order,
            self.no_idle,
            self.block_constant_speed,
            self.nondecreasing_block_speeds,
        ]
    }
}

/// Evaluates the five canonical properties on a uniprocessor schedule.
///
/// Two consecutive jobs share a block when the first completes strictly
/// after the second is released. A completion within tolerance of the next
/// release is a block boundary: speeds may rise there but not fall.
pub fn check_canonical(schedule: &Schedule) -> Result<CanonicalReport> {
    let lanes = schedule.lanes();
    if lanes.len() != 1 {
        return Err(invalid(format!(
            "check_canonical needs a single processor, schedule uses {}",
            lanes.len()
        )));
    }
    let lane = lanes.into_values().next().expect("one lane");

    let mut ids: Vec<usize> = lane.iter().map(|it| it.job.id).collect();
    ids.sort_unstable();
    let single_speed = ids.windows(2).all(|w| w[0] != w[1])
        && lane.iter().all(|it| it.speed > 0.0 && it.speed.is_finite());

    let release_order = lane
        .windows(2)
        .all(|w| !tol::definitely_less(w[1].job.release, w[0].job.release));

    let first_release = lane
        .iter()
        .map(|it| it.job.release)
        .fold(f64::INFINITY, f64::min);
    let no_idle = tol::approx_eq(lane[0].start, first_release)
        && lane
            .windows(2)
            .all(|w| tol::approx_eq(w[1].start, w[0].completion()));

    let mut block_constant_speed = true;
    let mut nondecreasing_block_speeds = true;
    for w in lane.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let same_block = a.completion() > b.job.release + tol::slack(b.job.release);
        if same_block {
            block_constant_speed &= tol::approx_eq(a.speed, b.speed);
        } else {
            nondecreasing_block_speeds &= !tol::definitely_less(b.speed, a.speed);
        }
    }

    Ok(CanonicalReport {
        single_speed,
        release_order,
        no_idle,
        block_constant_speed,
        nondecreasing_block_speeds,
    })
}
