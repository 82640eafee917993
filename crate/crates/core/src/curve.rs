//! The non-dominated energy/makespan curve.
//!
//! Between two consecutive block configurations only the last block changes
//! speed, so on each segment
//!
//! ```text
//! makespan(E) = s + W^(a/(a-1)) * (E - e_fixed)^(-1/(a-1))
//! ```
//!
//! where `s` and `W` are the start and work of the last block and `e_fixed`
//! is the energy of the blocks before it. The curve is built by starting
//! from the configuration for unlimited energy and lowering the budget until
//! the last block has absorbed every job.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::makespan::{run_inc_merge, Block, LastBlock};
use crate::model::Instance;
use crate::tol;

/// One block configuration of the curve and its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSegment {
    /// Number of fixed-speed blocks before the last block; they are the
    /// first `fixed_blocks` entries of [`Frontier::top_blocks`].
    pub fixed_blocks: usize,
    /// Energy consumed by the fixed blocks.
    pub e_fixed: f64,
    /// 1-based position of the first job of the last block.
    pub last_first: usize,
    /// Start time `s` of the last block.
    pub last_start: f64,
    /// Work `W` of the last block.
    pub last_work: f64,
    /// Lower end of the energy range (inclusive, except 0 for the final segment).
    pub e_lo: f64,
    /// Upper end of the energy range (exclusive); `None` means unbounded.
    pub e_hi: Option<f64>,
}

impl CurveSegment {
    fn slack(&self, energy: f64) -> f64 {
        energy - self.e_fixed
    }

    pub fn makespan(&self, energy: f64, alpha: f64) -> f64 {
        let x = self.slack(energy);
        let p = 1.0 / (alpha - 1.0);
        self.last_start + self.last_work * (self.last_work / x).powf(p)
    }

    /// Analytic d(makespan)/dE.
    pub fn derivative(&self, energy: f64, alpha: f64) -> f64 {
        let x = self.slack(energy);
        let p = 1.0 / (alpha - 1.0);
        -p * self.last_work * (self.last_work / x).powf(p) / x
    }

    /// Analytic d²(makespan)/dE².
    pub fn second_derivative(&self, energy: f64, alpha: f64) -> f64 {
        let x = self.slack(energy);
        let p = 1.0 / (alpha - 1.0);
        p * (p + 1.0) * self.last_work * (self.last_work / x).powf(p) / (x * x)
    }

    /// Energy at which this configuration reaches `makespan`.
    pub fn energy_for(&self, makespan: f64, alpha: f64) -> f64 {
        let d = makespan - self.last_start;
        self.e_fixed + self.last_work.powf(alpha) / d.powf(alpha - 1.0)
    }

    pub fn contains(&self, energy: f64) -> bool {
        energy >= self.e_lo && self.e_hi.map_or(true, |hi| energy < hi)
    }
}

/// A sampled point of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub energy: f64,
    pub makespan: f64,
    pub d1: f64,
    pub d2: f64,
    /// Index into [`Frontier::segments`].
    pub segment: usize,
}

/// Every non-dominated schedule of a uniprocessor instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    alpha: f64,
    /// Fixed blocks of the unlimited-energy configuration.
    top_blocks: Vec<Block>,
    /// Ordered by decreasing energy; together they cover `(0, inf)`.
    segments: Vec<CurveSegment>,
    /// Energies where the configuration changes, strictly decreasing.
    breakpoints: Vec<f64>,
}

impl Frontier {
    pub fn build(instance: &Instance) -> Result<Self> {
        if instance.processors() != 1 {
            return Err(invalid("the frontier is defined for uniprocessor instances"));
        }
        let alpha = instance.alpha();
        let releases = instance.releases();
        let (mut stack, _) = run_inc_merge(instance, LastBlock::Unbounded);
        let last = stack.pop().expect("at least one job");

        let top_blocks: Vec<Block> = stack
            .iter()
            .map(|b| Block {
                first: b.first + 1,
                last: b.last + 1,
                start: releases[b.first],
                speed: b.speed,
                work: b.work,
                fixed: true,
            })
            .collect();

        let mut segments = Vec::new();
        let mut breakpoints = Vec::new();
        let mut e_fixed = last.energy_below;
        let mut first = last.first;
        let mut work = last.work;
        let mut e_hi: Option<f64> = None;
        let mut k = stack.len();
        loop {
            let mut segment = CurveSegment {
                fixed_blocks: k,
                e_fixed,
                last_first: first + 1,
                last_start: releases[first],
                last_work: work,
                e_lo: 0.0,
                e_hi,
            };
            if k == 0 {
                segments.push(segment);
                break;
            }
            let pred = stack[k - 1];
            // the last block's budget-driven speed meets its predecessor's forced speed
            let threshold = e_fixed + work * pred.speed.powf(alpha - 1.0);
            let nonempty = e_hi.map_or(true, |hi| tol::definitely_less(threshold, hi));
            if nonempty {
                segment.e_lo = threshold;
                segments.push(segment);
                breakpoints.push(threshold);
                e_hi = Some(threshold);
            }
            e_fixed = pred.energy_below;
            work += pred.work;
            first = pred.first;
            k -= 1;
        }

        Ok(Self {
            alpha,
            top_blocks,
            segments,
            breakpoints,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn segments(&self) -> &[CurveSegment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn top_blocks(&self) -> &[Block] {
        &self.top_blocks
    }

    /// Fixed blocks of `segment`.
    pub fn fixed_blocks_of(&self, segment: &CurveSegment) -> &[Block] {
        &self.top_blocks[..segment.fixed_blocks]
    }

    /// Infimum of achievable makespans (reached only with unlimited energy).
    pub fn makespan_lower_bound(&self) -> f64 {
        self.segments[0].last_start
    }

    /// Index of the segment whose range contains `energy`. At a breakpoint
    /// this is the higher-energy segment.
    pub fn segment_index(&self, energy: f64) -> Result<usize> {
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(invalid(format!("energy must be positive and finite, got {energy}")));
        }
        Ok(self.segments.partition_point(|s| s.e_lo > energy))
    }

    pub fn segment_at(&self, energy: f64) -> Result<&CurveSegment> {
        Ok(&self.segments[self.segment_index(energy)?])
    }

    pub fn makespan(&self, energy: f64) -> Result<f64> {
        Ok(self.segment_at(energy)?.makespan(energy, self.alpha))
    }

    /// Least energy reaching `makespan`; the inverse of [`Frontier::makespan`].
    pub fn energy_for_makespan(&self, makespan: f64) -> Result<f64> {
        let bound = self.makespan_lower_bound();
        if !(makespan.is_finite() && makespan > bound) {
            return Err(Error::InfeasibleDeadline {
                deadline: makespan,
                bound,
            });
        }
        // makespan at each segment's lower energy end grows along the list
        let idx = self.segments.partition_point(|s| {
            s.e_lo > 0.0 && s.makespan(s.e_lo, self.alpha) < makespan
        });
        Ok(self.segments[idx].energy_for(makespan, self.alpha))
    }

    pub fn point(&self, energy: f64) -> Result<CurvePoint> {
        let idx = self.segment_index(energy)?;
        let s = &self.segments[idx];
        Ok(CurvePoint {
            energy,
            makespan: s.makespan(energy, self.alpha),
            d1: s.derivative(energy, self.alpha),
            d2: s.second_derivative(energy, self.alpha),
            segment: idx,
        })
    }

    /// `count` evenly spaced energies on `[e_lo, e_hi]` plus every breakpoint
    /// inside that range, in increasing energy order.
    pub fn sample(&self, e_lo: f64, e_hi: f64, count: usize) -> Result<Vec<CurvePoint>> {
        if !(e_lo > 0.0 && e_lo < e_hi && e_hi.is_finite()) {
            return Err(invalid(format!("invalid energy range [{e_lo}, {e_hi}]")));
        }
        if count < 2 {
            return Err(invalid("sample count must be at least 2"));
        }
        let step = (e_hi - e_lo) / (count - 1) as f64;
        let mut energies: Vec<f64> = (0..count)
            .map(|i| if i + 1 == count { e_hi } else { e_lo + step * i as f64 })
            .collect();
        let inside: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|&b| b >= e_lo - tol::slack(e_lo) && b <= e_hi + tol::slack(e_hi))
            .collect();
        // breakpoints replace grid points that coincide with them
        energies.retain(|&e| !inside.iter().any(|&b| tol::approx_eq(b, e)));
        energies.extend(inside);
        energies.sort_by(f64::total_cmp);
        energies.into_iter().map(|e| self.point(e)).collect()
    }
}

/// Builds the frontier of `instance`.
pub fn build_frontier(instance: &Instance) -> Result<Frontier> {
    Frontier::build(instance)
}

/// Makespan of the non-dominated schedule using `energy`.
pub fn eval_makespan(frontier: &Frontier, energy: f64) -> Result<f64> {
    frontier.makespan(energy)
}

pub fn sample_frontier(frontier: &Frontier, e_lo: f64, e_hi: f64, count: usize) -> Result<Vec<CurvePoint>> {
    frontier.sample(e_lo, e_hi, count)
}
