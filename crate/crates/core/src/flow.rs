//! Minimum total flow for equal-work jobs on one processor.
//!
//! Fix the speed `sigma_n` of the last job. Every other job's speed is then
//! `sigma_i = m_i^(1/alpha) * sigma_n` for a multiplier `m_i >= 1`:
//!
//! * a job finishing before the next release has `m_i = 1`;
//! * a job finishing after the next release has `m_i = m_{i+1} + 1`
//!   (equivalently `sigma_i^a = sigma_{i+1}^a + sigma_n^a`);
//! * a job finishing exactly at the next release has `1 <= m_i <= m_{i+1} + 1`,
//!   with `m_i` chosen so the completion lands on the release.
//!
//! For a given `sigma_n` these rules determine a unique schedule, the
//! minimizer of `flow + lambda * energy` for the matching multiplier
//! `lambda`. Its energy increases with `sigma_n`, so the budget is met by
//! bisection on `sigma_n`.
//!
//! The schedule is built in two passes. Going backwards, the multiplier of
//! job `k` is tabulated as a piecewise function of the time `t` at which
//! `k` starts; each piece records the length of the chain that `k` heads and
//! whether that chain ends pinned to a release. Going forwards from the first
//! release, the piece containing each chain's actual start fixes the chain.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{check_budget, Instance, Schedule, ScheduledJob};

/// Tolerances of the flow solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSolverConfig {
    /// Relative tolerance on matching the energy budget.
    pub epsilon_energy: f64,
    /// Relative width at which pinned tail speeds are accepted.
    pub epsilon_speed: f64,
    pub max_iterations: usize,
}

impl Default for FlowSolverConfig {
    fn default() -> Self {
        Self {
            epsilon_energy: 1e-9,
            epsilon_speed: 1e-12,
            max_iterations: 200,
        }
    }
}

impl FlowSolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon_energy > 0.0 && self.epsilon_speed > 0.0 && self.max_iterations > 0) {
            return Err(invalid("flow solver tolerances and iteration cap must be positive"));
        }
        Ok(())
    }
}

/// A maximal run of jobs where each job except the last finishes after the
/// next release. Positions are 1-based within the (sub-)instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowChain {
    pub first: usize,
    pub last: usize,
    pub start: f64,
    pub tail_speed: f64,
    /// The last job completes exactly at the next release.
    pub pinned: bool,
}

/// Which speed relation holds between job `i` and job `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `C_i < r_{i+1}`: `sigma_i = sigma_n`.
    Gap,
    /// `C_i > r_{i+1}`: `sigma_i^a = sigma_{i+1}^a + sigma_n^a`.
    Overlap,
    /// `C_i = r_{i+1}`: `sigma_n^a <= sigma_i^a <= sigma_{i+1}^a + sigma_n^a`.
    Pinned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationCheck {
    /// 1-based position of job `i` (the pair is `i`, `i + 1`).
    pub job: usize,
    pub relation: Relation,
    pub residual: f64,
}

/// Schedule determined by one tail speed.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSchedule {
    pub sigma_n: f64,
    pub schedule: Schedule,
    pub chains: Vec<FlowChain>,
}

impl TailSchedule {
    pub fn energy(&self) -> f64 {
        self.schedule.total_energy()
    }

    /// Relation between job `i` (1-based) and its successor.
    pub fn relation(&self, i: usize) -> Option<Relation> {
        let chain = self.chains.iter().find(|c| c.first <= i && i <= c.last)?;
        let n = self.chains.last()?.last;
        if i >= n {
            return None;
        }
        Some(if i < chain.last {
            Relation::Overlap
        } else if chain.pinned {
            Relation::Pinned
        } else {
            Relation::Gap
        })
    }

    /// Residual of the applicable relation for every consecutive pair.
    pub fn relations(&self) -> Vec<RelationCheck> {
        let items = lane(&self.schedule);
        let alpha = self.schedule.alpha();
        let sn = self.sigma_n;
        let sn_a = sn.powf(alpha);
        let mut out = Vec::new();
        for i in 0..items.len().saturating_sub(1) {
            let (a, b) = (&items[i], &items[i + 1]);
            let relation = self.relation(i + 1).expect("non-final job");
            let (sa, sb) = (a.speed.powf(alpha), b.speed.powf(alpha));
            let next = b.job.release;
            let residual = match relation {
                Relation::Gap => {
                    let late = (a.completion() - next).max(0.0) / next.abs().max(1.0);
                    ((a.speed - sn).abs() / sn).max(late)
                }
                Relation::Overlap => {
                    let early = (next - a.completion()).max(0.0) / next.abs().max(1.0);
                    ((sa - sb - sn_a).abs() / sa).max(early)
                }
                Relation::Pinned => {
                    let off = (a.completion() - next).abs() / next.abs().max(1.0);
                    let below = (sn - a.speed).max(0.0) / sn;
                    let above = (sa - sb - sn_a).max(0.0) / sa;
                    off.max(below).max(above)
                }
            };
            out.push(RelationCheck {
                job: i + 1,
                relation,
                residual,
            });
        }
        out
    }
}

/// Result of [`min_flow_for_energy`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub tail: TailSchedule,
    pub flow: f64,
    pub iterations: usize,
}

impl FlowSolution {
    pub fn schedule(&self) -> &Schedule {
        &self.tail.schedule
    }

    pub fn sigma_n(&self) -> f64 {
        self.tail.sigma_n
    }
}

/// Speeds of a chain of `length` jobs whose last job runs at `tail_speed`:
/// `sigma_k = (tail^a + t * sigma_n^a)^(1/a)` for `t = length - 1, ..., 0`.
pub fn chain_speeds(length: usize, tail_speed: f64, sigma_n: f64, alpha: f64) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(invalid("chain length must be positive"));
    }
    if !(sigma_n > 0.0 && sigma_n.is_finite()) {
        return Err(invalid(format!("sigma_n must be positive, got {sigma_n}")));
    }
    if !(alpha > 1.0) {
        return Err(invalid(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(tail_speed >= sigma_n) || !tail_speed.is_finite() {
        return Err(invalid(format!("tail speed {tail_speed} is below sigma_n {sigma_n}")));
    }
    let (ta, sa) = (tail_speed.powf(alpha), sigma_n.powf(alpha));
    Ok((0..length)
        .rev()
        .map(|t| (ta + t as f64 * sa).powf(1.0 / alpha))
        .collect())
}

fn lane(schedule: &Schedule) -> Vec<ScheduledJob> {
    schedule.lanes().into_values().next().unwrap_or_default()
}

/// One piece of a job's multiplier-versus-start-time function.
#[derive(Debug, Clone, Copy)]
struct Piece {
    t_lo: f64,
    len: usize,
    pinned: bool,
}

struct TailBuilder<'a> {
    releases: &'a [f64],
    work: f64,
    alpha: f64,
    sigma_n: f64,
    eps: f64,
    max_iter: usize,
}

impl TailBuilder<'_> {
    /// Duration of one job with multiplier `m`.
    fn unit(&self, m: f64) -> f64 {
        self.work / (self.sigma_n * m.powf(1.0 / self.alpha))
    }

    /// Tail multiplier `m >= 1` such that a chain of `len` jobs starting at
    /// `start` completes at `target`.
    fn pinned_tail(&self, start: f64, len: usize, target: f64) -> f64 {
        let p = 1.0 / self.alpha;
        let eval = |m: f64| -> (f64, f64) {
            let mut f = start - target;
            let mut df = 0.0;
            for i in 0..len {
                let mi = m + i as f64;
                let d = self.work / (self.sigma_n * mi.powf(p));
                f += d;
                df -= p * d / mi;
            }
            (f, df)
        };
        let mut lo = 1.0;
        if eval(lo).0 <= 0.0 {
            return lo;
        }
        let mut hi = 2.0;
        while eval(hi).0 > 0.0 && hi < 1e300 {
            lo = hi;
            hi *= 2.0;
        }
        let (mut f_lo, mut df_lo) = eval(lo);
        // Newton from the left stays left of the root on a convex decreasing function
        for _ in 0..self.max_iter.max(64) {
            if f_lo <= 0.0 {
                break;
            }
            let step = -f_lo / df_lo;
            let mut next = lo + step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let (f, df) = eval(next);
            if f >= 0.0 {
                lo = next;
                f_lo = f;
                df_lo = df;
            } else {
                hi = next;
            }
            if hi - lo <= self.eps * lo || step <= self.eps * lo {
                break;
            }
        }
        lo
    }

    fn piece_index(pieces: &[Piece], t: f64) -> usize {
        pieces.partition_point(|p| p.t_lo <= t).saturating_sub(1)
    }

    fn head_multiplier(&self, k: usize, piece: Piece, t: f64) -> f64 {
        let m_tail = if piece.pinned {
            self.pinned_tail(t, piece.len, self.releases[k + piece.len])
        } else {
            1.0
        };
        m_tail + (piece.len - 1) as f64
    }

    fn tabulate(&self) -> Vec<Vec<Piece>> {
        let n = self.releases.len();
        let mut table: Vec<Vec<Piece>> = vec![Vec::new(); n];
        table[n - 1] = vec![Piece {
            t_lo: f64::NEG_INFINITY,
            len: 1,
            pinned: false,
        }];
        for k in (0..n - 1).rev() {
            let next = &table[k + 1];
            let release = self.releases[k + 1];
            let idx = Self::piece_index(next, release);
            let m_max = 1.0 + self.head_multiplier(k + 1, next[idx], release);
            let t_overlap = release - self.unit(m_max);

            let mut pieces = vec![
                Piece {
                    t_lo: f64::NEG_INFINITY,
                    len: 1,
                    pinned: false,
                },
                Piece {
                    t_lo: release - self.unit(1.0),
                    len: 1,
                    pinned: true,
                },
            ];
            for (j, p) in next.iter().enumerate().skip(idx) {
                let t_lo = if j == idx {
                    t_overlap
                } else {
                    p.t_lo - self.unit(1.0 + self.head_multiplier(k + 1, *p, p.t_lo))
                };
                let floor = pieces.last().map_or(f64::NEG_INFINITY, |q| q.t_lo);
                pieces.push(Piece {
                    t_lo: t_lo.max(floor),
                    len: p.len + 1,
                    pinned: p.pinned,
                });
            }
            // job k never starts before its release
            let keep = Self::piece_index(&pieces, self.releases[k]);
            pieces.drain(..keep);
            pieces[0].t_lo = f64::NEG_INFINITY;
            table[k] = pieces;
        }
        table
    }

    /// `(start, speed)` per job and the chain decomposition.
    fn build(&self) -> (Vec<(f64, f64)>, Vec<FlowChain>) {
        let n = self.releases.len();
        let table = self.tabulate();
        let mut runs = Vec::with_capacity(n);
        let mut chains = Vec::new();
        let mut k = 0;
        let mut t = self.releases[0];
        while k < n {
            let piece = table[k][Self::piece_index(&table[k], t)];
            let last = k + piece.len - 1;
            let m_tail = if piece.pinned {
                self.pinned_tail(t, piece.len, self.releases[last + 1])
            } else {
                1.0
            };
            let mut clock = t;
            for i in k..=last {
                let m = m_tail + (last - i) as f64;
                let speed = self.sigma_n * m.powf(1.0 / self.alpha);
                runs.push((clock, speed));
                clock += self.work / speed;
            }
            chains.push(FlowChain {
                first: k + 1,
                last: last + 1,
                start: t,
                tail_speed: self.sigma_n * m_tail.powf(1.0 / self.alpha),
                pinned: piece.pinned,
            });
            k = last + 1;
            if k < n {
                t = clock.max(self.releases[k]);
            }
        }
        (runs, chains)
    }
}

fn check_flow_instance(instance: &Instance) -> Result<f64> {
    instance
        .equal_work()
        .ok_or_else(|| Error::UnsupportedInstance("total flow is solved for equal-work jobs only".into()))
}

fn tail_schedule_unchecked(instance: &Instance, work: f64, sigma_n: f64, config: &FlowSolverConfig) -> Result<TailSchedule> {
    let releases = instance.releases();
    let builder = TailBuilder {
        releases: &releases,
        work,
        alpha: instance.alpha(),
        sigma_n,
        eps: config.epsilon_speed,
        max_iter: config.max_iterations,
    };
    let (runs, chains) = builder.build();
    let items = instance
        .jobs()
        .iter()
        .zip(runs)
        .map(|(&job, (start, speed))| ScheduledJob {
            job,
            start,
            speed,
            processor: 1,
        })
        .collect();
    let schedule = Schedule::from_parts(items, instance.model(), 1)?;
    Ok(TailSchedule {
        sigma_n,
        schedule,
        chains,
    })
}

/// The unique schedule obeying the speed relations for last-job speed `sigma_n`.
pub fn schedule_for_tail_speed(instance: &Instance, sigma_n: f64) -> Result<TailSchedule> {
    schedule_for_tail_speed_with(instance, sigma_n, &FlowSolverConfig::default())
}

pub fn schedule_for_tail_speed_with(
    instance: &Instance,
    sigma_n: f64,
    config: &FlowSolverConfig,
) -> Result<TailSchedule> {
    config.validate()?;
    if instance.processors() != 1 {
        return Err(invalid("uniprocessor flow solver called on a multiprocessor instance"));
    }
    let work = check_flow_instance(instance)?;
    if !(sigma_n > 0.0 && sigma_n.is_finite()) {
        return Err(invalid(format!("sigma_n must be positive, got {sigma_n}")));
    }
    tail_schedule_unchecked(instance, work, sigma_n, config)
}

/// Finds the common last-job speed at which `parts` together use `budget`.
///
/// Used with a single part on one processor and with one part per processor
/// (sharing the tail speed) on several.
pub(crate) fn solve_common_tail(
    parts: &[Instance],
    budget: f64,
    config: &FlowSolverConfig,
) -> Result<(Vec<TailSchedule>, usize)> {
    config.validate()?;
    check_budget(budget)?;
    let mut work = None;
    for part in parts {
        let w = check_flow_instance(part)?;
        match work {
            None => work = Some(w),
            Some(w0) if (w - w0).abs() > 1e-12 * w0 => {
                return Err(Error::UnsupportedInstance("total flow is solved for equal-work jobs only".into()))
            }
            _ => {}
        }
    }
    let work = work.ok_or_else(|| invalid("no jobs to schedule"))?;
    let alpha = parts[0].alpha();
    let n: usize = parts.iter().map(Instance::len).sum();
    let nf = n as f64;

    let evaluate = |sigma: f64| -> Result<(Vec<TailSchedule>, f64)> {
        let tails = parts
            .iter()
            .map(|p| tail_schedule_unchecked(p, work, sigma, config))
            .collect::<Result<Vec<_>>>()?;
        let energy = tails.iter().map(TailSchedule::energy).sum();
        Ok((tails, energy))
    };

    // every multiplier lies in [1, n], which brackets the budget
    let p = 1.0 / (alpha - 1.0);
    let mut lo = (budget / (nf * work * nf.powf(1.0 - 1.0 / alpha))).powf(p);
    let mut hi = (budget / (nf * work)).powf(p);
    let (_, e_lo) = evaluate(lo)?;
    let (_, e_hi) = evaluate(hi)?;
    let slack = config.epsilon_energy * budget;
    if e_lo > budget + slack || e_hi < budget - slack {
        return Err(Error::Internal(format!(
            "failed to bracket the budget {budget}: energy({lo}) = {e_lo}, energy({hi}) = {e_hi}"
        )));
    }

    let mut best: Option<(Vec<TailSchedule>, f64)> = None;
    for iteration in 1..=config.max_iterations {
        let mid = 0.5 * (lo + hi);
        let (tails, energy) = evaluate(mid)?;
        let err = (energy - budget).abs();
        if err <= slack {
            return Ok((tails, iteration));
        }
        if best.as_ref().map_or(true, |(_, e)| err < *e) {
            best = Some((tails, err));
        }
        if energy < budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi <= lo {
            break;
        }
    }
    let best_flow = best
        .map(|(tails, _)| tails.iter().map(|t| t.schedule.total_flow()).sum())
        .unwrap_or(f64::NAN);
    Err(Error::Convergence {
        what: "tail-speed bisection",
        iterations: config.max_iterations,
        best: best_flow,
    })
}

/// Approximately minimum total flow using `energy_budget`.
pub fn min_flow_for_energy(
    instance: &Instance,
    energy_budget: f64,
    config: &FlowSolverConfig,
) -> Result<FlowSolution> {
    if instance.processors() != 1 {
        return Err(invalid("uniprocessor flow solver called on a multiprocessor instance"));
    }
    let (mut tails, iterations) = solve_common_tail(std::slice::from_ref(instance), energy_budget, config)?;
    let tail = tails.pop().expect("one part");
    let flow = tail.schedule.total_flow();
    Ok(FlowSolution {
        tail,
        flow,
        iterations,
    })
}

/// Energy interval over which job `boundary` (1-based) completes exactly at
/// the release of its successor. Searched inside `window`; `None` when the
/// boundary is never pinned there.
pub fn pinned_regime_bounds_at(
    instance: &Instance,
    boundary: usize,
    window: (f64, f64),
    config: &FlowSolverConfig,
) -> Result<Option<(f64, f64)>> {
    let n = instance.len();
    if boundary == 0 || boundary >= n {
        return Err(invalid(format!("boundary {boundary} must lie in 1..{n}")));
    }
    let (w_lo, w_hi) = window;
    if !(w_lo > 0.0 && w_lo < w_hi && w_hi.is_finite()) {
        return Err(invalid(format!("invalid energy window [{w_lo}, {w_hi}]")));
    }
    let pinned = |energy: f64| -> Result<bool> {
        let sol = min_flow_for_energy(instance, energy, config)?;
        Ok(sol.tail.relation(boundary) == Some(Relation::Pinned))
    };

    const GRID: usize = 128;
    let ratio = (w_hi / w_lo).powf(1.0 / (GRID - 1) as f64);
    let grid: Vec<f64> = (0..GRID).map(|i| w_lo * ratio.powi(i as i32)).collect();
    let mut flags = Vec::with_capacity(GRID);
    for &e in &grid {
        flags.push(pinned(e)?);
    }
    let Some(first) = flags.iter().position(|&f| f) else {
        return Ok(None);
    };
    let last = first + flags[first..].iter().take_while(|&&f| f).count() - 1;

    // edge between a non-pinned energy `outside` and a pinned energy `inside`
    let edge = |mut outside: f64, mut inside: f64| -> Result<f64> {
        for _ in 0..100 {
            if (outside - inside).abs() <= 1e-12 * inside {
                break;
            }
            let mid = 0.5 * (outside + inside);
            if pinned(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(0.5 * (outside + inside))
    };
    let lower = if first == 0 { grid[0] } else { edge(grid[first - 1], grid[first])? };
    let upper = if last + 1 == GRID { grid[GRID - 1] } else { edge(grid[last + 1], grid[last])? };
    Ok(Some((lower, upper)))
}

/// [`pinned_regime_bounds_at`] for the pair formed by the last two jobs.
pub fn pinned_regime_bounds(
    instance: &Instance,
    window: (f64, f64),
    config: &FlowSolverConfig,
) -> Result<Option<(f64, f64)>> {
    if instance.len() < 2 {
        return Ok(None);
    }
    pinned_regime_bounds_at(instance, instance.len() - 1, window, config)
}

/// Three unit jobs released at 0, 0 and 1 with cubic power: with 9 units of
/// energy the optimum finishes the second job exactly at time 1 and its
/// speed is a root of a degree-12 polynomial with unsolvable Galois group.
pub fn impossibility_instance() -> Instance {
    Instance::uniprocessor(&[(0.0, 1.0), (0.0, 1.0), (1.0, 1.0)], 3.0).expect("valid instance")
}

/// Energy budget used with [`impossibility_instance`].
pub const IMPOSSIBILITY_BUDGET: f64 = 9.0;

/// Coefficients of the polynomial satisfied by the middle job's speed,
/// highest degree first.
pub const IMPOSSIBILITY_POLYNOMIAL: [f64; 13] = [
    2.0, -12.0, 6.0, 108.0, -159.0, -738.0, 2415.0, -1026.0, -5940.0, 12150.0, -10449.0, 4374.0, -729.0,
];

/// Residuals of the three equations and the polynomial on a solution of
/// [`impossibility_instance`] at [`IMPOSSIBILITY_BUDGET`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpossibilityCheck {
    pub speeds: [f64; 3],
    /// `s1^2 + s2^2 + s3^2 - 9`
    pub energy: f64,
    /// `1/s1 + 1/s2 - 1`
    pub completion: f64,
    /// `s1^3 - s2^3 - s3^3`, relative to `s1^3`
    pub overlap: f64,
    /// polynomial value divided by the sum of its terms' magnitudes
    pub polynomial: f64,
}

impl ImpossibilityCheck {
    pub fn max_residual(&self) -> f64 {
        [self.energy, self.completion, self.overlap, self.polynomial]
            .iter()
            .map(|r| r.abs())
            .fold(0.0, f64::max)
    }
}

pub fn impossibility_check(solution: &FlowSolution) -> Result<ImpossibilityCheck> {
    let items = lane(solution.schedule());
    if items.len() != 3 {
        return Err(invalid("expected the three-job instance"));
    }
    let s = [items[0].speed, items[1].speed, items[2].speed];
    let mut value = 0.0;
    let mut scale = 0.0;
    for &c in &IMPOSSIBILITY_POLYNOMIAL {
        value = value * s[1] + c;
    }
    for (i, &c) in IMPOSSIBILITY_POLYNOMIAL.iter().enumerate() {
        scale += (c * s[1].powi(12 - i as i32)).abs();
    }
    Ok(ImpossibilityCheck {
        speeds: s,
        energy: s[0] * s[0] + s[1] * s[1] + s[2] * s[2] - IMPOSSIBILITY_BUDGET,
        completion: 1.0 / s[0] + 1.0 / s[1] - 1.0,
        overlap: (s[0].powi(3) - s[1].powi(3) - s[2].powi(3)) / s[0].powi(3),
        polynomial: value / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn chain_speed_examples() {
        assert_eq!(chain_speeds(1, 1.7, 1.7, 3.0).unwrap(), vec![1.7]);
        let two = chain_speeds(2, 1.0, 1.0, 3.0).unwrap();
        assert!(close(two[0], 2f64.cbrt(), 1e-15) && two[1] == 1.0);
        let three = chain_speeds(3, 1.0, 1.0, 3.0).unwrap();
        assert!(close(three[0], 3f64.cbrt(), 1e-15));
        assert!(close(three[1], 2f64.cbrt(), 1e-15));
        assert_eq!(three[2], 1.0);
    }

    #[test]
    fn chain_speed_errors() {
        assert!(chain_speeds(2, 0.5, 1.0, 3.0).is_err());
        assert!(chain_speeds(0, 1.0, 1.0, 3.0).is_err());
        assert!(chain_speeds(2, 1.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn one_job_runs_at_tail_speed() {
        let inst = Instance::uniprocessor(&[(2.0, 1.0)], 3.0).unwrap();
        let t = schedule_for_tail_speed(&inst, 0.7).unwrap();
        let it = t.schedule.items()[0];
        assert_eq!(it.speed, 0.7);
        assert_eq!(it.start, 2.0);
        assert!(t.relations().is_empty());
    }

    #[test]
    fn separated_jobs_form_singleton_chains() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0), (10.0, 1.0)], 3.0).unwrap();
        let t = schedule_for_tail_speed(&inst, 1.0).unwrap();
        assert_eq!(t.chains.len(), 2);
        assert!(t.schedule.items().iter().all(|it| it.speed == 1.0));
        assert_eq!(t.relation(1), Some(Relation::Gap));
    }

    #[test]
    fn simultaneous_jobs_overlap() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], 3.0).unwrap();
        let t = schedule_for_tail_speed(&inst, 1.0).unwrap();
        assert_eq!(t.chains.len(), 1);
        let speeds: Vec<f64> = t.schedule.items().iter().map(|i| i.speed).collect();
        assert!(close(speeds[0], 3f64.cbrt(), 1e-14));
        assert!(close(speeds[1], 2f64.cbrt(), 1e-14));
        assert!(close(speeds[2], 1.0, 1e-14));
    }

    #[test]
    fn pinned_boundary_lands_on_release() {
        // alone, job 1 would take 2 at speed 1 and overshoot r_2 = 1.5;
        // overlapping would need speed 2^(1/3) which finishes at 1.587 > 1.5;
        // so job 1 is pinned... unless it overlaps; check the relations hold
        let inst = Instance::uniprocessor(&[(0.0, 2.0), (1.7, 2.0)], 3.0).unwrap();
        let t = schedule_for_tail_speed(&inst, 1.0).unwrap();
        for r in t.relations() {
            assert!(r.residual < 1e-9, "{r:?}");
        }
        assert_eq!(t.relation(1), Some(Relation::Pinned));
        let c1 = t.schedule.items()[0].completion();
        assert!(close(c1, 1.7, 1e-12));
    }

    #[test]
    fn energy_increases_with_tail_speed() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0), (0.3, 1.0), (0.9, 1.0), (2.5, 1.0), (2.6, 1.0)], 2.5).unwrap();
        let mut prev = 0.0;
        for i in 1..60 {
            let sigma = 0.05 * i as f64;
            let e = schedule_for_tail_speed(&inst, sigma).unwrap().energy();
            assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn unequal_work_rejected() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0), (0.0, 2.0)], 3.0).unwrap();
        assert!(matches!(
            schedule_for_tail_speed(&inst, 1.0),
            Err(Error::UnsupportedInstance(_))
        ));
        assert!(matches!(
            min_flow_for_energy(&inst, 1.0, &FlowSolverConfig::default()),
            Err(Error::UnsupportedInstance(_))
        ));
    }

    #[test]
    fn single_job_budget() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0)], 3.0).unwrap();
        let sol = min_flow_for_energy(&inst, 1.0, &FlowSolverConfig::default()).unwrap();
        assert!(close(sol.flow, 1.0, 1e-9));
        assert!(close(sol.sigma_n(), 1.0, 1e-9));
    }

    #[test]
    fn impossibility_instance_at_budget_nine() {
        // with d_1 + d_2 > 1 the flow is 3 d_1 + 2 d_2 + d_3 - 1, so the
        // stationary speeds are proportional to (3^(1/3), 2^(1/3), 1)
        let sol = min_flow_for_energy(&impossibility_instance(), IMPOSSIBILITY_BUDGET, &FlowSolverConfig::default()).unwrap();
        let s = 3.0 / (1.0 + 2f64.powf(2.0 / 3.0) + 3f64.powf(2.0 / 3.0)).sqrt();
        let want = [3f64.cbrt() * s, 2f64.cbrt() * s, s];
        let check = impossibility_check(&sol).unwrap();
        for (got, want) in check.speeds.iter().zip(want) {
            assert!(close(*got, want, 1e-8), "{check:?}");
        }
        assert!(check.energy.abs() <= 1e-6 && check.overlap.abs() <= 1e-6);
        assert!(1.0 / want[0] + 1.0 / want[1] > 1.0);
        assert_eq!(sol.tail.relation(2), Some(Relation::Overlap));
    }

    #[test]
    fn impossibility_instance_pinned_inside_regime() {
        let sol = min_flow_for_energy(&impossibility_instance(), 11.0, &FlowSolverConfig::default()).unwrap();
        assert_eq!(sol.tail.relation(2), Some(Relation::Pinned));
        let s: Vec<f64> = sol.schedule().items().iter().map(|i| i.speed).collect();
        assert!((1.0 / s[0] + 1.0 / s[1] - 1.0).abs() <= 1e-9);
        assert!((s[0].powi(3) - s[1].powi(3) - s[2].powi(3)).abs() <= 1e-9 * s[0].powi(3));
        for r in sol.tail.relations() {
            assert!(r.residual <= 1e-9, "{r:?}");
        }
    }

    #[test]
    fn pinned_regime_edges_match_closed_forms() {
        // lower edge: the all-overlap chain finishes job 2 exactly at 1;
        // upper edge: job 1 overlapping, job 2 at sigma_n, job 2 finishing at 1
        let a = 2f64.cbrt();
        let b = 3f64.cbrt();
        let lower = (1.0 + a * a + b * b) * (1.0 / b + 1.0 / a).powi(2);
        let upper = (2.0 + a * a) * (1.0 + 1.0 / a).powi(2);
        let (lo, hi) = pinned_regime_bounds(&impossibility_instance(), (1.0, 100.0), &FlowSolverConfig::default())
            .unwrap()
            .unwrap();
        assert!(close(lo, lower, 1e-8), "{lo} vs {lower}");
        assert!(close(hi, upper, 1e-8), "{hi} vs {upper}");
    }

    #[test]
    fn convergence_error_when_iterations_exhausted() {
        let config = FlowSolverConfig {
            max_iterations: 2,
            ..FlowSolverConfig::default()
        };
        let err = min_flow_for_energy(&impossibility_instance(), 9.0, &config).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    #[test]
    fn no_pinned_regime_for_far_jobs() {
        let inst = Instance::uniprocessor(&[(0.0, 1.0), (1000.0, 1.0)], 3.0).unwrap();
        let r = pinned_regime_bounds(&inst, (0.1, 100.0), &FlowSolverConfig::default()).unwrap();
        assert_eq!(r, None);
    }
}
