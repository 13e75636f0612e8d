//! The statistical evaluation procedure: cycle scheduling, alarm
//! accounting, reliability estimation, and the effective-speed search.
//!
//! For a probe speed `V`, each cycle is scored by two counts: `Q`, the
//! alarms in `(0, a+s]` excluding the waiting window
//! `(r/V, r/V + w]`, and `Q0`, the alarms in `(0, r/V]`. Averaging both
//! over cycles, the reliability of the device probed at `V` is
//!
//! ```text
//! R(V) = 1 - Q r / (Q0 V (a + s - w))
//! ```
//!
//! evaluated at the largest configured standby duration (the formal
//! definition takes the standby period to infinity; in practice a
//! ceiling suffices, so the trend across standby levels is reported
//! alongside). A constant-rate (accidental) device has R = 0 at every
//! speed, a deterministic one-alarm device approaches R = 1 as the
//! ceiling grows, and probing faster than the device delivers drives R
//! negative. The effective speed is the supremum of speeds with
//! positive R, located here by bisection on a bootstrap lower
//! confidence bound.
//!
//! Interval endpoints are left-open/right-closed throughout, so an
//! alarm landing exactly at `r/V` belongs to `Q0`, and to `Q` only when
//! the waiting period is zero.
//!
//! Note that the denominator of the ratio is `Q0`, not `Q`: the
//! estimate is undefined exactly when no alarm ever lands in
//! `(0, r/V]`, however many alarms the rest of the cycle holds.

use crate::optics::{AlarmLog, ChannelEstimate, CyclePlan, SimError};
use crate::rng::{stream_seed, SimRng};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("waiting period would be negative at probe speed {speed}: r/V = {lead} exceeds the configured constant sum {total}")]
    NegativeWaiting { speed: f64, lead: f64, total: f64 },
    #[error("probe speed too slow for the cycle: r/V = {lead} exceeds the cycle length {cycle}")]
    ProbeTooSlow { lead: f64, cycle: f64 },
    #[error("log count {actual} does not match the schedule ({expected} cycles)")]
    LogMismatch { expected: usize, actual: usize },
    #[error("cycle {cycle_index} holds an alarm at {time} beyond the cycle length {cycle}")]
    LogOutOfRange {
        cycle_index: u64,
        time: f64,
        cycle: f64,
    },
    #[error("reliability undefined: no alarms ever landed in (0, r/V] at the standby ceiling")]
    UndefinedReliability,
    #[error("channel hit rate is zero; the bound ratio is undefined")]
    UndefinedChannelRatio,
    #[error(transparent)]
    Simulation(#[from] SimError),
}

/// Waiting-period policy. Either a fixed duration for every probe
/// speed, or the rule that `r/V + w` is one constant, which pins the
/// exclusion window's right edge across speeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaitingRule {
    Fixed(f64),
    ConstantSum { total: f64 },
}

impl WaitingRule {
    fn validate(&self) -> Result<(), ProtocolError> {
        let value = match *self {
            WaitingRule::Fixed(w) => w,
            WaitingRule::ConstantSum { total } => total,
        };
        if value.is_finite() && value >= 0.0 {
            Ok(())
        } else {
            Err(ProtocolError::InvalidSchedule(format!(
                "waiting rule parameter {value} must be finite and non-negative"
            )))
        }
    }

    /// Waiting duration at the given probe speed.
    pub fn waiting_for(&self, pump_arm: f64, speed: f64) -> Result<f64, ProtocolError> {
        match *self {
            WaitingRule::Fixed(w) => Ok(w),
            WaitingRule::ConstantSum { total } => {
                let lead = pump_arm / speed;
                if lead > total {
                    Err(ProtocolError::NegativeWaiting { speed, lead, total })
                } else {
                    Ok(total - lead)
                }
            }
        }
    }

    /// Counting windows at the given probe speed. Under the
    /// constant-sum rule the exclusion edge is the constant itself, so
    /// it is bit-identical across probe speeds.
    pub fn windows_for(&self, pump_arm: f64, speed: f64) -> Result<ProbeWindows, ProtocolError> {
        let lead = pump_arm / speed;
        match *self {
            WaitingRule::Fixed(w) => Ok(ProbeWindows {
                probe_lead: lead,
                exclusion_end: lead + w,
            }),
            WaitingRule::ConstantSum { total } => {
                if lead > total {
                    Err(ProtocolError::NegativeWaiting { speed, lead, total })
                } else {
                    Ok(ProbeWindows {
                        probe_lead: lead,
                        exclusion_end: total,
                    })
                }
            }
        }
    }
}

/// Resolved counting windows for one probe speed: `Q0` counts
/// `(0, probe_lead]` and the exclusion `(probe_lead, exclusion_end]` is
/// removed from `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeWindows {
    pub probe_lead: f64,
    pub exclusion_end: f64,
}

/// The experiment layout: a fixed action period, standby durations
/// grown toward a ceiling, a waiting rule, and the probe speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSchedule {
    action: f64,
    standby_levels: Vec<f64>,
    cycles_per_level: usize,
    waiting: WaitingRule,
    probe_speeds: Vec<f64>,
}

impl CycleSchedule {
    pub fn new(
        action: f64,
        standby_levels: Vec<f64>,
        cycles_per_level: usize,
        waiting: WaitingRule,
        probe_speeds: Vec<f64>,
    ) -> Result<Self, ProtocolError> {
        if !action.is_finite() || action <= 0.0 {
            return Err(ProtocolError::InvalidSchedule(format!(
                "action period {action} must be positive"
            )));
        }
        if standby_levels.is_empty() {
            return Err(ProtocolError::InvalidSchedule(
                "at least one standby level is required".into(),
            ));
        }
        if standby_levels.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(ProtocolError::InvalidSchedule(
                "standby levels must be positive".into(),
            ));
        }
        for pair in standby_levels.windows(2) {
            if pair[1] <= pair[0] {
                return Err(ProtocolError::InvalidSchedule(
                    "standby levels must be strictly increasing".into(),
                ));
            }
        }
        if cycles_per_level == 0 {
            return Err(ProtocolError::InvalidSchedule(
                "cycles_per_level must be at least 1".into(),
            ));
        }
        if probe_speeds.is_empty() {
            return Err(ProtocolError::InvalidSchedule(
                "at least one probe speed is required".into(),
            ));
        }
        if probe_speeds.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(ProtocolError::InvalidSchedule(
                "probe speeds must be positive".into(),
            ));
        }
        for pair in probe_speeds.windows(2) {
            if pair[1] <= pair[0] {
                return Err(ProtocolError::InvalidSchedule(
                    "probe speeds must be strictly increasing".into(),
                ));
            }
        }
        waiting.validate()?;
        Ok(Self {
            action,
            standby_levels,
            cycles_per_level,
            waiting,
            probe_speeds,
        })
    }

    pub fn action(&self) -> f64 {
        self.action
    }

    pub fn standby_levels(&self) -> &[f64] {
        &self.standby_levels
    }

    pub fn ceiling(&self) -> f64 {
        *self.standby_levels.last().expect("validated non-empty")
    }

    pub fn cycles_per_level(&self) -> usize {
        self.cycles_per_level
    }

    pub fn waiting(&self) -> WaitingRule {
        self.waiting
    }

    pub fn probe_speeds(&self) -> &[f64] {
        &self.probe_speeds
    }

    pub fn level_count(&self) -> usize {
        self.standby_levels.len()
    }

    pub fn total_cycles(&self) -> usize {
        self.standby_levels.len() * self.cycles_per_level
    }

    pub fn plan_for_level(&self, level: usize) -> CyclePlan {
        CyclePlan::new(self.action, self.standby_levels[level])
            .expect("schedule levels were validated")
    }
}

/// Per-cycle alarm counts for one probe speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlarmCounts {
    /// Q: alarms in the whole cycle minus the exclusion window.
    pub in_cycle: u64,
    /// Q0: alarms in `(0, r/V]`.
    pub before_lead: u64,
}

/// Counts one cycle's alarms against the probe windows. Boundary
/// semantics are exact: windows are left-open and right-closed.
pub fn count_alarms(
    log: &AlarmLog,
    plan: &CyclePlan,
    windows: &ProbeWindows,
) -> Result<AlarmCounts, ProtocolError> {
    let cycle = plan.total();
    if windows.probe_lead > cycle {
        return Err(ProtocolError::ProbeTooSlow {
            lead: windows.probe_lead,
            cycle,
        });
    }
    // 1 ns grace for logs that round-tripped through the wire format.
    if let Some(&last) = log.alarm_times.last() {
        if last > cycle + 1.0e-9 {
            return Err(ProtocolError::LogOutOfRange {
                cycle_index: log.cycle_index,
                time: last,
                cycle,
            });
        }
    }
    let mut in_cycle = 0u64;
    let mut before_lead = 0u64;
    for &t in &log.alarm_times {
        if t <= 0.0 {
            continue;
        }
        if t <= windows.probe_lead {
            before_lead += 1;
        }
        let excluded = t > windows.probe_lead && t <= windows.exclusion_end;
        if t <= cycle && !excluded {
            in_cycle += 1;
        }
    }
    Ok(AlarmCounts {
        in_cycle,
        before_lead,
    })
}

/// Bootstrap settings for the reliability confidence bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub resamples: usize,
    /// One-sided significance of each reported bound (the interval is
    /// the [alpha, 1 - alpha] percentile pair).
    pub significance: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 1000,
            significance: 0.01,
            seed: 0x0B00,
        }
    }
}

impl BootstrapConfig {
    fn validate(&self) -> Result<(), ProtocolError> {
        if self.resamples == 0 {
            return Err(ProtocolError::InvalidSchedule(
                "bootstrap resamples must be at least 1".into(),
            ));
        }
        if !(self.significance > 0.0 && self.significance < 0.5) {
            return Err(ProtocolError::InvalidSchedule(format!(
                "bootstrap significance {} must lie in (0, 0.5)",
                self.significance
            )));
        }
        Ok(())
    }
}

/// Reliability at one standby level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReliability {
    pub standby: f64,
    pub cycles: usize,
    pub q_avg: f64,
    pub q0_avg: f64,
    /// `None` when no alarm ever landed in `(0, r/V]` at this level.
    pub reliability: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub se: f64,
}

/// Reliability of a device probed at one speed: the value at the
/// standby ceiling plus the trend across levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityEstimate {
    pub probe_speed: f64,
    pub pump_arm: f64,
    pub waiting: f64,
    /// R at the standby ceiling.
    pub reliability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub se: f64,
    pub q_avg: f64,
    pub q0_avg: f64,
    pub cycles_used: usize,
    pub levels: Vec<LevelReliability>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let t = pos - lo as f64;
    (1.0 - t) * sorted[lo] + t * sorted[hi]
}

fn reliability_from_means(
    q_avg: f64,
    q0_avg: f64,
    pump_arm: f64,
    speed: f64,
    span: f64,
) -> Option<f64> {
    if q0_avg > 0.0 {
        Some(1.0 - (q_avg * pump_arm) / (q0_avg * speed * span))
    } else {
        None
    }
}

/// Estimates R(V) from logs laid out level-major per the schedule:
/// the first `cycles_per_level` logs belong to the first standby level,
/// and so on. R is reported at the ceiling with a bootstrap percentile
/// interval over cycles; every level's value is attached as the trend.
pub fn estimate_reliability(
    logs: &[AlarmLog],
    schedule: &CycleSchedule,
    probe_speed: f64,
    pump_arm: f64,
    bootstrap: &BootstrapConfig,
) -> Result<ReliabilityEstimate, ProtocolError> {
    bootstrap.validate()?;
    if logs.len() != schedule.total_cycles() {
        return Err(ProtocolError::LogMismatch {
            expected: schedule.total_cycles(),
            actual: logs.len(),
        });
    }
    let windows = schedule.waiting().windows_for(pump_arm, probe_speed)?;
    let waiting = schedule.waiting().waiting_for(pump_arm, probe_speed)?;
    let per_level = schedule.cycles_per_level();

    let mut levels = Vec::with_capacity(schedule.level_count());
    for (level, chunk) in logs.chunks(per_level).enumerate() {
        let plan = schedule.plan_for_level(level);
        let span = plan.action() + plan.standby() - waiting;
        // A waiting period swallowing the whole cycle would flip the
        // sign of the denominator and let R exceed 1.
        if span <= 0.0 {
            return Err(ProtocolError::InvalidSchedule(format!(
                "waiting period {waiting} leaves no counting span in the {} cycle",
                plan.total()
            )));
        }
        let mut counts = Vec::with_capacity(chunk.len());
        for log in chunk {
            counts.push(count_alarms(log, &plan, &windows)?);
        }
        let n = counts.len() as f64;
        let q_avg = counts.iter().map(|c| c.in_cycle as f64).sum::<f64>() / n;
        let q0_avg = counts.iter().map(|c| c.before_lead as f64).sum::<f64>() / n;
        let reliability = reliability_from_means(q_avg, q0_avg, pump_arm, probe_speed, span);

        let mut rng = SimRng::new(stream_seed(bootstrap.seed, level as u64, 0x5A));
        let mut resampled = Vec::with_capacity(bootstrap.resamples);
        for _ in 0..bootstrap.resamples {
            let mut q_sum = 0.0;
            let mut q0_sum = 0.0;
            for _ in 0..counts.len() {
                let pick = counts[rng.next_index(counts.len())];
                q_sum += pick.in_cycle as f64;
                q0_sum += pick.before_lead as f64;
            }
            if let Some(r) =
                reliability_from_means(q_sum / n, q0_sum / n, pump_arm, probe_speed, span)
            {
                resampled.push(r);
            }
        }
        let (ci_low, ci_high, se) = if resampled.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            resampled.sort_unstable_by(f64::total_cmp);
            let mean = resampled.iter().sum::<f64>() / resampled.len() as f64;
            let var = resampled
                .iter()
                .map(|r| (r - mean) * (r - mean))
                .sum::<f64>()
                / resampled.len() as f64;
            (
                quantile(&resampled, bootstrap.significance),
                quantile(&resampled, 1.0 - bootstrap.significance),
                var.sqrt(),
            )
        };

        levels.push(LevelReliability {
            standby: plan.standby(),
            cycles: chunk.len(),
            q_avg,
            q0_avg,
            reliability,
            ci_low,
            ci_high,
            se,
        });
    }

    let ceiling = levels.last().expect("schedule has at least one level");
    let reliability = ceiling
        .reliability
        .ok_or(ProtocolError::UndefinedReliability)?;
    Ok(ReliabilityEstimate {
        probe_speed,
        pump_arm,
        waiting,
        reliability,
        ci_low: ceiling.ci_low,
        ci_high: ceiling.ci_high,
        se: ceiling.se,
        q_avg: ceiling.q_avg,
        q0_avg: ceiling.q0_avg,
        cycles_used: logs.len(),
        levels,
    })
}

/// Anything that can produce alarm logs for a cycle plan: the simulated
/// device in production, hand-built log generators in tests.
pub trait AlarmSource {
    fn batch(
        &self,
        plan: &CyclePlan,
        cycles: usize,
        batch_seed: u64,
        first_cycle_index: u64,
    ) -> Result<Vec<AlarmLog>, SimError>;
}

/// One reliability evaluation performed during the speed search.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEvaluation {
    pub speed: f64,
    /// `None` when R was undefined at this speed (no alarms before r/V).
    pub reliability: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Whether the bootstrap lower bound exceeded zero.
    pub positive: bool,
}

/// Outcome of the effective-speed search.
#[derive(Debug, Clone, PartialEq)]
pub enum SpeedOutcome {
    /// `[low, high]` brackets the effective speed. When
    /// `unbracketed_above` is set, every probed speed was positive and
    /// `high` is meaningless (reported as infinity).
    Bracket {
        low: f64,
        high: f64,
        unbracketed_above: bool,
    },
    /// No probed speed showed significantly positive reliability.
    Undetectable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedSearch {
    pub outcome: SpeedOutcome,
    pub evaluations: Vec<ProbeEvaluation>,
}

/// Search settings: target relative bracket width and the seed that
/// drives the per-probe simulation batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSearchConfig {
    pub relative_width: f64,
    pub master_seed: u64,
    pub max_bisections: usize,
}

impl Default for SpeedSearchConfig {
    fn default() -> Self {
        Self {
            relative_width: 0.02,
            master_seed: 0xEFF,
            max_bisections: 64,
        }
    }
}

/// Locates the effective speed: probes every scheduled speed, then
/// bisects between the fastest significantly positive speed and the
/// next probed speed until the bracket is narrower than the configured
/// relative width. Each evaluation draws an independent simulation
/// batch.
pub fn effective_speed(
    device: &dyn AlarmSource,
    schedule: &CycleSchedule,
    pump_arm: f64,
    bootstrap: &BootstrapConfig,
    search: &SpeedSearchConfig,
) -> Result<SpeedSearch, ProtocolError> {
    if !search.relative_width.is_finite() || search.relative_width <= 0.0 {
        return Err(ProtocolError::InvalidSchedule(format!(
            "relative width {} must be positive",
            search.relative_width
        )));
    }
    let mut evaluations = Vec::new();
    let mut label = 0u64;
    let mut evaluate =
        |speed: f64, evaluations: &mut Vec<ProbeEvaluation>| -> Result<bool, ProtocolError> {
            let batch_seed = stream_seed(search.master_seed, label, 0xAB);
            label += 1;
            let mut logs = Vec::with_capacity(schedule.total_cycles());
            for level in 0..schedule.level_count() {
                let plan = schedule.plan_for_level(level);
                let level_seed = stream_seed(batch_seed, level as u64, 1);
                let first = (level * schedule.cycles_per_level()) as u64;
                logs.extend(device.batch(&plan, schedule.cycles_per_level(), level_seed, first)?);
            }
            let boot = BootstrapConfig {
                seed: stream_seed(batch_seed, 0, 0xB0),
                ..*bootstrap
            };
            match estimate_reliability(&logs, schedule, speed, pump_arm, &boot) {
                Ok(est) => {
                    let positive = est.ci_low > 0.0;
                    evaluations.push(ProbeEvaluation {
                        speed,
                        reliability: Some(est.reliability),
                        ci_low: est.ci_low,
                        ci_high: est.ci_high,
                        positive,
                    });
                    Ok(positive)
                }
                Err(ProtocolError::UndefinedReliability) => {
                    evaluations.push(ProbeEvaluation {
                        speed,
                        reliability: None,
                        ci_low: f64::NAN,
                        ci_high: f64::NAN,
                        positive: false,
                    });
                    Ok(false)
                }
                Err(other) => Err(other),
            }
        };

    let mut last_positive: Option<f64> = None;
    let mut first_negative_above: Option<f64> = None;
    for &speed in schedule.probe_speeds() {
        let positive = evaluate(speed, &mut evaluations)?;
        if positive {
            last_positive = Some(speed);
            first_negative_above = None;
        } else if last_positive.is_some() && first_negative_above.is_none() {
            first_negative_above = Some(speed);
        }
    }

    let Some(mut low) = last_positive else {
        return Ok(SpeedSearch {
            outcome: SpeedOutcome::Undetectable,
            evaluations,
        });
    };
    let Some(mut high) = first_negative_above else {
        return Ok(SpeedSearch {
            outcome: SpeedOutcome::Bracket {
                low,
                high: f64::INFINITY,
                unbracketed_above: true,
            },
            evaluations,
        });
    };

    for _ in 0..search.max_bisections {
        if high - low <= search.relative_width * low {
            break;
        }
        let mid = 0.5 * (low + high);
        if evaluate(mid, &mut evaluations)? {
            low = mid;
        } else {
            high = mid;
        }
    }

    Ok(SpeedSearch {
        outcome: SpeedOutcome::Bracket {
            low,
            high,
            unbracketed_above: false,
        },
        evaluations,
    })
}

/// Result of checking `p01/p11 <= 1 - R(V)` against estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub ratio: f64,
    pub one_minus_r: f64,
    /// `(1 - R) - p01/p11`; negative means the inequality is violated.
    pub margin: f64,
    pub margin_se: f64,
    /// True when the margin is non-negative within `sigmas` combined
    /// standard errors.
    pub holds: bool,
}

/// Checks the false-alarm-to-hit ratio against `1 - R(V)` within the
/// combined statistical error of both estimates. A fabricated
/// reliability (R pushed to 1 while the device false-alarms) fails this
/// check by a margin far beyond the errors.
pub fn verify_bound(
    channel: &ChannelEstimate,
    estimate: &ReliabilityEstimate,
    sigmas: f64,
) -> Result<BoundCheck, ProtocolError> {
    if channel.hit <= 0.0 {
        return Err(ProtocolError::UndefinedChannelRatio);
    }
    let ratio = channel.false_alarm / channel.hit;
    let ratio_se = ((channel.false_alarm_se / channel.hit).powi(2)
        + (channel.false_alarm * channel.hit_se / (channel.hit * channel.hit)).powi(2))
    .sqrt();
    let one_minus_r = 1.0 - estimate.reliability;
    let margin = one_minus_r - ratio;
    let margin_se = (ratio_se * ratio_se + estimate.se * estimate.se).sqrt();
    Ok(BoundCheck {
        ratio,
        one_minus_r,
        margin,
        margin_se,
        holds: margin >= -sigmas * margin_se,
    })
}

/// One CSV row of the reliability table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityRow {
    pub speed: f64,
    pub standby: f64,
    pub q_avg: f64,
    pub q0_avg: f64,
    pub reliability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub cycles: usize,
}

impl ReliabilityEstimate {
    /// Rows for the estimate table, one per standby level. Undefined
    /// level reliabilities render as NaN.
    pub fn csv_rows(&self) -> Vec<ReliabilityRow> {
        self.levels
            .iter()
            .map(|level| ReliabilityRow {
                speed: self.probe_speed,
                standby: level.standby,
                q_avg: level.q_avg,
                q0_avg: level.q0_avg,
                reliability: level.reliability.unwrap_or(f64::NAN),
                ci_low: level.ci_low,
                ci_high: level.ci_high,
                cycles: level.cycles,
            })
            .collect()
    }
}

/// Renders the estimate table with the canonical column set.
pub fn reliability_csv(rows: &[ReliabilityRow]) -> String {
    let mut out = String::from("V,standby_s,Q_avg,Q0_avg,R,R_ci_low,R_ci_high,cycles\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.speed,
            row.standby,
            row.q_avg,
            row.q0_avg,
            row.reliability,
            row.ci_low,
            row.ci_high,
            row.cycles
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ApparatusGeometry, GeometrySpec};
    use crate::optics::{Device, PhysicsHypothesis};

    fn log(times: &[f64]) -> AlarmLog {
        AlarmLog {
            cycle_index: 0,
            seed: 0,
            alarm_times: times.to_vec(),
        }
    }

    fn plan(action: f64, standby: f64) -> CyclePlan {
        CyclePlan::new(action, standby).unwrap()
    }

    #[test]
    fn empty_log_counts_zero() {
        let windows = WaitingRule::Fixed(0.0).windows_for(0.1, 1.0).unwrap();
        let counts = count_alarms(&log(&[]), &plan(0.01, 0.99), &windows).unwrap();
        assert_eq!(counts.in_cycle, 0);
        assert_eq!(counts.before_lead, 0);
    }

    #[test]
    fn alarm_exactly_at_the_lead_edge() {
        let lead = 0.1 / 1.0;
        let p = plan(0.01, 0.99);
        // Zero waiting: the edge alarm belongs to both counts.
        let w0 = WaitingRule::Fixed(0.0).windows_for(0.1, 1.0).unwrap();
        let counts = count_alarms(&log(&[lead]), &p, &w0).unwrap();
        assert_eq!(counts.before_lead, 1);
        assert_eq!(counts.in_cycle, 1);
        // Positive waiting: still in Q0, still in Q (the exclusion is
        // open on the left), but anything just after the edge drops out.
        let w = WaitingRule::Fixed(0.05).windows_for(0.1, 1.0).unwrap();
        let counts = count_alarms(&log(&[lead]), &p, &w).unwrap();
        assert_eq!(counts.before_lead, 1);
        assert_eq!(counts.in_cycle, 1);
        let counts = count_alarms(&log(&[lead + 1e-12]), &p, &w).unwrap();
        assert_eq!(counts.before_lead, 0);
        assert_eq!(counts.in_cycle, 0);
    }

    #[test]
    fn three_alarms_around_the_waiting_window() {
        let pump_arm = 0.2;
        let speed = 2.0;
        let lead = pump_arm / speed; // 0.1
        let waiting = 0.04;
        let p = plan(0.01, 0.99);
        let windows = WaitingRule::Fixed(waiting)
            .windows_for(pump_arm, speed)
            .unwrap();
        let times = [lead - 1e-6, lead + waiting / 2.0, p.total() - 1e-6];
        let counts = count_alarms(&log(&times), &p, &windows).unwrap();
        assert_eq!(counts.in_cycle, 2);
        assert_eq!(counts.before_lead, 1);
    }

    #[test]
    fn probe_slower_than_the_cycle_is_an_error() {
        let windows = WaitingRule::Fixed(0.0).windows_for(10.0, 1.0).unwrap();
        let err = count_alarms(&log(&[]), &plan(0.01, 0.99), &windows).unwrap_err();
        assert!(matches!(err, ProtocolError::ProbeTooSlow { .. }));
    }

    #[test]
    fn waiting_period_longer_than_the_cycle_is_an_error() {
        let schedule = CycleSchedule::new(
            0.01,
            vec![0.2],
            4,
            WaitingRule::Fixed(5.0),
            vec![1.0],
        )
        .unwrap();
        let logs: Vec<AlarmLog> = (0..4)
            .map(|i| AlarmLog {
                cycle_index: i,
                seed: 0,
                alarm_times: vec![0.05],
            })
            .collect();
        let err =
            estimate_reliability(&logs, &schedule, 1.0, 0.1, &BootstrapConfig::default())
                .unwrap_err();
        assert!(matches!(err, ProtocolError::InvalidSchedule(_)));
    }

    #[test]
    fn constant_sum_rule_pins_the_exclusion_edge() {
        let rule = WaitingRule::ConstantSum { total: 0.25 };
        let pump_arm = 0.1;
        let mut edges = Vec::new();
        for speed in [0.5, 1.0, 2.0, 5f64.sqrt()] {
            edges.push(rule.windows_for(pump_arm, speed).unwrap().exclusion_end);
        }
        assert!(edges.windows(2).all(|p| p[0] == p[1]));
        // And the rule rejects speeds that would need negative waiting.
        assert!(matches!(
            rule.windows_for(pump_arm, 0.1),
            Err(ProtocolError::NegativeWaiting { .. })
        ));
    }

    fn one_alarm_schedule() -> CycleSchedule {
        CycleSchedule::new(
            0.01,
            vec![0.2, 0.4, 0.6, 0.8, 1.0],
            40,
            WaitingRule::Fixed(0.0),
            vec![0.5, 1.0, 2.0],
        )
        .unwrap()
    }

    fn one_alarm_logs(schedule: &CycleSchedule, delay: f64) -> Vec<AlarmLog> {
        (0..schedule.total_cycles())
            .map(|i| AlarmLog {
                cycle_index: i as u64,
                seed: 0,
                alarm_times: vec![delay],
            })
            .collect()
    }

    #[test]
    fn deterministic_device_matches_the_closed_form_exactly() {
        let schedule = one_alarm_schedule();
        let pump_arm = 0.1;
        let true_speed = 5f64.sqrt();
        let logs = one_alarm_logs(&schedule, pump_arm / true_speed);
        for &speed in schedule.probe_speeds() {
            let est = estimate_reliability(
                &logs,
                &schedule,
                speed,
                pump_arm,
                &BootstrapConfig::default(),
            )
            .unwrap();
            let mut previous = f64::NEG_INFINITY;
            for level in &est.levels {
                let expected = 1.0 - pump_arm / (speed * (schedule.action() + level.standby));
                let got = level.reliability.unwrap();
                assert_eq!(
                    got, expected,
                    "bit-exact closed form at s = {}",
                    level.standby
                );
                assert!(got > previous, "R must increase with the standby level");
                assert!(got < 1.0);
                previous = got;
            }
            assert_eq!(
                est.reliability,
                1.0 - pump_arm / (speed * (schedule.action() + schedule.ceiling()))
            );
        }
    }

    #[test]
    fn all_alarms_after_the_lead_make_reliability_undefined() {
        let schedule = one_alarm_schedule();
        // Alarms land past r/V for every probed speed.
        let logs = one_alarm_logs(&schedule, 0.205);
        let err = estimate_reliability(&logs, &schedule, 2.0, 0.1, &BootstrapConfig::default())
            .unwrap_err();
        assert!(matches!(err, ProtocolError::UndefinedReliability));
    }

    #[test]
    fn log_count_must_match_the_schedule() {
        let schedule = one_alarm_schedule();
        let logs = one_alarm_logs(&schedule, 0.05);
        let err = estimate_reliability(
            &logs[..10],
            &schedule,
            1.0,
            0.1,
            &BootstrapConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ProtocolError::LogMismatch { .. }));
    }

    #[test]
    fn null_device_reliability_is_consistent_with_zero() {
        let geometry = ApparatusGeometry::new(GeometrySpec::default()).unwrap();
        let device = Device::new(geometry, PhysicsHypothesis::null(100.0).unwrap()).unwrap();
        let schedule = CycleSchedule::new(
            0.01,
            vec![0.1, 0.2],
            1500,
            WaitingRule::Fixed(0.0),
            vec![0.5, 1.0, 2.0],
        )
        .unwrap();
        let mut logs = Vec::new();
        for level in 0..schedule.level_count() {
            let p = schedule.plan_for_level(level);
            logs.extend(
                device
                    .simulate_batch(&p, schedule.cycles_per_level(), 77 + level as u64, 0)
                    .unwrap(),
            );
        }
        for &speed in schedule.probe_speeds() {
            let est =
                estimate_reliability(&logs, &schedule, speed, 0.05, &BootstrapConfig::default())
                    .unwrap();
            assert!(
                est.reliability.abs() < 0.15,
                "null device at V = {speed}: R = {}",
                est.reliability
            );
            assert!(est.ci_low <= 0.0 && est.ci_high >= 0.0);
        }
    }

    /// Deterministic source: one alarm per cycle at a fixed delay.
    struct OneAlarmSource {
        delay: f64,
    }

    impl AlarmSource for OneAlarmSource {
        fn batch(
            &self,
            _plan: &CyclePlan,
            cycles: usize,
            batch_seed: u64,
            first_cycle_index: u64,
        ) -> Result<Vec<AlarmLog>, SimError> {
            Ok((0..cycles as u64)
                .map(|i| AlarmLog {
                    cycle_index: first_cycle_index + i,
                    seed: batch_seed,
                    alarm_times: vec![self.delay],
                })
                .collect())
        }
    }

    #[test]
    fn speed_search_brackets_the_true_speed() {
        let pump_arm = 0.1;
        let true_speed = 2.3;
        let source = OneAlarmSource {
            delay: pump_arm / true_speed,
        };
        let schedule = CycleSchedule::new(
            0.01,
            vec![0.5, 1.0],
            20,
            WaitingRule::Fixed(0.0),
            vec![0.5, 1.0, 2.0, 3.0],
        )
        .unwrap();
        let search = effective_speed(
            &source,
            &schedule,
            pump_arm,
            &BootstrapConfig::default(),
            &SpeedSearchConfig::default(),
        )
        .unwrap();
        match search.outcome {
            SpeedOutcome::Bracket {
                low,
                high,
                unbracketed_above,
            } => {
                assert!(!unbracketed_above);
                assert!(low <= true_speed && true_speed <= high, "[{low}, {high}]");
                assert!(
                    high - low <= 0.02 * low,
                    "bracket too wide: [{low}, {high}]"
                );
            }
            other => panic!("expected a bracket, got {other:?}"),
        }
    }

    #[test]
    fn search_on_a_null_device_is_undetectable() {
        let geometry = ApparatusGeometry::new(GeometrySpec::default()).unwrap();
        let device = Device::new(geometry, PhysicsHypothesis::null(50.0).unwrap()).unwrap();
        let schedule = CycleSchedule::new(
            0.01,
            vec![0.19],
            800,
            WaitingRule::Fixed(0.0),
            vec![0.5, 1.0, 2.0],
        )
        .unwrap();
        let search = effective_speed(
            &device,
            &schedule,
            0.05,
            &BootstrapConfig::default(),
            &SpeedSearchConfig::default(),
        )
        .unwrap();
        assert_eq!(search.outcome, SpeedOutcome::Undetectable);
    }

    #[test]
    fn search_with_only_slow_probes_is_unbracketed() {
        let pump_arm = 0.1;
        let source = OneAlarmSource {
            delay: pump_arm / 5.0,
        };
        let schedule =
            CycleSchedule::new(0.01, vec![0.5], 10, WaitingRule::Fixed(0.0), vec![0.5, 1.0])
                .unwrap();
        let search = effective_speed(
            &source,
            &schedule,
            pump_arm,
            &BootstrapConfig::default(),
            &SpeedSearchConfig::default(),
        )
        .unwrap();
        match search.outcome {
            SpeedOutcome::Bracket {
                low,
                high,
                unbracketed_above,
            } => {
                assert!(unbracketed_above);
                assert_eq!(low, 1.0);
                assert!(high.is_infinite());
            }
            other => panic!("expected an unbracketed result, got {other:?}"),
        }
    }

    fn synthetic_estimate(reliability: f64, se: f64) -> ReliabilityEstimate {
        ReliabilityEstimate {
            probe_speed: 1.0,
            pump_arm: 0.1,
            waiting: 0.0,
            reliability,
            ci_low: reliability - 2.0 * se,
            ci_high: reliability + 2.0 * se,
            se,
            q_avg: 1.0,
            q0_avg: 1.0,
            cycles_used: 100,
            levels: Vec::new(),
        }
    }

    #[test]
    fn bound_holds_for_an_accidental_device() {
        let channel = ChannelEstimate {
            hit: 0.52,
            false_alarm: 0.50,
            hit_se: 0.01,
            false_alarm_se: 0.01,
            cycles: 2000,
            window: 0.05,
            threshold: 1,
        };
        let estimate = synthetic_estimate(0.003, 0.02);
        let check = verify_bound(&channel, &estimate, 3.0).unwrap();
        assert!(check.holds, "margin = {}", check.margin);
        assert!(check.margin.abs() < 0.15);
    }

    #[test]
    fn bound_holds_for_a_perfect_device() {
        // No false alarms at all: the ratio is zero and any non-negative
        // 1 - R satisfies the bound.
        let channel = ChannelEstimate {
            hit: 1.0,
            false_alarm: 0.0,
            hit_se: 0.0,
            false_alarm_se: 0.0,
            cycles: 2000,
            window: 0.05,
            threshold: 1,
        };
        let estimate = synthetic_estimate(0.98, 0.002);
        let check = verify_bound(&channel, &estimate, 3.0).unwrap();
        assert!(check.holds);
        assert_eq!(check.ratio, 0.0);
        assert!(check.margin > 0.0);
    }

    #[test]
    fn fabricated_reliability_is_flagged() {
        let channel = ChannelEstimate {
            hit: 0.60,
            false_alarm: 0.30,
            hit_se: 0.01,
            false_alarm_se: 0.01,
            cycles: 2000,
            window: 0.05,
            threshold: 1,
        };
        // Hand-edited record: R forced to 1 with no uncertainty.
        let estimate = synthetic_estimate(1.0, 0.0);
        let check = verify_bound(&channel, &estimate, 3.0).unwrap();
        assert!(
            !check.holds,
            "fabricated reliability must violate the bound"
        );
        assert!(check.margin < -0.4);
    }

    #[test]
    fn zero_hit_rate_has_no_defined_ratio() {
        let channel = ChannelEstimate {
            hit: 0.0,
            false_alarm: 0.1,
            hit_se: 0.0,
            false_alarm_se: 0.01,
            cycles: 100,
            window: 0.05,
            threshold: 1,
        };
        let estimate = synthetic_estimate(0.0, 0.01);
        assert!(matches!(
            verify_bound(&channel, &estimate, 3.0),
            Err(ProtocolError::UndefinedChannelRatio)
        ));
    }

    #[test]
    fn csv_rows_carry_the_canonical_columns() {
        let schedule = one_alarm_schedule();
        let logs = one_alarm_logs(&schedule, 0.1 / 2.0);
        let est =
            estimate_reliability(&logs, &schedule, 2.0, 0.1, &BootstrapConfig::default()).unwrap();
        let csv = reliability_csv(&est.csv_rows());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "V,standby_s,Q_avg,Q0_avg,R,R_ci_low,R_ci_high,cycles"
        );
        assert_eq!(csv.lines().count(), 1 + schedule.level_count());
        for line in lines {
            assert_eq!(line.split(',').count(), 8);
        }
    }

    #[test]
    fn schedule_validation_rejects_nonsense() {
        assert!(CycleSchedule::new(0.0, vec![0.1], 1, WaitingRule::Fixed(0.0), vec![1.0]).is_err());
        assert!(
            CycleSchedule::new(0.01, vec![0.2, 0.1], 1, WaitingRule::Fixed(0.0), vec![1.0])
                .is_err()
        );
        assert!(CycleSchedule::new(0.01, vec![], 1, WaitingRule::Fixed(0.0), vec![1.0]).is_err());
        assert!(
            CycleSchedule::new(0.01, vec![0.1], 0, WaitingRule::Fixed(0.0), vec![1.0]).is_err()
        );
        assert!(
            CycleSchedule::new(0.01, vec![0.1], 1, WaitingRule::Fixed(-1.0), vec![1.0]).is_err()
        );
        assert!(
            CycleSchedule::new(0.01, vec![0.1], 1, WaitingRule::Fixed(0.0), vec![1.0, 0.5])
                .is_err()
        );
    }
}
