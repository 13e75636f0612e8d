//! Monte Carlo model of the apparatus as a stochastic alarm process.
//!
//! Photon-level interference is not simulated. Letting the idler path
//! become distinguishable raises the detector's click rate from the
//! vacuum level toward a bright level, so a cycle reduces to an
//! inhomogeneous Poisson process: a constant dark rate over the whole
//! cycle, plus — under the signaling hypothesis — an induced component
//! whose instantaneous rate follows the splitter's raise fraction and
//! whose clicks arrive after the propagation and detector-response
//! delays. The competing null hypothesis is that clicks never depend on
//! the actuation at all, i.e. the dark process is everything.
//!
//! Cycles are independent given per-cycle seeds derived from a master
//! seed, so batches may run on any number of threads and still produce
//! bit-identical logs.

use crate::geometry::ApparatusGeometry;
use crate::protocol::AlarmSource;
use crate::rng::{stream_seed, SimRng};
use rayon::prelude::*;
use thiserror::Error;

/// Sub-stream labels: dark counts and induced counts draw from
/// independent streams so that hypotheses sharing a seed share their
/// dark noise exactly.
const DARK_STREAM: u64 = 1;
const INDUCED_STREAM: u64 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("bright rate {bright} must exceed dark rate {dark} under the signaling hypothesis")]
    BrightNotAboveDark { bright: f64, dark: f64 },
    #[error("signal speed {speed} is outside (c, v_max] = ({light_speed}, {max}]")]
    SpeedOutsideDeviceRange {
        speed: f64,
        light_speed: f64,
        max: f64,
    },
    #[error("geometry rejects the hypothesis: {0}")]
    GeometryMismatch(String),
    #[error("action period {action} is shorter than the splitter raise time {raise_time}")]
    ActionShorterThanRaise { action: f64, raise_time: f64 },
    #[error("estimation window {window} does not fit the standby period {standby} (needs window + arrival delay {delay})")]
    WindowPlacement {
        window: f64,
        standby: f64,
        delay: f64,
    },
    #[error("zero simulated cycles requested")]
    NoCycles,
    #[error("malformed alarm record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
}

/// Phase of the movable splitter at an instant of the action period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitterPhase {
    Lowered,
    Raising { fraction: f64 },
    Raised,
    Lowering { fraction: f64 },
}

/// Piecewise-linear actuation: raise over half the raise time, hold,
/// lower over the other half, all inside the action period. Fully
/// lowered at every instant outside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationProfile {
    action: f64,
    raise_time: f64,
}

impl ActuationProfile {
    pub fn new(action: f64, raise_time: f64) -> Result<Self, SimError> {
        if !action.is_finite() || action <= 0.0 {
            return Err(SimError::InvalidParameter {
                name: "action",
                value: action,
            });
        }
        if !raise_time.is_finite() || raise_time < 0.0 {
            return Err(SimError::InvalidParameter {
                name: "raise_time",
                value: raise_time,
            });
        }
        if raise_time > action {
            return Err(SimError::ActionShorterThanRaise { action, raise_time });
        }
        Ok(Self { action, raise_time })
    }

    /// Raise fraction in `[0, 1]` at time `tau` from the cycle start.
    pub fn fraction_at(&self, tau: f64) -> f64 {
        if tau <= 0.0 || tau >= self.action {
            return 0.0;
        }
        if self.raise_time == 0.0 {
            return 1.0;
        }
        let half = self.raise_time / 2.0;
        if tau < half {
            tau / half
        } else if tau <= self.action - half {
            1.0
        } else {
            (self.action - tau) / half
        }
    }

    pub fn phase_at(&self, tau: f64) -> SplitterPhase {
        if tau <= 0.0 || tau >= self.action {
            return SplitterPhase::Lowered;
        }
        if self.raise_time == 0.0 {
            return SplitterPhase::Raised;
        }
        let half = self.raise_time / 2.0;
        if tau < half {
            SplitterPhase::Raising {
                fraction: tau / half,
            }
        } else if tau <= self.action - half {
            SplitterPhase::Raised
        } else {
            SplitterPhase::Lowering {
                fraction: (self.action - tau) / half,
            }
        }
    }
}

/// Monotone map from the raise fraction to the distinguishable share of
/// signal photons. Identity unless configured otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distinguishability {
    Identity,
    /// `fraction ^ exponent` with a strictly positive exponent.
    Power {
        exponent: f64,
    },
    /// 0 below the threshold, 1 at or above it. A threshold above 1
    /// pins the map at zero.
    Step {
        threshold: f64,
    },
}

impl Distinguishability {
    pub fn validate(&self) -> Result<(), SimError> {
        match *self {
            Distinguishability::Identity => Ok(()),
            Distinguishability::Power { exponent } => {
                if exponent.is_finite() && exponent > 0.0 {
                    Ok(())
                } else {
                    Err(SimError::InvalidParameter {
                        name: "distinguishability_exponent",
                        value: exponent,
                    })
                }
            }
            Distinguishability::Step { threshold } => {
                if threshold.is_finite() && threshold >= 0.0 {
                    Ok(())
                } else {
                    Err(SimError::InvalidParameter {
                        name: "distinguishability_threshold",
                        value: threshold,
                    })
                }
            }
        }
    }

    pub fn apply(&self, fraction: f64) -> f64 {
        match *self {
            Distinguishability::Identity => fraction,
            Distinguishability::Power { exponent } => fraction.powf(exponent),
            Distinguishability::Step { threshold } => {
                if fraction >= threshold {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// The physics driving the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhysicsHypothesis {
    /// Clicks never depend on the actuation; the dark process is all
    /// there is.
    Null { dark_rate: f64 },
    /// Actuation makes signal photons distinguishable, raising the
    /// click rate toward `bright_rate` after a propagation plus
    /// detector-response delay.
    Signaling {
        signal_speed: f64,
        dark_rate: f64,
        bright_rate: f64,
        distinguishability: Distinguishability,
    },
}

impl PhysicsHypothesis {
    pub fn null(dark_rate: f64) -> Result<Self, SimError> {
        check_rate("dark_rate", dark_rate)?;
        Ok(PhysicsHypothesis::Null { dark_rate })
    }

    pub fn signaling(
        signal_speed: f64,
        dark_rate: f64,
        bright_rate: f64,
        distinguishability: Distinguishability,
    ) -> Result<Self, SimError> {
        check_rate("dark_rate", dark_rate)?;
        check_rate("bright_rate", bright_rate)?;
        if bright_rate <= dark_rate {
            return Err(SimError::BrightNotAboveDark {
                bright: bright_rate,
                dark: dark_rate,
            });
        }
        if !signal_speed.is_finite() || signal_speed <= 0.0 {
            return Err(SimError::InvalidParameter {
                name: "signal_speed",
                value: signal_speed,
            });
        }
        distinguishability.validate()?;
        Ok(PhysicsHypothesis::Signaling {
            signal_speed,
            dark_rate,
            bright_rate,
            distinguishability,
        })
    }

    /// Signaling hypothesis in the default regime where half the
    /// down-conversion pairs become recordable when fully
    /// distinguishable.
    pub fn signaling_half_pair_rate(
        signal_speed: f64,
        dark_rate: f64,
        pair_rate: f64,
        distinguishability: Distinguishability,
    ) -> Result<Self, SimError> {
        check_rate("pair_rate", pair_rate)?;
        Self::signaling(signal_speed, dark_rate, pair_rate / 2.0, distinguishability)
    }

    pub fn dark_rate(&self) -> f64 {
        match *self {
            PhysicsHypothesis::Null { dark_rate } => dark_rate,
            PhysicsHypothesis::Signaling { dark_rate, .. } => dark_rate,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, PhysicsHypothesis::Null { .. })
    }

    /// Checks the hypothesis against a concrete geometry: signaling
    /// devices may not claim speeds outside `(c, v_max]`.
    pub fn validate_against(&self, geometry: &ApparatusGeometry) -> Result<(), SimError> {
        if let PhysicsHypothesis::Signaling { signal_speed, .. } = *self {
            let max = geometry
                .max_signal_speed()
                .map_err(|e| SimError::GeometryMismatch(e.to_string()))?;
            let light_speed = geometry.light_speed();
            if !(signal_speed > light_speed && signal_speed <= max) {
                return Err(SimError::SpeedOutsideDeviceRange {
                    speed: signal_speed,
                    light_speed,
                    max,
                });
            }
        }
        Ok(())
    }
}

fn check_rate(name: &'static str, rate: f64) -> Result<(), SimError> {
    if rate.is_finite() && rate >= 0.0 {
        Ok(())
    } else {
        Err(SimError::InvalidParameter { name, value: rate })
    }
}

/// One cycle's timing: an action period followed by a standby period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclePlan {
    action: f64,
    standby: f64,
}

impl CyclePlan {
    pub fn new(action: f64, standby: f64) -> Result<Self, SimError> {
        if !action.is_finite() || action <= 0.0 {
            return Err(SimError::InvalidParameter {
                name: "action",
                value: action,
            });
        }
        if !standby.is_finite() || standby < 0.0 {
            return Err(SimError::InvalidParameter {
                name: "standby",
                value: standby,
            });
        }
        Ok(Self { action, standby })
    }

    pub fn action(&self) -> f64 {
        self.action
    }

    pub fn standby(&self) -> f64 {
        self.standby
    }

    pub fn total(&self) -> f64 {
        self.action + self.standby
    }
}

/// Alarm times of one simulated cycle, measured from the cycle start:
/// strictly increasing, all inside `(0, action + standby]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlarmLog {
    pub cycle_index: u64,
    pub seed: u64,
    pub alarm_times: Vec<f64>,
}

fn next_up_positive(x: f64) -> f64 {
    debug_assert!(x.is_finite() && x > 0.0);
    f64::from_bits(x.to_bits() + 1)
}

/// Sorts alarm times and nudges exact ties up by one ulp so the log is
/// strictly increasing.
fn finalize_times(times: &mut [f64]) {
    times.sort_unstable_by(f64::total_cmp);
    for i in 1..times.len() {
        if times[i] <= times[i - 1] {
            times[i] = next_up_positive(times[i - 1]);
        }
    }
}

/// Per-cycle seed derived deterministically from the master seed.
pub fn cycle_seed(master_seed: u64, cycle_index: u64) -> u64 {
    stream_seed(master_seed, cycle_index, 0)
}

/// Simulates one cycle under the given physics.
///
/// Dark clicks form a homogeneous Poisson process over the whole cycle.
/// Under the signaling hypothesis, emission candidates arrive at the
/// excess rate during the action period, are thinned by the
/// distinguishability of the raise fraction at emission time, and click
/// after the propagation delay `r / V` plus the detector response
/// `k r^2 / I`. Clicks that would land past the cycle end are dropped.
pub fn simulate_cycle(
    geometry: &ApparatusGeometry,
    hypothesis: &PhysicsHypothesis,
    plan: &CyclePlan,
    seed: u64,
    cycle_index: u64,
) -> Result<AlarmLog, SimError> {
    hypothesis.validate_against(geometry)?;
    let total = plan.total();
    let mut times = Vec::new();

    let mut dark_rng = SimRng::new(stream_seed(seed, DARK_STREAM, 0));
    let dark_rate = hypothesis.dark_rate();
    let mut t = 0.0;
    loop {
        let next = t + dark_rng.next_exp(dark_rate);
        // A rate so extreme the clock cannot advance would spin forever.
        if next > total || next <= t {
            break;
        }
        t = next;
        times.push(t);
    }

    if let PhysicsHypothesis::Signaling {
        signal_speed,
        dark_rate,
        bright_rate,
        distinguishability,
    } = *hypothesis
    {
        let profile = ActuationProfile::new(plan.action(), geometry.raise_time())?;
        let delay = geometry.pump_arm() / signal_speed + geometry.detector_response();
        let excess = bright_rate - dark_rate;
        let mut rng = SimRng::new(stream_seed(seed, INDUCED_STREAM, 0));
        let mut emission = 0.0;
        loop {
            let next = emission + rng.next_exp(excess);
            if next > plan.action() || next <= emission {
                break;
            }
            emission = next;
            let acceptance = distinguishability.apply(profile.fraction_at(emission));
            if rng.next_f64() < acceptance {
                let arrival = emission + delay;
                if arrival > 0.0 && arrival <= total {
                    times.push(arrival);
                }
            }
        }
    }

    finalize_times(&mut times);
    Ok(AlarmLog {
        cycle_index,
        seed,
        alarm_times: times,
    })
}

/// A geometry/hypothesis pair validated once and reusable for batches.
#[derive(Debug, Clone)]
pub struct Device {
    geometry: ApparatusGeometry,
    hypothesis: PhysicsHypothesis,
}

impl Device {
    pub fn new(
        geometry: ApparatusGeometry,
        hypothesis: PhysicsHypothesis,
    ) -> Result<Self, SimError> {
        hypothesis.validate_against(&geometry)?;
        Ok(Self {
            geometry,
            hypothesis,
        })
    }

    pub fn geometry(&self) -> &ApparatusGeometry {
        &self.geometry
    }

    pub fn hypothesis(&self) -> &PhysicsHypothesis {
        &self.hypothesis
    }

    /// Earliest possible arrival of an induced click after the cycle
    /// start; `None` under the null hypothesis.
    pub fn induced_arrival_delay(&self) -> Option<f64> {
        match self.hypothesis {
            PhysicsHypothesis::Null { .. } => None,
            PhysicsHypothesis::Signaling { signal_speed, .. } => {
                Some(self.geometry.pump_arm() / signal_speed + self.geometry.detector_response())
            }
        }
    }

    pub fn simulate_cycle(
        &self,
        plan: &CyclePlan,
        seed: u64,
        cycle_index: u64,
    ) -> Result<AlarmLog, SimError> {
        simulate_cycle(&self.geometry, &self.hypothesis, plan, seed, cycle_index)
    }

    /// Simulates `cycles` consecutive cycles in parallel. The output is
    /// ordered by cycle index and bit-identical for any thread count.
    pub fn simulate_batch(
        &self,
        plan: &CyclePlan,
        cycles: usize,
        master_seed: u64,
        first_cycle_index: u64,
    ) -> Result<Vec<AlarmLog>, SimError> {
        if cycles == 0 {
            return Err(SimError::NoCycles);
        }
        (0..cycles as u64)
            .into_par_iter()
            .map(|offset| {
                let index = first_cycle_index + offset;
                self.simulate_cycle(plan, cycle_seed(master_seed, index), index)
            })
            .collect()
    }

    /// Estimates the device's effective send/receive matrix by Monte
    /// Carlo: the hit rate is the probability of at least `threshold`
    /// clicks in the window `(0, window]` opened at the actuation start,
    /// and the false-alarm rate is the same count over an equally long
    /// window at the end of the standby period, which no induced click
    /// can reach.
    pub fn channel_of(
        &self,
        plan: &CyclePlan,
        window: f64,
        threshold: u32,
        cycles: usize,
        master_seed: u64,
    ) -> Result<ChannelEstimate, SimError> {
        if !window.is_finite() || window <= 0.0 {
            return Err(SimError::InvalidParameter {
                name: "window",
                value: window,
            });
        }
        if threshold == 0 {
            return Err(SimError::InvalidParameter {
                name: "threshold",
                value: 0.0,
            });
        }
        if cycles == 0 {
            return Err(SimError::NoCycles);
        }
        let delay = self.induced_arrival_delay().unwrap_or(0.0);
        if window + delay > plan.standby() {
            return Err(SimError::WindowPlacement {
                window,
                standby: plan.standby(),
                delay,
            });
        }

        let total = plan.total();
        let logs = self.simulate_batch(plan, cycles, master_seed, 0)?;
        let mut hits = 0usize;
        let mut false_alarms = 0usize;
        for log in &logs {
            let active = log
                .alarm_times
                .iter()
                .filter(|&&t| t > 0.0 && t <= window)
                .count();
            let standby_start = total - window;
            let quiet = log
                .alarm_times
                .iter()
                .filter(|&&t| t > standby_start && t <= total)
                .count();
            if active >= threshold as usize {
                hits += 1;
            }
            if quiet >= threshold as usize {
                false_alarms += 1;
            }
        }

        let n = cycles as f64;
        let hit = hits as f64 / n;
        let false_alarm = false_alarms as f64 / n;
        Ok(ChannelEstimate {
            hit,
            false_alarm,
            hit_se: (hit * (1.0 - hit) / n).sqrt(),
            false_alarm_se: (false_alarm * (1.0 - false_alarm) / n).sqrt(),
            cycles,
            window,
            threshold,
        })
    }
}

impl AlarmSource for Device {
    fn batch(
        &self,
        plan: &CyclePlan,
        cycles: usize,
        batch_seed: u64,
        first_cycle_index: u64,
    ) -> Result<Vec<AlarmLog>, SimError> {
        self.simulate_batch(plan, cycles, batch_seed, first_cycle_index)
    }
}

/// Monte Carlo estimate of the effective send/receive matrix, with
/// binomial standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// Estimated p11.
    pub hit: f64,
    /// Estimated p01.
    pub false_alarm: f64,
    pub hit_se: f64,
    pub false_alarm_se: f64,
    pub cycles: usize,
    pub window: f64,
    pub threshold: u32,
}

impl ChannelEstimate {
    pub fn matrix(
        &self,
    ) -> Result<crate::channel::ProbabilityMatrix, crate::channel::ChannelError> {
        crate::channel::ProbabilityMatrix::new(self.false_alarm, self.hit)
    }
}

const NANOS_PER_SECOND: f64 = 1.0e9;

/// Renders alarm logs as line records `cycle_index,seed,alarm_time_ns`,
/// one alarm per line. Cycles without alarms produce no lines.
pub fn render_alarm_lines(logs: &[AlarmLog]) -> String {
    let mut out = String::new();
    for log in logs {
        for &t in &log.alarm_times {
            let ns = (t * NANOS_PER_SECOND).round() as u64;
            out.push_str(&format!("{},{},{}\n", log.cycle_index, log.seed, ns));
        }
    }
    out
}

/// Parses line records produced by [`render_alarm_lines`]. Returns one
/// log per cycle index present, ordered by index; times quantized to
/// whole nanoseconds are nudged apart if the quantization collided.
pub fn parse_alarm_lines(text: &str) -> Result<Vec<AlarmLog>, SimError> {
    use std::collections::BTreeMap;
    let mut cycles: BTreeMap<u64, (u64, Vec<f64>)> = BTreeMap::new();
    for (number, line) in text.lines().enumerate() {
        let line_no = number + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split(',');
        let mut field = |name: &str| {
            parts.next().ok_or_else(|| SimError::MalformedRecord {
                line: line_no,
                reason: format!("missing field {name}"),
            })
        };
        let index: u64 = field("cycle_index")?
            .parse()
            .map_err(|e| SimError::MalformedRecord {
                line: line_no,
                reason: format!("cycle_index: {e}"),
            })?;
        let seed: u64 = field("seed")?
            .parse()
            .map_err(|e| SimError::MalformedRecord {
                line: line_no,
                reason: format!("seed: {e}"),
            })?;
        let ns: u64 = field("alarm_time_ns")?
            .parse()
            .map_err(|e| SimError::MalformedRecord {
                line: line_no,
                reason: format!("alarm_time_ns: {e}"),
            })?;
        if parts.next().is_some() {
            return Err(SimError::MalformedRecord {
                line: line_no,
                reason: "too many fields".into(),
            });
        }
        let entry = cycles.entry(index).or_insert_with(|| (seed, Vec::new()));
        if entry.0 != seed {
            return Err(SimError::MalformedRecord {
                line: line_no,
                reason: format!("cycle {index} recorded with two different seeds"),
            });
        }
        entry.1.push(ns as f64 / NANOS_PER_SECOND);
    }
    Ok(cycles
        .into_iter()
        .map(|(cycle_index, (seed, mut times))| {
            finalize_times(&mut times);
            AlarmLog {
                cycle_index,
                seed,
                alarm_times: times,
            }
        })
        .collect())
}
