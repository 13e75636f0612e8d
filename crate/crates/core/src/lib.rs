//! Simulator and statistical estimator for an interferometric
//! signaling apparatus that claims to outrun light.
//!
//! The crate has two halves. The closed-form half ([`channel`],
//! [`geometry`], [`relativity`]) reproduces the design arithmetic: the
//! round-trip Bayesian update and its convergence, the maximal and
//! minimal transmission speeds of the leg triangle, the feasibility
//! bound, and the boost construction that turns any superluminal
//! channel into a receive-before-send ordering. The Monte Carlo half
//! ([`optics`], [`protocol`]) treats the apparatus as a stochastic
//! alarm process under pluggable physics hypotheses and implements the
//! cycle/alarm/reliability protocol that calibrates it: an accidental
//! device scores R = 0, a perfect one approaches R = 1, and the
//! effective speed is recovered by bisection on a bootstrap bound.
//!
//! Everything is deterministic given a master seed: identical
//! configurations produce bit-identical alarm logs and tables on any
//! thread count.

pub mod channel;
pub mod geometry;
pub mod optics;
pub mod protocol;
pub mod relativity;
pub mod rng;

pub use channel::{
    iterate_chain, posterior, reliability_bound, ChannelError, PosteriorChain, PosteriorStep,
    Probability, ProbabilityMatrix,
};
pub use geometry::{ApparatusGeometry, GeometryError, GeometrySpec};
pub use optics::{
    cycle_seed, parse_alarm_lines, render_alarm_lines, simulate_cycle, ActuationProfile, AlarmLog,
    ChannelEstimate, CyclePlan, Device, Distinguishability, PhysicsHypothesis, SimError,
    SplitterPhase,
};
pub use protocol::{
    count_alarms, effective_speed, estimate_reliability, reliability_csv, verify_bound,
    AlarmCounts, AlarmSource, BootstrapConfig, BoundCheck, CycleSchedule, LevelReliability,
    ProbeEvaluation, ProbeWindows, ProtocolError, ReliabilityEstimate, ReliabilityRow,
    SpeedOutcome, SpeedSearch, SpeedSearchConfig, WaitingRule,
};
pub use relativity::{
    antinomy_boost, antinomy_scenario, interval, reachable, AntinomyScenario, Boost,
    RelativityError, SpacetimeEvent,
};
