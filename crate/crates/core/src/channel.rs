//! Binary asymmetric channel model and the iterated posterior chain.
//!
//! A signaling device is summarized by two conditional probabilities:
//! the hit rate `p11` (a signal is registered given one was sent) and
//! the false-alarm rate `p01` (a signal is registered given none was
//! sent). A device "works at least somewhat" exactly when `p01 < p11`.
//!
//! The round-trip experiment conditions a prior on the event "the echo
//! came back": the sender runs an experiment with prior success
//! probability `p1`, sends on success, the relay echoes whatever it
//! registers, and the sender updates on registering the echo. Because
//! each leg passes through the same noisy channel, the update has a
//! closed form ([`posterior`]) and iterating it drives any interior
//! prior to 1 whenever the channel carries information.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("probability out of range: {value} (must be finite and in [0, 1])")]
    InvalidProbability { value: f64 },
    #[error("hit rate is zero: the device never delivers sent signals")]
    UndefinedRatio,
}

/// A probability validated on construction: finite and in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self, ChannelError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(ChannelError::InvalidProbability { value })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = ChannelError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Probability::new(value)
    }
}

/// The 2x2 send/receive matrix of a binary asymmetric channel.
///
/// Only the two "receive" columns are stored; their complements are
/// derived so that each row sums to exactly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityMatrix {
    false_alarm: Probability,
    hit: Probability,
}

impl ProbabilityMatrix {
    pub fn new(false_alarm: f64, hit: f64) -> Result<Self, ChannelError> {
        Ok(Self {
            false_alarm: Probability::new(false_alarm)?,
            hit: Probability::new(hit)?,
        })
    }

    /// p01: probability of registering a signal given none was sent.
    #[inline]
    pub fn false_alarm(&self) -> f64 {
        self.false_alarm.get()
    }

    /// p11: probability of registering a signal given one was sent.
    #[inline]
    pub fn hit(&self) -> f64 {
        self.hit.get()
    }

    /// p00 = 1 - p01.
    #[inline]
    pub fn correct_rejection(&self) -> f64 {
        1.0 - self.false_alarm.get()
    }

    /// p10 = 1 - p11.
    #[inline]
    pub fn miss(&self) -> f64 {
        1.0 - self.hit.get()
    }

    /// True when registering carries no information (p01 = p11).
    #[inline]
    pub fn is_uninformative(&self) -> bool {
        self.false_alarm.get() == self.hit.get()
    }
}

/// One application of the round-trip update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorStep {
    pub value: Probability,
    /// Set when the conditioning event has probability zero; the prior
    /// is returned unchanged in that case.
    pub vacuous: bool,
}

/// Marginal probability that the sender registers the echo, given the
/// prior and the channel. This is the denominator of the update.
pub fn echo_probability(prior: Probability, channel: &ProbabilityMatrix) -> f64 {
    let p1 = prior.get();
    let p0 = 1.0 - p1;
    let hit = channel.hit();
    let fa = channel.false_alarm();
    let via_success = hit * hit + channel.miss() * fa;
    let via_failure = fa * (channel.correct_rejection() + hit);
    p1 * via_success + p0 * via_failure
}

/// Posterior probability of the original success after the sender
/// registers the echo.
///
/// The uninformative channel (p01 = p11) returns the prior exactly, and
/// a zero-probability echo event returns the prior flagged as vacuous.
pub fn posterior(prior: Probability, channel: &ProbabilityMatrix) -> PosteriorStep {
    let p1 = prior.get();
    let hit = channel.hit();
    let fa = channel.false_alarm();

    let numerator = p1 * (hit * hit + channel.miss() * fa);
    let denominator = echo_probability(prior, channel);

    if denominator == 0.0 {
        return PosteriorStep {
            value: prior,
            vacuous: true,
        };
    }
    if channel.is_uninformative() {
        // Algebraically the update collapses to the prior; return it
        // verbatim so the fixed point is exact in floating point.
        return PosteriorStep {
            value: prior,
            vacuous: false,
        };
    }
    // numerator <= denominator by construction, so the quotient is a
    // valid probability even after rounding.
    let value = Probability::new(numerator / denominator).expect("posterior in [0, 1]");
    PosteriorStep {
        value,
        vacuous: false,
    }
}

/// The recorded trajectory of repeated round-trip updates.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    channel: ProbabilityMatrix,
    /// All iterates, starting with the prior.
    iterates: Vec<f64>,
    /// True when the chain stopped because `1 - p_n < epsilon`.
    converged: bool,
    /// True when any step conditioned on a zero-probability event.
    vacuous: bool,
}

impl PosteriorChain {
    pub fn channel(&self) -> &ProbabilityMatrix {
        &self.channel
    }

    pub fn iterates(&self) -> &[f64] {
        &self.iterates
    }

    pub fn prior(&self) -> f64 {
        self.iterates[0]
    }

    pub fn final_value(&self) -> f64 {
        *self
            .iterates
            .last()
            .expect("chain holds at least the prior")
    }

    /// Number of update steps applied (one less than the iterate count).
    pub fn steps(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn vacuous(&self) -> bool {
        self.vacuous
    }
}

/// Applies [`posterior`] repeatedly, substituting each result for the
/// prior, until `1 - p_n < epsilon` or `max_steps` updates have run.
///
/// # Panics
///
/// Panics if `epsilon` is not strictly positive.
pub fn iterate_chain(
    prior: Probability,
    channel: &ProbabilityMatrix,
    epsilon: f64,
    max_steps: usize,
) -> PosteriorChain {
    assert!(epsilon > 0.0, "epsilon must be strictly positive");

    let mut iterates = Vec::new();
    iterates.push(prior.get());
    let mut current = prior;
    let mut vacuous = false;
    let mut converged = 1.0 - current.get() < epsilon;

    while !converged && iterates.len() <= max_steps {
        let step = posterior(current, channel);
        vacuous |= step.vacuous;
        current = step.value;
        iterates.push(current.get());
        converged = 1.0 - current.get() < epsilon;
    }

    PosteriorChain {
        channel: *channel,
        iterates,
        converged,
        vacuous,
    }
}

/// The false-alarm-to-hit quotient `p01 / p11`, the quantity bounded by
/// `1 - R(V)` for any device probed at speed `V`.
pub fn reliability_bound(channel: &ProbabilityMatrix) -> Result<f64, ChannelError> {
    if channel.hit() == 0.0 {
        return Err(ChannelError::UndefinedRatio);
    }
    Ok(channel.false_alarm() / channel.hit())
}
