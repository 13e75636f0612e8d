//! Spacetime events, boosts along one axis, and the round-trip
//! construction that turns a superluminal channel into a
//! receive-before-send experiment.
//!
//! One spatial dimension is enough: every cone check below depends only
//! on |Δx|. Boosts are parametrized by `beta = v/c` with `|beta| < 1`.

use crate::channel::{iterate_chain, PosteriorChain, Probability, ProbabilityMatrix};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RelativityError {
    #[error("invalid boost velocity fraction {beta}: |beta| must be < 1")]
    InvalidBoost { beta: f64 },
    #[error("signal speed {speed} is not a finite speed exceeding light speed {light_speed}: no causal-order reversal exists")]
    NoParadox { speed: f64, light_speed: f64 },
}

/// A point in 1+1-dimensional spacetime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeEvent {
    pub position: f64,
    pub time: f64,
}

impl SpacetimeEvent {
    pub fn new(position: f64, time: f64) -> Self {
        debug_assert!(position.is_finite() && time.is_finite());
        Self { position, time }
    }
}

/// Squared invariant separation `Δx^2 - c^2 Δt^2` between two events.
/// Positive for spacelike pairs, negative for timelike, zero on the cone.
pub fn interval(from: SpacetimeEvent, to: SpacetimeEvent, light_speed: f64) -> f64 {
    let dx = to.position - from.position;
    let dt = to.time - from.time;
    dx * dx - light_speed * light_speed * dt * dt
}

/// A velocity change along the single spatial axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boost {
    beta: f64,
}

impl Boost {
    pub fn new(beta: f64) -> Result<Self, RelativityError> {
        if beta.is_finite() && beta.abs() < 1.0 {
            Ok(Self { beta })
        } else {
            Err(RelativityError::InvalidBoost { beta })
        }
    }

    pub fn identity() -> Self {
        Self { beta: 0.0 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 - self.beta * self.beta).sqrt()
    }

    /// Applies the boost to an event, preserving `x^2 - c^2 t^2`.
    pub fn apply(&self, event: SpacetimeEvent, light_speed: f64) -> SpacetimeEvent {
        let gamma = self.gamma();
        let x = event.position;
        let t = event.time;
        SpacetimeEvent {
            position: gamma * (x - self.beta * light_speed * t),
            time: gamma * (t - self.beta * x / light_speed),
        }
    }

    /// Relativistic velocity addition: the single boost equivalent to
    /// applying `self` and then `other`.
    pub fn compose(&self, other: Boost) -> Boost {
        let beta = (self.beta + other.beta) / (1.0 + self.beta * other.beta);
        Boost { beta }
    }
}

/// Whether a signal capped at `max_speed` can get from one event to the
/// other: the target must not lie in the past, and `|Δx| <= Δt * max_speed`.
/// The boundary (exact cone membership) counts as reachable.
pub fn reachable(from: SpacetimeEvent, to: SpacetimeEvent, max_speed: f64) -> bool {
    debug_assert!(max_speed > 0.0);
    let dt = to.time - from.time;
    if dt < 0.0 {
        return false;
    }
    (to.position - from.position).abs() <= dt * max_speed
}

/// For a spacelike send/receive pair, returns a frame in which the
/// receive event precedes the send event; `None` for timelike or
/// lightlike pairs, where no frame reverses the order.
///
/// The returned velocity fraction is the midpoint of the open interval
/// of order-reversing boosts, a deterministic maximum-margin choice.
pub fn antinomy_boost(
    send: SpacetimeEvent,
    receive: SpacetimeEvent,
    light_speed: f64,
) -> Option<Boost> {
    if interval(send, receive, light_speed) <= 0.0 {
        return None;
    }
    let dx = receive.position - send.position;
    let dt = receive.time - send.time;
    // Spacelike, so |c*dt/dx| < 1 and dx != 0.
    let threshold = light_speed * dt / dx;
    let beta = if dx > 0.0 {
        (threshold + 1.0) / 2.0
    } else {
        (threshold - 1.0) / 2.0
    };
    Some(Boost::new(beta).expect("midpoint of an order-reversing interval is a valid boost"))
}

/// The full round-trip record: event layout, the echo observer's frame,
/// the cone checks in both frames, and the resulting posterior chain.
#[derive(Debug, Clone)]
pub struct AntinomyScenario {
    /// Where the experimenter starts and later registers the echo.
    pub journey_start: SpacetimeEvent,
    /// Where the experiment concludes and the outbound signal departs.
    pub journey_end: SpacetimeEvent,
    /// Where the outbound signal lands and the echo departs.
    pub relay: SpacetimeEvent,
    /// Rest frame assigned to the echoing observer.
    pub echo_frame: Boost,
    /// The three events seen from the echo frame.
    pub journey_start_in_echo_frame: SpacetimeEvent,
    pub journey_end_in_echo_frame: SpacetimeEvent,
    pub relay_in_echo_frame: SpacetimeEvent,
    /// Outbound leg fits the device cone in the lab frame.
    pub outbound_within_cone: bool,
    /// Echo leg fits the device cone in the echo frame.
    pub echo_within_cone: bool,
    /// Posterior trajectory of the repeated round trip.
    pub chain: PosteriorChain,
}

/// Builds the round-trip layout for a device of the given speed and
/// runs the posterior chain over it.
///
/// The experimenter sits at the origin for one time unit; the outbound
/// signal then travels at 90% of the device's superluminal margin so
/// that the cone checks hold with slack rather than on the boundary.
/// The relay observer's frame is the midpoint of the boost interval in
/// which the echo is future-directed and within the device cone.
pub fn antinomy_scenario(
    channel: &ProbabilityMatrix,
    prior: Probability,
    signal_speed: f64,
    light_speed: f64,
    epsilon: f64,
    max_steps: usize,
) -> Result<AntinomyScenario, RelativityError> {
    if !signal_speed.is_finite() || signal_speed <= light_speed {
        return Err(RelativityError::NoParadox {
            speed: signal_speed,
            light_speed,
        });
    }

    let journey_start = SpacetimeEvent::new(0.0, 0.0);
    let journey_duration = 1.0;
    let journey_end = SpacetimeEvent::new(0.0, journey_duration);

    // Outbound transit below the device maximum, with the relay placed
    // far enough out that it is spacelike from the journey start by a
    // margin of c * journey_duration.
    let transit_speed = light_speed + 0.9 * (signal_speed - light_speed);
    let transit_time = 2.0 * light_speed * journey_duration / (transit_speed - light_speed);
    // A speed within an ulp of c underflows the margin and pushes the
    // relay to infinity.
    if !transit_time.is_finite() {
        return Err(RelativityError::NoParadox {
            speed: signal_speed,
            light_speed,
        });
    }
    let relay = SpacetimeEvent::new(
        transit_speed * transit_time,
        journey_duration + transit_time,
    );

    let outbound_within_cone = reachable(journey_end, relay, signal_speed);
    debug_assert!(
        antinomy_boost(journey_start, relay, light_speed).is_some(),
        "relay is spacelike from the journey start by construction"
    );

    // Smallest boost for which the echo is future-directed and no
    // faster than the device; take the midpoint of [beta_min, 1).
    let beta_min = light_speed * (relay.position + signal_speed * relay.time)
        / (signal_speed * relay.position + light_speed * light_speed * relay.time);
    let echo_frame =
        Boost::new((beta_min + 1.0) / 2.0).expect("echo frame midpoint is a valid boost");

    let journey_start_in_echo_frame = echo_frame.apply(journey_start, light_speed);
    let journey_end_in_echo_frame = echo_frame.apply(journey_end, light_speed);
    let relay_in_echo_frame = echo_frame.apply(relay, light_speed);
    let echo_within_cone = reachable(
        relay_in_echo_frame,
        journey_start_in_echo_frame,
        signal_speed,
    );

    let chain = iterate_chain(prior, channel, epsilon, max_steps);

    Ok(AntinomyScenario {
        journey_start,
        journey_end,
        relay,
        echo_frame,
        journey_start_in_echo_frame,
        journey_end_in_echo_frame,
        relay_in_echo_frame,
        outbound_within_cone,
        echo_within_cone,
        chain,
    })
}
