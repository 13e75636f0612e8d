//! Closed-form apparatus design calculations.
//!
//! The optical layout is reduced to a right triangle: the signal leg
//! runs from the second crystal to the detector-side splitter, the
//! idler leg to the actuated splitter. Letting idlers through destroys
//! the interference of their partner photons only, which is what makes
//! the transmission speed exceed `c` whenever the idler leg is shorter
//! than the signal leg. Everything here is pure arithmetic on a
//! validated parameter set; the Monte Carlo machinery lives in
//! [`crate::optics`].
//!
//! Natural units with `light_speed = 1` are the intended default;
//! nothing below assumes it, so SI values also work if used
//! consistently.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid geometry parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("idler and signal legs are equal: the splitters act independently and no transmission direction exists")]
    Singular,
    #[error("idler leg exceeds signal leg: information would flow from the detector back to the actuated splitter")]
    Reversed,
}

/// Input parameters for [`ApparatusGeometry`]. Distances and durations
/// share one unit system; the default is natural units (`light_speed = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometrySpec {
    /// Signal-leg length (crystal to detector-side splitter).
    pub signal_leg: f64,
    /// Idler-leg length (crystal to actuated splitter).
    pub idler_leg: f64,
    /// Pump-arm length (pump splitter to the far mirror).
    pub pump_arm: f64,
    /// Detector response coefficient; the response latency is
    /// `detector_response_coeff * pump_arm^2 / pump_intensity`.
    pub detector_response_coeff: f64,
    /// Radiant intensity of the pump laser.
    pub pump_intensity: f64,
    /// Full actuation time of the movable splitter.
    pub raise_time: f64,
    /// Total electronics latency excluding the operator.
    pub electronics_lag: f64,
    /// Speed of light in the chosen units.
    pub light_speed: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            signal_leg: 2.0,
            idler_leg: 1.0,
            pump_arm: 1.0,
            detector_response_coeff: 0.0,
            pump_intensity: 1.0,
            raise_time: 0.0,
            electronics_lag: 0.0,
            light_speed: 1.0,
        }
    }
}

/// Validated apparatus geometry.
///
/// Lengths, the intensity, and the light speed must be strictly
/// positive; the idler leg, the response coefficient, and the two
/// latencies may be zero. Leg ordering is deliberately *not* checked
/// here: the degenerate layouts are reportable results of the speed
/// calculations, not construction failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApparatusGeometry {
    spec: GeometrySpec,
}

impl ApparatusGeometry {
    pub fn new(spec: GeometrySpec) -> Result<Self, GeometryError> {
        let positive = [
            ("signal_leg", spec.signal_leg),
            ("pump_arm", spec.pump_arm),
            ("pump_intensity", spec.pump_intensity),
            ("light_speed", spec.light_speed),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(GeometryError::InvalidParameter { name, value });
            }
        }
        let non_negative = [
            ("idler_leg", spec.idler_leg),
            ("detector_response_coeff", spec.detector_response_coeff),
            ("raise_time", spec.raise_time),
            ("electronics_lag", spec.electronics_lag),
        ];
        for (name, value) in non_negative {
            if !value.is_finite() || value < 0.0 {
                return Err(GeometryError::InvalidParameter { name, value });
            }
        }
        Ok(Self { spec })
    }

    pub fn signal_leg(&self) -> f64 {
        self.spec.signal_leg
    }

    pub fn idler_leg(&self) -> f64 {
        self.spec.idler_leg
    }

    pub fn pump_arm(&self) -> f64 {
        self.spec.pump_arm
    }

    pub fn raise_time(&self) -> f64 {
        self.spec.raise_time
    }

    pub fn electronics_lag(&self) -> f64 {
        self.spec.electronics_lag
    }

    pub fn light_speed(&self) -> f64 {
        self.spec.light_speed
    }

    pub fn spec(&self) -> &GeometrySpec {
        &self.spec
    }

    /// Hypotenuse of the leg triangle: the distance the actuation
    /// information effectively covers.
    pub fn hypotenuse(&self) -> f64 {
        self.spec.signal_leg.hypot(self.spec.idler_leg)
    }

    /// Detector response latency `k * r^2 / I`.
    pub fn detector_response(&self) -> f64 {
        self.spec.detector_response_coeff * self.spec.pump_arm * self.spec.pump_arm
            / self.spec.pump_intensity
    }

    fn leg_gap(&self) -> Result<f64, GeometryError> {
        if self.spec.idler_leg == self.spec.signal_leg {
            return Err(GeometryError::Singular);
        }
        if self.spec.idler_leg > self.spec.signal_leg {
            return Err(GeometryError::Reversed);
        }
        Ok(self.spec.signal_leg - self.spec.idler_leg)
    }

    /// Maximal transmission speed `c * sqrt(s^2 + i^2) / (s - i)`.
    ///
    /// Exceeds `c` exactly when `0 < idler_leg < signal_leg`.
    pub fn max_signal_speed(&self) -> Result<f64, GeometryError> {
        let gap = self.leg_gap()?;
        Ok(self.spec.light_speed * self.hypotenuse() / gap)
    }

    /// Minimal transmission speed once optical transit, detector
    /// response, actuation, and electronics latencies are all charged:
    /// `sqrt(s^2 + i^2) / ((s - i)/c + k r^2 / I + T + T0)`.
    pub fn min_signal_speed(&self) -> Result<f64, GeometryError> {
        let gap = self.leg_gap()?;
        let elapsed = gap / self.spec.light_speed
            + self.detector_response()
            + self.spec.raise_time
            + self.spec.electronics_lag;
        Ok(self.hypotenuse() / elapsed)
    }

    /// Necessary (not sufficient) condition for superluminal operation:
    /// `r * sqrt(2) > c * T0`, evaluated strictly.
    pub fn is_feasible(&self) -> bool {
        self.spec.pump_arm * std::f64::consts::SQRT_2
            > self.spec.light_speed * self.spec.electronics_lag
    }
}
