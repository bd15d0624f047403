//! The benchmark plant: a mass on a horizontal spring, pulled by a second
//! spring whose far end rides on a vertically moving platform. The platform
//! height is the control input, the horizontal displacement the output.
//! Linear springs, but the geometry makes the static response distinctly
//! non-linear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SignalSeries;

/// Plant parameters, all dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalSystemParams {
    /// Natural frequency (stiffness over mass, square-rooted).
    pub omega: f64,
    /// Damping ratio; friction coefficient over mass is `2 * zeta * omega`.
    pub zeta: f64,
    /// Horizontal distance between the mass and the platform at rest.
    pub l: f64,
    /// Vertical distance between the mass and the platform at rest.
    pub h: f64,
    /// Integrator time step.
    pub dt: f64,
    pub y0: f64,
    pub v0: f64,
}

impl Default for MechanicalSystemParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            zeta: 1.0,
            l: 1.0,
            h: 0.5,
            dt: std::f64::consts::TAU / 128.0,
            y0: 0.0,
            v0: 0.0,
        }
    }
}

impl MechanicalSystemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidConfig("omega must be positive".into()));
        }
        if !(self.zeta >= 0.0) {
            return Err(Error::InvalidConfig("zeta must be non-negative".into()));
        }
        if !(self.l > 0.0) {
            return Err(Error::InvalidConfig("l must be positive".into()));
        }
        if !(self.h >= 0.0) {
            return Err(Error::InvalidConfig("h must be non-negative".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if self.dt >= std::f64::consts::TAU / self.omega {
            return Err(Error::InvalidConfig(format!(
                "dt = {} cannot resolve oscillations at omega = {}",
                self.dt, self.omega
            )));
        }
        if !self.y0.is_finite() || !self.v0.is_finite() {
            return Err(Error::InvalidConfig("initial state must be finite".into()));
        }
        Ok(())
    }

    /// Half the span of the static response; used to scale errors and noise.
    pub fn max_static_displacement(&self) -> f64 {
        0.5 * ((self.l * self.l + self.h * self.h).sqrt() - self.l)
    }
}

/// Total restoring force per unit mass at displacement `y` under control `x`.
pub fn plant_force(y: f64, x: f64, params: &MechanicalSystemParams) -> Result<f64> {
    let dl = params.l - y;
    let dh = params.h - x;
    let cur_sq = dl * dl + dh * dh;
    if cur_sq == 0.0 {
        return Err(Error::SingularGeometry { y, x });
    }
    let rest_len = (params.l * params.l + params.h * params.h).sqrt();
    let cur_len = cur_sq.sqrt();
    let w2 = params.omega * params.omega;
    Ok(-w2 * y - w2 * (rest_len - cur_len) * dl / cur_len)
}

/// Integrate the plant over a control series sampled at the plant's own
/// time step, starting from the configured initial state.
pub fn simulate_plant(
    control: &SignalSeries,
    params: &MechanicalSystemParams,
) -> Result<SignalSeries> {
    params.validate()?;
    if ((control.dt() - params.dt) / params.dt).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "control sampled at dt = {} but the plant step is {}",
            control.dt(),
            params.dt
        )));
    }
    let xs = control.values();
    let n = xs.len();
    let damp = params.zeta * params.omega * params.dt;
    let dt_sq = params.dt * params.dt;
    let mut y = vec![0.0; n];
    y[0] = params.y0;
    if n >= 2 {
        let f0 = plant_force(params.y0, xs[0], params)?;
        y[1] = params.y0 + params.dt * params.v0 * (1.0 - damp) + 0.5 * f0 * dt_sq;
    }
    for i in 1..n.saturating_sub(1) {
        let f = plant_force(y[i], xs[i], params)?;
        y[i + 1] = (2.0 * y[i] - y[i - 1] * (1.0 - damp) + f * dt_sq) / (1.0 + damp);
        if !y[i + 1].is_finite() {
            return Err(Error::NonFinite { step: i + 1 });
        }
    }
    SignalSeries::new(y, params.dt)
}
