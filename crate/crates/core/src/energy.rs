//! Rotor-speed power model and energy integration over flight traces.
//!
//! Electrical power per rotor is a polynomial in rotor speed,
//! `P(ω) = c₁ω + c₃ω³ + c₆ω⁶`: the linear term lumps fixed losses
//! proportional to speed, the cubic term is induced/profile power, and the
//! sixth-order term penalizes the top of the speed range. Trace energy is a
//! trapezoidal integral of total power over the uniform record grid.

use crate::config::PowerConfig;
use crate::vehicle::RolloutTrace;

/// Electrical power of one rotor at speed `omega` (rad/s), in watts.
pub fn rotor_power(omega: f64, cfg: &PowerConfig) -> f64 {
    let w2 = omega * omega;
    let w3 = w2 * omega;
    omega * cfg.c1 + w3 * cfg.c3 + w3 * w3 * cfg.c6
}

/// Total vehicle power for one trace record.
pub fn record_power(rotor: &[f64; 4], cfg: &PowerConfig) -> f64 {
    rotor.iter().map(|&w| rotor_power(w, cfg)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub energy_j: f64,
    pub duration_s: f64,
    pub mean_power_w: f64,
}

/// Trapezoidal energy of a closed-loop trace on its record grid.
pub fn trace_energy(trace: &RolloutTrace, cfg: &PowerConfig) -> EnergyReport {
    let powers: Vec<f64> = trace.samples.iter().map(|s| record_power(&s.rotor, cfg)).collect();
    let mut energy = 0.0;
    for w in powers.windows(2) {
        energy += 0.5 * (w[0] + w[1]) * trace.dt;
    }
    let duration = trace.duration();
    EnergyReport {
        energy_j: energy,
        duration_s: duration,
        mean_power_w: if duration > 0.0 { energy / duration } else { 0.0 },
    }
}
