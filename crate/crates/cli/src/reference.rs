//! Published reference results for these estimator designs, from their
//! original MATLAB/Simulink evaluation on a full nonlinear airship model.
//! This repository uses a kinematic simulator, so the numbers are attached
//! to reports as orientation only, never as reproduction targets.

pub struct ReferenceRms {
    pub estimator: &'static str,
    /// North wind-error RMS (m/s).
    pub north: f64,
    /// East wind-error RMS (m/s).
    pub east: f64,
}

/// First evaluation scenario (wind 2 m/s East switching to 3 m/s at 180 deg).
pub const SCENARIO1_RMS: [ReferenceRms; 4] = [
    ReferenceRms { estimator: "cho2011", north: 1.01, east: 1.74 },
    ReferenceRms { estimator: "ekf", north: 0.58, east: 1.42 },
    ReferenceRms { estimator: "nn", north: 1.19, east: 1.25 },
    ReferenceRms { estimator: "hybrid", north: 0.74, east: 0.71 },
];

/// Second evaluation scenario (wind 2 m/s North switching to 3 m/s East).
pub const SCENARIO2_RMS: [ReferenceRms; 4] = [
    ReferenceRms { estimator: "cho2011", north: 0.71, east: 0.52 },
    ReferenceRms { estimator: "ekf", north: 0.52, east: 0.38 },
    ReferenceRms { estimator: "nn", north: 1.01, east: 1.21 },
    ReferenceRms { estimator: "hybrid", north: 0.46, east: 0.52 },
];

pub fn rms_reference_for(scenario_name: &str) -> Option<&'static [ReferenceRms]> {
    match scenario_name {
        "scenario1" => Some(&SCENARIO1_RMS),
        "scenario2" => Some(&SCENARIO2_RMS),
        _ => None,
    }
}

pub struct ReferenceFit {
    pub split: &'static str,
    pub r_value: f64,
    pub mse: f64,
}

/// Network fit reported for the original 1281-simulation training campaign.
pub const TRAINING_FIT: [ReferenceFit; 4] = [
    ReferenceFit { split: "training", r_value: 0.99731, mse: 0.0206 },
    ReferenceFit { split: "validation", r_value: 0.99732, mse: 0.0205 },
    ReferenceFit { split: "test", r_value: 0.99720, mse: 0.0205 },
    ReferenceFit { split: "total", r_value: 0.99729, mse: 0.0205 },
];
