//! Wind velocity estimation for a robotic airship.
//!
//! The vehicle carries a GPS (NED groundspeed), an IMU (Euler attitude) and a
//! one-dimensional Pitot probe. None of these measures the wind directly; this
//! crate estimates the horizontal wind components and the Pitot scale factor
//! from the kinematic relations between groundspeed, airspeed and attitude.
//!
//! Three estimators are provided:
//!
//! - [`estimators`]: an extended Kalman filter over the state
//!   `(V_Nw, V_Ew, c_f)`, either with a single pressure observation
//!   (the `Cho2011` baseline) or with three observation equations;
//! - [`neural`]: a feed-forward network (8 remapped inputs, three sigmoid
//!   hidden layers of 24 units, linear outputs) trained with scaled
//!   conjugate gradient on simulated flights;
//! - a hybrid filter that appends the network output to the EKF measurement
//!   vector as a redundant measurement (see [`pipeline::hybrid_step`]).
//!
//! Supporting modules: [`frames`] (body/NED rotations), [`airdata`]
//! (airspeed, flow angles, Pitot model), [`windmodel`] (observation
//! equations and Jacobians), [`pipeline`] (low-pass prefilter and the 16 Hz
//! multi-rate scheduler) and [`simkit`] (kinematic truth simulator, noisy
//! sensor synthesis and the training scenario grid).

pub mod airdata;
pub mod estimators;
pub mod frames;
pub mod kv;
pub mod neural;
pub mod pipeline;
pub mod simkit;
pub mod windmodel;

pub use frames::{EulerAttitude, Vec3};
pub use windmodel::{MeasurementFrame, MeasurementVariant, WindState};
