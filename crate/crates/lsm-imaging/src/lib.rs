//! Time-domain and multifrequency linear-sampling-method imaging for
//! ultrasonic array data.
//!
//! The pipeline simulates array waveform data on a 2D plate model, forms
//! the scattered field, builds a dictionary of trial scattering
//! signatures over a sampling grid, solves the regularized scattering
//! equations, and renders indicator maps whose peaks localize subsurface
//! defects. See the book under `book/` for a guided tour.

pub mod calibration;
pub mod cli;
pub mod dataops;
pub mod imaging;
pub mod inversion;
pub mod triallib;
pub mod wavesim;
