//! Simulation and inversion of single-view, flash-lit polarization captures.
//!
//! The crate renders polarizer-filtered captures of meshes with spatially
//! varying reflectance, extracts the polarization cues (normalized Stokes
//! map, normalized diffuse color), recovers normals, depth and SVBRDF maps by
//! gradient-based fitting of a polarized rendering loss, synthesizes
//! datasets and evaluates predictions with L1 metrics over relit renderings.

pub mod brdf;
pub mod cli;
pub mod cues;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod grid;
pub mod inverse;
pub mod io;
pub mod maps;
pub mod render;
pub mod stokes;

pub use error::{Error, Result};
pub use grid::{Grid, Mask, RadianceImage, Rgb, ScalarMap};
pub use maps::SvbrdfMaps;
