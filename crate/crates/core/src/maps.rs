//! The five appearance and shape maps plus their coverage mask.

use crate::brdf::{Vec3, ALPHA_MIN};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, Rgb, ScalarMap};

/// Diffuse albedo, specular albedo, roughness, camera-space normal and depth
/// (distance along the viewing axis, scene units). Values outside `mask` are
/// zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SvbrdfMaps {
    pub diffuse: Grid<Rgb>,
    pub specular: Grid<Rgb>,
    pub roughness: ScalarMap,
    pub normal: Grid<Vec3>,
    pub depth: ScalarMap,
    pub mask: Mask,
}

impl SvbrdfMaps {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            diffuse: Grid::zeros(width, height),
            specular: Grid::zeros(width, height),
            roughness: Grid::zeros(width, height),
            normal: Grid::filled(width, height, Vec3::zeros()),
            depth: Grid::zeros(width, height),
            mask: Grid::filled(width, height, false),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    /// Checks dimensions and value ranges on the mask.
    pub fn validate(&self) -> Result<()> {
        let m = &self.mask;
        m.ensure_same_dims(&self.diffuse, "diffuse")?;
        m.ensure_same_dims(&self.specular, "specular")?;
        m.ensure_same_dims(&self.roughness, "roughness")?;
        m.ensure_same_dims(&self.normal, "normal")?;
        m.ensure_same_dims(&self.depth, "depth")?;
        for i in 0..m.len() {
            if !m.data()[i] {
                continue;
            }
            let bad = |what: &str| {
                Err(Error::InvalidInput(format!(
                    "{what} out of range at pixel ({}, {})",
                    i % m.width(),
                    i / m.width()
                )))
            };
            let in01 = |c: &Rgb| c.iter().all(|v| (0.0..=1.0).contains(v));
            if !in01(&self.diffuse.data()[i]) {
                return bad("diffuse albedo");
            }
            if !in01(&self.specular.data()[i]) {
                return bad("specular albedo");
            }
            let r = self.roughness.data()[i];
            if !(ALPHA_MIN - 1e-12..=1.0).contains(&r) {
                return bad("roughness");
            }
            if (self.normal.data()[i].norm() - 1.0).abs() > 1e-6 {
                return bad("normal length");
            }
            if !self.depth.data()[i].is_finite() {
                return bad("depth");
            }
        }
        Ok(())
    }

    /// Zeroes every field outside the mask.
    pub fn clear_outside_mask(&mut self) {
        for i in 0..self.mask.len() {
            if !self.mask.data()[i] {
                self.diffuse.data_mut()[i] = [0.0; 3];
                self.specular.data_mut()[i] = [0.0; 3];
                self.roughness.data_mut()[i] = 0.0;
                self.normal.data_mut()[i] = Vec3::zeros();
                self.depth.data_mut()[i] = 0.0;
            }
        }
    }
}
