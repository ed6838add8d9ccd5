//! Forward simulation: meshes, z-buffer rasterization to G-buffers and
//! deferred polarized shading under a collocated flash.

mod camera;
pub mod fixtures;
mod material;
mod mesh;
mod raster;
mod shade;

pub use camera::{Camera, FlashLight, PointLight};
pub use material::{Material, Reflectance, TextureSet};
pub use mesh::{load_obj, parse_obj, Mesh};
pub use raster::{ground_truth_maps, rasterize, GBuffer, Scene, NEAR_PLANE};
pub use shade::{
    filter_all, material_at, orientation, render_capture, render_relit, shade_maps, shade_point,
    shade_polarized, RenderOptions, RenderedCapture, ShadeOptions,
};
