//! Synthetic dataset generation and the on-disk sample format.

mod assets;
mod config;
mod generate;
mod sample;

#[cfg(test)]
mod tests;

use sha2::{Digest, Sha256};

pub use assets::{
    combinations, load_texture_dir, material_catalog, mesh_catalog, Combination, MaterialAsset, MeshAsset,
};
pub use config::{DatasetConfig, MaterialCatalog, MeshCatalog, RotationConfig, Split, SplitConfig};
pub use generate::{
    generate_dataset, generate_split, read_manifest, sample_id, Manifest, ManifestEntry, ManifestHeader,
    ManifestSummary, SampleRecord, SkippedSample, MANIFEST_NAME, MANIFEST_VERSION,
};
pub use sample::{
    cues_from_images, generate_sample, load_capture, load_ground_truth, random_rotation, read_meta, read_stokes_cue,
    sample_files, write_capture, write_meta, write_stokes_cue, CaptureFiles, ImageScales, LoadedCapture, SampleMeta,
    SampleSpec, CUE_FILES, EXTRA_FILES, GT_FILES, POLARIZED_FILES,
};

/// Stable seed derivation: first 8 bytes of `sha256(seed ‖ parts)`,
/// independent of platform and thread scheduling.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("sha256 has 32 bytes"))
}
