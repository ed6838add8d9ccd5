use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub const ALL: [Split; 2] = [Split::Train, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split {s:?} (expected train or test)"))),
        }
    }
}

/// Mesh catalog: OBJ files first, then built-in procedural meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshCatalog {
    pub paths: Vec<PathBuf>,
    pub builtin: usize,
}

impl Default for MeshCatalog {
    fn default() -> Self {
        Self {
            paths: Vec::new(),
            builtin: 26,
        }
    }
}

/// Material catalog: texture-set directories first, then procedural sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialCatalog {
    pub dirs: Vec<PathBuf>,
    pub procedural: usize,
}

impl Default for MaterialCatalog {
    fn default() -> Self {
        Self {
            dirs: Vec::new(),
            procedural: 2030,
        }
    }
}

/// Asset counts of one split. Splits take consecutive, disjoint ranges of
/// the catalogs (train first).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub meshes: usize,
    pub materials: usize,
    /// Defaults to one sample per mesh × material pair.
    #[serde(default)]
    pub samples: Option<usize>,
}

impl SplitConfig {
    pub fn sample_count(&self) -> usize {
        self.samples.unwrap_or(self.meshes * self.materials)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationConfig {
    /// Uniform over SO(3) instead of azimuth × limited elevation.
    pub full_so3: bool,
    pub max_elevation_deg: f64,
}

impl Default for RotationConfig {
    fn default() -> Self {
        Self {
            full_so3: false,
            max_elevation_deg: 45.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub meshes: MeshCatalog,
    pub materials: MaterialCatalog,
    pub train: SplitConfig,
    pub test: SplitConfig,
    pub resolution: usize,
    pub fov_deg: f64,
    /// Standard deviation of the noise added to the normalized Stokes cue.
    pub noise_sigma: f64,
    pub seed: u64,
    pub rotation: RotationConfig,
    /// Range of the random UV scale; offsets are uniform in `[0, 1)²`.
    pub uv_scale: [f64; 2],
    /// 99th percentile of `s0` after flash auto-exposure.
    pub exposure: f64,
    /// Resolution of procedural texture sets.
    pub texture_resolution: usize,
    /// Framing margin: the unit-radius object fills `1 / margin` of the view.
    pub margin: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            meshes: MeshCatalog::default(),
            materials: MaterialCatalog::default(),
            train: SplitConfig {
                meshes: 20,
                materials: 2000,
                samples: None,
            },
            test: SplitConfig {
                meshes: 6,
                materials: 30,
                samples: Some(250),
            },
            resolution: 512,
            fov_deg: 40.0,
            noise_sigma: 0.05,
            seed: 0,
            rotation: RotationConfig::default(),
            uv_scale: [1.0, 2.0],
            exposure: 1.0,
            texture_resolution: 256,
            margin: 1.1,
        }
    }
}

impl DatasetConfig {
    pub fn split(&self, s: Split) -> &SplitConfig {
        match s {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Offset of the split's range within the mesh and material catalogs.
    pub fn catalog_offset(&self, s: Split) -> (usize, usize) {
        match s {
            Split::Train => (0, 0),
            Split::Test => (self.train.meshes, self.train.materials),
        }
    }

    pub fn mesh_catalog_len(&self) -> usize {
        self.meshes.paths.len() + self.meshes.builtin
    }

    pub fn material_catalog_len(&self) -> usize {
        self.materials.dirs.len() + self.materials.procedural
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for s in Split::ALL {
            let c = self.split(s);
            if c.meshes < 1 || c.materials < 1 {
                return bad(format!("{} split needs at least one mesh and one material", s.as_str()));
            }
            if c.samples == Some(0) {
                return bad(format!("{} split sample count must be >= 1", s.as_str()));
            }
        }
        let need_meshes = self.train.meshes + self.test.meshes;
        if self.mesh_catalog_len() < need_meshes {
            return bad(format!(
                "mesh catalog has {} entries, splits need {need_meshes}",
                self.mesh_catalog_len()
            ));
        }
        let need_mats = self.train.materials + self.test.materials;
        if self.material_catalog_len() < need_mats {
            return bad(format!(
                "material catalog has {} entries, splits need {need_mats}",
                self.material_catalog_len()
            ));
        }
        if self.resolution < 8 {
            return bad(format!("resolution {} must be >= 8", self.resolution));
        }
        if !(10.0..=120.0).contains(&self.fov_deg) {
            return bad(format!("fov {} must be in [10, 120] degrees", self.fov_deg));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma {} must be >= 0", self.noise_sigma));
        }
        if self.exposure.is_nan() || self.exposure <= 0.0 {
            return bad(format!("exposure {} must be positive", self.exposure));
        }
        if !(self.uv_scale[0] > 0.0 && self.uv_scale[1] >= self.uv_scale[0]) {
            return bad(format!("uv_scale range {:?} is invalid", self.uv_scale));
        }
        if !(0.0..=90.0).contains(&self.rotation.max_elevation_deg) {
            return bad("rotation.max_elevation_deg must be in [0, 90]".into());
        }
        if self.texture_resolution < 2 || self.margin.is_nan() || self.margin < 1.0 {
            return bad("texture_resolution must be >= 2 and margin >= 1".into());
        }
        Ok(())
    }

    /// Parses TOML; relative asset paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: DatasetConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in cfg.meshes.paths.iter_mut().chain(cfg.materials.dirs.iter_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
