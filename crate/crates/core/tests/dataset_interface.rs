//! The on-disk dataset contract consumed by external training code, checked
//! with a plain PNG decoder and JSON parser rather than the crate's readers.

use std::path::Path;

use image::{ColorType, DynamicImage};
use serde_json::Value;

use polcap::dataset::{generate_split, DatasetConfig, MaterialCatalog, MeshCatalog, Split, SplitConfig};

const RGB16: &[&str] = &[
    "i000.png",
    "i045.png",
    "i090.png",
    "i135.png",
    "full.png",
    "stokes_norm.png",
    "diffuse_cue.png",
    "gt_diffuse.png",
    "gt_specular.png",
    "gt_normal.png",
];
const GRAY16: &[&str] = &["gt_roughness.png", "gt_depth.png"];

fn config() -> DatasetConfig {
    DatasetConfig {
        meshes: MeshCatalog {
            paths: vec![],
            builtin: 3,
        },
        materials: MaterialCatalog {
            dirs: vec![],
            procedural: 5,
        },
        train: SplitConfig {
            meshes: 2,
            materials: 2,
            samples: None,
        },
        test: SplitConfig {
            meshes: 1,
            materials: 2,
            samples: Some(3),
        },
        resolution: 40,
        texture_resolution: 16,
        noise_sigma: 0.0,
        seed: 99,
        ..Default::default()
    }
}

fn open(path: &Path) -> DynamicImage {
    image::open(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn raw16(dir: &Path, name: &str) -> Vec<[u16; 3]> {
    open(&dir.join(name)).into_rgb16().pixels().map(|p| p.0).collect()
}

#[test]
fn manifest_and_files_follow_the_documented_layout() {
    let root = tempfile::tempdir().unwrap();
    generate_split(&config(), root.path(), Split::Train, false).unwrap();
    let split_dir = root.path().join("train");
    let text = std::fs::read_to_string(split_dir.join("manifest.ndjson")).unwrap();
    let records: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();

    assert_eq!(records.first().unwrap()["kind"], "header");
    assert_eq!(records.last().unwrap()["kind"], "summary");
    let header = &records[0];
    assert_eq!(header["split"], "train");
    assert!(header["config_hash"].as_str().is_some_and(|h| !h.is_empty()));
    let samples: Vec<&Value> = records.iter().filter(|r| r["kind"] == "sample").collect();
    assert_eq!(samples.len(), 4);
    assert_eq!(header["samples"], 4);

    for (i, s) in samples.iter().enumerate() {
        assert_eq!(s["index"], i);
        assert_eq!(s["id"], format!("train_{i:06}"));
        let dir = split_dir.join(s["dir"].as_str().unwrap());
        let files: Vec<&str> = s["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
        assert_eq!(files.len(), 15);
        for f in &files {
            assert!(split_dir.join(f).is_file(), "{f}");
        }
        let (w, h) = (s["width"].as_u64().unwrap() as u32, s["height"].as_u64().unwrap() as u32);
        for name in RGB16 {
            let img = open(&dir.join(name));
            assert_eq!(img.color(), ColorType::Rgb16, "{name}");
            assert_eq!((img.width(), img.height()), (w, h));
        }
        for name in GRAY16 {
            assert_eq!(open(&dir.join(name)).color(), ColorType::L16, "{name}");
        }
        assert_eq!(open(&dir.join("stokes_vis.png")).color(), ColorType::Rgb8);

        // Decode with the manifest scales and check capture identities:
        // i0 + i90 = i45 + i135 = full, up to quantization.
        let scale = |k: &str| s["scales"][k].as_f64().unwrap();
        let decode = |name: &str, k: &str| -> Vec<[f64; 3]> {
            let sc = scale(k);
            raw16(&dir, name).into_iter().map(|p| p.map(|r| r as f64 / 65535.0 * sc)).collect()
        };
        let (i0, i45, i90, i135, full) = (
            decode("i000.png", "i000"),
            decode("i045.png", "i045"),
            decode("i090.png", "i090"),
            decode("i135.png", "i135"),
            decode("full.png", "full"),
        );
        let half = |k: &str| 0.5 * scale(k) / 65535.0;
        let tol_pair = half("i000") + half("i090") + half("i045") + half("i135") + 1e-12;
        let tol_full = half("i000") + half("i090") + half("full") + 1e-12;
        for p in 0..i0.len() {
            for c in 0..3 {
                let a = i0[p][c] + i90[p][c];
                assert!((a - (i45[p][c] + i135[p][c])).abs() <= tol_pair);
                assert!((a - full[p][c]).abs() <= tol_full);
            }
        }

        // Coverage, unit normals and the depth range on the mask.
        let mask: Vec<bool> = open(&dir.join("mask.png")).into_luma8().pixels().map(|p| p.0[0] > 0).collect();
        assert!(mask.iter().any(|&m| m));
        let normals = raw16(&dir, "gt_normal.png");
        let depth: Vec<u16> = open(&dir.join("gt_depth.png")).into_luma16().pixels().map(|p| p.0[0]).collect();
        let (off, dscale) = (s["gt"]["depth"]["offset"].as_f64().unwrap(), s["gt"]["depth"]["scale"].as_f64().unwrap());
        assert!(off > 0.0 && dscale > 0.0);
        for p in 0..mask.len() {
            if mask[p] {
                let n = normals[p].map(|r| r as f64 / 65535.0 * 2.0 - 1.0);
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                assert!((len - 1.0).abs() < 1e-4, "{len}");
                let d = off + depth[p] as f64 / 65535.0 * dscale;
                assert!(d >= off && d <= off + dscale);
            } else {
                assert_eq!(normals[p], [0, 0, 0]);
            }
        }

        let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json")).unwrap()).unwrap();
        assert_eq!(meta["id"], s["id"]);
        assert_eq!(meta["seed"], s["seed"]);
    }
}
