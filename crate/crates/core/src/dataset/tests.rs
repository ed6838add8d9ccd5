use std::collections::BTreeMap;
use std::path::Path;

use super::*;
use crate::stokes::{compute_stokes, default_epsilon, normalize_stokes, CaptureSet};

fn tiny() -> DatasetConfig {
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
            materials: 3,
            samples: None,
        },
        test: SplitConfig {
            meshes: 1,
            materials: 2,
            samples: Some(3),
        },
        resolution: 24,
        texture_resolution: 16,
        seed: 7,
        ..Default::default()
    }
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn assert_same_tree(a: &Path, b: &Path) {
    let (sa, sb) = (snapshot(a), snapshot(b));
    let ka: Vec<_> = sa.keys().collect();
    let kb: Vec<_> = sb.keys().collect();
    assert_eq!(ka, kb);
    let differing: Vec<_> = sa.iter().filter(|(k, v)| sb[*k] != **v).map(|(k, _)| k.clone()).collect();
    assert!(differing.is_empty(), "differing files: {differing:?}");
}

#[test]
fn derive_seed_is_stable_and_separates_parts() {
    assert_eq!(derive_seed(1, &["a", "b"]), derive_seed(1, &["a", "b"]));
    assert_ne!(derive_seed(1, &["a", "b"]), derive_seed(2, &["a", "b"]));
    assert_ne!(derive_seed(1, &["ab", ""]), derive_seed(1, &["a", "b"]));
}

#[test]
fn cartesian_count_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_split(&tiny(), dir.path(), Split::Train, false).unwrap();
    assert_eq!(m.samples.len(), 6);
    let s = m.summary.as_ref().unwrap();
    assert!(s.rejected.is_empty() && s.failed.is_empty());
    let pairs: std::collections::BTreeSet<_> = m.samples.iter().map(|r| (r.mesh.clone(), r.material.clone())).collect();
    assert_eq!(pairs.len(), 6);
    for r in &m.samples {
        assert_eq!(r.files.len(), 15);
        for f in &r.files {
            let p = m.root.join(f);
            assert!(p.is_file(), "{}", p.display());
            if f.ends_with(".png") {
                let img = image::open(&p).unwrap();
                assert_eq!((img.width() as usize, img.height() as usize), (r.width, r.height));
            }
        }
        let pol = r.files.iter().filter(|f| POLARIZED_FILES.iter().any(|p| f.ends_with(p))).count();
        let gt = r.files.iter().filter(|f| f.contains("/gt_")).count();
        assert_eq!((pol, gt), (4, 5));
    }
    let back = read_manifest(&m.root).unwrap();
    assert_eq!(back.samples, m.samples);
    assert_eq!(back.header.config, tiny());
}

#[test]
fn splits_use_disjoint_assets() {
    let dir = tempfile::tempdir().unwrap();
    let ms = generate_dataset(&tiny(), dir.path(), &Split::ALL, false).unwrap();
    let (train, test) = (&ms[0], &ms[1]);
    assert_eq!(test.samples.len(), 3);
    for t in &test.samples {
        assert!(train.samples.iter().all(|r| r.mesh != t.mesh && r.material != t.material));
    }
}

#[test]
fn regeneration_is_byte_identical_for_any_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_split(&tiny(), a.path(), Split::Train, false).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| generate_split(&tiny(), b.path(), Split::Train, false)).unwrap();
    assert_same_tree(a.path(), b.path());
}

#[test]
fn resume_matches_uninterrupted_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_split(&tiny(), a.path(), Split::Train, false).unwrap();
    generate_split(&tiny(), b.path(), Split::Train, false).unwrap();
    // Simulate an interruption: one sample missing, one half written, no manifest.
    let split = b.path().join("train");
    std::fs::remove_dir_all(split.join(sample_id(Split::Train, 4))).unwrap();
    std::fs::remove_file(split.join(sample_id(Split::Train, 2)).join("meta.json")).unwrap();
    std::fs::remove_file(split.join(sample_id(Split::Train, 2)).join("gt_depth.png")).unwrap();
    std::fs::remove_file(split.join(MANIFEST_NAME)).unwrap();
    generate_split(&tiny(), b.path(), Split::Train, true).unwrap();
    assert_same_tree(a.path(), b.path());
}

#[test]
fn stored_cue_matches_decoded_images() {
    let mut cfg = tiny();
    cfg.noise_sigma = 0.0;
    cfg.resolution = 48;
    let dir = tempfile::tempdir().unwrap();
    let m = generate_split(&cfg, dir.path(), Split::Test, false).unwrap();
    for r in &m.samples {
        let d = m.sample_dir(r);
        let cap = load_capture(&d).unwrap();
        let set = CaptureSet::new(cap.images.i0, cap.images.i45, cap.images.i90).unwrap();
        let s = compute_stokes(&set).unwrap();
        let want = normalize_stokes(&s, default_epsilon(&s));
        let got = read_stokes_cue(d.join("stokes_norm.png")).unwrap();
        assert_eq!(got.valid, want.valid);
        let mut worst: f64 = 0.0;
        for (g, w) in got.u.data().iter().zip(want.u.data()) {
            worst = worst.max((g[0] - w[0]).abs()).max((g[1] - w[1]).abs());
        }
        assert!(worst <= 2.0 / 65535.0, "{worst}");
        assert!(want.valid.count() > 0);
    }
}

#[test]
fn same_seed_same_sample_directory() {
    let cfg = tiny();
    let mesh = MeshAsset::Builtin(0).load().unwrap();
    let tex = MaterialAsset::Procedural(1).load(&cfg).unwrap();
    let spec = SampleSpec {
        id: "x".into(),
        split: None,
        mesh_id: "builtin:000".into(),
        material_id: "procedural:0001".into(),
        seed: 99,
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = generate_sample(&mesh, &tex, &spec, &cfg, a.path()).unwrap();
    let mb = generate_sample(&mesh, &tex, &spec, &cfg, b.path()).unwrap();
    assert_eq!(ma, mb);
    assert_same_tree(a.path(), b.path());
    let gt = load_ground_truth(a.path(), &ma, &load_capture(a.path()).unwrap().mask).unwrap();
    assert_eq!(gt.diffuse.width(), cfg.resolution);
}

#[test]
fn missing_asset_is_reported_not_fatal() {
    let mut cfg = tiny();
    cfg.materials.dirs = vec!["/nonexistent/material".into()];
    let dir = tempfile::tempdir().unwrap();
    let m = generate_split(&cfg, dir.path(), Split::Train, false).unwrap();
    let s = m.summary.unwrap();
    assert_eq!(s.failed.len(), 2);
    assert_eq!(m.samples.len(), 4);
    assert!(s.failed[0].reason.contains("asset load failed"));
}

#[test]
fn config_validation() {
    let mut cfg = tiny();
    cfg.train.meshes = 3;
    assert!(matches!(cfg.validate(), Err(crate::Error::Config(_))));
    let text = toml::to_string(&tiny()).unwrap();
    assert_eq!(DatasetConfig::from_toml(&text, Path::new(".")).unwrap(), tiny());
    assert!(DatasetConfig::from_toml("bogus = 1", Path::new(".")).is_err());
}
