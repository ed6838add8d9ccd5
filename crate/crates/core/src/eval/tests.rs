use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataset::{generate_split, DatasetConfig, MaterialCatalog, MeshCatalog, Split, SplitConfig};
use crate::grid::Grid;
use crate::inverse::{FitConfig, FitMode};
use crate::render::fixtures::{sphere_scene, SPHERE_DISTANCE};
use crate::render::{render_capture, Material, RenderOptions, RenderedCapture};

fn sphere(res: usize) -> RenderedCapture {
    let scene = sphere_scene(res, 3, Material::uniform([0.6, 0.4, 0.3], [0.2; 3], 0.3));
    render_capture(&scene, RenderOptions::default()).unwrap()
}

fn geo(r: &RenderedCapture) -> RelightGeometry {
    let (w, h) = r.gt.dims();
    RelightGeometry {
        camera: crate::render::Camera::new(40.0, w, h).unwrap(),
        object_distance: SPHERE_DISTANCE,
    }
}

#[test]
fn l1_identity_and_offset() {
    let mask = Grid::from_fn(5, 4, |x, _| x > 0);
    let a = Grid::from_fn(5, 4, |x, y| (x * y) as f64);
    assert_eq!(l1_metric(&a, &a, &mask).unwrap(), 0.0);
    let b = a.map(|v| v + 0.1);
    assert!((l1_metric(&b, &a, &mask).unwrap() - 0.1).abs() < 1e-12);
    assert!((l1_depth(&a.map(|v| v + 7.0), &a, &mask).unwrap()).abs() < 1e-12);
    let empty = Grid::filled(5, 4, false);
    assert!(matches!(l1_metric(&a, &a, &empty), Err(crate::Error::EmptyMask)));
}

#[test]
fn l1_matches_brute_force_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (w, h) = (17, 11);
    let mask = Grid::from_fn(w, h, |_, _| rng.random_bool(0.7));
    let p: Grid<[f64; 3]> = Grid::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]);
    let g: Grid<[f64; 3]> = Grid::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]);
    let mut sum = 0.0;
    let mut n = 0.0;
    for y in 0..h {
        for x in 0..w {
            if *mask.get(x, y) {
                for c in 0..3 {
                    sum += (p.get(x, y)[c] - g.get(x, y)[c]).abs();
                    n += 1.0;
                }
            }
        }
    }
    assert!((l1_metric(&p, &g, &mask).unwrap() - sum / n).abs() < 1e-9);
}

#[test]
fn relights_depend_only_on_seed_sample_and_index() {
    let cfg = EvalConfig::default();
    let r = sphere(16);
    let g = geo(&r);
    let a = relight_light(&cfg, &g, "s1", 4);
    assert_eq!(a, relight_light(&cfg, &g, "s1", 4));
    assert_ne!(a, relight_light(&cfg, &g, "s1", 5));
    assert_ne!(a, relight_light(&cfg, &g, "s2", 4));
    let other = EvalConfig { seed: 1, ..cfg.clone() };
    assert_ne!(a, relight_light(&other, &g, "s1", 4));
    let center = crate::brdf::Vec3::new(0.0, 0.0, -SPHERE_DISTANCE);
    for i in 0..200 {
        let l = relight_light(&cfg, &g, "s1", i);
        let d = l.position() - center;
        let k = d.norm() / SPHERE_DISTANCE;
        assert!((0.8 - 1e-12..=1.5 + 1e-12).contains(&k));
        assert!(d.z / d.norm() >= 60f64.to_radians().cos() - 1e-12);
        assert_eq!(l.intensity, [SPHERE_DISTANCE * SPHERE_DISTANCE; 3]);
    }
}

#[test]
fn ground_truth_against_itself_is_zero() {
    let r = sphere(32);
    let row = evaluate_maps(&r.gt, &r.gt, &geo(&r), "gt", &EvalConfig::default()).unwrap();
    assert_eq!(row.relights, 20);
    assert_eq!(row.l1_normal, 0.0);
    assert_eq!(row.l1_depth, 0.0);
    assert!(row.l1_render < 1e-6 && row.l1_render_linear < 1e-6);
    assert_eq!((row.l1_diffuse, row.l1_specular, row.l1_roughness), (0.0, 0.0, 0.0));
}

#[test]
fn render_metric_sees_reflectance_errors() {
    let r = sphere(32);
    let mut pred = r.gt.clone();
    for d in pred.diffuse.data_mut() {
        d[0] *= 0.5;
    }
    let row = evaluate_maps(&r.gt, &pred, &geo(&r), "x", &EvalConfig::default()).unwrap();
    assert!(row.l1_render > 1e-3 && row.l1_render_linear > 1e-3);
    assert_eq!(row.l1_normal, 0.0);
}

#[test]
fn aggregates_ignore_row_order_and_flagged_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows: Vec<MetricsRow> = (0..9)
        .map(|i| {
            let mut r = MetricsRow::flagged(&format!("s{i}"), "m", String::new());
            r.flagged = None;
            r.l1_normal = rng.random::<f64>() * 1e3;
            r.l1_depth = rng.random();
            r.l1_render = rng.random();
            r.l1_render_linear = rng.random();
            r.l1_diffuse = rng.random();
            r.l1_specular = rng.random();
            r.l1_roughness = rng.random();
            r
        })
        .collect();
    rows.push(MetricsRow::flagged("bad", "m", "missing".into()));
    let a = MetricsTable::new(rows.clone());
    rows.reverse();
    rows.swap(2, 5);
    let b = MetricsTable::new(rows);
    assert_eq!(a.aggregates, b.aggregates);
    let agg = a.aggregate("m").unwrap();
    assert_eq!((agg.count, agg.flagged), (9, 1));
    assert!(agg.stat("l1_normal").unwrap().mean.is_finite());
}

#[test]
fn benchmark_has_250_records_over_6_by_30() {
    let recs = build_benchmark(&DatasetConfig::default()).unwrap();
    assert_eq!(recs.len(), 250);
    let meshes: std::collections::BTreeSet<_> = recs.iter().map(|r| &r.mesh).collect();
    let mats: std::collections::BTreeSet<_> = recs.iter().map(|r| &r.material).collect();
    let pairs: std::collections::BTreeSet<_> = recs.iter().map(|r| (&r.mesh, &r.material)).collect();
    assert_eq!((meshes.len(), mats.len(), pairs.len()), (6, 30, 180));
}

#[test]
fn evaluate_reads_results_and_flags_missing_predictions() {
    let cfg = DatasetConfig {
        meshes: MeshCatalog {
            paths: vec![],
            builtin: 2,
        },
        materials: MaterialCatalog {
            dirs: vec![],
            procedural: 3,
        },
        train: SplitConfig {
            meshes: 1,
            materials: 1,
            samples: None,
        },
        test: SplitConfig {
            meshes: 1,
            materials: 2,
            samples: Some(3),
        },
        resolution: 24,
        texture_resolution: 16,
        ..Default::default()
    };
    let data = tempfile::tempdir().unwrap();
    let results = tempfile::tempdir().unwrap();
    let m = generate_split(&cfg, data.path(), Split::Test, false).unwrap();
    for r in &m.samples[..2] {
        // Ground-truth files copied verbatim, as a user would.
        let dir = results.path().join(&r.dir);
        std::fs::create_dir_all(&dir).unwrap();
        for name in crate::io::MAP_NAMES {
            std::fs::copy(m.sample_dir(r).join(format!("gt_{name}.png")), dir.join(format!("{name}.png"))).unwrap();
        }
        write_json(&r.gt, &dir.join(PREDICTION_META)).unwrap();
    }
    let ecfg = EvalConfig {
        n_relights: 3,
        ..Default::default()
    };
    let t = evaluate(results.path(), &m, &ecfg).unwrap();
    assert_eq!(t.rows.len(), 3);
    for r in &t.rows[..2] {
        assert!(r.flagged.is_none());
        assert_eq!(r.l1_normal, 0.0);
        assert_eq!((r.l1_depth, r.l1_diffuse, r.l1_roughness), (0.0, 0.0, 0.0));
        assert!(r.l1_render < 1e-6);
    }
    assert!(t.rows[2].flagged.is_some());
    let agg = t.aggregate("fit").unwrap();
    assert_eq!((agg.count, agg.flagged), (2, 1));
    let out = tempfile::tempdir().unwrap();
    write_metrics(&t, out.path()).unwrap();
    let csv = std::fs::read_to_string(out.path().join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn ablation_table_shape_and_ordering() {
    let r = sphere(24);
    let g = geo(&r);
    let s = AblationSample {
        id: "sphere".into(),
        images: r.images.clone(),
        mask: r.gbuffer.mask.clone(),
        camera: g.camera,
        flash: r.flash,
        depth_prior: r.gt.depth.clone(),
        object_distance: SPHERE_DISTANCE,
        gt: r.gt.clone(),
    };
    let fit = FitConfig {
        iterations: 40,
        ..Default::default()
    };
    let ecfg = EvalConfig {
        n_relights: 2,
        ..Default::default()
    };
    let t = ablation_suite(&[s], &[FitMode::NoPolarization, FitMode::NoPolarizedLoss], &fit, &ecfg).unwrap();
    assert_eq!(t.modes[0], FitMode::Full);
    assert_eq!(t.table.rows.len(), 3);
    assert_eq!(t.not_run[0].component, "neural");
    let normal = |m: FitMode| t.table.aggregate(m.as_str()).unwrap().stat("l1_normal").unwrap().mean;
    assert!(normal(FitMode::NoPolarization) >= normal(FitMode::Full));
}

#[test]
fn comparison_grid_layout() {
    let a = Grid::filled(4, 4, [10u8; 3]);
    let b = Grid::filled(8, 8, [20u8; 3]);
    let g = comparison_grid(&[vec![a.clone(), b], vec![a]]);
    assert_eq!(g.dims(), (2 * 10, 2 * 10));
    assert_eq!(*g.get(0, 0), [10; 3]);
    assert_eq!(*g.get(10, 0), [20; 3]);
    assert_eq!(*g.get(9, 0), [255; 3]);
}

#[test]
fn prediction_round_trip_is_close() {
    let r = sphere(24);
    let dir = tempfile::tempdir().unwrap();
    write_prediction(dir.path(), &r.gt).unwrap();
    let back = read_prediction(dir.path(), &r.gt.mask).unwrap();
    let row = evaluate_maps(&r.gt, &back, &geo(&r), "x", &EvalConfig::default()).unwrap();
    assert!(row.l1_normal < 2.0 / 65535.0 && row.l1_diffuse < 1.0 / 65535.0, "{row:?}");
}
