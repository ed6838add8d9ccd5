//! Subcommand implementations.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use super::scene::SceneFile;
use super::{Cli, Command, CuesArgs, DepthPriorArg, EvalArgs, FitArgs, GenDatasetArgs, RenderArgs, SplitArg, VizArgs};
use crate::brdf::Vec3;
use crate::cues::diffuse_color;
use crate::dataset::{
    derive_seed, generate_dataset, load_capture, load_ground_truth, read_manifest, read_stokes_cue, write_capture,
    write_meta, write_stokes_cue, DatasetConfig, LoadedCapture, SampleMeta, Split, MANIFEST_NAME, POLARIZED_FILES,
};
use crate::error::{Error, Result};
use crate::eval::{
    comparison_grid, evaluate, read_prediction, relight_pair, tonemap, write_json, write_metrics, EvalConfig,
    RelightGeometry,
};
use crate::grid::{Grid, Mask, ScalarMap};
use crate::inverse::{fit_svbrdf, DepthPrior, FitConfig, FitInput};
use crate::io;
use crate::render::{render_capture, RenderOptions};
use crate::stokes::{compute_stokes, default_epsilon, normalize_stokes, quantize_u8, visualize_stokes, CaptureSet};

pub(super) fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Render(a) => render(cli, a),
        Command::GenDataset(a) => gen_dataset(cli, a),
        Command::Cues(a) => cues(cli, a),
        Command::Fit(a) => fit(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Viz(a) => viz(cli, a),
        Command::Selftest => selftest(cli),
    }
}

fn out_dir(cli: &Cli, what: &str) -> Result<PathBuf> {
    let out = cli
        .out
        .clone()
        .ok_or_else(|| Error::Config(format!("{what} needs --out <dir>")))?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    Ok(out)
}

fn read_text(path: &Path) -> Result<(String, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((text, base))
}

fn load_config<T: DeserializeOwned + Default>(cli: &Cli) -> Result<T> {
    match &cli.config {
        None => Ok(T::default()),
        Some(p) => {
            let (text, _) = read_text(p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn render(cli: &Cli, a: &RenderArgs) -> Result<()> {
    let out = out_dir(cli, "render")?;
    let scene_file = match a.scene.as_ref().or(cli.config.as_ref()) {
        Some(p) => {
            let (text, base) = read_text(p)?;
            SceneFile::from_toml(&text, &base)?
        }
        None => SceneFile::default(),
    };
    let seed = cli.seed.unwrap_or(0);
    let (scene, radius) = scene_file.build(seed)?;
    let cap = render_capture(
        &scene,
        RenderOptions {
            auto_exposure: scene_file.exposure,
            ..Default::default()
        },
    )?;
    if cap.gbuffer.mask.count() == 0 {
        return Err(Error::Rejected("the object is not visible".into()));
    }
    let files = write_capture(&out, &cap, scene_file.noise_sigma, derive_seed(seed, &["render-noise"]))?;
    let q = scene.rotation.into_inner();
    let uv_scale = match &scene_file.material {
        super::MaterialSpec::Procedural { uv_scale, .. } | super::MaterialSpec::Textures { uv_scale, .. } => *uv_scale,
        super::MaterialSpec::Uniform { .. } => 1.0,
    };
    let id = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "render".into());
    let meta = SampleMeta {
        id,
        split: None,
        mesh: scene_file.mesh_id(),
        material: scene_file.material_id(),
        seed,
        rotation: [q.w, q.i, q.j, q.k],
        uv_scale,
        uv_offset: [0.0, 0.0],
        camera: scene.camera,
        flash: cap.flash,
        object_distance: -scene.translation.z,
        object_radius: radius,
        noise_sigma: scene_file.noise_sigma,
        coverage: files.coverage,
        scales: files.scales,
        gt: files.gt,
    };
    write_meta(&out, &meta)?;
    print_json(&serde_json::json!({ "out": out, "coverage": files.coverage }));
    Ok(())
}

fn gen_dataset(cli: &Cli, a: &GenDatasetArgs) -> Result<()> {
    let out = out_dir(cli, "gen-dataset")?;
    let mut cfg = match &cli.config {
        Some(p) => {
            let (text, base) = read_text(p)?;
            DatasetConfig::from_toml(&text, &base)?
        }
        None => DatasetConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.resolution {
        cfg.resolution = r;
    }
    cfg.validate()?;
    let splits: Vec<Split> = match a.split {
        SplitArg::Train => vec![Split::Train],
        SplitArg::Test => vec![Split::Test],
        SplitArg::All => Split::ALL.to_vec(),
    };
    let manifests = generate_dataset(&cfg, &out, &splits, a.resume)?;
    let summary: Vec<_> = manifests
        .iter()
        .map(|m| {
            let s = m.summary.as_ref().expect("fresh manifests carry a summary");
            serde_json::json!({
                "split": m.header.split,
                "manifest": m.root.join(MANIFEST_NAME),
                "config_hash": m.header.config_hash,
                "generated": s.generated,
                "rejected": s.rejected.len(),
                "failed": s.failed.len(),
            })
        })
        .collect();
    print_json(&serde_json::json!(summary));
    Ok(())
}

fn capture_set(cap: &LoadedCapture) -> Result<CaptureSet> {
    CaptureSet::new(cap.images.i0.clone(), cap.images.i45.clone(), cap.images.i90.clone())
}

fn cues(cli: &Cli, a: &CuesArgs) -> Result<()> {
    let out = out_dir(cli, "cues")?;
    let cap = load_capture(&a.capture)?;
    let s = compute_stokes(&capture_set(&cap)?)?;
    let eps = default_epsilon(&s);
    let norm = normalize_stokes(&s, eps);
    let diffuse = diffuse_color(&s, eps, Some(&cap.saturated));
    write_stokes_cue(&norm, out.join("stokes_norm.png"))?;
    io::write_rgb8(&visualize_stokes(&norm), out.join("stokes_vis.png"))?;
    io::write_rgb16_map(&diffuse.rgb, io::Encoding::UNIT, out.join("diffuse_cue.png"))?;
    io::write_mask(&diffuse.valid, out.join("diffuse_mask.png"))?;
    print_json(&serde_json::json!({
        "stokes_valid": norm.valid.count(),
        "diffuse_valid": diffuse.valid.count(),
        "epsilon": eps,
    }));
    Ok(())
}

fn fit_one(dir: &Path, out: &Path, cfg: &FitConfig, a: &FitArgs) -> Result<serde_json::Value> {
    let cap = load_capture(dir)?;
    let meta = &cap.meta;
    let gt_depth: ScalarMap;
    let depth = match a.depth_prior {
        DepthPriorArg::Distance => DepthPrior::Constant(meta.object_distance - 0.5 * meta.object_radius),
        DepthPriorArg::Gt => {
            gt_depth = load_ground_truth(dir, meta, &cap.mask)?.depth;
            DepthPrior::Map(&gt_depth)
        }
    };
    let stored = if a.stored_cue {
        Some(read_stokes_cue(dir.join("stokes_norm.png"))?)
    } else {
        None
    };
    let input = FitInput {
        images: &cap.images,
        mask: &cap.mask,
        camera: &meta.camera,
        flash: &meta.flash,
        depth,
        cue: stored.as_ref(),
    };
    let res = fit_svbrdf(&input, cfg)?;
    crate::eval::write_prediction(out, &res.maps)?;
    log::info!("{}: fitted in {:?}", meta.id, res.report.timings);
    // Timings are left out so that outputs are reproducible byte for byte.
    let mut report = serde_json::to_value(&res.report)?;
    if let Some(o) = report.as_object_mut() {
        o.remove("timings");
    }
    write_json(&report, &out.join("report.json"))?;
    Ok(serde_json::json!({
        "id": meta.id,
        "objective": res.report.best.total,
        "render_term": res.report.best.polarized_render_term,
    }))
}

fn is_manifest(p: &Path) -> bool {
    p.is_file() && p.extension().is_some_and(|e| e == "ndjson") || p.join(MANIFEST_NAME).is_file()
}

fn fit(cli: &Cli, a: &FitArgs) -> Result<()> {
    let out = out_dir(cli, "fit")?;
    let mut cfg: FitConfig = load_config(cli)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    cfg.validate()?;
    if !a.input.exists() {
        return Err(Error::MissingFile(a.input.clone()));
    }
    if !is_manifest(&a.input) {
        let row = fit_one(&a.input, &out, &cfg, a)?;
        print_json(&row);
        return Ok(());
    }
    let m = read_manifest(&a.input)?;
    let n = a.limit.unwrap_or(usize::MAX).min(m.samples.len());
    let mut fitted = Vec::new();
    let mut failed = Vec::new();
    let mut first_err = None;
    for r in &m.samples[..n] {
        match fit_one(&m.sample_dir(r), &out.join(&r.dir), &cfg, a) {
            Ok(row) => fitted.push(row),
            Err(e) => {
                log::warn!("{}: {e}", r.id);
                failed.push(serde_json::json!({ "id": r.id, "error": e.to_string(), "category": e.category().as_str() }));
                first_err.get_or_insert(e);
            }
        }
    }
    let summary = serde_json::json!({
        "manifest_config_hash": m.header.config_hash,
        "fit_config_hash": io::config_hash(&cfg),
        "mode": cfg.mode.as_str(),
        "fitted": fitted,
        "failed": failed,
    });
    write_json(&summary, &out.join("fit_summary.json"))?;
    print_json(&serde_json::json!({ "fitted": fitted.len(), "failed": failed.len() }));
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// `(n + 1) / 2` as 8-bit color; black outside the mask.
pub fn normal_vis(normals: &Grid<Vec3>, mask: &Mask) -> Grid<[u8; 3]> {
    Grid::from_fn(normals.width(), normals.height(), |x, y| {
        if !*mask.get(x, y) {
            return [0; 3];
        }
        let n = normals.get(x, y);
        [n.x, n.y, n.z].map(|v| quantize_u8((v + 1.0) / 2.0))
    })
}

/// Gray depth: nearest masked point white, farthest dark; black outside.
pub fn depth_vis(depth: &ScalarMap, mask: &Mask) -> Grid<[u8; 3]> {
    let (lo, hi) = depth
        .data()
        .iter()
        .zip(mask.data())
        .filter(|(_, &m)| m)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (&d, _)| (l.min(d), h.max(d)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    Grid::from_fn(depth.width(), depth.height(), |x, y| {
        if !*mask.get(x, y) {
            return [0; 3];
        }
        let v = quantize_u8(1.0 - 0.8 * (depth.get(x, y) - lo) / span);
        [v; 3]
    })
}

fn tonemapped(img: &crate::RadianceImage, gamma: f64) -> Grid<[u8; 3]> {
    img.map(|p| p.map(|v| quantize_u8(tonemap(v, gamma))))
}

fn eval(cli: &Cli, a: &EvalArgs) -> Result<()> {
    let out = out_dir(cli, "eval")?;
    let mut cfg: EvalConfig = load_config(cli)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.relights {
        cfg.n_relights = n;
    }
    if let Some(m) = &a.method {
        cfg.method = m.clone();
    }
    cfg.validate()?;
    let path = a
        .manifest
        .clone()
        .or_else(|| cfg.manifest.clone())
        .ok_or_else(|| Error::Config("eval needs --manifest or `manifest` in the config".into()))?;
    let m = read_manifest(&path)?;
    if !a.results.is_dir() {
        return Err(Error::MissingFile(a.results.clone()));
    }
    let table = evaluate(&a.results, &m, &cfg)?;
    write_metrics(&table, &out)?;

    // Input | stokes | GT normal | predicted normal | GT relit | predicted relit.
    let mut rows = Vec::new();
    for (r, row) in m.samples.iter().zip(&table.rows) {
        if rows.len() >= a.grid {
            break;
        }
        if row.flagged.is_some() {
            continue;
        }
        let dir = m.sample_dir(r);
        let cap = load_capture(&dir)?;
        let gt = load_ground_truth(&dir, &cap.meta, &cap.mask)?;
        let mut pred = read_prediction(&a.results.join(&r.dir), &cap.mask)?;
        pred.mask = cap.mask.clone();
        let geo = RelightGeometry {
            camera: cap.meta.camera,
            object_distance: cap.meta.object_distance,
        };
        let one = EvalConfig {
            n_relights: 1,
            ..cfg.clone()
        };
        let (rg, rp) = relight_pair(&gt, &pred, &geo, &r.id, &one)?.remove(0);
        let full = cap.images.i0.map(|p| p.map(|v| 2.0 * v));
        let s = compute_stokes(&capture_set(&cap)?)?;
        rows.push(vec![
            io::tonemap_preview(&full, full.max_value()),
            visualize_stokes(&normalize_stokes(&s, default_epsilon(&s))),
            normal_vis(&gt.normal, &cap.mask),
            normal_vis(&pred.normal, &cap.mask),
            tonemapped(&rg, cfg.gamma),
            tonemapped(&rp, cfg.gamma),
        ]);
    }
    if !rows.is_empty() {
        io::write_rgb8(&comparison_grid(&rows), out.join("grid.png"))?;
    }
    print_json(&serde_json::to_value(&table.aggregates)?);
    Ok(())
}

fn viz(cli: &Cli, a: &VizArgs) -> Result<()> {
    let out = out_dir(cli, "viz")?;
    let dir = &a.input;
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.clone()));
    }
    let mut written = Vec::new();
    if POLARIZED_FILES[..3].iter().all(|f| dir.join(f).is_file()) && dir.join("meta.json").is_file() {
        let cap = load_capture(dir)?;
        let s = compute_stokes(&capture_set(&cap)?)?;
        io::write_rgb8(&visualize_stokes(&normalize_stokes(&s, default_epsilon(&s))), out.join("stokes_vis.png"))?;
        io::write_rgb8(&io::tonemap_preview(&s.s0, s.s0.max_value()), out.join("full_vis.png"))?;
        written.extend(["stokes_vis.png", "full_vis.png"]);
    }
    if dir.join("stokes_norm.png").is_file() {
        let m = read_stokes_cue(dir.join("stokes_norm.png"))?;
        io::write_rgb8(&visualize_stokes(&m), out.join("stokes_norm_vis.png"))?;
        written.push("stokes_norm_vis.png");
    }
    for prefix in ["gt_", ""] {
        let normal = dir.join(format!("{prefix}normal.png"));
        if !normal.is_file() {
            continue;
        }
        let mask = io::normal_map_mask(&normal)?;
        let n = io::read_normal_map(&normal, &mask)?;
        let name = format!("{prefix}normal_vis.png");
        io::write_rgb8(&normal_vis(&n, &mask), out.join(&name))?;
        written.push(if prefix.is_empty() { "normal_vis.png" } else { "gt_normal_vis.png" });
        let depth = dir.join(format!("{prefix}depth.png"));
        if depth.is_file() {
            // The stored depth is already normalized to its masked range.
            let d = io::read_gray16_map(&depth, io::Encoding::UNIT, Some(mask.dims()))?;
            io::write_rgb8(&depth_vis(&d, &mask), out.join(format!("{prefix}depth_vis.png")))?;
            written.push(if prefix.is_empty() { "depth_vis.png" } else { "gt_depth_vis.png" });
        }
    }
    if written.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} holds no polarized images, Stokes, normal or depth maps",
            dir.display()
        )));
    }
    print_json(&serde_json::json!({ "written": written }));
    Ok(())
}

fn selftest(cli: &Cli) -> Result<()> {
    let checks = super::run_selftest();
    for c in &checks {
        println!("{} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(out) = &cli.out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        write_json(&checks, &out.join("selftest.json"))?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Error::Domain(format!("{failed} of {} self-test checks failed", checks.len())));
    }
    Ok(())
}
