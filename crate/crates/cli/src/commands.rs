//! One function per subcommand. Each resolves its inputs (flag, then config
//! default), runs the library call, writes artifacts, and prints a short
//! summary; failures bubble up as [`CliError`] with the offending path in
//! the message.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use dcvae::{
    load_model, load_training_set, save_model, train, write_history_csv, write_latent_table,
    DcvaeConfig, Mode,
};
use design_gen::{generate_dataset, repair_connectivity, DatasetManifest};
use design_opt::{
    align_pairs, build_schedule, default_policies, load_fnet, load_sweep, run_sweep, save_fnet,
    save_report, save_sweep, select_optimum, train_fnet, validate_optimum, FnetConfig,
    LOWER_IS_BETTER,
};
use meshing::{export_obj, export_stl, mesh_grid, mesh_stats};
use surrogate_sim::{
    label_dataset, label_design, load_stats, normalize_and_filter, read_labels, save_stats,
    LabelRecord, LabelStats,
};
use voxel_core::{binarize, hamming, load_grid, save_grid};

use crate::config::{maybe_load, pick_path, resolve_seed, PipelineConfig};
use crate::errors::{At, CliError};
use crate::pca;

/// Runs `f` on a dedicated thread pool when `--jobs` was given; the library
/// stages produce order-independent output, so the thread count only
/// changes wall time.
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::validation("--jobs must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| {
                CliError::validation(format!("cannot build a {n}-thread pool: {e}"))
            })?;
            Ok(pool.install(f))
        }
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::DeepInput => "deep-input",
        Mode::FcBaseline => "fc-baseline",
    }
}

pub fn gen(
    config: &Path,
    n: usize,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(config)?;
    let dims = cfg.dims()?;
    let seed = resolve_seed(seed, Some(&cfg))?;
    let noise = cfg.noise.build(dims, seed);
    let spec = cfg.interface_spec(dims)?;
    let out = out.unwrap_or_else(|| cfg.paths.dataset_dir());

    let manifest =
        with_jobs(jobs, || generate_dataset(n, dims, &noise, &spec, seed, &out))?.at(&out)?;
    let mean_fill = manifest.entries.iter().map(|e| e.fill_fraction).sum::<f64>()
        / manifest.entries.len().max(1) as f64;
    println!(
        "generated {} designs of {}x{}x{} (seed {seed}, mean fill {mean_fill:.3}) -> {}",
        manifest.entries.len(),
        dims.j_max,
        dims.k_max,
        dims.l_max,
        out.display()
    );
    Ok(())
}

pub fn label(
    config: Option<&Path>,
    dataset: Option<PathBuf>,
    out: Option<PathBuf>,
    stats: Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let cfg = maybe_load(config)?;
    let dataset = pick_path(dataset, cfg.as_ref(), |p| p.dataset_dir(), "dataset")?;
    let out = pick_path(out, cfg.as_ref(), |p| p.labels_file(), "out")?;
    let stats_path = stats.unwrap_or_else(|| match &cfg {
        Some(c) => c.paths.stats_file(),
        // No config: the stats land next to the label table.
        None => match out.parent() {
            Some(dir) if !dir.as_os_str().is_empty() => dir.join("stats.json"),
            _ => PathBuf::from("stats.json"),
        },
    });

    let records = with_jobs(jobs, || label_dataset(&dataset, &out))?.at(&dataset)?;
    let (_, stats, retained) = normalize_and_filter(&records).at(&out)?;
    save_stats(&stats, &stats_path).at(&stats_path)?;

    let feasible = records.iter().filter(|r| r.feasible).count();
    println!(
        "labeled {} designs ({feasible} feasible, {} kept by the outlier cut) -> {}",
        records.len(),
        retained.len(),
        out.display()
    );
    println!("normalization stats -> {}", stats_path.display());
    Ok(())
}

pub struct TrainArgs {
    pub config: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn train_cmd(args: TrainArgs) -> Result<(), CliError> {
    let cfg = maybe_load(args.config.as_deref())?;
    let dataset = pick_path(args.dataset, cfg.as_ref(), |p| p.dataset_dir(), "dataset")?;
    let labels = pick_path(args.labels, cfg.as_ref(), |p| p.labels_file(), "labels")?;
    let stats = pick_path(args.stats, cfg.as_ref(), |p| p.stats_file(), "stats")?;
    let out = pick_path(args.out, cfg.as_ref(), |p| p.model_dir(), "out")?;

    let manifest = DatasetManifest::load(&dataset).at(&dataset)?;
    let dims = manifest.dims().at(&dataset)?;
    if let Some(c) = &cfg {
        let config_dims = c.dims()?;
        if config_dims != dims {
            return Err(CliError::validation(format!(
                "config dims {}x{}x{} do not match dataset dims {}x{}x{}",
                config_dims.j_max,
                config_dims.k_max,
                config_dims.l_max,
                dims.j_max,
                dims.k_max,
                dims.l_max
            )));
        }
    }
    let seed = resolve_seed(args.seed, cfg.as_ref())?;
    let mut dc = match &cfg {
        Some(c) => c.dcvae.build(dims, seed),
        None => DcvaeConfig::desk_scale(dims, seed),
    };
    if let Some(m) = args.mode {
        dc.mode = m;
    }

    let examples = load_training_set(&dataset, &labels, &stats).at(&dataset)?;
    let result = train(&examples, &dc)?;

    std::fs::create_dir_all(&out).at(&out)?;
    let model_path = out.join("dcvae.nnp");
    save_model(&model_path, &result.model).at(&model_path)?;
    let history_path = out.join("history.csv");
    write_history_csv(result.model.history(), &history_path).at(&history_path)?;
    let latents_path = out.join("latents.jsonl");
    write_latent_table(&result.latents, &latents_path).at(&latents_path)?;

    // The condition-to-latent regressor trains on the same split, mapping
    // each design's conditions to its encoded mean.
    let pairs = align_pairs(&examples, &result.latents)?;
    let fc = match &cfg {
        Some(c) => c.fnet.build(dc.latent_dim, seed),
        None => FnetConfig::defaults(dc.latent_dim, seed),
    };
    let fnet = train_fnet(&pairs, &fc)?;
    let fnet_path = out.join("fnet.nnp");
    save_fnet(&fnet_path, &fnet).at(&fnet_path)?;

    println!(
        "trained {} model on {} designs for {} epochs (seed {seed})",
        mode_name(dc.mode),
        examples.len(),
        dc.epochs
    );
    if let Some(last) = result.model.history().last() {
        println!(
            "final loss: recon {:.5}, kl {:.5}, total {:.5}",
            last.recon, last.kl, last.total
        );
    }
    match fnet.relative_mse() {
        Some(v) => println!("latent regressor relative mse: {v:.5}"),
        None => println!("latent regressor relative mse: undefined (no latent variance)"),
    }
    println!("artifacts -> {}", out.display());
    Ok(())
}

pub fn reconstruct(
    config: Option<&Path>,
    model_path: &Path,
    design: &Path,
    dataset: Option<PathBuf>,
    stats: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = maybe_load(config)?;
    let dataset = pick_path(dataset, cfg.as_ref(), |p| p.dataset_dir(), "dataset")?;
    let stats_path = pick_path(stats, cfg.as_ref(), |p| p.stats_file(), "stats")?;

    let model = load_model(model_path).at(model_path)?;
    let grid = load_grid(design).at(design)?;
    let manifest = DatasetManifest::load(&dataset).at(&dataset)?;
    let stats = load_stats(&stats_path).at(&stats_path)?;

    let raw = label_design(&grid, &manifest.spec).at(design)?;
    let c = stats.normalize(&raw.0);
    let (probs, _) = model.reconstruct(&grid, &c)?;
    let recon = binarize(&probs, 0.5)?;
    let mismatched = hamming(&recon, &grid)?;
    let total = grid.dims().total();

    let report = serde_json::json!({
        "schema": "recon.v1",
        "design": design.display().to_string(),
        "total_voxels": total,
        "mismatched_voxels": mismatched,
        "error_fraction": mismatched as f64 / total as f64,
        "conditions_raw": raw.0,
        "conditions_normalized": c,
    });
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).at(&dir)?;
        let recon_path = dir.join("recon.vxg");
        save_grid(&recon, &recon_path).at(&recon_path)?;
        let probs_path = dir.join("probs.json");
        let dims = probs.dims();
        let payload = serde_json::json!({
            "schema": "probs.v1",
            "dims": [dims.j_max, dims.k_max, dims.l_max],
            "values": probs.values(),
        });
        std::fs::write(&probs_path, serde_json::to_string(&payload)?).at(&probs_path)?;
        let report_path = dir.join("report.json");
        std::fs::write(&report_path, serde_json::to_string_pretty(&report)?).at(&report_path)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub struct SweepArgs {
    pub config: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub fnet: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub q: Option<usize>,
    pub pmin: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = maybe_load(args.config.as_deref())?;
    let model_path =
        pick_path(args.model, cfg.as_ref(), |p| p.model_dir().join("dcvae.nnp"), "model")?;
    let fnet_path =
        pick_path(args.fnet, cfg.as_ref(), |p| p.model_dir().join("fnet.nnp"), "fnet")?;
    let stats_path = pick_path(args.stats, cfg.as_ref(), |p| p.stats_file(), "stats")?;
    let out = pick_path(args.out, cfg.as_ref(), |p| p.sweep_dir(), "out")?;
    let q = args.q.or(cfg.as_ref().and_then(|c| c.sweep.q)).unwrap_or(100);
    let pmin = args.pmin.or(cfg.as_ref().and_then(|c| c.sweep.pmin)).unwrap_or(0.7);

    let model = load_model(&model_path).at(&model_path)?;
    let fnet = load_fnet(&fnet_path).at(&fnet_path)?;
    let stats = load_stats(&stats_path).at(&stats_path)?;

    let schedule = build_schedule(&stats, q, &default_policies())?;
    let result = run_sweep(&schedule, &fnet, &model, pmin)?;
    save_sweep(&out, &result).at(&out)?;

    println!(
        "decoded {q} schedule rows; cumulative material change rate {:.4}",
        result.dm_cumulative
    );
    let note = if result.fallback { " (fallback: demand tail never reached)" } else { "" };
    println!("optimum at position {} of {q}{note}", result.opt_index + 1);
    println!("sweep artifacts -> {}", out.display());
    Ok(())
}

pub struct OptimizeArgs {
    pub config: Option<PathBuf>,
    pub sweep: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub pmin: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn optimize(args: OptimizeArgs) -> Result<(), CliError> {
    let cfg = maybe_load(args.config.as_deref())?;
    let sweep_dir = pick_path(args.sweep, cfg.as_ref(), |p| p.sweep_dir(), "sweep")?;
    let dataset = pick_path(args.dataset, cfg.as_ref(), |p| p.dataset_dir(), "dataset")?;
    let labels_path = pick_path(args.labels, cfg.as_ref(), |p| p.labels_file(), "labels")?;
    let pmin = args.pmin.or(cfg.as_ref().and_then(|c| c.sweep.pmin)).unwrap_or(0.7);

    let stored = load_sweep(&sweep_dir).at(&sweep_dir)?;
    let selection = select_optimum(&stored.dm_series, pmin)?;
    let manifest = DatasetManifest::load(&dataset).at(&dataset)?;
    let labels = read_labels(&labels_path).at(&labels_path)?;

    // Decoded grids can carry stray islands; repair before judging them so
    // the printed design is the one the evaluators scored.
    let raw = &stored.grids[selection.opt_index];
    let chi_opt = repair_connectivity(raw, &manifest.spec)?;
    let adjusted = hamming(&chi_opt, raw)?;
    let report = validate_optimum(&chi_opt, &manifest.spec, &labels)?;

    let out_dir = args.out.unwrap_or_else(|| sweep_dir.clone());
    std::fs::create_dir_all(&out_dir).at(&out_dir)?;
    let grid_path = out_dir.join("chi_opt.vxg");
    save_grid(&chi_opt, &grid_path).at(&grid_path)?;
    let report_path = out_dir.join("optimum_report.json");
    save_report(&report_path, &report).at(&report_path)?;

    let note = if selection.fallback { " (fallback: demand tail never reached)" } else { "" };
    println!(
        "selected position {} of {}{note}",
        selection.opt_index + 1,
        stored.dm_series.len()
    );
    if adjusted > 0 {
        println!("connectivity repair adjusted {adjusted} voxels");
    }
    if report.feasible {
        println!(
            "optimum is feasible and improves {} of {} conditions over the training best",
            report.improved_count(),
            report.rows.len()
        );
    } else {
        println!("optimum is infeasible under the evaluators; see the report");
    }
    println!("optimum artifacts -> {}", out_dir.display());
    Ok(())
}

pub fn mesh(grid_path: &Path, iso: f64, out: &Path, obj: Option<PathBuf>) -> Result<(), CliError> {
    let grid = load_grid(grid_path).at(grid_path)?;
    let m = mesh_grid(&grid, iso)?;
    export_stl(&m, out).at(out)?;
    if let Some(p) = &obj {
        export_obj(&m, p).at(p)?;
    }

    let s = mesh_stats(&m);
    println!("{} vertices, {} triangles -> {}", m.vertices.len(), s.triangles, out.display());
    if let Some(p) = &obj {
        println!("wavefront copy -> {}", p.display());
    }
    println!("watertight: {}, euler characteristic: {}", s.watertight, s.euler);
    if let Some((lo, hi)) = s.bbox {
        println!(
            "bounds mm: [{:.2}, {:.2}, {:.2}] .. [{:.2}, {:.2}, {:.2}]",
            lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]
        );
    }
    Ok(())
}

/// Mean of the ramped conditions (5..9), each oriented so lower is better;
/// used to color the scatter.
fn performance_score(stats: &LabelStats, record: &LabelRecord) -> f64 {
    let z = stats.normalize(&record.c);
    let mut sum = 0.0;
    for i in 4..9 {
        sum += if LOWER_IS_BETTER[i] { z[i] } else { -z[i] };
    }
    sum / 5.0
}

pub fn project(
    latents: &Path,
    out: &Path,
    labels: Option<PathBuf>,
    stats: Option<PathBuf>,
) -> Result<(), CliError> {
    let rows = dcvae::read_latent_table(latents).at(latents)?;
    let scores: Vec<Option<f64>> = match (&labels, &stats) {
        (None, None) => vec![None; rows.len()],
        (Some(lp), Some(sp)) => {
            let records = read_labels(lp).at(lp)?;
            let stats = load_stats(sp).at(sp)?;
            let by_id: HashMap<u32, &LabelRecord> =
                records.iter().filter(|r| r.feasible).map(|r| (r.design_id, r)).collect();
            rows.iter()
                .map(|r| by_id.get(&r.design_id).map(|rec| performance_score(&stats, rec)))
                .collect()
        }
        _ => {
            return Err(CliError::validation(
                "--labels and --stats must be given together",
            ))
        }
    };

    let mus: Vec<Vec<f64>> = rows.iter().map(|r| r.mu.clone()).collect();
    let proj = pca::pca_2d(&mus)?;
    pca::write_svg(out, &proj.points, &scores)?;
    println!(
        "projected {} designs ({:.0}% + {:.0}% of latent variance) -> {}",
        rows.len(),
        proj.explained[0] * 100.0,
        proj.explained[1] * 100.0,
        out.display()
    );
    Ok(())
}
