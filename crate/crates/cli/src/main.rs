//! `fetalsim`: batch front end for the label-volume toolkit.
//!
//! Exit codes: 0 success, 2 invalid config/spec, 3 write failure,
//! 4 read failure, 5 metadata mismatch, 6 unmapped label code.

mod manifest;

use clap::{Parser, Subcommand, ValueEnum};
use fetalsim_core::augment::{apply_plan, sample_plan, AugmentationConfig};
use fetalsim_core::biomarkers::{
    cc_length, cc_volume, delta_growth, delta_length, BiomarkerReport, NormativeCurve,
};
use fetalsim_core::harmonize::{remap, LabelMap};
use fetalsim_core::metrics::{evaluate, SegReport};
use fetalsim_core::nifti::{read_raw_volume, read_volume, write_volume, Volume};
use fetalsim_core::phantom::PhantomSpec;
use fetalsim_core::resample::conform;
use fetalsim_core::rng::derive_seed;
use fetalsim_core::synth::{synthesize, SynthConfig};
use fetalsim_core::{CoreError, LabelVolume, TissueLabel};
use manifest::{RunManifest, SampleRecord};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "fetalsim", version, about = "Label-volume simulation and evaluation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a procedural label phantom
    Phantom {
        /// Output label volume (.nii or .nii.gz)
        out: PathBuf,
        /// Phantom spec JSON; omitted = built-in default
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Override the spec's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Apply a randomized pathology plan to a label volume
    Augment {
        input: PathBuf,
        out: PathBuf,
        /// Augmentation config JSON; omitted = built-in default
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the sampled plan as JSON
        #[arg(long)]
        plan_out: Option<PathBuf>,
        /// Conform to this voxel count per axis before augmenting (x,y,z)
        #[arg(long, value_parser = parse_triple::<usize>)]
        conform_dims: Option<[usize; 3]>,
        /// Conform to this spacing in mm before augmenting (x,y,z)
        #[arg(long, value_parser = parse_triple::<f64>)]
        conform_spacing: Option<[f64; 3]>,
    },
    /// Generate (augment, synthesize) training pairs with derived seeds
    Synth {
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Synthesis config JSON; omitted = built-in default
        #[arg(long)]
        synth_config: Option<PathBuf>,
        /// Augmentation config JSON; omitted = built-in default
        #[arg(long)]
        augment_config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Worker threads; default from FETALSIM_WORKERS, else 1
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare a predicted segmentation against ground truth
    Evaluate {
        gt: PathBuf,
        pred: PathBuf,
        /// Comma-separated class names; default: all eight tissues
        #[arg(long)]
        classes: Option<String>,
        /// Relabel CC to WM in both volumes before scoring
        #[arg(long)]
        merge_cc_wm: bool,
        /// Report path; omitted = stdout
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
    },
    /// Corpus callosum biomarkers from a segmentation
    Biomarker {
        seg: PathBuf,
        /// Gestational age in weeks, for the growth-curve deviation
        #[arg(long)]
        ga: Option<f64>,
        /// Normative curve JSON; requires --ga
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Reference segmentation for the length-error column
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, default_value = "sample")]
        subject: String,
        /// CSV path; omitted = stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remap label codes from a foreign scheme
    Harmonize {
        input: PathBuf,
        out: PathBuf,
        /// "drawem-to-feta", "identity", or a map JSON path
        #[arg(long, default_value = "drawem-to-feta")]
        map: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

fn parse_triple<T: std::str::FromStr>(s: &str) -> Result<[T; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got {s:?}"));
    }
    let mut out: Vec<T> = Vec::with_capacity(3);
    for p in parts {
        out.push(p.trim().parse().map_err(|_| format!("bad component {p:?}"))?);
    }
    Ok(out.try_into().map_err(|_| "triple").unwrap())
}

/// Failure with its process exit code.
struct CliError {
    code: u8,
    message: String,
}

type CliResult<T> = Result<T, CliError>;

impl CliError {
    fn config(message: impl Into<String>) -> CliError {
        CliError { code: 2, message: message.into() }
    }
}

/// Map a core error: mismatch and unmapped codes override the stage default.
fn core_err(e: CoreError, default_code: u8) -> CliError {
    let code = match &e {
        CoreError::MetadataMismatch(_) => 5,
        CoreError::UnmappedCode(_) => 6,
        _ => default_code,
    };
    CliError { code, message: e.to_string() }
}

fn as_config(e: CoreError) -> CliError {
    core_err(e, 2)
}
fn as_read(e: CoreError) -> CliError {
    core_err(e, 4)
}
fn as_write(e: CoreError) -> CliError {
    core_err(e, 3)
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError { code: 4, message: format!("{}: {e}", path.display()) })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError { code: 3, message: format!("{}: {e}", path.display()) })
}

fn read_labels(path: &Path) -> CliResult<LabelVolume> {
    read_volume(path).and_then(Volume::into_labels).map_err(as_read)
}

fn compress_for(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn write_labels(vol: LabelVolume, path: &Path) -> CliResult<()> {
    let compress = compress_for(path);
    write_volume(&Volume::Labels(vol), path, compress).map_err(as_write)
}

fn load_augment_config(path: Option<&Path>) -> CliResult<AugmentationConfig> {
    match path {
        None => Ok(AugmentationConfig::default()),
        Some(p) => AugmentationConfig::from_json(&read_text(p)?).map_err(as_config),
    }
}

fn load_synth_config(path: Option<&Path>) -> CliResult<SynthConfig> {
    match path {
        None => Ok(SynthConfig::default()),
        Some(p) => SynthConfig::from_json(&read_text(p)?).map_err(as_config),
    }
}

fn cmd_phantom(out: &Path, spec: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let mut spec = match spec {
        None => PhantomSpec::default(),
        Some(p) => PhantomSpec::from_json(&read_text(p)?).map_err(as_config)?,
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let vol = spec.generate().map_err(as_config)?;
    let census = vol.census();
    for label in TissueLabel::ALL {
        println!("{}\t{}", label.name(), census[label.code() as usize]);
    }
    write_labels(vol, out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_augment(
    input: &Path,
    out: &Path,
    config: Option<&Path>,
    seed: u64,
    plan_out: Option<&Path>,
    conform_dims: Option<[usize; 3]>,
    conform_spacing: Option<[f64; 3]>,
) -> CliResult<()> {
    let config = load_augment_config(config)?;
    let mut vol = read_labels(input)?;
    if conform_dims.is_some() || conform_spacing.is_some() {
        let dims = conform_dims.unwrap_or(vol.meta.dims);
        let spacing = conform_spacing.unwrap_or(vol.meta.spacing);
        vol = conform(&vol, spacing, dims).map_err(as_config)?;
    }
    let plan = sample_plan(&config, seed).map_err(as_config)?;
    let (result, skips) = apply_plan(&vol, &plan);
    if let Some(p) = plan_out {
        write_text(p, &serde_json::to_string_pretty(&plan).unwrap())?;
    }
    for s in &skips {
        eprintln!("skipped transform {} ({:?}): {}", s.index, s.kind, s.reason);
    }
    write_labels(result, out)
}

fn cmd_synth(
    input: &Path,
    out_dir: &Path,
    synth_config: Option<&Path>,
    augment_config: Option<&Path>,
    master_seed: u64,
    count: u64,
    workers: Option<usize>,
) -> CliResult<()> {
    let start = Instant::now();
    let synth_cfg = load_synth_config(synth_config)?;
    let augment_cfg = load_augment_config(augment_config)?;
    let workers = workers
        .or_else(|| {
            std::env::var("FETALSIM_WORKERS").ok().and_then(|v| v.parse().ok())
        })
        .unwrap_or(1)
        .max(1);
    let base = read_labels(input)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError { code: 3, message: format!("{}: {e}", out_dir.display()) })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError { code: 2, message: e.to_string() })?;
    // each sample depends only on its derived seed, so worker count and
    // scheduling cannot change any output byte
    use rayon::prelude::*;
    let samples: Vec<CliResult<SampleRecord>> = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(master_seed, i);
                let plan = sample_plan(&augment_cfg, seed).map_err(as_config)?;
                let (labels, skips) = apply_plan(&base, &plan);
                let (image, draw) = synthesize(&labels, &synth_cfg, seed).map_err(as_config)?;
                let image_path = out_dir.join(format!("sample_{i:05}_img.nii.gz"));
                let labels_path = out_dir.join(format!("sample_{i:05}_lbl.nii.gz"));
                write_volume(&Volume::Intensity(image), &image_path, true).map_err(as_write)?;
                write_labels(labels, &labels_path)?;
                Ok(SampleRecord {
                    index: i,
                    seed,
                    plan,
                    skips,
                    draw,
                    image: image_path.display().to_string(),
                    labels: labels_path.display().to_string(),
                })
            })
            .collect()
    });
    let samples: Vec<SampleRecord> = samples.into_iter().collect::<CliResult<_>>()?;
    let manifest = RunManifest::new(
        input,
        master_seed,
        &augment_cfg,
        &synth_cfg,
        samples,
        start.elapsed().as_millis() as u64,
    );
    write_text(
        &out_dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).unwrap(),
    )?;
    println!("wrote {count} samples to {}", out_dir.display());
    Ok(())
}

fn parse_classes(spec: Option<&str>) -> CliResult<Vec<TissueLabel>> {
    let Some(spec) = spec else {
        return Ok(TissueLabel::TISSUES.to_vec());
    };
    spec.split(',')
        .map(|name| {
            let name = name.trim();
            TissueLabel::TISSUES
                .iter()
                .copied()
                .find(|l| l.name().eq_ignore_ascii_case(name))
                .ok_or_else(|| CliError::config(format!("unknown class {name:?}")))
        })
        .collect()
}

fn cmd_evaluate(
    gt: &Path,
    pred: &Path,
    classes: Option<&str>,
    merge_cc_wm: bool,
    out: Option<&Path>,
    format: ReportFormat,
) -> CliResult<()> {
    let classes = parse_classes(classes)?;
    let gt = read_labels(gt)?;
    let pred = read_labels(pred)?;
    let report: SegReport = evaluate(&gt, &pred, &classes, merge_cc_wm).map_err(as_config)?;
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => serde_json::to_string_pretty(&report).unwrap(),
    };
    match out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    eprintln!("gDSC {:.6}", report.gdsc);
    Ok(())
}

fn cmd_biomarker(
    seg: &Path,
    ga: Option<f64>,
    curve: Option<&Path>,
    gt: Option<&Path>,
    subject: &str,
    out: Option<&Path>,
) -> CliResult<()> {
    let vol = read_labels(seg)?;
    let length = cc_length(&vol);
    let mut flags: Vec<String> = length.flag.iter().cloned().collect();
    let length_mm = length.value.unwrap();
    let volume_mm3 = cc_volume(&vol);
    let delta_length_mm = match gt {
        None => None,
        Some(p) => {
            let gt = read_labels(p)?;
            let d = delta_length(&vol, &gt).map_err(as_config)?;
            if let Some(f) = d.flag {
                flags.push(f);
            }
            d.value
        }
    };
    let delta_growth_mm = match (ga, curve) {
        (Some(ga), Some(curve_path)) => {
            let curve =
                NormativeCurve::from_json(&read_text(curve_path)?).map_err(as_config)?;
            Some(delta_growth(length_mm, ga, &curve).map_err(as_config)?)
        }
        (None, Some(_)) => {
            return Err(CliError::config("--curve requires --ga"));
        }
        _ => None,
    };
    let report = BiomarkerReport {
        cc_length_mm: length_mm,
        cc_volume_mm3: volume_mm3,
        delta_length_mm,
        delta_growth_mm,
        ga_weeks: ga,
        flags,
    };
    let text = format!(
        "{}\n{}\n",
        BiomarkerReport::CSV_HEADER,
        report.to_csv_row(subject)
    );
    match out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_harmonize(input: &Path, out: &Path, map: &str) -> CliResult<()> {
    let map = match map {
        "drawem-to-feta" => LabelMap::drawem_to_feta(),
        "identity" => LabelMap::identity(),
        path => LabelMap::from_json(&read_text(Path::new(path))?).map_err(as_config)?,
    };
    let raw = read_raw_volume(input).map_err(as_read)?;
    // remap failures are data errors (exit 6), not config errors
    let vol = remap(&raw, &map).map_err(|e| core_err(e, 4))?;
    write_labels(vol, out)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Phantom { out, spec, seed } => cmd_phantom(&out, spec.as_deref(), seed),
        Command::Augment {
            input,
            out,
            config,
            seed,
            plan_out,
            conform_dims,
            conform_spacing,
        } => cmd_augment(
            &input,
            &out,
            config.as_deref(),
            seed,
            plan_out.as_deref(),
            conform_dims,
            conform_spacing,
        ),
        Command::Synth {
            input,
            out_dir,
            synth_config,
            augment_config,
            seed,
            count,
            workers,
        } => cmd_synth(
            &input,
            &out_dir,
            synth_config.as_deref(),
            augment_config.as_deref(),
            seed,
            count,
            workers,
        ),
        Command::Evaluate {
            gt,
            pred,
            classes,
            merge_cc_wm,
            out,
            format,
        } => cmd_evaluate(&gt, &pred, classes.as_deref(), merge_cc_wm, out.as_deref(), format),
        Command::Biomarker {
            seg,
            ga,
            curve,
            gt,
            subject,
            out,
        } => cmd_biomarker(&seg, ga, curve.as_deref(), gt.as_deref(), &subject, out.as_deref()),
        Command::Harmonize { input, out, map } => cmd_harmonize(&input, &out, &map),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
