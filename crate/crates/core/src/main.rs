use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use pet_happiness::config::{ConfigLayer, PipelineConfig};
use pet_happiness::demographics::UserDemographics;
use pet_happiness::happiness::HiRecord;
use pet_happiness::ownership::OwnershipVerdict;
use pet_happiness::pipeline::{self as stages, AnnotationSource, ErrorKind, PipelineError, Prepared};
use pet_happiness::synthgen::{generate_corpus, SynthConfig, SynthError};

#[derive(Parser)]
#[command(
    name = "pethappy",
    version,
    about = "Pet ownership and happiness analytics over social-media timelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Tunables shared by the analysis subcommands. Unset flags fall back to
/// environment variables, then the `--config` file, then built-in defaults.
#[derive(Args, Debug, Default)]
struct Tunables {
    /// TOML file with pipeline settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Study window `<start>/<end>` (ISO-8601, half-open); defaults to the span of the posts.
    #[arg(long)]
    window: Option<String>,
    /// Abort on the first malformed input record.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    min_selfies: Option<usize>,
    #[arg(long)]
    min_area_ratio: Option<f64>,
    #[arg(long)]
    min_gap_days: Option<f64>,
    #[arg(long = "pet-conf")]
    pet_conf: Option<f64>,
    #[arg(long)]
    bin_width: Option<f64>,
    /// Merge adjacent histogram bins until expected counts reach this value.
    #[arg(long)]
    pool_min_expected: Option<f64>,
    #[arg(long)]
    min_cohort_size: Option<usize>,
    /// Remote annotator base URL (also ANNOTATOR_URL).
    #[arg(long)]
    annotator_url: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_attempts: Option<u32>,
}

impl Tunables {
    fn cli_layer(&self) -> ConfigLayer {
        ConfigLayer {
            window: self.window.clone(),
            strict: self.strict.then_some(true),
            min_selfies: self.min_selfies,
            min_area_ratio: self.min_area_ratio,
            min_gap_days: self.min_gap_days,
            pet_conf: self.pet_conf,
            bin_width: self.bin_width,
            pool_min_expected: self.pool_min_expected,
            min_cohort_size: self.min_cohort_size,
            annotator_url: self.annotator_url.clone(),
            batch_size: self.batch_size,
            max_attempts: self.max_attempts,
            ..ConfigLayer::default()
        }
    }

    fn resolve(&self) -> Result<PipelineConfig, PipelineError> {
        let invalid = |e: String| PipelineError::new("config", ErrorKind::Validation, e);
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    PipelineError::new("config", ErrorKind::Io, format!("cannot read {}: {e}", path.display()))
                })?;
                ConfigLayer::from_toml(&text).map_err(|e| invalid(e.to_string()))?
            }
            None => ConfigLayer::default(),
        };
        let env = ConfigLayer::from_process_env().map_err(|e| invalid(e.to_string()))?;
        PipelineConfig::resolve(&file, &env, &self.cli_layer()).map_err(|e| invalid(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate posts and summarize per-user timelines.
    Ingest {
        #[arg(long)]
        posts: PathBuf,
        /// Write the in-window posts here as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the ingestion summary here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        tunables: Tunables,
    },
    /// Validate an annotation file, or fetch annotations from a remote annotator.
    Annotate {
        /// Annotation JSONL to validate.
        #[arg(long, conflicts_with = "posts")]
        load: Option<PathBuf>,
        /// Posts whose images should be fetched from the annotator.
        #[arg(long)]
        posts: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Failure manifest for remote fetches.
        #[arg(long)]
        failures: Option<PathBuf>,
        #[command(flatten)]
        tunables: Tunables,
    },
    /// Classify eligible users as pet owners or control group.
    Owners {
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tunables: Tunables,
    },
    /// Per-user happiness index.
    Happiness {
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Emit one index per sub-window of this many days instead of one per user.
        #[arg(long)]
        granularity: Option<f64>,
        #[command(flatten)]
        tunables: Tunables,
    },
    /// Per-user gender from selfies.
    Demographics {
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tunables: Tunables,
    },
    /// Cohort histograms and chi-square comparisons.
    Report {
        #[arg(long)]
        verdicts: PathBuf,
        #[arg(long)]
        hi: PathBuf,
        #[arg(long)]
        demographics: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write one CSV per cohort histogram here.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        #[command(flatten)]
        tunables: Tunables,
    },
    /// Generate a seeded synthetic corpus with ground truth.
    Synth {
        /// Key-value (TOML) generator config; omitted keys take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every stage end to end.
    Pipeline {
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        #[command(flatten)]
        tunables: Tunables,
    },
}

fn load_inputs(
    posts: &Path,
    annotations: &Path,
    cfg: &PipelineConfig,
) -> Result<(Prepared, pet_happiness::annotate::AnnotationStore), PipelineError> {
    let corpus = stages::read_posts(posts, cfg)?;
    let (store, report) = stages::read_annotations(annotations, cfg)?;
    if !report.is_clean() {
        warn!(
            "{}: {} malformed and {} duplicate annotation records skipped",
            annotations.display(),
            report.malformed.len(),
            report.duplicates.len()
        );
    }
    let prep = Prepared::new(&corpus, &store, cfg)?;
    info!(
        "{} users in window, {} eligible",
        prep.timelines.len(),
        prep.eligible.len()
    );
    Ok((prep, store))
}

fn synth(config: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<(), PipelineError> {
    let stage = "synth";
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                PipelineError::new(stage, ErrorKind::Io, format!("cannot read {}: {e}", path.display()))
            })?;
            SynthConfig::from_toml(&text)
                .map_err(|e| PipelineError::new(stage, ErrorKind::Validation, e.to_string()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let corpus = generate_corpus(&cfg).map_err(|e| match e {
        SynthError::Io(e) => PipelineError::new(stage, ErrorKind::Io, e.to_string()),
        other => PipelineError::new(stage, ErrorKind::Validation, other.to_string()),
    })?;
    corpus
        .write_to_dir(out_dir, &cfg)
        .map_err(|e| PipelineError::new(stage, ErrorKind::Io, format!("{}: {e}", out_dir.display())))
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Ingest {
            posts,
            out,
            report,
            tunables,
        } => {
            let cfg = tunables.resolve()?;
            let corpus = stages::read_posts(&posts, &cfg)?;
            let window = stages::resolve_window(&corpus, &cfg)?;
            let timelines = pet_happiness::corpus::build_timelines(&corpus, window);
            let summary = stages::json_bytes(&stages::summarize_corpus(&corpus, window, &timelines));
            if let Some(out) = out {
                let posts: Vec<_> = timelines.values().flat_map(|t| t.posts.iter().cloned()).collect();
                stages::write_file("ingest", &out, &stages::jsonl_bytes(&posts))?;
            }
            match report {
                Some(path) => stages::write_file("ingest", &path, &summary),
                None => {
                    print!("{}", String::from_utf8_lossy(&summary));
                    Ok(())
                }
            }
        }
        Command::Annotate {
            load,
            posts,
            out,
            failures,
            tunables,
        } => {
            let cfg = tunables.resolve()?;
            let (store, failed) = match (load, posts) {
                (Some(path), _) => {
                    let (store, report) = stages::read_annotations(&path, &cfg)?;
                    eprint!("{}", String::from_utf8_lossy(&stages::json_bytes(&report)));
                    (store, Vec::new())
                }
                (None, Some(posts)) => {
                    let url = cfg.annotator_url.clone().ok_or_else(|| {
                        PipelineError::new(
                            "annotate",
                            ErrorKind::Validation,
                            "no --annotator-url or ANNOTATOR_URL given",
                        )
                    })?;
                    let corpus = stages::read_posts(&posts, &cfg)?;
                    let (store, failed, retries) = stages::fetch_for_corpus(&corpus, &cfg, &url)?;
                    info!("fetched {} annotations with {retries} retries", store.len());
                    (store, failed)
                }
                (None, None) => {
                    return Err(PipelineError::new(
                        "annotate",
                        ErrorKind::Validation,
                        "either --load or --posts is required",
                    ))
                }
            };
            let mut buf = Vec::new();
            store.write_jsonl(&mut buf).expect("in-memory write");
            stages::write_file("annotate", &out, &buf)?;
            if let Some(path) = failures {
                stages::write_file("annotate", &path, &stages::jsonl_bytes(&failed))?;
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(PipelineError::new(
                    "annotate",
                    ErrorKind::Remote,
                    format!("{} images could not be annotated", failed.len()),
                ))
            }
        }
        Command::Owners {
            posts,
            annotations,
            out,
            tunables,
        } => {
            let cfg = tunables.resolve()?;
            let (prep, store) = load_inputs(&posts, &annotations, &cfg)?;
            stages::write_file(
                "owners",
                &out,
                &stages::jsonl_bytes(&stages::compute_verdicts(&prep, &store, &cfg)),
            )
        }
        Command::Happiness {
            posts,
            annotations,
            out,
            granularity,
            tunables,
        } => {
            let cfg = tunables.resolve()?;
            let (prep, store) = load_inputs(&posts, &annotations, &cfg)?;
            let bytes = match granularity {
                Some(days) if days > 0.0 => stages::jsonl_bytes(&stages::compute_happiness_series(&prep, &store, days)),
                Some(days) => {
                    return Err(PipelineError::new(
                        "happiness",
                        ErrorKind::Validation,
                        format!("granularity {days} must be positive"),
                    ))
                }
                None => stages::jsonl_bytes(&stages::compute_happiness(&prep, &store)),
            };
            stages::write_file("happiness", &out, &bytes)
        }
        Command::Demographics {
            posts,
            annotations,
            out,
            tunables,
        } => {
            let cfg = tunables.resolve()?;
            let (prep, store) = load_inputs(&posts, &annotations, &cfg)?;
            stages::write_file(
                "demographics",
                &out,
                &stages::jsonl_bytes(&stages::compute_demographics(&prep, &store, &cfg)),
            )
        }
        Command::Report {
            verdicts,
            hi,
            demographics,
            out,
            csv_dir,
            tunables,
        } => {
            let cfg = tunables.resolve()?;
            let verdicts: Vec<OwnershipVerdict> = stages::read_jsonl("report", &verdicts)?;
            let hi: Vec<HiRecord> = stages::read_jsonl("report", &hi)?;
            let demographics: Vec<UserDemographics> = stages::read_jsonl("report", &demographics)?;
            let report = stages::compute_report(&verdicts, &hi, &demographics, &cfg)?;
            stages::write_file("report", &out, &stages::json_bytes(&report))?;
            if let Some(dir) = csv_dir {
                stages::write_csv_dir(&report, &dir)?;
            }
            Ok(())
        }
        Command::Synth { config, out_dir, seed } => synth(config.as_deref(), &out_dir, seed),
        Command::Pipeline {
            posts,
            annotations,
            out_dir,
            csv_dir,
            tunables,
        } => {
            let cfg = tunables.resolve()?;
            let source = match (annotations, &cfg.annotator_url) {
                (Some(path), _) => AnnotationSource::File(path),
                (None, Some(url)) => AnnotationSource::Remote(url.clone()),
                (None, None) => {
                    return Err(PipelineError::new(
                        "annotate",
                        ErrorKind::Validation,
                        "either --annotations or --annotator-url / ANNOTATOR_URL is required",
                    ))
                }
            };
            let manifest = stages::run_pipeline(&cfg, &posts, &source, &out_dir, csv_dir.as_deref())?;
            info!("pipeline finished: {} eligible users", manifest.eligible_users);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ErrorKind::Validation.exit_code()
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
