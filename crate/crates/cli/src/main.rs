use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use anicode_core::codec::EncodeError;
use anicode_core::draft::DraftSpec;
use anicode_core::io::{frame_file_name, load_image, read_payload, save_png, write_json, write_payload};
use anicode_core::perturb::Perturbation;
use anicode_core::pipeline::{author_draft, consume};
use anicode_core::registration::{LandmarksFile, DEFAULT_THRESHOLD};
use anicode_core::segmentation::{extract_features, segment, write_features_csv, SegParams, SegmentError};
use anicode_core::{imagecore, Error};

mod exit {
    pub const PARSE: u8 = 2;
    pub const CAPACITY: u8 = 3;
    pub const REGISTRATION: u8 = 4;
    pub const MATCHING: u8 = 5;
    pub const IO: u8 = 6;
}

#[derive(Parser)]
#[command(name = "anicode", version, about = "Encode scene animations into a short code and play them back")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a spec JSON against the author's photo and render a preview.
    Author {
        #[arg(long)]
        image: PathBuf,
        /// Spec JSON; ROI entries are segment IDs or {cx, cy, area} features.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Regenerate the animation from a photo, a payload and observed landmarks.
    Consume {
        #[arg(long)]
        image: PathBuf,
        /// `.anicode` payload file.
        #[arg(long)]
        code: PathBuf,
        /// JSON with `obs`: the four landmark corners seen in the photo.
        #[arg(long)]
        landmarks: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Maximum mean landmark error in 640x480 pixels.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Apply a deterministic capture perturbation.
    Perturb {
        #[arg(long)]
        image: PathBuf,
        /// brightness, gamma, translate or homography
        #[arg(long)]
        kind: String,
        /// Magnitude; `dx,dy` for translate.
        #[arg(long, allow_hyphen_values = true)]
        mag: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment a photo and dump its label map and features, to pick ROI IDs.
    Segment {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1200)]
        avg_size: u32,
        /// Spatial/colour weight ratio in hundredths.
        #[arg(long, default_value_t = 10)]
        compactness: u32,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::new(exit::IO, format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Encode(EncodeError::CapacityExceeded { .. }) => exit::CAPACITY,
            Error::Registration { .. } => exit::REGISTRATION,
            Error::Match(_) | Error::Render(anicode_core::animator::RenderError::Geometry { .. }) => exit::MATCHING,
            Error::Io(_) | Error::Render(_) | Error::Segment(SegmentError::Write(_)) => exit::IO,
            _ => exit::PARSE,
        };
        Self::new(code, e.to_string())
    }
}

fn read_image(path: &Path) -> Result<imagecore::Image, Failure> {
    load_image(path).map_err(|e| Failure::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path).map_err(|e| Failure::io(path, e))
}

fn author(image: &Path, spec: &Path, out_dir: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(spec).map_err(|e| Failure::io(spec, e))?;
    let draft: DraftSpec =
        serde_json::from_str(&text).map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", spec.display())))?;
    let img = read_image(image)?;
    let (resolved, authored) = author_draft(&img, &draft)?;
    let preview = authored.preview(&resolved)?;

    create_dir(out_dir)?;
    let io = |e| Failure::io(out_dir, e);
    write_payload(&out_dir.join("payload.anicode"), &authored.payload).map_err(io)?;
    write_json(&out_dir.join("spec.json"), &resolved).map_err(io)?;
    write_json(&out_dir.join("capacity.json"), &authored.capacity).map_err(io)?;
    preview.write_dir(&out_dir.join("preview")).map_err(io)?;
    info!(
        "{} keyframes, {} preview frames, {}/{} chars",
        resolved.keyframes.len(),
        preview.frames.len(),
        authored.capacity.chars_used,
        authored.capacity.limit
    );
    println!("{}", authored.payload);
    Ok(())
}

fn consume_cmd(image: &Path, code: &Path, landmarks: &Path, out_dir: &Path, threshold: f64) -> Result<(), Failure> {
    let payload = read_payload(code).map_err(|e| Failure::io(code, e))?;
    let marks = LandmarksFile::load(landmarks).map_err(|e| Failure::io(landmarks, e))?;
    let img = read_image(image)?;
    let consumed = consume(&img, &payload, &marks.obs, threshold)?;
    info!("registration error {:.2}px", consumed.registration_error);

    create_dir(out_dir)?;
    let manifest = consumed.render_with(|i, frame| {
        save_png(frame, &out_dir.join(frame_file_name(i))).map_err(|e| e.to_string())
    })?;
    let io = |e| Failure::io(out_dir, e);
    write_json(&out_dir.join("manifest.json"), &manifest).map_err(io)?;
    let mut debug = consumed.analysis.matches.to_debug_json();
    debug["registration_error"] = serde_json::json!(consumed.registration_error);
    debug["segments"] = serde_json::json!(consumed.analysis.features.len());
    write_json(&out_dir.join("matches.json"), &debug).map_err(io)?;
    println!("{} frames", manifest.frame_count);
    Ok(())
}

fn perturb(image: &Path, kind: &str, mag: &str, out: &Path) -> Result<(), Failure> {
    let p = Perturbation::parse(kind, mag).map_err(|e| Failure::new(exit::PARSE, e.to_string()))?;
    let img = read_image(image)?;
    save_png(&p.apply(&img), out).map_err(|e| Failure::io(out, e))
}

fn segment_cmd(image: &Path, out_dir: &Path, params: SegParams) -> Result<(), Failure> {
    let canvas = imagecore::normalize(&read_image(image)?).map_err(Error::from)?;
    let labels = segment(&canvas, &params).map_err(Error::from)?;
    let feats = extract_features(&labels);
    create_dir(out_dir)?;
    labels.save_png16(&out_dir.join("labels.png")).map_err(Error::from)?;
    let csv = out_dir.join("features.csv");
    let file = std::fs::File::create(&csv).map_err(|e| Failure::io(&csv, e))?;
    write_features_csv(std::io::BufWriter::new(file), &feats).map_err(|e| Failure::io(&csv, e))?;
    println!("{} segments", feats.len());
    Ok(())
}

fn configure_threads() {
    let Ok(value) = std::env::var("ANICODE_THREADS") else {
        return;
    };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("ANICODE_THREADS ignored: {e}");
            }
        }
        _ => log::warn!("ANICODE_THREADS={value:?} is not a positive integer, ignored"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Author { image, spec, out_dir } => author(image, spec, out_dir),
        Command::Consume {
            image,
            code,
            landmarks,
            out_dir,
            threshold,
        } => consume_cmd(image, code, landmarks, out_dir, *threshold),
        Command::Perturb { image, kind, mag, out } => perturb(image, kind, mag, out),
        Command::Segment {
            image,
            out_dir,
            avg_size,
            compactness,
        } => segment_cmd(image, out_dir, SegParams::tuned(*avg_size, *compactness)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
