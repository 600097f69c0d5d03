use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use wlkit::codec::{
    archive_stats, decode_frame, encode_frame_with_level, inspect_frame, split_archive,
    ArchiveWriter, CompressionStats, FrameSummary, ARCHIVE_MAGIC, DEFAULT_DEFLATE_LEVEL,
    FRAME_MAGIC,
};
use wlkit::config::ToolkitConfig;
use wlkit::metrics::{evaluate, MatchThresholds};
use wlkit::parallel::{default_workers, with_workers};
use wlkit::pointcloud::{project, to_world, write_binary, write_csv};
use wlkit::range_image::{ChannelKind, SensorGeometry};
use wlkit::raw_frame::{read_raw_frame, write_raw_frame, RAW_EXTENSION, RAW_MAGIC};
use wlkit::scenario::{
    constant_velocity_predictions, gen_synthetic, oracle_predictions, read_predictions,
    read_scenarios, write_predictions, write_scenarios,
};
use wlkit::synth::{constant_frame, frame_seed, street_scene};

use crate::{Cli, Command, GenArgs, GenKind, PointFormat, Predictor, ReportFormat};

pub fn run(cli: Cli) -> Result<()> {
    let workers = if cli.workers == 0 {
        default_workers()
    } else {
        cli.workers
    };
    match cli.command {
        Command::Compress {
            input_dir,
            output,
            profile,
        } => compress(&input_dir, &output, profile.profile.as_deref(), workers),
        Command::Decompress {
            archive,
            output_dir,
            profile,
            points,
            format,
        } => decompress(
            &archive,
            &output_dir,
            profile.profile.as_deref(),
            points.then_some(format),
            workers,
        ),
        Command::Inspect { file } => inspect(&file),
        Command::Stats { archive } => stats(&archive),
        Command::Gen(args) => gen(&args, workers),
        Command::Eval {
            scenarios,
            predictions,
            thresholds,
            output,
            model,
        } => eval(&scenarios, &predictions, thresholds.as_deref(), output, &model, workers),
    }
}

fn load_config(path: Option<&Path>) -> Result<ToolkitConfig> {
    match path {
        Some(p) => Ok(ToolkitConfig::load(p)?),
        None => Ok(ToolkitConfig::default()),
    }
}

fn frame_name(index: usize) -> String {
    format!("frame_{index:06}")
}

/// Raw frames in `dir`, sorted by file name.
fn raw_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == RAW_EXTENSION) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn print_stats(stats: &CompressionStats, seconds: Option<f64>) -> Result<()> {
    let mut text = String::new();
    for (k, v) in stats.key_values() {
        text.push_str(&format!("{k}={v}\n"));
    }
    if let Some(s) = seconds {
        text.push_str(&format!("wall_time_s={s:.3}\n"));
        text.push_str(&format!(
            "throughput_mb_s={:.2}\n",
            stats.raw_bytes as f64 / 1e6 / s.max(1e-9)
        ));
    }
    emit(&text)
}

fn compress(input_dir: &Path, output: &Path, profile: Option<&Path>, workers: usize) -> Result<()> {
    let cfg = load_config(profile)?;
    let files = raw_frames(input_dir)?;
    if files.is_empty() {
        bail!("no frames found in {}", input_dir.display());
    }
    let start = Instant::now();
    let sink = BufWriter::new(
        File::create(output).with_context(|| format!("cannot create {}", output.display()))?,
    );
    let mut writer = ArchiveWriter::new(sink, files.len() as u64)?;
    let mut stats = CompressionStats::default();
    // Bounded batches keep memory flat while preserving input order.
    let batch = workers * 4;
    with_workers(workers, || -> Result<()> {
        for chunk in files.chunks(batch) {
            let encoded: Vec<Result<Vec<u8>>> = chunk
                .par_iter()
                .map(|path| {
                    let bytes = fs::read(path)?;
                    let img = read_raw_frame(&bytes)?;
                    Ok(encode_frame_with_level(&img, &cfg.quantization, DEFAULT_DEFLATE_LEVEL)?)
                })
                .collect();
            for (path, frame) in chunk.iter().zip(encoded) {
                let frame = frame.with_context(|| path.display().to_string())?;
                stats.add_frame(&inspect_frame(&frame)?);
                writer.push(&frame)?;
            }
        }
        Ok(())
    })?;
    stats.compressed_bytes = writer.bytes_written();
    writer.finish()?;
    print_stats(&stats, Some(start.elapsed().as_secs_f64()))
}

fn decompress(
    archive: &Path,
    output_dir: &Path,
    profile: Option<&Path>,
    points: Option<PointFormat>,
    workers: usize,
) -> Result<()> {
    let cfg = load_config(profile)?;
    let bytes = fs::read(archive).with_context(|| format!("cannot read {}", archive.display()))?;
    let frames = split_archive(&bytes)?;
    fs::create_dir_all(output_dir)?;
    let write_frame = |index: usize, frame: &[u8]| -> Result<()> {
        let decoded = decode_frame(frame)?;
        let h = &decoded.header;
        let img = decoded.to_range_image(cfg.geometry_for(h.sensor, h.height, h.width))?;
        let name = frame_name(index);
        fs::write(
            output_dir.join(format!("{name}.{RAW_EXTENSION}")),
            write_raw_frame(&img)?,
        )?;
        if let Some(format) = points {
            let cloud = to_world(&project(&img)?, &img, img.frame_rotation)?;
            let ext = match format {
                PointFormat::Binary => "bin",
                PointFormat::Csv => "csv",
            };
            let mut out = BufWriter::new(File::create(output_dir.join(format!("{name}.{ext}")))?);
            match format {
                PointFormat::Binary => write_binary(&cloud, &mut out)?,
                PointFormat::Csv => write_csv(&cloud, &mut out)?,
            }
            out.flush()?;
        }
        Ok(())
    };
    with_workers(workers, || {
        frames
            .par_iter()
            .enumerate()
            .try_for_each(|(index, frame)| {
                write_frame(index, frame).with_context(|| format!("frame {index}"))
            })
    })?;
    emit(&format!("frames={}\n", frames.len()))
}

fn summary_line(index: Option<usize>, s: &FrameSummary) -> String {
    let h = &s.header;
    let mut line = String::new();
    if let Some(i) = index {
        line.push_str(&format!("frame={i} "));
    }
    line.push_str(&format!(
        "sensor={} return={} height={} width={} level={} valid_pixels={} bitmap_bytes={}",
        h.sensor,
        h.return_index.code(),
        h.height,
        h.width,
        h.deflate_level,
        s.valid_pixels,
        s.bitmap_bytes
    ));
    for kind in ChannelKind::ALL {
        line.push_str(&format!(" {kind}_bytes={}", s.payload_bytes[kind.index()]));
    }
    line.push_str(&format!(" total_bytes={}", s.total_bytes));
    line
}

fn inspect(file: &Path) -> Result<()> {
    let bytes = fs::read(file).with_context(|| format!("cannot read {}", file.display()))?;
    let magic = bytes.get(..4).unwrap_or(&bytes);
    let mut text = String::new();
    if magic == ARCHIVE_MAGIC {
        let frames = split_archive(&bytes)?;
        text.push_str(&format!("archive frames={} total_bytes={}\n", frames.len(), bytes.len()));
        for (i, f) in frames.iter().enumerate() {
            let s = inspect_frame(f).with_context(|| format!("frame {i}"))?;
            text.push_str(&summary_line(Some(i), &s));
            text.push('\n');
        }
    } else if magic == FRAME_MAGIC {
        text = summary_line(None, &inspect_frame(&bytes)?) + "\n";
    } else if magic == RAW_MAGIC {
        let img = read_raw_frame(&bytes)?;
        let g: &SensorGeometry = &img.geometry;
        text = format!(
            "raw sensor={} return={} height={} width={} inclination_min={} inclination_max={} valid_pixels={} total_bytes={}\n",
            g.sensor,
            img.return_index.code(),
            g.height,
            g.width,
            g.inclination_min,
            g.inclination_max,
            img.valid_count(),
            bytes.len()
        );
    } else {
        bail!("{}: unrecognized magic {:?}", file.display(), magic);
    }
    emit(&text)
}

fn stats(archive: &Path) -> Result<()> {
    let bytes = fs::read(archive).with_context(|| format!("cannot read {}", archive.display()))?;
    print_stats(&archive_stats(&bytes)?, None)
}

fn gen(args: &GenArgs, workers: usize) -> Result<()> {
    match args.kind {
        GenKind::Frames => {
            fs::create_dir_all(&args.output)?;
            let geometry = SensorGeometry::native(args.sensor);
            let ret = args.return_index.into();
            with_workers(workers, || {
                (0..args.count).into_par_iter().try_for_each(|i| -> Result<()> {
                    let img = if args.constant {
                        constant_frame(geometry, ret)
                    } else {
                        street_scene(frame_seed(args.seed, i), geometry, ret)
                    };
                    let path = args
                        .output
                        .join(format!("{}.{RAW_EXTENSION}", frame_name(i as usize)));
                    fs::write(&path, write_raw_frame(&img)?)
                        .with_context(|| format!("cannot write {}", path.display()))
                })
            })?;
            emit(&format!("frames={}\n", args.count))?;
        }
        GenKind::Scenes => {
            let corpus = gen_synthetic(args.seed, args.count as usize, args.agents as usize);
            write_scenarios(&corpus, &args.output)
                .with_context(|| format!("cannot write {}", args.output.display()))?;
            if let Some(path) = &args.predictions {
                let preds = match args.predictor {
                    Predictor::Oracle => oracle_predictions(&corpus),
                    Predictor::ConstantVelocity => constant_velocity_predictions(&corpus),
                };
                write_predictions(&preds, path)
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            emit(&format!("scenarios={}\n", corpus.len()))?;
        }
    }
    Ok(())
}

fn eval(
    scenarios: &Path,
    predictions: &Path,
    thresholds: Option<&Path>,
    output: ReportFormat,
    model: &str,
    workers: usize,
) -> Result<()> {
    let thresholds = match thresholds {
        Some(p) => MatchThresholds::load(p)?,
        None => MatchThresholds::default(),
    };
    let corpus = read_scenarios(scenarios).with_context(|| scenarios.display().to_string())?;
    let preds = read_predictions(predictions).with_context(|| predictions.display().to_string())?;
    let report = with_workers(workers, || evaluate(&corpus, &preds, &thresholds))?;
    match output {
        ReportFormat::Summary => emit(&report.to_summary(model)),
        ReportFormat::Table => emit(&report.to_table()),
        ReportFormat::Json => emit(&(serde_json::to_string_pretty(&report)? + "\n")),
    }
}
