//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use shiptrack_core::detect::DetectorParams;
use shiptrack_core::flow::{default_min_gradient_eig, FlowParams};
use shiptrack_core::raster::{band_difference, equalize_histogram};
use shiptrack_core::shipmatch::nearest_ship;
use shiptrack_core::solar::TransitionParams;
use shiptrack_core::trajectory::{GeoSample, DEFAULT_STEP_SECONDS};
use shiptrack_core::tracker::{PersistenceConfig, SequenceOutcome, SequenceRunner, TrackerConfig};
use shiptrack_core::{Timestamp, TrackingBox};

use crate::ais::load_ais;
use crate::compare::{compare, DEFAULT_THRESHOLD_KM};
use crate::frames::{save_frame, Manifest};
use crate::outputs::{self, read_box_path, read_json, report_json, write_box_path, write_events, write_json};
use crate::render::render;
use crate::scene::{generate, SceneFile};
use crate::timefmt::{format_rfc3339, parse_rfc3339};
use crate::wind::load_wind;

#[derive(Debug, Parser)]
#[command(name = "shiptrack", version, about = "Track linear cloud features through geo-referenced frame sequences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Difference two band sequences and equalize each result.
    Preprocess {
        /// Manifest of the shortwave band frames.
        #[arg(long)]
        c06: PathBuf,
        /// Manifest of the longwave band frames, matched by timestamp.
        #[arg(long)]
        c07: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track a box through a sequence and report persistence.
    Track {
        #[arg(long)]
        manifest: PathBuf,
        /// Initial box as cx,cy,hw,hh in pixels.
        #[arg(long = "box", value_parser = parse_box)]
        bx: TrackingBox,
        #[command(flatten)]
        params: TrackParams,
        #[arg(long)]
        out: PathBuf,
    },
    /// Advect parcels at several heights and measure divergence from a box path.
    Compare {
        #[arg(long)]
        box_path: PathBuf,
        #[arg(long)]
        wind: PathBuf,
        #[arg(long, value_parser = parse_number, value_delimiter = ',', default_value = "0,200,400,600")]
        heights: Vec<f64>,
        /// Start point lat,lon; defaults to the first box-path row.
        #[arg(long, value_parser = parse_pair)]
        init: Option<(f64, f64)>,
        /// Simulated hours; defaults to the box-path span.
        #[arg(long)]
        hours: Option<u32>,
        #[arg(long, default_value_t = DEFAULT_STEP_SECONDS)]
        step_seconds: f64,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_KM)]
        threshold_km: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic sequence with ground truth.
    Synth {
        /// Scene description JSON.
        #[arg(long)]
        scene: PathBuf,
        /// Overrides the texture seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Box whose true path is written; overrides the scene's init_box.
        #[arg(long = "box", value_parser = parse_box)]
        bx: Option<TrackingBox>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find the ship nearest to a track's initialization point.
    Match {
        #[arg(long)]
        ais: PathBuf,
        /// Use the first row of this box path as the point.
        #[arg(long, conflicts_with_all = ["point", "time"])]
        box_path: Option<PathBuf>,
        /// Point as lat,lon.
        #[arg(long, value_parser = parse_pair, requires = "time")]
        point: Option<(f64, f64)>,
        /// RFC 3339 time of the point.
        #[arg(long, requires = "point")]
        time: Option<String>,
        #[arg(long, default_value_t = 50.0)]
        max_km: f64,
        #[arg(long, default_value_t = 60.0)]
        max_minutes: f64,
        /// Also write the result as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write 8-bit frames with the tracked box outlined.
    Render {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        box_path: PathBuf,
        /// Box half extent hw,hh in pixels.
        #[arg(long, value_parser = parse_pair, default_value = "12,12")]
        half_size: (f64, f64),
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a summary of a track (and compare) output directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Args)]
pub struct TrackParams {
    #[arg(long, default_value_t = 84.0)]
    pub sza_day_threshold: f64,
    #[arg(long, default_value_t = 96.0)]
    pub sza_night_threshold: f64,
    #[arg(long, default_value_t = 0.02)]
    pub dqf_max: f64,
    #[arg(long, default_value_t = 60.0)]
    pub gap_max_minutes: f64,
    #[arg(long, default_value_t = 1.0)]
    pub visibility_floor: f64,
    #[arg(long, default_value_t = 12)]
    pub visibility_dwell: usize,
    /// Flow window half extent.
    #[arg(long, default_value_t = 7)]
    pub window_radius: usize,
    #[arg(long, default_value_t = 3)]
    pub pyramid_levels: usize,
    #[arg(long, default_value_t = 10)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 0.03)]
    pub epsilon: f64,
    /// Minimum gradient-matrix eigenvalue; defaults to 1e-4 per window pixel.
    #[arg(long)]
    pub min_eig: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub neighborhood: usize,
    #[arg(long, default_value_t = 3)]
    pub nms_window: usize,
    #[arg(long, default_value_t = 0.2)]
    pub quality_fraction: f64,
    #[arg(long, default_value_t = 50)]
    pub max_features: usize,
    #[arg(long, default_value_t = 5)]
    pub min_features: usize,
    #[arg(long, default_value_t = 3)]
    pub min_surviving: usize,
}

impl Default for TrackParams {
    fn default() -> Self {
        let cli = Cli::try_parse_from(["shiptrack", "track", "--manifest", "m", "--box", "1,1,1,1", "--out", "o"])
            .expect("defaults parse");
        match cli.command {
            Command::Track { params, .. } => params,
            _ => unreachable!(),
        }
    }
}

impl TrackParams {
    pub fn tracker_config(&self) -> TrackerConfig {
        let w = self.window_radius;
        TrackerConfig {
            detector: DetectorParams {
                neighborhood: self.neighborhood,
                nms_window: self.nms_window,
                threshold_fraction: self.quality_fraction,
                max_features: self.max_features,
            },
            flow: FlowParams {
                window_x: w,
                window_y: w,
                pyramid_levels: self.pyramid_levels,
                max_iterations: self.max_iterations,
                epsilon_stop: self.epsilon,
                min_gradient_eig: self.min_eig.unwrap_or_else(|| default_min_gradient_eig(w, w)),
            },
            transition: TransitionParams {
                day_threshold: self.sza_day_threshold,
                night_threshold: self.sza_night_threshold,
            },
            dqf_max: self.dqf_max,
            gap_max_seconds: self.gap_max_minutes * 60.0,
            min_init_features: self.min_features,
            min_surviving_features: self.min_surviving,
            ..TrackerConfig::default()
        }
    }

    pub fn persistence(&self) -> PersistenceConfig {
        PersistenceConfig {
            visibility_floor: self.visibility_floor,
            visibility_dwell: self.visibility_dwell,
        }
    }
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("{p:?} is not a finite number"))
        })
        .collect()
}

fn parse_box(s: &str) -> Result<TrackingBox, String> {
    match numbers(s)?[..] {
        [cx, cy, hw, hh] if hw > 0.0 && hh > 0.0 => Ok(TrackingBox::new(cx, cy, hw, hh)),
        [_, _, _, _] => Err("half extents must be positive".into()),
        _ => Err("expected cx,cy,hw,hh".into()),
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match numbers(s)?[..] {
        [a, b] => Ok((a, b)),
        _ => Err("expected two comma-separated numbers".into()),
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    match numbers(s)?[..] {
        [v] => Ok(v),
        _ => Err("expected a number".into()),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    execute(Cli::try_parse_from(args)?)
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Preprocess { c06, c07, out } => cmd_preprocess(&c06, &c07, &out).map(|_| ()),
        Command::Track { manifest, bx, params, out } => {
            let o = cmd_track(&manifest, bx, &params, &out)?;
            println!(
                "{} frames tracked, persistence {:.2} h ({})",
                o.path.len(),
                o.report.duration_hours(),
                o.report.end_reason.name()
            );
            Ok(())
        }
        Command::Compare {
            box_path,
            wind,
            heights,
            init,
            hours,
            step_seconds,
            threshold_km,
            out,
        } => {
            cmd_compare(&box_path, &wind, init, &heights, hours, step_seconds, threshold_km, &out)
        }
        Command::Synth { scene, seed, bx, out } => {
            let file = SceneFile::read(&scene)?;
            let mut spec = file.to_spec().map_err(|e| anyhow::anyhow!("{}: {e}", scene.display()))?;
            if let Some(s) = seed {
                spec.texture.seed = s;
            }
            let init = bx.or(file.init_box.map(TrackingBox::from));
            let g = generate(&spec, init, &out)?;
            println!("wrote {} frames, manifest {}", spec.n_frames, g.manifest.display());
            Ok(())
        }
        Command::Match {
            ais,
            box_path,
            point,
            time,
            max_km,
            max_minutes,
            out,
        } => cmd_match(&ais, box_path.as_deref(), point, time.as_deref(), max_km, max_minutes, out.as_deref()),
        Command::Render {
            manifest,
            box_path,
            half_size,
            out,
        } => {
            ensure!(half_size.0 > 0.0 && half_size.1 > 0.0, "half size must be positive");
            let m = Manifest::read(&manifest)?;
            let rows = read_box_path(&box_path)?;
            let s = render(&m, &rows, half_size, &out)?;
            for t in &s.unannotated {
                eprintln!("warning: no box-path row at {}; frame left unannotated", format_rfc3339(*t));
            }
            println!("wrote {} frames to {}", s.written.len(), out.display());
            Ok(())
        }
        Command::Report { dir } => cmd_report(&dir),
    }
}

pub fn cmd_preprocess(c06: &Path, c07: &Path, out: &Path) -> anyhow::Result<PathBuf> {
    let a = Manifest::read(c06)?;
    let b = Manifest::read(c07)?;
    ensure!(
        a.len() == b.len(),
        "band manifests list {} and {} frames; they must match one to one",
        a.len(),
        b.len()
    );
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut rasters = Vec::with_capacity(a.len());
    for (k, (fa, fb)) in a.frames().zip(b.frames()).enumerate() {
        let (fa, fb) = (fa?, fb?);
        let diff = band_difference(&fa, &fb).with_context(|| format!("frame {k} at {}", format_rfc3339(fa.timestamp())))?;
        let eq = equalize_histogram(&diff).with_context(|| format!("frame {k}"))?;
        let path = out.join(format!("frame_{k:05}.pgm"));
        save_frame(&eq, &path)?;
        rasters.push(path);
    }
    let manifest = out.join("manifest.txt");
    Manifest::write(&manifest, &rasters)?;
    Ok(manifest)
}

/// Streams the manifest through the tracker and writes `box_path.csv`,
/// `events.ndjson`, and `report.json` into `out`.
pub fn cmd_track(manifest: &Path, bx: TrackingBox, params: &TrackParams, out: &Path) -> anyhow::Result<SequenceOutcome> {
    let config = params.tracker_config();
    config.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    let m = Manifest::read(manifest)?;
    let mut frames = m.frames();
    let first = frames.next().expect("manifest is nonempty")?;
    let mut runner = SequenceRunner::start(&first, bx, config, params.persistence())
        .map_err(|e| anyhow::anyhow!("cannot start tracking: {e}"))?;
    for f in frames {
        if runner.is_finished() {
            break;
        }
        let f = f?;
        runner.push(&f).map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    let outcome = runner.finish();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_box_path(&out.join("box_path.csv"), &outcome.path)?;
    write_events(&out.join("events.ndjson"), &outcome.events)?;
    write_json(&out.join("report.json"), &report_json(&outcome.report))?;
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_compare(
    box_path: &Path,
    wind: &Path,
    init: Option<(f64, f64)>,
    heights: &[f64],
    hours: Option<u32>,
    step_seconds: f64,
    threshold_km: f64,
    out: &Path,
) -> anyhow::Result<()> {
    let rows = read_box_path(box_path)?;
    ensure!(!rows.is_empty(), "{}: box path is empty", box_path.display());
    let path: Vec<GeoSample> = rows.iter().map(GeoSample::from).collect();
    let field = load_wind(wind)?;
    let c = compare(&path, &field, init, heights, hours, step_seconds, threshold_km)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    outputs::write_trajectories(&out.join("trajectories.csv"), &c.ensemble)?;
    outputs::write_divergence(&out.join("divergence.csv"), c.table())?;
    write_json(&out.join("summary.json"), &c.summary_json())?;
    for h in &c.heights {
        match h.first_exceedance {
            Some(t) => println!(
                "{} m: exceeds {} km after {:.0} h",
                h.height_m,
                threshold_km,
                t.seconds_since(c.ensemble.t0) / 3600.0
            ),
            None => println!("{} m: within {} km (max {:.2} km)", h.height_m, threshold_km, h.max_km),
        }
    }
    Ok(())
}

fn cmd_match(
    ais: &Path,
    box_path: Option<&Path>,
    point: Option<(f64, f64)>,
    time: Option<&str>,
    max_km: f64,
    max_minutes: f64,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let (lat, lon, t): (f64, f64, Timestamp) = match (box_path, point, time) {
        (Some(p), _, _) => {
            let rows = read_box_path(p)?;
            let r = rows.first().with_context(|| format!("{}: box path is empty", p.display()))?;
            (r.lat, r.lon, r.timestamp)
        }
        (None, Some((lat, lon)), Some(s)) => (lat, lon, parse_rfc3339(s).with_context(|| format!("bad time {s:?}"))?),
        _ => bail!("give either --box-path or --point with --time"),
    };
    let load = load_ais(ais)?;
    for (line, why) in &load.warnings {
        eprintln!("warning: {}:{line}: skipped row ({why})", ais.display());
    }
    let m = nearest_ship(&load.records, lat, lon, t, max_km, max_minutes);
    let value = json!({
        "point": { "timestamp": format_rfc3339(t), "lat": lat, "lon": lon },
        "skipped_rows": load.warnings.len(),
        "match": m.as_ref().map(|m| json!({
            "vessel_id": m.record.vessel_id,
            "timestamp": format_rfc3339(m.record.t),
            "lat": m.record.lat,
            "lon": m.record.lon,
            "name": m.record.name,
            "type": m.record.vessel_type,
            "speed_knots": m.record.speed_knots,
            "distance_km": m.distance_km,
            "time_offset_minutes": m.time_offset_seconds / 60.0,
        })),
    });
    println!("{}", serde_json::to_string_pretty(&value)?);
    if let Some(o) = out {
        write_json(o, &value)?;
    }
    Ok(())
}

fn cmd_report(dir: &Path) -> anyhow::Result<()> {
    let report = read_json(&dir.join("report.json"))?;
    let get = |k: &str| report.get(k).cloned().unwrap_or(serde_json::Value::Null);
    println!("start:    {}", get("start"));
    println!("end:      {}", get("end"));
    println!("duration: {} h", get("duration_hours"));
    println!("reason:   {}", get("end_reason"));
    let bp = dir.join("box_path.csv");
    if bp.is_file() {
        let rows = read_box_path(&bp)?;
        let coasting = rows.iter().filter(|r| r.mode == "Coasting").count();
        println!("frames:   {} ({} coasting)", rows.len(), coasting);
    }
    let summary = dir.join("summary.json");
    if summary.is_file() {
        let s = read_json(&summary)?;
        println!("heights within threshold: {}", s["heights_within_threshold"]);
        println!("closest height: {} m", s["closest_height_m"]);
    }
    Ok(())
}
