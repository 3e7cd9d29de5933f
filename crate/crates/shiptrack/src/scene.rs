//! Scene description files and on-disk generation of synthetic sequences.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shiptrack_core::synth::{BrightnessRamp, Corruption, Fade, Flow, RidgeSpec, Scene, SceneSpec, TextureSpec, TruthRow};
use shiptrack_core::{GeoTransform, TrackingBox};

use crate::error::{io_err, malformed, Result};
use crate::frames::{save_frame, Manifest};
use crate::outputs::write_ground_truth;
use crate::timefmt::{format_rfc3339, parse_rfc3339};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FlowDto {
    Uniform { u: f64, v: f64 },
    Rotation { cx: f64, cy: f64, omega: f64 },
    Shear { u0: f64, rate: f64, y_ref: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoDto {
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureDto {
    pub seed: u64,
    pub correlation_length: f64,
    pub contrast: f64,
    pub skew: f64,
}

impl Default for TextureDto {
    fn default() -> Self {
        let t = TextureSpec::default();
        TextureDto {
            seed: t.seed,
            correlation_length: t.correlation_length,
            contrast: t.contrast,
            skew: t.skew,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadeDto {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeDto {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub width: f64,
    /// Texture standard deviations.
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fade: Option<FadeDto>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampDto {
    pub start: usize,
    pub length: usize,
    pub depth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionDto {
    pub frame: usize,
    pub fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDto {
    pub cx: f64,
    pub cy: f64,
    pub hw: f64,
    pub hh: f64,
}

impl From<BoxDto> for TrackingBox {
    fn from(b: BoxDto) -> Self {
        TrackingBox::new(b.cx, b.cy, b.hw, b.hh)
    }
}

impl From<TrackingBox> for BoxDto {
    fn from(b: TrackingBox) -> Self {
        BoxDto {
            cx: b.center_x,
            cy: b.center_y,
            hw: b.half_width,
            hh: b.half_height,
        }
    }
}

/// JSON form of a scene. Omitted fields take the generator defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cadence_seconds: Option<f64>,
    /// RFC 3339.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowDto>,
    #[serde(default)]
    pub texture: TextureDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<RidgeDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<RampDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corruption: Vec<CorruptionDto>,
    /// Box whose true path is written as ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_box: Option<BoxDto>,
}

impl SceneFile {
    pub fn read(path: &Path) -> Result<SceneFile> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| malformed(path, e.to_string()))
    }

    pub fn to_spec(&self) -> std::result::Result<SceneSpec, String> {
        let mut spec = SceneSpec::new(self.width, self.height, self.n_frames);
        if let Some(c) = self.cadence_seconds {
            spec.cadence_seconds = c;
        }
        if let Some(s) = &self.start {
            spec.start = parse_rfc3339(s).ok_or_else(|| format!("bad start time {s:?}"))?;
        }
        if let Some(g) = self.geo {
            spec.geo = GeoTransform::new(g.lat0, g.lon0, g.dlat, g.dlon).map_err(|e| e.to_string())?;
        }
        if let Some(f) = self.flow {
            spec.flow = match f {
                FlowDto::Uniform { u, v } => Flow::Uniform { u, v },
                FlowDto::Rotation { cx, cy, omega } => Flow::Rotation { cx, cy, omega },
                FlowDto::Shear { u0, rate, y_ref } => Flow::Shear { u0, rate, y_ref },
            };
        }
        let t = self.texture;
        spec.texture = TextureSpec {
            seed: t.seed,
            correlation_length: t.correlation_length,
            contrast: t.contrast,
            skew: t.skew,
        };
        spec.ridge = self.ridge.map(|r| RidgeSpec {
            x0: r.x0,
            y0: r.y0,
            x1: r.x1,
            y1: r.y1,
            width: r.width,
            amplitude: r.amplitude,
            fade: r.fade.map(|f| Fade { start: f.start, end: f.end }),
        });
        spec.transition = self.transition.map(|r| BrightnessRamp {
            start: r.start,
            length: r.length,
            depth: r.depth,
        });
        spec.corruption = self
            .corruption
            .iter()
            .map(|c| Corruption {
                frame: c.frame,
                fraction: c.fraction,
            })
            .collect();
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    pub fn from_spec(spec: &SceneSpec, init_box: Option<TrackingBox>) -> SceneFile {
        let g = spec.geo;
        SceneFile {
            width: spec.width,
            height: spec.height,
            n_frames: spec.n_frames,
            cadence_seconds: Some(spec.cadence_seconds),
            start: Some(format_rfc3339(spec.start)),
            geo: Some(GeoDto {
                lat0: g.lat0,
                lon0: g.lon0,
                dlat: g.dlat,
                dlon: g.dlon,
            }),
            flow: Some(match spec.flow {
                Flow::Uniform { u, v } => FlowDto::Uniform { u, v },
                Flow::Rotation { cx, cy, omega } => FlowDto::Rotation { cx, cy, omega },
                Flow::Shear { u0, rate, y_ref } => FlowDto::Shear { u0, rate, y_ref },
            }),
            texture: TextureDto {
                seed: spec.texture.seed,
                correlation_length: spec.texture.correlation_length,
                contrast: spec.texture.contrast,
                skew: spec.texture.skew,
            },
            ridge: spec.ridge.map(|r| RidgeDto {
                x0: r.x0,
                y0: r.y0,
                x1: r.x1,
                y1: r.y1,
                width: r.width,
                amplitude: r.amplitude,
                fade: r.fade.map(|f| FadeDto { start: f.start, end: f.end }),
            }),
            transition: spec.transition.map(|r| RampDto {
                start: r.start,
                length: r.length,
                depth: r.depth,
            }),
            corruption: spec
                .corruption
                .iter()
                .map(|c| CorruptionDto {
                    frame: c.frame,
                    fraction: c.fraction,
                })
                .collect(),
            init_box: init_box.map(BoxDto::from),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub manifest: PathBuf,
    pub ground_truth: Option<PathBuf>,
    pub truth: Vec<TruthRow>,
}

/// Writes `frame_NNNNN.pgm` (+ sidecars, masks), `manifest.txt`,
/// `scene.json`, and `ground_truth.csv` when a box is given.
pub fn generate(spec: &SceneSpec, init_box: Option<TrackingBox>, out_dir: &Path) -> Result<Generated> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let scene = Scene::new(spec.clone())?;
    let mut rasters = Vec::with_capacity(scene.len());
    for k in 0..scene.len() {
        let path = out_dir.join(format!("frame_{k:05}.pgm"));
        save_frame(&scene.frame(k)?, &path)?;
        rasters.push(path);
    }
    let manifest = out_dir.join("manifest.txt");
    Manifest::write(&manifest, &rasters)?;
    let scene_path = out_dir.join("scene.json");
    let text = serde_json::to_string_pretty(&SceneFile::from_spec(spec, init_box)).expect("serializable");
    fs::write(&scene_path, text + "\n").map_err(io_err(&scene_path))?;
    let (ground_truth, truth) = match init_box {
        Some(b) => {
            let rows = scene.ground_truth_box_path(&b);
            let p = out_dir.join("ground_truth.csv");
            write_ground_truth(&p, &rows)?;
            (Some(p), rows)
        }
        None => (None, Vec::new()),
    };
    Ok(Generated {
        manifest,
        ground_truth,
        truth,
    })
}
