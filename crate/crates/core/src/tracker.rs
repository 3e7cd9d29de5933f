//! Tracking-box state machine and persistence reporting.
//!
//! Per frame the tracker:
//!
//! 1. skips frames whose corrupt fraction exceeds `dqf_max`;
//! 2. terminates when the gap since the last processed frame exceeds
//!    `gap_max_seconds`;
//! 3. classifies the box's diurnal state from perimeter zenith angles;
//! 4. while a transition lasts, moves the box at the constant velocity
//!    observed over the most recent history entries, then re-detects
//!    features once the transition ends;
//! 5. otherwise tracks every feature with pyramidal Lucas-Kanade and moves
//!    the box by the mean displacement of the survivors.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

use crate::detect::{detect_features, DetectError, DetectorParams, FeaturePoint};
use crate::flow::{build_pyramid, to_unit_scale, track_feature, FlowError, FlowParams, FlowVector, ImagePyramid};
use crate::math::sqrt;
use crate::raster::Frame;
use crate::region::TrackingBox;
use crate::solar::{perimeter_angles, transition_state, DiurnalState, PerimeterExtremes, SolarError, TransitionParams};
use crate::time::Timestamp;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackerConfig {
    pub detector: DetectorParams,
    pub flow: FlowParams,
    pub transition: TransitionParams,
    /// Frames with a corrupt fraction strictly above this are skipped.
    pub dqf_max: f64,
    /// Gaps strictly longer than this terminate the track.
    pub gap_max_seconds: f64,
    pub min_init_features: usize,
    pub min_surviving_features: usize,
    /// Box-center history entries used for the coasting velocity.
    pub history_len: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            detector: DetectorParams::default(),
            flow: FlowParams::default(),
            transition: TransitionParams::default(),
            dqf_max: 0.02,
            gap_max_seconds: 3600.0,
            min_init_features: 5,
            min_surviving_features: 3,
            history_len: 6,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerError> {
        self.detector.validate().map_err(TrackerError::Detect)?;
        self.flow.validate().map_err(TrackerError::Flow)?;
        TransitionParams::new(self.transition.day_threshold, self.transition.night_threshold)
            .map_err(TrackerError::Solar)?;
        if !(0.0..=1.0).contains(&self.dqf_max) {
            return Err(TrackerError::InvalidConfig("dqf_max must be in [0, 1]"));
        }
        if !(self.gap_max_seconds > 0.0) {
            return Err(TrackerError::InvalidConfig("gap_max_seconds must be positive"));
        }
        if self.min_init_features < 1 || self.min_surviving_features < 1 {
            return Err(TrackerError::InvalidConfig("feature minimums must be >= 1"));
        }
        if self.history_len < 2 {
            return Err(TrackerError::InvalidConfig("history_len must be >= 2"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrackerError {
    BoxOutOfBounds,
    InsufficientFeatures(usize),
    OutOfOrder { previous: Timestamp, next: Timestamp },
    InvalidConfig(&'static str),
    Detect(DetectError),
    Flow(FlowError),
    Solar(SolarError),
}

impl fmt::Display for TrackerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrackerError::BoxOutOfBounds => f.write_str("tracking box is not inside the frame"),
            TrackerError::InsufficientFeatures(n) => write!(f, "only {n} features found in the tracking box"),
            TrackerError::OutOfOrder { previous, next } => {
                write!(f, "frame at {next} does not follow {previous}")
            }
            TrackerError::InvalidConfig(what) => write!(f, "invalid tracker configuration: {what}"),
            TrackerError::Detect(e) => write!(f, "detection: {e}"),
            TrackerError::Flow(e) => write!(f, "flow: {e}"),
            TrackerError::Solar(e) => write!(f, "solar: {e}"),
        }
    }
}

impl core::error::Error for TrackerError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    GapTooLarge,
    FeaturesLost,
    ReacquisitionFailed,
    OverlappingTransitions,
    BoxOutOfBounds,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminationReason::GapTooLarge => "GapTooLarge",
            TerminationReason::FeaturesLost => "FeaturesLost",
            TerminationReason::ReacquisitionFailed => "ReacquisitionFailed",
            TerminationReason::OverlappingTransitions => "OverlappingTransitions",
            TerminationReason::BoxOutOfBounds => "BoxOutOfBounds",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrackerMode {
    Tracking,
    /// Constant-velocity propagation through a diurnal transition.
    Coasting {
        /// Pixels per second.
        velocity: (f64, f64),
        transition: DiurnalState,
    },
    Terminated(TerminationReason),
}

impl TrackerMode {
    pub fn name(&self) -> &'static str {
        match self {
            TrackerMode::Tracking => "Tracking",
            TrackerMode::Coasting { .. } => "Coasting",
            TrackerMode::Terminated(_) => "Terminated",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Initialized,
    Advanced,
    FrameSkippedDqf,
    FrameSkippedGap,
    TransitionEntered,
    CoastStep,
    TransitionExited,
    Reacquired,
    FeatureDropped,
    Terminated(TerminationReason),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Initialized => "Initialized",
            EventKind::Advanced => "Advanced",
            EventKind::FrameSkippedDqf => "FrameSkippedDQF",
            EventKind::FrameSkippedGap => "FrameSkippedGap",
            EventKind::TransitionEntered => "TransitionEntered",
            EventKind::CoastStep => "CoastStep",
            EventKind::TransitionExited => "TransitionExited",
            EventKind::Reacquired => "Reacquired",
            EventKind::FeatureDropped => "FeatureDropped",
            EventKind::Terminated(_) => "Terminated",
        }
    }
}

/// One entry of the append-only event log.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackerEvent {
    pub timestamp: Timestamp,
    pub kind: EventKind,
    /// Numeric diagnostics in insertion order.
    pub details: Vec<(&'static str, f64)>,
    pub warning: Option<&'static str>,
}

impl TrackerEvent {
    fn new(timestamp: Timestamp, kind: EventKind) -> Self {
        TrackerEvent {
            timestamp,
            kind,
            details: Vec::new(),
            warning: None,
        }
    }

    fn with(mut self, key: &'static str, value: f64) -> Self {
        self.details.push((key, value));
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryEntry {
    pub timestamp: Timestamp,
    pub center_x: f64,
    pub center_y: f64,
}

/// Arithmetic mean of the displacements, `(0, 0)` for an empty slice.
pub fn mean_displacement(vectors: &[FlowVector]) -> (f64, f64) {
    if vectors.is_empty() {
        return (0.0, 0.0);
    }
    let n = vectors.len() as f64;
    let sx: f64 = vectors.iter().map(|v| v.dx).sum();
    let sy: f64 = vectors.iter().map(|v| v.dy).sum();
    (sx / n, sy / n)
}

/// Mean box velocity (pixels per second) across the given history entries:
/// net displacement over elapsed time. Needs at least two entries.
pub fn coast_velocity(history: &[HistoryEntry]) -> Option<(f64, f64)> {
    let (first, last) = (history.first()?, history.last()?);
    let dt = last.timestamp.seconds_since(first.timestamp);
    if history.len() < 2 || dt <= 0.0 {
        return None;
    }
    Some(((last.center_x - first.center_x) / dt, (last.center_y - first.center_y) / dt))
}

/// Single tracking session over one frame sequence.
#[derive(Clone, Debug)]
pub struct Tracker {
    config: TrackerConfig,
    bx: TrackingBox,
    features: Vec<FeaturePoint>,
    mode: TrackerMode,
    history: VecDeque<HistoryEntry>,
    prev_extremes: Option<PerimeterExtremes>,
    diurnal: DiurnalState,
    last_processed: Timestamp,
    last_seen: Timestamp,
    reference: Frame,
    reference_pyramid: Option<ImagePyramid>,
}

impl Tracker {
    /// Detects features inside `bx` on the first frame.
    pub fn init(frame: &Frame, bx: TrackingBox, config: TrackerConfig) -> Result<(Tracker, TrackerEvent), TrackerError> {
        config.validate()?;
        let rect = bx
            .pixel_rect(frame.width(), frame.height())
            .ok_or(TrackerError::BoxOutOfBounds)?;
        let features = detect_features(frame, &config.detector, rect).map_err(TrackerError::Detect)?;
        if features.len() < config.min_init_features {
            return Err(TrackerError::InsufficientFeatures(features.len()));
        }
        let t = frame.timestamp();
        let angles = perimeter_angles(&bx, frame.geo(), t).map_err(TrackerError::Solar)?;
        let diurnal = transition_state(&angles, &config.transition, None);
        let pyramid = build_pyramid(&to_unit_scale(frame.values()), config.flow.pyramid_levels).map_err(TrackerError::Flow)?;
        let mut history = VecDeque::with_capacity(config.history_len);
        history.push_back(HistoryEntry {
            timestamp: t,
            center_x: bx.center_x,
            center_y: bx.center_y,
        });
        let event = TrackerEvent::new(t, EventKind::Initialized)
            .with("center_x", bx.center_x)
            .with("center_y", bx.center_y)
            .with("n_features", features.len() as f64);
        Ok((
            Tracker {
                config,
                bx,
                features,
                mode: TrackerMode::Tracking,
                history,
                prev_extremes: Some(angles.extremes()),
                diurnal,
                last_processed: t,
                last_seen: t,
                reference: frame.clone(),
                reference_pyramid: Some(pyramid),
            },
            event,
        ))
    }

    pub fn tracking_box(&self) -> &TrackingBox {
        &self.bx
    }

    pub fn features(&self) -> &[FeaturePoint] {
        &self.features
    }

    pub fn mode(&self) -> TrackerMode {
        self.mode
    }

    pub fn diurnal_state(&self) -> DiurnalState {
        self.diurnal
    }

    pub fn history(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.history.iter()
    }

    pub fn last_processed(&self) -> Timestamp {
        self.last_processed
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn is_terminated(&self) -> bool {
        matches!(self.mode, TrackerMode::Terminated(_))
    }

    /// Processes the next frame. Returns the events it produced, in order;
    /// a terminated tracker ignores further frames.
    pub fn advance(&mut self, frame: &Frame) -> Result<Vec<TrackerEvent>, TrackerError> {
        let t = frame.timestamp();
        if t <= self.last_seen {
            return Err(TrackerError::OutOfOrder {
                previous: self.last_seen,
                next: t,
            });
        }
        self.last_seen = t;
        let mut events = Vec::new();
        if self.is_terminated() {
            return Ok(events);
        }

        let corrupt = frame.corrupt_fraction();
        if corrupt > self.config.dqf_max {
            events.push(TrackerEvent::new(t, EventKind::FrameSkippedDqf).with("corrupt_fraction", corrupt));
            return Ok(events);
        }

        let dt = t.seconds_since(self.last_processed);
        if dt > self.config.gap_max_seconds {
            events.push(TrackerEvent::new(t, EventKind::FrameSkippedGap).with("gap_seconds", dt));
            self.terminate(t, TerminationReason::GapTooLarge, &mut events);
            return Ok(events);
        }

        let angles = perimeter_angles(&self.bx, frame.geo(), t).map_err(TrackerError::Solar)?;
        let diurnal = transition_state(&angles, &self.config.transition, self.prev_extremes.as_ref());
        self.prev_extremes = Some(angles.extremes());
        self.diurnal = diurnal;

        match self.mode {
            TrackerMode::Tracking if diurnal.is_transition() => {
                self.enter_transition(t, diurnal, &mut events);
                self.coast(t, dt, &mut events);
            }
            TrackerMode::Tracking => self.track(frame, &mut events)?,
            TrackerMode::Coasting { transition, .. } => {
                self.coast(t, dt, &mut events);
                if diurnal.is_transition() && diurnal != transition {
                    self.terminate(t, TerminationReason::OverlappingTransitions, &mut events);
                } else if !diurnal.is_transition() {
                    events.push(
                        TrackerEvent::new(t, EventKind::TransitionExited)
                            .with("center_x", self.bx.center_x)
                            .with("center_y", self.bx.center_y),
                    );
                    self.reacquire(frame, &mut events)?;
                }
            }
            TrackerMode::Terminated(_) => unreachable!("checked above"),
        }

        if !self.is_terminated() && self.bx.pixel_rect(frame.width(), frame.height()).is_none() {
            self.terminate(t, TerminationReason::BoxOutOfBounds, &mut events);
        }
        if self.is_terminated() {
            return Ok(events);
        }

        self.last_processed = t;
        if self.history.len() == self.config.history_len {
            self.history.pop_front();
        }
        self.history.push_back(HistoryEntry {
            timestamp: t,
            center_x: self.bx.center_x,
            center_y: self.bx.center_y,
        });
        if self.mode == TrackerMode::Tracking {
            if self.reference_pyramid.is_none() {
                self.reference_pyramid = Some(self.pyramid_of(frame)?);
            }
            self.reference = frame.clone();
        } else {
            self.reference_pyramid = None;
        }
        Ok(events)
    }

    fn pyramid_of(&self, frame: &Frame) -> Result<ImagePyramid, TrackerError> {
        build_pyramid(&to_unit_scale(frame.values()), self.config.flow.pyramid_levels).map_err(TrackerError::Flow)
    }

    fn terminate(&mut self, t: Timestamp, reason: TerminationReason, events: &mut Vec<TrackerEvent>) {
        self.mode = TrackerMode::Terminated(reason);
        events.push(
            TrackerEvent::new(t, EventKind::Terminated(reason))
                .with("center_x", self.bx.center_x)
                .with("center_y", self.bx.center_y),
        );
    }

    fn enter_transition(&mut self, t: Timestamp, transition: DiurnalState, events: &mut Vec<TrackerEvent>) {
        let entries: Vec<HistoryEntry> = self.history.iter().copied().collect();
        let velocity = coast_velocity(&entries).unwrap_or((0.0, 0.0));
        let mut event = TrackerEvent::new(t, EventKind::TransitionEntered)
            .with("sunrise", (transition == DiurnalState::SunriseTransition) as u8 as f64)
            .with("velocity_x", velocity.0)
            .with("velocity_y", velocity.1)
            .with("history_entries", entries.len() as f64);
        if entries.len() < self.config.history_len {
            event.warning = Some("short history for coast velocity");
        }
        events.push(event);
        self.mode = TrackerMode::Coasting { velocity, transition };
    }

    fn coast(&mut self, t: Timestamp, dt: f64, events: &mut Vec<TrackerEvent>) {
        if let TrackerMode::Coasting { velocity, .. } = self.mode {
            self.bx = self.bx.translated(velocity.0 * dt, velocity.1 * dt);
            events.push(
                TrackerEvent::new(t, EventKind::CoastStep)
                    .with("dx", velocity.0 * dt)
                    .with("dy", velocity.1 * dt)
                    .with("center_x", self.bx.center_x)
                    .with("center_y", self.bx.center_y),
            );
        }
    }

    fn reacquire(&mut self, frame: &Frame, events: &mut Vec<TrackerEvent>) -> Result<(), TrackerError> {
        let t = frame.timestamp();
        let Some(rect) = self.bx.pixel_rect(frame.width(), frame.height()) else {
            self.terminate(t, TerminationReason::BoxOutOfBounds, events);
            return Ok(());
        };
        let features = detect_features(frame, &self.config.detector, rect).map_err(TrackerError::Detect)?;
        if features.len() < self.config.min_init_features {
            events.push(TrackerEvent::new(t, EventKind::FeatureDropped).with("n_features", features.len() as f64));
            self.terminate(t, TerminationReason::ReacquisitionFailed, events);
            return Ok(());
        }
        events.push(TrackerEvent::new(t, EventKind::Reacquired).with("n_features", features.len() as f64));
        self.features = features;
        self.mode = TrackerMode::Tracking;
        self.reference_pyramid = Some(self.pyramid_of(frame)?);
        Ok(())
    }

    fn track(&mut self, frame: &Frame, events: &mut Vec<TrackerEvent>) -> Result<(), TrackerError> {
        let t = frame.timestamp();
        let next = self.pyramid_of(frame)?;
        let reference = match self.reference_pyramid.take() {
            Some(p) => p,
            None => self.pyramid_of(&self.reference)?,
        };

        let (mut survivors, lost) = track_all(&reference, &next, &self.features, &self.config.flow);
        if lost > 0 {
            events.push(
                TrackerEvent::new(t, EventKind::FeatureDropped)
                    .with("lost", lost as f64)
                    .with("remaining", survivors.len() as f64),
            );
        }
        if survivors.len() < self.config.min_surviving_features {
            // One re-detection on the reference frame, tracked into this one.
            let redetected = match self.bx.pixel_rect(self.reference.width(), self.reference.height()) {
                Some(rect) => detect_features(&self.reference, &self.config.detector, rect).map_err(TrackerError::Detect)?,
                None => Vec::new(),
            };
            let (retry, retry_lost) = track_all(&reference, &next, &redetected, &self.config.flow);
            events.push(
                TrackerEvent::new(t, EventKind::Reacquired)
                    .with("detected", redetected.len() as f64)
                    .with("tracked", retry.len() as f64)
                    .with("lost", retry_lost as f64),
            );
            if retry.len() < self.config.min_surviving_features {
                self.reference_pyramid = Some(next);
                self.terminate(t, TerminationReason::FeaturesLost, events);
                return Ok(());
            }
            survivors = retry;
        }

        let vectors: Vec<FlowVector> = survivors.iter().map(|(_, v)| *v).collect();
        let (mx, my) = mean_displacement(&vectors);
        self.bx = self.bx.translated(mx, my);
        self.features = survivors
            .iter()
            .map(|(p, v)| FeaturePoint {
                x: p.x + v.dx,
                y: p.y + v.dy,
                quality: p.quality,
            })
            .collect();
        let mean_residual = vectors.iter().map(|v| v.residual).sum::<f64>() / vectors.len() as f64;
        events.push(
            TrackerEvent::new(t, EventKind::Advanced)
                .with("dx", mx)
                .with("dy", my)
                .with("center_x", self.bx.center_x)
                .with("center_y", self.bx.center_y)
                .with("n_features", vectors.len() as f64)
                .with("mean_residual", mean_residual),
        );
        self.reference_pyramid = Some(next);
        Ok(())
    }
}

/// Tracks each feature in order; returns survivors with their flow and the
/// number lost.
fn track_all(
    reference: &ImagePyramid,
    next: &ImagePyramid,
    features: &[FeaturePoint],
    params: &FlowParams,
) -> (Vec<(FeaturePoint, FlowVector)>, usize) {
    let mut survivors = Vec::with_capacity(features.len());
    let mut lost = 0;
    for p in features {
        match track_feature(reference, next, (p.x, p.y), params) {
            Ok(v) => survivors.push((*p, v)),
            Err(_) => lost += 1,
        }
    }
    (survivors, lost)
}

/// Ridge visibility inside the box: `(mean of the top decile - median) /
/// robust std`, with the robust std taken as `IQR / 1.349`. Only good pixels
/// count. Falls back to the plain standard deviation when the IQR is zero;
/// a constant box scores 0.
pub fn score_visibility(frame: &Frame, bx: &TrackingBox) -> Result<f64, TrackerError> {
    let rect = bx
        .pixel_rect(frame.width(), frame.height())
        .ok_or(TrackerError::BoxOutOfBounds)?;
    let mut v: Vec<f64> = Vec::with_capacity(rect.width() * rect.height());
    for y in rect.y0..=rect.y1 {
        for x in rect.x0..=rect.x1 {
            if frame.is_good(x, y) {
                v.push(frame.values()[(x, y)]);
            }
        }
    }
    if v.is_empty() {
        return Ok(0.0);
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let top = n.div_ceil(10);
    let top_mean = v[n - top..].iter().sum::<f64>() / top as f64;
    let median = quantile(&v, 0.5);
    let mut scale = (quantile(&v, 0.75) - quantile(&v, 0.25)) / 1.349;
    if scale <= 0.0 {
        let mean = v.iter().sum::<f64>() / n as f64;
        scale = sqrt(v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64);
    }
    if scale <= 0.0 {
        return Ok(0.0);
    }
    Ok((top_mean - median) / scale)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Persistence rule applied on top of the tracker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PersistenceConfig {
    pub visibility_floor: f64,
    /// Consecutive tracked frames below the floor that end persistence.
    pub visibility_dwell: usize,
}

impl Default for PersistenceConfig {
    fn default() -> Self {
        PersistenceConfig {
            visibility_floor: 1.0,
            visibility_dwell: 12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndReason {
    EndOfData,
    VisibilityLost,
    Terminated(TerminationReason),
}

impl EndReason {
    pub fn name(&self) -> &'static str {
        match self {
            EndReason::EndOfData => "EndOfData",
            EndReason::VisibilityLost => "VisibilityLost",
            EndReason::Terminated(r) => r.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PersistenceReport {
    pub start: Timestamp,
    pub end: Timestamp,
    pub end_reason: EndReason,
    pub visibility_series: Vec<(Timestamp, f64)>,
}

impl PersistenceReport {
    pub fn duration_hours(&self) -> f64 {
        self.end.seconds_since(self.start) / 3600.0
    }
}

/// One row of the box path: the box after processing a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxPathRow {
    pub timestamp: Timestamp,
    pub center_x: f64,
    pub center_y: f64,
    pub lat: f64,
    pub lon: f64,
    pub mode: &'static str,
    pub n_features: usize,
    pub visibility: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceOutcome {
    pub report: PersistenceReport,
    pub events: Vec<TrackerEvent>,
    pub path: Vec<BoxPathRow>,
}

/// Drives a [`Tracker`] frame by frame and applies the persistence rule.
///
/// Persistence ends at the earliest of: tracker termination (end = last
/// successfully processed frame), the first frame of a run of
/// `visibility_dwell` consecutive tracked frames scoring below the floor, or
/// the end of the data. Coasting frames neither extend nor break a run.
#[derive(Clone, Debug)]
pub struct SequenceRunner {
    tracker: Tracker,
    persistence: PersistenceConfig,
    start: Timestamp,
    events: Vec<TrackerEvent>,
    path: Vec<BoxPathRow>,
    visibility: Vec<(Timestamp, f64)>,
    below_run: Option<(Timestamp, usize)>,
    ended: Option<(Timestamp, EndReason)>,
}

impl SequenceRunner {
    pub fn start(
        first: &Frame,
        bx: TrackingBox,
        config: TrackerConfig,
        persistence: PersistenceConfig,
    ) -> Result<Self, TrackerError> {
        if persistence.visibility_dwell < 1 {
            return Err(TrackerError::InvalidConfig("visibility_dwell must be >= 1"));
        }
        let (tracker, event) = Tracker::init(first, bx, config)?;
        let mut runner = SequenceRunner {
            tracker,
            persistence,
            start: first.timestamp(),
            events: alloc::vec![event],
            path: Vec::new(),
            visibility: Vec::new(),
            below_run: None,
            ended: None,
        };
        runner.record(first)?;
        Ok(runner)
    }

    pub fn is_finished(&self) -> bool {
        self.ended.is_some()
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    pub fn events(&self) -> &[TrackerEvent] {
        &self.events
    }

    pub fn push(&mut self, frame: &Frame) -> Result<(), TrackerError> {
        if self.is_finished() {
            return Ok(());
        }
        let before = self.tracker.last_processed();
        let events = self.tracker.advance(frame)?;
        self.events.extend(events);
        if let TrackerMode::Terminated(reason) = self.tracker.mode() {
            self.ended = Some((self.tracker.last_processed(), EndReason::Terminated(reason)));
            return Ok(());
        }
        if self.tracker.last_processed() != before {
            self.record(frame)?;
        }
        Ok(())
    }

    fn record(&mut self, frame: &Frame) -> Result<(), TrackerError> {
        let t = frame.timestamp();
        let bx = *self.tracker.tracking_box();
        let score = score_visibility(frame, &bx)?;
        let (lat, lon) = frame.geo().pixel_to_geo(bx.center_x, bx.center_y);
        let mode = self.tracker.mode();
        self.visibility.push((t, score));
        self.path.push(BoxPathRow {
            timestamp: t,
            center_x: bx.center_x,
            center_y: bx.center_y,
            lat,
            lon,
            mode: mode.name(),
            n_features: self.tracker.features().len(),
            visibility: score,
        });
        if mode == TrackerMode::Tracking {
            if score < self.persistence.visibility_floor {
                let (first, count) = self.below_run.map_or((t, 0), |(f, c)| (f, c));
                self.below_run = Some((first, count + 1));
                if count + 1 >= self.persistence.visibility_dwell {
                    self.ended = Some((first, EndReason::VisibilityLost));
                }
            } else {
                self.below_run = None;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> SequenceOutcome {
        let (end, end_reason) = self
            .ended
            .unwrap_or((self.tracker.last_processed(), EndReason::EndOfData));
        SequenceOutcome {
            report: PersistenceReport {
                start: self.start,
                end,
                end_reason,
                visibility_series: self.visibility,
            },
            events: self.events,
            path: self.path,
        }
    }
}

/// Runs a whole sequence held in memory. The first frame initializes.
pub fn run_sequence<'a>(
    frames: impl IntoIterator<Item = &'a Frame>,
    bx: TrackingBox,
    config: TrackerConfig,
    persistence: PersistenceConfig,
) -> Result<SequenceOutcome, TrackerError> {
    let mut frames = frames.into_iter();
    let first = frames.next().ok_or(TrackerError::InvalidConfig("empty sequence"))?;
    let mut runner = SequenceRunner::start(first, bx, config, persistence)?;
    for f in frames {
        if runner.is_finished() {
            break;
        }
        runner.push(f)?;
    }
    Ok(runner.finish())
}
