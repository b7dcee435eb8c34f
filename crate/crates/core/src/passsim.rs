//! Constellation pass simulation over a rectangular region of interest.
//!
//! Flat-strip geometry: the ground track runs along +y from the leading
//! edge (y = 0) to the trailing edge (y = length), where the groundstation
//! sits. Each pass images consecutive frames of one swath; alerts from a
//! pass are downlinked when the satellite reaches the groundstation.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Finding, SCHEMA_VERSION};

pub const EARTH_MEAN_RADIUS_KM: f64 = 6371.0;
pub const EARTH_EQUATORIAL_RADIUS_KM: f64 = 6378.137;
pub const EARTH_MU_KM3_S2: f64 = 398_600.441_8;
pub const MINUTES_PER_MONTH: f64 = 30.0 * 24.0 * 60.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("constellation needs at least one satellite")]
    NoSatellites,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("fire {id} at ({x_km}, {y_km}) km lies outside the region of interest")]
    FireOutsideRoi { id: usize, x_km: f64, y_km: f64 },
    #[error("scenario {path}: {message}")]
    Scenario { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstellationConfig {
    pub n_sats: u32,
    pub orbit_period_min: f64,
    /// (along-track, across-track) footprint.
    pub swath_km: (f64, f64),
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        ConstellationConfig {
            n_sats: 8,
            orbit_period_min: 94.0,
            swath_km: (32.5, 19.6),
        }
    }
}

impl ConstellationConfig {
    pub fn ground_speed_km_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * EARTH_MEAN_RADIUS_KM / (self.orbit_period_min * 60.0)
    }

    pub fn ground_speed_km_min(&self) -> f64 {
        self.ground_speed_km_s() * 60.0
    }

    /// Time to sweep one along-track footprint.
    pub fn frame_interval_min(&self) -> f64 {
        self.swath_km.0 / self.ground_speed_km_min()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_sats == 0 {
            return Err(SimError::NoSatellites);
        }
        if !(self.orbit_period_min > 0.0 && self.orbit_period_min.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "orbit period {} min",
                self.orbit_period_min
            )));
        }
        if !(self.swath_km.0 > 0.0 && self.swath_km.1 > 0.0) {
            return Err(SimError::InvalidConfig(format!("swath {:?} km", self.swath_km)));
        }
        Ok(())
    }
}

/// Interval between successive evenly phased satellites over one location.
pub fn revisit_time(c: &ConstellationConfig) -> Result<f64, SimError> {
    if c.n_sats == 0 {
        return Err(SimError::NoSatellites);
    }
    Ok(c.orbit_period_min / c.n_sats as f64)
}

/// A fire starting just after a pass waits a full revisit, then processing
/// and downlink.
pub fn worst_case_response(revisit_min: f64, processing_and_downlink_min: f64) -> f64 {
    revisit_min + processing_and_downlink_min
}

/// Circular-orbit period at the given altitude.
pub fn kepler_period_min(altitude_km: f64) -> f64 {
    let a = EARTH_EQUATORIAL_RADIUS_KM + altitude_km;
    2.0 * std::f64::consts::PI * (a.powi(3) / EARTH_MU_KM3_S2).sqrt() / 60.0
}

/// Warns when the configured period strays more than 5% from the Kepler
/// period for `altitude_km`.
pub fn check_period(c: &ConstellationConfig, altitude_km: f64) -> Option<Finding> {
    let k = kepler_period_min(altitude_km);
    let dev = (c.orbit_period_min - k).abs() / k;
    (dev > 0.05).then(|| {
        Finding::warning(
            "orbit-period",
            "constellation",
            format!(
                "configured period {} min deviates {:.1}% from the {:.1} min Kepler period at {altitude_km} km",
                c.orbit_period_min,
                dev * 100.0,
                k
            ),
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionOfInterest {
    /// Across-track extent.
    pub width_km: f64,
    /// Along-track extent; the groundstation sits at y = length.
    pub length_km: f64,
    /// Across-track position of the ground track; defaults to the centre.
    #[serde(default)]
    pub track_x_km: Option<f64>,
    /// Across-track position of the groundstation; defaults to the centre.
    #[serde(default)]
    pub groundstation_x_km: Option<f64>,
}

impl RegionOfInterest {
    pub fn new(width_km: f64, length_km: f64) -> Self {
        RegionOfInterest {
            width_km,
            length_km,
            track_x_km: None,
            groundstation_x_km: None,
        }
    }

    pub fn track_x(&self) -> f64 {
        self.track_x_km.unwrap_or(self.width_km / 2.0)
    }

    pub fn groundstation(&self) -> (f64, f64) {
        (self.groundstation_x_km.unwrap_or(self.width_km / 2.0), self.length_km)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width_km).contains(&x) && (0.0..=self.length_km).contains(&y)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.width_km >= 0.0 && self.length_km >= 0.0) {
            return Err(SimError::InvalidConfig("region extent must be non-negative".into()));
        }
        let (gx, _) = self.groundstation();
        if !(0.0..=self.width_km).contains(&gx) {
            return Err(SimError::InvalidConfig(format!(
                "groundstation x {gx} km outside the region"
            )));
        }
        Ok(())
    }

    /// Share of the region never under the swath.
    pub fn uncovered_fraction(&self, c: &ConstellationConfig) -> f64 {
        if self.width_km <= 0.0 {
            return 0.0;
        }
        let half = c.swath_km.1 / 2.0;
        let tx = self.track_x();
        let covered = ((tx + half).min(self.width_km) - (tx - half).max(0.0)).max(0.0);
        1.0 - covered / self.width_km
    }

    fn in_swath(&self, c: &ConstellationConfig, x: f64) -> bool {
        (x - self.track_x()).abs() <= c.swath_km.1 / 2.0
    }
}

pub fn frames_per_pass(c: &ConstellationConfig, roi: &RegionOfInterest) -> u64 {
    if roi.length_km <= 0.0 || roi.width_km <= 0.0 {
        return 0;
    }
    (roi.length_km / c.swath_km.0 - 1e-9).ceil() as u64
}

pub fn passes_per_month(c: &ConstellationConfig) -> Result<f64, SimError> {
    Ok(MINUTES_PER_MONTH / revisit_time(c)?)
}

/// passes/month × frames/pass over the region.
pub fn frames_per_month(c: &ConstellationConfig, roi: &RegionOfInterest) -> Result<f64, SimError> {
    Ok(passes_per_month(c)? * frames_per_pass(c, roi) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FireEvent {
    pub x_km: f64,
    pub y_km: f64,
    pub start_time_min: f64,
    #[serde(default = "yes")]
    pub observable: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutcomeModel {
    /// Chance an observable fire in a frame is detected.
    pub detection_probability: f64,
    /// Chance a frame raises a spurious alert.
    pub fp_probability_per_frame: f64,
    /// Onboard processing plus downlink latency added to every alert.
    pub processing_latency_min: f64,
}

impl Default for OutcomeModel {
    fn default() -> Self {
        OutcomeModel {
            detection_probability: 1.0,
            fp_probability_per_frame: 0.0,
            processing_latency_min: 0.0,
        }
    }
}

impl OutcomeModel {
    fn validate(&self) -> Result<(), SimError> {
        for (name, p) in [
            ("detection_probability", self.detection_probability),
            ("fp_probability_per_frame", self.fp_probability_per_frame),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidConfig(format!("{name} = {p} is not a probability")));
            }
        }
        if self.processing_latency_min.is_nan() || self.processing_latency_min < 0.0 {
            return Err(SimError::InvalidConfig(
                "processing latency must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertKind {
    Fire,
    FalsePositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub kind: AlertKind,
    pub fire_id: Option<usize>,
    /// Centre of the frame that raised the alert.
    pub position_km: (f64, f64),
    pub pass: u64,
    pub satellite: u32,
    pub frame: u64,
    pub capture_time_min: f64,
    pub downlink_time_min: f64,
    pub response_time_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum PassEvent {
    PassStart {
        t: f64,
        pass: u64,
        satellite: u32,
    },
    Frame {
        t: f64,
        pass: u64,
        frame: u64,
        fires: Vec<usize>,
    },
    Detection {
        t: f64,
        pass: u64,
        frame: u64,
        fire_id: usize,
    },
    Missed {
        t: f64,
        pass: u64,
        frame: u64,
        fire_id: usize,
    },
    FalsePositive {
        t: f64,
        pass: u64,
        frame: u64,
    },
    Downlink {
        t: f64,
        pass: u64,
        alerts: usize,
    },
    Uncovered {
        fire_id: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub constellation: ConstellationConfig,
    pub roi: RegionOfInterest,
    #[serde(default)]
    pub fires: Vec<FireEvent>,
    #[serde(default)]
    pub outcome: OutcomeModel,
    #[serde(default)]
    pub seed: u64,
    pub duration_min: f64,
    /// Time the first satellite crosses the leading edge.
    #[serde(default)]
    pub first_pass_min: f64,
    #[serde(default)]
    pub altitude_km: Option<f64>,
}

fn schema() -> u32 {
    SCHEMA_VERSION
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, SimError> {
        let err = |message: String| SimError::Scenario {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub alerts: Vec<Alert>,
    pub log: Vec<PassEvent>,
    pub passes: u64,
    pub frames: u64,
    pub uncovered_fires: Vec<usize>,
    pub uncovered_roi_fraction: f64,
    pub findings: Vec<Finding>,
}

/// Sweeps every pass starting before `duration_min`. Random draws happen
/// in a fixed order: per pass, per frame, one false-positive draw, then one
/// detection draw for each pending fire in the frame by ascending id.
pub fn simulate_pass(
    c: &ConstellationConfig,
    roi: &RegionOfInterest,
    fires: &[FireEvent],
    model: &OutcomeModel,
    seed: u64,
    duration_min: f64,
    first_pass_min: f64,
) -> Result<SimulationResult, SimError> {
    c.validate()?;
    roi.validate()?;
    model.validate()?;
    for (id, f) in fires.iter().enumerate() {
        if !roi.contains(f.x_km, f.y_km) {
            return Err(SimError::FireOutsideRoi {
                id,
                x_km: f.x_km,
                y_km: f.y_km,
            });
        }
    }
    let revisit = revisit_time(c)?;
    let v = c.ground_speed_km_min();
    let along = c.swath_km.0;
    let n_frames = frames_per_pass(c, roi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut log = Vec::new();
    let mut alerts = Vec::new();
    let mut uncovered = Vec::new();
    for (id, f) in fires.iter().enumerate() {
        if !roi.in_swath(c, f.x_km) {
            uncovered.push(id);
            log.push(PassEvent::Uncovered { fire_id: id });
        }
    }
    let frame_of = |y: f64| ((y / along) as u64).min(n_frames.saturating_sub(1));
    let mut pending: Vec<bool> = fires
        .iter()
        .enumerate()
        .map(|(id, f)| f.observable && !uncovered.contains(&id))
        .collect();

    let mut pass = 0u64;
    loop {
        let start = first_pass_min + pass as f64 * revisit;
        if start >= duration_min {
            break;
        }
        let satellite = (pass % c.n_sats as u64) as u32;
        log.push(PassEvent::PassStart {
            t: start,
            pass,
            satellite,
        });
        let downlink = start + roi.length_km / v + model.processing_latency_min;
        let first_alert = alerts.len();
        for frame in 0..n_frames {
            let t = start + (frame as f64 + 0.5) * along / v;
            let in_frame: Vec<usize> = fires
                .iter()
                .enumerate()
                .filter(|&(id, f)| pending[id] && f.start_time_min <= t && frame_of(f.y_km) == frame)
                .map(|(id, _)| id)
                .collect();
            log.push(PassEvent::Frame {
                t,
                pass,
                frame,
                fires: in_frame.clone(),
            });
            let centre = (roi.track_x(), (frame as f64 + 0.5) * along);
            let fp_draw: f64 = rng.gen();
            if fp_draw < model.fp_probability_per_frame {
                log.push(PassEvent::FalsePositive { t, pass, frame });
                alerts.push(Alert {
                    kind: AlertKind::FalsePositive,
                    fire_id: None,
                    position_km: centre,
                    pass,
                    satellite,
                    frame,
                    capture_time_min: t,
                    downlink_time_min: downlink,
                    response_time_min: None,
                });
            }
            for id in in_frame {
                let draw: f64 = rng.gen();
                if draw < model.detection_probability {
                    pending[id] = false;
                    log.push(PassEvent::Detection {
                        t,
                        pass,
                        frame,
                        fire_id: id,
                    });
                    alerts.push(Alert {
                        kind: AlertKind::Fire,
                        fire_id: Some(id),
                        position_km: centre,
                        pass,
                        satellite,
                        frame,
                        capture_time_min: t,
                        downlink_time_min: downlink,
                        response_time_min: Some(downlink - fires[id].start_time_min),
                    });
                } else {
                    log.push(PassEvent::Missed {
                        t,
                        pass,
                        frame,
                        fire_id: id,
                    });
                }
            }
        }
        log.push(PassEvent::Downlink {
            t: downlink,
            pass,
            alerts: alerts.len() - first_alert,
        });
        pass += 1;
    }

    Ok(SimulationResult {
        alerts,
        log,
        passes: pass,
        frames: pass * n_frames,
        uncovered_fires: uncovered,
        uncovered_roi_fraction: roi.uncovered_fraction(c),
        findings: Vec::new(),
    })
}

pub fn run_scenario(s: &Scenario) -> Result<SimulationResult, SimError> {
    let mut r = simulate_pass(
        &s.constellation,
        &s.roi,
        &s.fires,
        &s.outcome,
        s.seed,
        s.duration_min,
        s.first_pass_min,
    )?;
    r.findings
        .extend(s.altitude_km.and_then(|a| check_period(&s.constellation, a)));
    Ok(r)
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub fires: usize,
    pub detected: usize,
    pub undetected: usize,
    pub uncovered: usize,
    pub false_alerts: usize,
    pub passes: u64,
    pub frames: u64,
    pub response_p50_min: Option<f64>,
    pub response_p90_min: Option<f64>,
    pub response_p95_min: Option<f64>,
    pub response_max_min: Option<f64>,
    pub response_mean_min: Option<f64>,
    pub uncovered_roi_fraction: f64,
}

impl SimulationResult {
    pub fn summary(&self, fires: usize) -> SimulationSummary {
        let mut rt: Vec<f64> = self.alerts.iter().filter_map(|a| a.response_time_min).collect();
        rt.sort_by(f64::total_cmp);
        let detected = rt.len();
        SimulationSummary {
            fires,
            detected,
            undetected: fires - detected,
            uncovered: self.uncovered_fires.len(),
            false_alerts: self
                .alerts
                .iter()
                .filter(|a| a.kind == AlertKind::FalsePositive)
                .count(),
            passes: self.passes,
            frames: self.frames,
            response_p50_min: percentile(&rt, 50.0),
            response_p90_min: percentile(&rt, 90.0),
            response_p95_min: percentile(&rt, 95.0),
            response_max_min: rt.last().copied(),
            response_mean_min: (!rt.is_empty()).then(|| rt.iter().sum::<f64>() / rt.len() as f64),
            uncovered_roi_fraction: self.uncovered_roi_fraction,
        }
    }

    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.log {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn alerts_json(&self) -> String {
        serde_json::to_string_pretty(&self.alerts).expect("alerts serialize") + "\n"
    }
}

impl SimulationSummary {
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        let mut out = String::from(
            "schema_version,fires,detected,undetected,uncovered,false_alerts,passes,frames,\
             response_p50_min,response_p90_min,response_p95_min,response_max_min,response_mean_min,uncovered_roi_fraction\n",
        );
        let _ = writeln!(
            out,
            "{SCHEMA_VERSION},{},{},{},{},{},{},{},{},{},{},{},{},{:.6}",
            self.fires,
            self.detected,
            self.undetected,
            self.uncovered,
            self.false_alerts,
            self.passes,
            self.frames,
            opt(self.response_p50_min),
            opt(self.response_p90_min),
            opt(self.response_p95_min),
            opt(self.response_max_min),
            opt(self.response_mean_min),
            self.uncovered_roi_fraction
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn revisit_examples() {
        let c = ConstellationConfig::default();
        assert_eq!(revisit_time(&c).unwrap(), 11.75);
        let one = ConstellationConfig { n_sats: 1, ..c };
        assert_eq!(revisit_time(&one).unwrap(), 94.0);
        let polar = ConstellationConfig {
            n_sats: 1,
            orbit_period_min: 2880.0,
            ..c
        };
        assert_eq!(revisit_time(&polar).unwrap(), 2880.0);
        assert!(matches!(
            revisit_time(&ConstellationConfig { n_sats: 0, ..c }),
            Err(SimError::NoSatellites)
        ));
    }

    #[test]
    fn worst_case_examples() {
        assert_eq!(worst_case_response(2880.0, 180.0), 3060.0);
        assert_eq!(worst_case_response(2880.0, 180.0) / 60.0, 51.0);
        assert_eq!(worst_case_response(0.0, 10.0), 10.0);
        assert_eq!(worst_case_response(11.75, 10.0), 21.75);
    }

    #[test]
    fn kepler_cross_check() {
        let k = kepler_period_min(450.0);
        assert!((k - 93.6).abs() < 0.1, "{k}");
        assert!(check_period(&ConstellationConfig::default(), 450.0).is_none());
        let slow = ConstellationConfig {
            orbit_period_min: 100.0,
            ..ConstellationConfig::default()
        };
        assert!(check_period(&slow, 450.0).is_some());
    }

    #[test]
    fn frames_per_month_examples() {
        let c = ConstellationConfig::default();
        assert_eq!(frames_per_pass(&c, &RegionOfInterest::new(100.0, 325.0)), 10);
        assert!(close(passes_per_month(&c).unwrap(), 43200.0 / 11.75));
        assert!((passes_per_month(&c).unwrap() - 3675.0).abs() < 2.0);
        assert_eq!(frames_per_month(&c, &RegionOfInterest::new(0.0, 0.0)).unwrap(), 0.0);
        assert!(close(
            frames_per_month(&c, &RegionOfInterest::new(19.6, 325.0)).unwrap(),
            10.0 * 43200.0 / 11.75
        ));
    }

    #[test]
    fn single_fire_at_centre_matches_closed_form() {
        let c = ConstellationConfig::default();
        // nine frames; the centre is the middle of frame 4
        let roi = RegionOfInterest::new(19.6, 292.5);
        let fire = FireEvent {
            x_km: 9.8,
            y_km: 146.25,
            start_time_min: 3.0,
            observable: true,
        };
        let r = simulate_pass(&c, &roi, &[fire], &OutcomeModel::default(), 1, 100.0, 0.0).unwrap();
        assert_eq!(r.alerts.len(), 1);
        let a = &r.alerts[0];
        // the first pass images the centre before the fire starts; next pass at 11.75
        let v = c.ground_speed_km_min();
        assert!(146.25 / v < 3.0);
        let wait = 11.75 - 3.0;
        let expect = wait + (roi.length_km - fire.y_km) / v + 146.25 / v;
        // capture happens wait + distance-from-leading-edge / v after the start
        assert!(close(a.capture_time_min, 11.75 + 146.25 / v));
        assert!(close(a.response_time_min.unwrap(), expect));
        assert!(close(
            a.downlink_time_min - a.capture_time_min,
            (roi.length_km - fire.y_km) / v
        ));
        assert!(r.log.iter().any(|e| matches!(
            e,
            PassEvent::Detection {
                pass: 1,
                frame: 4,
                fire_id: 0,
                ..
            }
        )));
    }

    #[test]
    fn no_fires_no_alerts() {
        let r = simulate_pass(
            &ConstellationConfig::default(),
            &RegionOfInterest::new(50.0, 325.0),
            &[],
            &OutcomeModel::default(),
            9,
            1000.0,
            0.0,
        )
        .unwrap();
        assert!(r.alerts.is_empty());
        assert_eq!(r.passes, 86);
        assert_eq!(r.frames, 860);
    }

    #[test]
    fn fire_outside_roi_is_rejected() {
        let f = FireEvent {
            x_km: 5.0,
            y_km: 400.0,
            start_time_min: 0.0,
            observable: true,
        };
        let err = simulate_pass(
            &ConstellationConfig::default(),
            &RegionOfInterest::new(50.0, 325.0),
            &[f],
            &OutcomeModel::default(),
            0,
            100.0,
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::FireOutsideRoi { id: 0, .. }));
    }

    #[test]
    fn fire_outside_swath_is_uncovered() {
        let roi = RegionOfInterest::new(50.0, 325.0);
        let f = FireEvent {
            x_km: 1.0,
            y_km: 10.0,
            start_time_min: 0.0,
            observable: true,
        };
        let r = simulate_pass(
            &ConstellationConfig::default(),
            &roi,
            &[f],
            &OutcomeModel::default(),
            0,
            100.0,
            0.0,
        )
        .unwrap();
        assert!(r.alerts.is_empty());
        assert_eq!(r.uncovered_fires, vec![0]);
        assert!(close(r.uncovered_roi_fraction, 1.0 - 19.6 / 50.0));
    }

    #[test]
    fn fp_count_matches_replay_oracle() {
        let c = ConstellationConfig::default();
        let roi = RegionOfInterest::new(19.6, 325.0);
        let model = OutcomeModel {
            fp_probability_per_frame: 0.07,
            ..OutcomeModel::default()
        };
        let r = simulate_pass(&c, &roi, &[], &model, 42, 2000.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let oracle = (0..r.frames).filter(|_| rand::Rng::gen::<f64>(&mut rng) < 0.07).count();
        assert_eq!(r.alerts.len(), oracle);
        assert!(oracle > 0);
    }

    #[test]
    fn deterministic_log_and_ordering() {
        let s = Scenario {
            schema_version: 1,
            constellation: ConstellationConfig::default(),
            roi: RegionOfInterest::new(19.6, 325.0),
            fires: (0..20)
                .map(|i| FireEvent {
                    x_km: 9.8,
                    y_km: i as f64 * 16.0,
                    start_time_min: i as f64 * 7.0,
                    observable: i % 5 != 0,
                })
                .collect(),
            outcome: OutcomeModel {
                detection_probability: 0.6,
                fp_probability_per_frame: 0.01,
                processing_latency_min: 2.0,
            },
            seed: 7,
            duration_min: 600.0,
            first_pass_min: 0.0,
            altitude_km: Some(450.0),
        };
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a.log_jsonl(), b.log_jsonl());
        for w in a.alerts.windows(2) {
            if w[0].pass == w[1].pass {
                assert!(w[0].downlink_time_min <= w[1].downlink_time_min);
            }
        }
        for al in &a.alerts {
            assert!(al.capture_time_min <= al.downlink_time_min);
            if let Some(id) = al.fire_id {
                assert!(s.fires[id].start_time_min <= al.capture_time_min);
            }
        }
        let sum = a.summary(s.fires.len());
        assert_eq!(sum.detected, 16);
        assert!(sum.to_csv().starts_with("schema_version,"));
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Scenario>(&json).unwrap(), s);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(percentile(&v, 50.0), Some(5.0));
        assert_eq!(percentile(&v, 90.0), Some(9.0));
        assert_eq!(percentile(&v, 95.0), Some(10.0));
        assert_eq!(percentile(&[], 50.0), None);
    }

    proptest! {
        #[test]
        fn revisit_halves_when_sats_double(n in 1u32..1000, period in 1.0f64..10_000.0) {
            let c = ConstellationConfig { n_sats: n, orbit_period_min: period, ..ConstellationConfig::default() };
            let d = ConstellationConfig { n_sats: 2 * n, ..c };
            prop_assert_eq!(revisit_time(&d).unwrap() * 2.0, revisit_time(&c).unwrap());
        }
    }
}
