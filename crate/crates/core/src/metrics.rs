//! Segmentation and pass-level metrics: per-class IoU, sample FN/FP
//! classification, boundary offset, discrete detections and the rate
//! arithmetic used in integration reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::FireMask;
use crate::SCHEMA_VERSION;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("mask dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("truth mask has no fire pixels")]
    EmptyTruth,
    #[error("{0} denominator is zero")]
    ZeroDenominator(&'static str),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    Fire,
    NonFire,
}

fn same_dims(a: &FireMask, b: &FireMask) -> Result<(), MetricsError> {
    if a.dims() != b.dims() {
        return Err(MetricsError::DimensionMismatch(a.dims(), b.dims()));
    }
    Ok(())
}

/// Intersection over union of the pixels labelled `cls` in each mask.
/// Two empty class sets score 1.0.
pub fn iou(pred: &FireMask, truth: &FireMask, cls: Class) -> Result<f64, MetricsError> {
    same_dims(pred, truth)?;
    let want = cls == Class::Fire;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &t) in pred.as_slice().iter().zip(truth.as_slice()) {
        let (p, t) = (p == want, t == want);
        inter += (p && t) as usize;
        union += (p || t) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IoUScores {
    pub fire_iou: f64,
    pub nonfire_iou: f64,
    pub mean_iou: f64,
}

impl IoUScores {
    pub fn compute(pred: &FireMask, truth: &FireMask) -> Result<Self, MetricsError> {
        let fire_iou = iou(pred, truth, Class::Fire)?;
        let nonfire_iou = iou(pred, truth, Class::NonFire)?;
        Ok(IoUScores {
            fire_iou,
            nonfire_iou,
            mean_iou: (fire_iou + nonfire_iou) / 2.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// A sample is a false negative when its fire IoU is below this.
    pub fn_fire_iou: f64,
    /// A sample is a false positive when its non-fire IoU is below this.
    pub fp_nonfire_iou: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            fn_fire_iou: 0.3,
            fp_nonfire_iou: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleVerdict {
    pub tile_id: String,
    pub scores: IoUScores,
    pub is_false_negative: bool,
    pub is_false_positive: bool,
    pub boundary_offset_px: Option<f64>,
}

pub fn classify_sample(
    tile_id: &str,
    pred: &FireMask,
    truth: &FireMask,
    th: &Thresholds,
) -> Result<SampleVerdict, MetricsError> {
    let scores = IoUScores::compute(pred, truth)?;
    let boundary_offset_px = if pred.has_fire() && truth.has_fire() {
        Some(boundary_offset(pred, truth)?)
    } else {
        None
    };
    Ok(SampleVerdict {
        tile_id: tile_id.to_string(),
        scores,
        is_false_negative: scores.fire_iou < th.fn_fire_iou,
        is_false_positive: scores.nonfire_iou < th.fp_nonfire_iou,
        boundary_offset_px,
    })
}

const INF: f64 = 1e20;

/// One-dimensional squared Euclidean distance transform (lower envelope of
/// parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates from the start
                v[0] = q;
                z[0] = -INF;
                z[1] = INF;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = INF;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance from every pixel to the nearest fire pixel of `mask`.
pub fn squared_distance_to_fire(mask: &FireMask) -> Vec<f64> {
    let (w, h) = mask.dims();
    let mut grid: Vec<f64> = mask.as_slice().iter().map(|&v| if v { 0.0 } else { INF }).collect();
    let n = w.max(h);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    for c in 0..w {
        for r in 0..h {
            f[r] = grid[r * w + c];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for r in 0..h {
            grid[r * w + c] = out[r];
        }
    }
    for r in 0..h {
        f[..w].copy_from_slice(&grid[r * w..(r + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        grid[r * w..(r + 1) * w].copy_from_slice(&out[..w]);
    }
    grid
}

/// Largest Euclidean distance, in pixels, from a predicted fire pixel to the
/// nearest truth fire pixel. Zero when the prediction has no fire.
pub fn boundary_offset(pred: &FireMask, truth: &FireMask) -> Result<f64, MetricsError> {
    same_dims(pred, truth)?;
    if !truth.has_fire() {
        return Err(MetricsError::EmptyTruth);
    }
    let dt = squared_distance_to_fire(truth);
    let w = truth.width();
    let worst = pred.fire_pixels().map(|(r, c)| dt[r * w + c]).fold(0.0, f64::max);
    Ok(worst.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    /// Member pixels as `(row, col)`, row-major order.
    pub pixels: Vec<(usize, usize)>,
    /// Mean `(row, col)` of the member pixels.
    pub centroid: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detections {
    pub count: usize,
    pub components: Vec<Component>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// 8-connected components of fire pixels, ordered by their first pixel in
/// row-major order.
pub fn discrete_detections(mask: &FireMask) -> Detections {
    let (w, h) = mask.dims();
    let mut parent: Vec<usize> = (0..w * h).collect();
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            let i = r * w + c;
            // already-visited neighbours: W, NW, N, NE
            if c > 0 && mask.get(r, c - 1) {
                union(&mut parent, i, i - 1);
            }
            if r > 0 {
                if c > 0 && mask.get(r - 1, c - 1) {
                    union(&mut parent, i, i - w - 1);
                }
                if mask.get(r - 1, c) {
                    union(&mut parent, i, i - w);
                }
                if c + 1 < w && mask.get(r - 1, c + 1) {
                    union(&mut parent, i, i - w + 1);
                }
            }
        }
    }
    let mut slot = std::collections::HashMap::new();
    let mut components: Vec<Vec<(usize, usize)>> = Vec::new();
    for (r, c) in mask.fire_pixels() {
        let root = find(&mut parent, r * w + c);
        let k = *slot.entry(root).or_insert_with(|| {
            components.push(Vec::new());
            components.len() - 1
        });
        components[k].push((r, c));
    }
    let components: Vec<Component> = components
        .into_iter()
        .map(|pixels| {
            let n = pixels.len() as f64;
            let (sr, sc) = pixels
                .iter()
                .fold((0.0, 0.0), |(a, b), &(r, c)| (a + r as f64, b + c as f64));
            Component {
                centroid: (sr / n, sc / n),
                pixels,
            }
        })
        .collect();
    Detections {
        count: components.len(),
        components,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PassCounts {
    pub discrete_detections: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

/// Which denominators the pass percentages use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RateConvention {
    /// fn = FN / D, fp = FP / (D + FP).
    #[default]
    MissesPerDetection,
    /// fn = FN / (D + FN), fp = FP / D.
    MissesPerFire,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassRates {
    pub fn_pct: f64,
    pub fp_pct: f64,
}

impl PassRates {
    /// Percentages rounded for display.
    pub fn rounded(&self) -> (f64, f64) {
        (round_half_up(self.fn_pct, 2), round_half_up(self.fp_pct, 2))
    }
}

fn pct(num: u64, den: u64, what: &'static str) -> Result<f64, MetricsError> {
    if num == 0 {
        return Ok(0.0);
    }
    if den == 0 {
        return Err(MetricsError::ZeroDenominator(what));
    }
    Ok(100.0 * num as f64 / den as f64)
}

pub fn pass_rates(c: &PassCounts, conv: RateConvention) -> Result<PassRates, MetricsError> {
    let d = c.discrete_detections;
    let (fn_den, fp_den) = match conv {
        RateConvention::MissesPerDetection => (d, d + c.false_positives),
        RateConvention::MissesPerFire => (d + c.false_negatives, d),
    };
    Ok(PassRates {
        fn_pct: pct(c.false_negatives, fn_den, "false-negative rate")?,
        fp_pct: pct(c.false_positives, fp_den, "false-positive rate")?,
    })
}

/// Rounds a non-negative value to `decimals` places, ties away from zero.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = x * scale;
    // guard against representation error just below a tie
    let nudged = scaled + scaled.abs() * 1e-12;
    nudged.signum() * (nudged.abs() + 0.5).floor() / scale
}

/// Sample-level FN/FP tallies over an internal test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub samples: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub fn_pct: f64,
    pub fp_pct: f64,
    pub mean_iou: f64,
}

pub fn summarize_verdicts(verdicts: &[SampleVerdict]) -> SampleSummary {
    let n = verdicts.len();
    let fnc = verdicts.iter().filter(|v| v.is_false_negative).count();
    let fpc = verdicts.iter().filter(|v| v.is_false_positive).count();
    let share = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    SampleSummary {
        samples: n,
        false_negatives: fnc,
        false_positives: fpc,
        fn_pct: share(fnc),
        fp_pct: share(fpc),
        mean_iou: if n == 0 {
            0.0
        } else {
            verdicts.iter().map(|v| v.scores.mean_iou).sum::<f64>() / n as f64
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyFp {
    pub fp_per_frame: f64,
    pub frames_per_month: f64,
    pub expected_per_month: f64,
    pub budget_per_month: f64,
    pub compliant: bool,
}

/// Expected false alarms per month for a per-frame false-positive
/// probability. Compliance means the expectation does not exceed `budget`.
pub fn monthly_fp(fp_per_frame: f64, frames_per_month: f64, budget: f64) -> Result<MonthlyFp, MetricsError> {
    if !(0.0..=1.0).contains(&fp_per_frame) {
        return Err(MetricsError::InvalidProbability(fp_per_frame));
    }
    let expected = fp_per_frame * frames_per_month.max(0.0);
    Ok(MonthlyFp {
        fp_per_frame,
        frames_per_month,
        expected_per_month: expected,
        budget_per_month: budget,
        compliant: expected <= budget * (1.0 + 1e-12),
    })
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

/// Per-sample results table.
pub fn results_csv(verdicts: &[SampleVerdict]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "schema_version",
        "tile_id",
        "fire_iou",
        "nonfire_iou",
        "mean_iou",
        "fn",
        "fp",
        "boundary_offset_px",
    ])
    .expect("in-memory write");
    for v in verdicts {
        w.write_record([
            SCHEMA_VERSION.to_string(),
            v.tile_id.clone(),
            fmt_f(v.scores.fire_iou),
            fmt_f(v.scores.nonfire_iou),
            fmt_f(v.scores.mean_iou),
            (v.is_false_negative as u8).to_string(),
            (v.is_false_positive as u8).to_string(),
            v.boundary_offset_px.map(fmt_f).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassSummary {
    pub schema_version: u32,
    pub counts: PassCounts,
    pub convention: RateConvention,
    pub fn_pct: f64,
    pub fp_pct: f64,
    pub fn_pct_display: String,
    pub fp_pct_display: String,
}

pub fn pass_summary(counts: &PassCounts, conv: RateConvention) -> Result<PassSummary, MetricsError> {
    let r = pass_rates(counts, conv)?;
    let (a, b) = r.rounded();
    Ok(PassSummary {
        schema_version: SCHEMA_VERSION,
        counts: *counts,
        convention: conv,
        fn_pct: r.fn_pct,
        fp_pct: r.fp_pct,
        fn_pct_display: format!("{a:.2}"),
        fp_pct_display: format!("{b:.2}"),
    })
}

/// Plain-text table of pass results, one row per labelled approach.
pub fn pass_table_text(rows: &[(&str, PassCounts)], conv: RateConvention) -> Result<String, MetricsError> {
    let mut out = String::from("approach        D     FN    FP    FN%    FP%\n");
    for (name, c) in rows {
        let (a, b) = pass_rates(c, conv)?.rounded();
        let _ = writeln!(
            out,
            "{name:<12} {:>5} {:>5} {:>5} {a:>6.2} {b:>6.2}",
            c.discrete_detections, c.false_negatives, c.false_positives
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn mask_from_bits(w: usize, h: usize, bits: &[bool]) -> FireMask {
        FireMask::from_vec(w, h, bits[..w * h].to_vec()).unwrap()
    }

    fn oracle_iou(a: &FireMask, b: &FireMask, fire: bool) -> f64 {
        let set = |m: &FireMask| -> BTreeSet<usize> {
            m.as_slice()
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == fire)
                .map(|(i, _)| i)
                .collect()
        };
        let (sa, sb) = (set(a), set(b));
        let u = sa.union(&sb).count();
        if u == 0 {
            1.0
        } else {
            sa.intersection(&sb).count() as f64 / u as f64
        }
    }

    fn oracle_offset(pred: &FireMask, truth: &FireMask) -> f64 {
        let t: Vec<_> = truth.fire_pixels().collect();
        pred.fire_pixels()
            .map(|(r, c)| {
                t.iter()
                    .map(|&(tr, tc)| {
                        let (dr, dc) = (r as f64 - tr as f64, c as f64 - tc as f64);
                        (dr * dr + dc * dc).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    fn oracle_components(m: &FireMask) -> usize {
        let (w, h) = m.dims();
        let mut seen = vec![false; w * h];
        let mut count = 0;
        for start in 0..w * h {
            if !m.as_slice()[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (r, c) = ((i / w) as i64, (i % w) as i64);
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (nr, nc) = (r + dr, c + dc);
                        if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                            continue;
                        }
                        let j = nr as usize * w + nc as usize;
                        if m.as_slice()[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn iou_examples() {
        let a = FireMask::from_pixels(3, 3, &[(1, 1)]);
        assert_eq!(iou(&a, &a, Class::Fire).unwrap(), 1.0);
        assert_eq!(iou(&a, &a, Class::NonFire).unwrap(), 1.0);
        let p = FireMask::from_pixels(3, 3, &[(0, 0), (0, 1)]);
        let t = FireMask::from_pixels(3, 3, &[(0, 1), (0, 2)]);
        assert!((iou(&p, &t, Class::Fire).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let e = FireMask::empty(3, 3);
        assert_eq!(iou(&e, &e, Class::Fire).unwrap(), 1.0);
        assert!(matches!(
            iou(&e, &FireMask::empty(2, 3), Class::Fire),
            Err(MetricsError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn classification_examples() {
        let th = Thresholds::default();
        let t = FireMask::from_pixels(8, 8, &[(2, 2), (2, 3)]);
        let v = classify_sample("a", &t, &t, &th).unwrap();
        assert!(!v.is_false_negative && !v.is_false_positive);
        assert_eq!(v.boundary_offset_px, Some(0.0));
        let v = classify_sample("b", &FireMask::empty(8, 8), &t, &th).unwrap();
        assert!(v.is_false_negative);
        assert_eq!(v.boundary_offset_px, None);
        // 1 spurious pixel in a 8x8 clear tile: nonfire IoU 63/64 < 0.99, and
        // fire IoU 0/1 flags it as FN as well under the literal rule
        let v = classify_sample(
            "c",
            &FireMask::from_pixels(8, 8, &[(0, 0)]),
            &FireMask::empty(8, 8),
            &th,
        )
        .unwrap();
        assert!(v.is_false_positive && v.is_false_negative);
    }

    #[test]
    fn boundary_offset_examples() {
        let t = FireMask::from_pixels(10, 10, &[(3, 4)]);
        assert_eq!(
            boundary_offset(&FireMask::from_pixels(10, 10, &[(0, 0)]), &t).unwrap(),
            5.0
        );
        assert_eq!(boundary_offset(&t, &t).unwrap(), 0.0);
        let far = FireMask::from_pixels(20, 20, &[(3, 11)]);
        let t = FireMask::from_pixels(20, 20, &[(3, 4)]);
        assert_eq!(boundary_offset(&far, &t).unwrap(), 7.0);
        assert_eq!(
            boundary_offset(&t, &FireMask::empty(20, 20)),
            Err(MetricsError::EmptyTruth)
        );
    }

    #[test]
    fn diagonal_pixels_form_one_component() {
        assert_eq!(discrete_detections(&FireMask::empty(4, 4)).count, 0);
        let d = discrete_detections(&FireMask::from_pixels(4, 4, &[(0, 0), (1, 1)]));
        assert_eq!(d.count, 1);
        assert_eq!(d.components[0].centroid, (0.5, 0.5));
        // anti-diagonal join found through the NE neighbour
        let d = discrete_detections(&FireMask::from_pixels(4, 4, &[(0, 2), (1, 1), (2, 3)]));
        assert_eq!(d.count, 2);
    }

    #[test]
    fn pass_rates_for_three_passes() {
        let rows = [(0, 0, 0.0, 0.0), (4, 27, 0.43, 2.85), (7, 96, 0.76, 9.44)];
        for (fnc, fpc, want_fn, want_fp) in rows {
            let c = PassCounts {
                discrete_detections: 921,
                false_negatives: fnc,
                false_positives: fpc,
            };
            let (a, b) = pass_rates(&c, RateConvention::MissesPerDetection).unwrap().rounded();
            assert!((a - want_fn).abs() < 1e-9, "{fnc}: {a}");
            assert!((b - want_fp).abs() < 1e-9, "{fpc}: {b}");
        }
        let c = PassCounts {
            discrete_detections: 921,
            false_negatives: 4,
            false_positives: 27,
        };
        let (a, b) = pass_rates(&c, RateConvention::MissesPerFire).unwrap().rounded();
        assert_eq!((a, b), (0.43, 2.93));
        assert!(pass_rates(
            &PassCounts {
                discrete_detections: 0,
                false_negatives: 1,
                false_positives: 0
            },
            RateConvention::MissesPerDetection
        )
        .is_err());
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_half_up(0.125, 2), 0.13);
        assert_eq!(round_half_up(2.845, 2), 2.85);
        assert_eq!(round_half_up(0.754, 2), 0.75);
        assert_eq!(round_half_up(0.0, 2), 0.0);
    }

    #[test]
    fn internal_test_bookkeeping() {
        let th = Thresholds::default();
        let t = FireMask::from_pixels(48, 48, &[(10, 10), (10, 11)]);
        let verdicts: Vec<_> = (0..1000)
            .map(|i| {
                let pred = if i < 8 { FireMask::empty(48, 48) } else { t.clone() };
                classify_sample(&format!("s{i}"), &pred, &t, &th).unwrap()
            })
            .collect();
        let s = summarize_verdicts(&verdicts);
        assert_eq!((s.false_negatives, s.false_positives), (8, 0));
        assert_eq!(s.fn_pct, 0.8);
        assert_eq!(s.fp_pct, 0.0);
    }

    #[test]
    fn monthly_budget() {
        assert!(monthly_fp(0.0, 1e6, 52.0).unwrap().compliant);
        let at = monthly_fp(0.001, 52000.0, 52.0).unwrap();
        assert!((at.expected_per_month - 52.0).abs() < 1e-9);
        assert!(at.compliant);
        let over = monthly_fp(0.002, 52000.0, 52.0).unwrap();
        assert!((over.expected_per_month - 104.0).abs() < 1e-9);
        assert!(!over.compliant);
        assert!(monthly_fp(1.5, 1.0, 52.0).is_err());
    }

    #[test]
    fn csv_and_summary_shapes() {
        let t = FireMask::from_pixels(4, 4, &[(1, 1)]);
        let v = classify_sample("x", &t, &t, &Thresholds::default()).unwrap();
        let csv = results_csv(&[v]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("schema_version,tile_id,fire_iou,nonfire_iou,mean_iou,fn,fp,boundary_offset_px")
        );
        assert_eq!(lines.next(), Some("1,x,1.000000,1.000000,1.000000,0,0,0.000000"));
        let s = pass_summary(
            &PassCounts {
                discrete_detections: 921,
                false_negatives: 7,
                false_positives: 96,
            },
            RateConvention::MissesPerDetection,
        )
        .unwrap();
        assert_eq!((s.fn_pct_display.as_str(), s.fp_pct_display.as_str()), ("0.76", "9.44"));
    }

    proptest! {
        #[test]
        fn metrics_match_oracles(w in 1usize..=16, h in 1usize..=16,
                                 a in proptest::collection::vec(any::<bool>(), 256),
                                 b in proptest::collection::vec(any::<bool>(), 256)) {
            let (p, t) = (mask_from_bits(w, h, &a), mask_from_bits(w, h, &b));
            for (cls, fire) in [(Class::Fire, true), (Class::NonFire, false)] {
                let got = iou(&p, &t, cls).unwrap();
                prop_assert_eq!(got, oracle_iou(&p, &t, fire));
                prop_assert_eq!(got, iou(&t, &p, cls).unwrap());
                prop_assert!((0.0..=1.0).contains(&got));
            }
            if t.has_fire() {
                prop_assert_eq!(boundary_offset(&p, &t).unwrap(), oracle_offset(&p, &t));
            }
            prop_assert_eq!(discrete_detections(&p).count, oracle_components(&p));
            let total: usize = discrete_detections(&p).components.iter().map(|c| c.pixels.len()).sum();
            prop_assert_eq!(total, p.fire_count());
        }

        #[test]
        fn subset_prediction_has_zero_offset(w in 1usize..=16, h in 1usize..=16,
                                             b in proptest::collection::vec(any::<bool>(), 256),
                                             keep in proptest::collection::vec(any::<bool>(), 256)) {
            let t = mask_from_bits(w, h, &b);
            prop_assume!(t.has_fire());
            let p = FireMask::from_fn(w, h, |r, c| t.get(r, c) && keep[r * w + c]);
            prop_assert_eq!(boundary_offset(&p, &t).unwrap(), 0.0);
        }
    }
}
