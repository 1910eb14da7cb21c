//! Trajectory accuracy metrics (ATE, RPE), improvement percentages and
//! result tables.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::odometry::align_points_unchecked;
use crate::scalar::Real;
use crate::tum_io::{associate_streams, PoseSE3, Timestamp, Trajectory};

pub const DEFAULT_RPE_DELTA: f64 = 1.0;

/// Published per-sequence statistics, tab separated.
pub const PUBLISHED_TABLES: &str = include_str!("../data/published_tables.tsv");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricStats<T> {
    pub rmse: T,
    pub mean: T,
    /// Lower median for even counts.
    pub median: T,
    /// Population standard deviation.
    pub sd: T,
}

impl<T: Real> MetricStats<T> {
    pub fn zero() -> Self {
        Self {
            rmse: T::zero(),
            mean: T::zero(),
            median: T::zero(),
            sd: T::zero(),
        }
    }

    pub fn from_series(errors: &[T]) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::InsufficientOverlap("empty error series".into()));
        }
        let n = T::from_usize(errors.len()).unwrap();
        let mean = errors.iter().fold(T::zero(), |a, &e| a + e) / n;
        let sq = errors.iter().fold(T::zero(), |a, &e| a + e * e) / n;
        let var = errors.iter().fold(T::zero(), |a, &e| a + (e - mean) * (e - mean)) / n;
        let mut sorted = errors.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Ok(Self {
            rmse: sq.sqrt(),
            mean,
            median: sorted[(sorted.len() - 1) / 2],
            sd: var.sqrt(),
        })
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.rmse, self.mean, self.median, self.sd]
    }
}

/// Per-pose error values with the timestamp they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries<T> {
    pub timestamps: Vec<Timestamp>,
    pub values: Vec<T>,
}

impl<T: Real> ErrorSeries<T> {
    pub fn stats(&self) -> Result<MetricStats<T>> {
        MetricStats::from_series(&self.values)
    }

    /// `timestamp error` per line.
    pub fn format(&self) -> String {
        let mut out = String::new();
        for (t, v) in self.timestamps.iter().zip(&self.values) {
            let _ = writeln!(out, "{:.6} {:.9}", t.0, v.to_f64_lossy());
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.format()).map_err(|e| Error::io(path, e))
    }
}

fn associated<'a, T: Real>(
    est: &'a Trajectory<T>,
    gt: &'a Trajectory<T>,
    max_diff: f64,
) -> Vec<(Timestamp, &'a PoseSE3<T>, &'a PoseSE3<T>)> {
    associate_streams(&est.timestamps(), &gt.timestamps(), max_diff)
        .into_iter()
        .map(|(i, j)| {
            let (t, p) = &est.entries()[i];
            (*t, p, &gt.entries()[j].1)
        })
        .collect()
}

/// Translational residuals after the least-squares rigid alignment of the
/// estimated positions onto the ground truth.
pub fn ate_series<T: Real>(est: &Trajectory<T>, gt: &Trajectory<T>, max_diff: f64) -> Result<ErrorSeries<T>> {
    let pairs = associated(est, gt, max_diff);
    if pairs.len() < 3 {
        return Err(Error::InsufficientOverlap(format!(
            "{} associated poses, need at least 3",
            pairs.len()
        )));
    }
    let src: Vec<Point3<T>> = pairs.iter().map(|(_, p, _)| Point3::from(p.translation)).collect();
    let dst: Vec<Point3<T>> = pairs.iter().map(|(_, _, q)| Point3::from(q.translation)).collect();
    let s = align_points_unchecked(&src, &dst)?;
    Ok(ErrorSeries {
        timestamps: pairs.iter().map(|(t, _, _)| *t).collect(),
        values: src
            .iter()
            .zip(&dst)
            .map(|(a, b)| (b - s.transform_point(a)).norm())
            .collect(),
    })
}

pub fn absolute_trajectory_error<T: Real>(
    est: &Trajectory<T>,
    gt: &Trajectory<T>,
    max_diff: f64,
) -> Result<MetricStats<T>> {
    ate_series(est, gt, max_diff)?.stats()
}

/// Translational (m/s) and rotational (deg/s) relative errors over `delta`
/// seconds. The pose at `t + delta` is the associated pose nearest to that
/// time, accepted within `max_diff`.
pub fn rpe_series<T: Real>(
    est: &Trajectory<T>,
    gt: &Trajectory<T>,
    delta: f64,
    max_diff: f64,
) -> Result<(ErrorSeries<T>, ErrorSeries<T>)> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("RPE delta must be positive, got {delta}")));
    }
    let pairs = associated(est, gt, max_diff);
    let times: Vec<f64> = pairs.iter().map(|(t, _, _)| t.0).collect();
    let d = T::lit(delta);
    let mut trans = ErrorSeries {
        timestamps: Vec::new(),
        values: Vec::new(),
    };
    let mut rot = trans.clone();
    for (i, (t, p_i, q_i)) in pairs.iter().enumerate() {
        let target = t.0 + delta;
        let k = times.partition_point(|&x| x < target);
        let j = [k.checked_sub(1), Some(k)]
            .into_iter()
            .flatten()
            .filter(|&j| j < times.len() && j > i)
            .min_by(|&a, &b| (times[a] - target).abs().total_cmp(&(times[b] - target).abs()));
        let Some(j) = j else { continue };
        if (times[j] - target).abs() > max_diff {
            continue;
        }
        let (_, p_j, q_j) = pairs[j];
        let gt_rel = q_i.inverse().compose(q_j);
        let est_rel = p_i.inverse().compose(p_j);
        let e = gt_rel.inverse().compose(&est_rel);
        trans.timestamps.push(*t);
        trans.values.push(e.translation.norm() / d);
        rot.timestamps.push(*t);
        rot.values.push(e.rotation_angle().degrees() / d);
    }
    if trans.values.is_empty() {
        return Err(Error::InsufficientOverlap(format!("no pose pairs {delta} s apart")));
    }
    Ok((trans, rot))
}

/// `(translational m/s, rotational deg/s)`.
pub fn relative_pose_error<T: Real>(
    est: &Trajectory<T>,
    gt: &Trajectory<T>,
    delta: f64,
    max_diff: f64,
) -> Result<(MetricStats<T>, MetricStats<T>)> {
    let (t, r) = rpe_series(est, gt, delta, max_diff)?;
    Ok((t.stats()?, r.stats()?))
}

/// `(o - r) / o * 100`.
pub fn improvement_percent<T: Real>(o: T, r: T) -> Result<T> {
    if !(o > T::zero()) {
        return Err(Error::Domain(format!(
            "baseline value must be positive, got {}",
            o.to_f64_lossy()
        )));
    }
    Ok((o - r) / o * T::lit(100.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementReport<T> {
    pub o: T,
    pub r: T,
    pub eta: T,
}

impl<T: Real> ImprovementReport<T> {
    pub fn new(o: T, r: T) -> Result<Self> {
        Ok(Self {
            o,
            r,
            eta: improvement_percent(o, r)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub sequence: String,
    pub baseline: MetricStats<f64>,
    pub filtered: MetricStats<f64>,
}

impl ResultsRow {
    /// Improvement per statistic; `None` where the baseline is not positive.
    pub fn improvements(&self) -> [Option<f64>; 4] {
        let o = self.baseline.as_array();
        let r = self.filtered.as_array();
        std::array::from_fn(|i| improvement_percent(o[i], r[i]).ok())
    }
}

fn fmt_improvement(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}%"))
}

const STAT_NAMES: [&str; 4] = ["RMSE", "Mean", "Median", "S.D."];

/// Aligned text table: baseline, filtered and improvement column groups.
pub fn render_results_table(title: &str, unit: &str, rows: &[ResultsRow]) -> String {
    let mut header = vec!["Sequence".to_string()];
    for group in ["baseline", "filtered"] {
        header.extend(STAT_NAMES.iter().map(|s| format!("{group} {s}")));
    }
    header.extend(STAT_NAMES.iter().map(|s| format!("impr. {s}")));
    let mut cells: Vec<Vec<String>> = vec![header];
    for row in rows {
        let mut line = vec![row.sequence.clone()];
        line.extend(row.baseline.as_array().iter().map(|v| format!("{v:.4}")));
        line.extend(row.filtered.as_array().iter().map(|v| format!("{v:.4}")));
        line.extend(row.improvements().into_iter().map(fmt_improvement));
        cells.push(line);
    }
    let widths: Vec<usize> = (0..cells[0].len())
        .map(|c| cells.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = format!("{title} [{unit}]\n");
    for line in &cells {
        let padded: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn render_results_csv(rows: &[ResultsRow]) -> String {
    let mut out = String::from("sequence");
    for group in ["baseline", "filtered", "improvement"] {
        for s in ["rmse", "mean", "median", "sd"] {
            let _ = write!(out, ",{group}_{s}");
        }
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.sequence);
        for v in row.baseline.as_array().iter().chain(&row.filtered.as_array()) {
            let _ = write!(out, ",{v:.4}");
        }
        for v in row.improvements() {
            let _ = write!(out, ",{}", fmt_improvement(v));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PublishedMetric {
    RpeRotational,
    RpeTranslational,
    Ate,
}

impl PublishedMetric {
    pub fn key(self) -> &'static str {
        match self {
            Self::RpeRotational => "rpe_rotational",
            Self::RpeTranslational => "rpe_translational",
            Self::Ate => "ate",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Self::RpeRotational => "Table I: rotational drift (RPE)",
            Self::RpeTranslational => "Table II: translational drift (RPE)",
            Self::Ate => "Table III: absolute trajectory error (ATE)",
        }
    }

    fn from_key(s: &str) -> Option<Self> {
        [Self::RpeRotational, Self::RpeTranslational, Self::Ate]
            .into_iter()
            .find(|m| m.key() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublishedRow {
    pub metric: PublishedMetric,
    pub row: ResultsRow,
    /// Printed improvement percentages.
    pub published: [f64; 4],
}

pub fn parse_published_tables(text: &str, origin: &Path) -> Result<Vec<PublishedRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            msg,
        };
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 14 {
            return Err(err(format!("expected 14 fields, found {}", f.len())));
        }
        let metric = PublishedMetric::from_key(f[0]).ok_or_else(|| err(format!("unknown table {:?}", f[0])))?;
        let mut v = [0.0; 12];
        for (slot, s) in v.iter_mut().zip(&f[2..]) {
            *slot = s.parse().map_err(|_| err(format!("not a number: {s:?}")))?;
        }
        let stats = |o: usize| MetricStats {
            rmse: v[o],
            mean: v[o + 1],
            median: v[o + 2],
            sd: v[o + 3],
        };
        rows.push(PublishedRow {
            metric,
            row: ResultsRow {
                sequence: f[1].to_string(),
                baseline: stats(0),
                filtered: stats(4),
            },
            published: [v[8], v[9], v[10], v[11]],
        });
    }
    Ok(rows)
}

/// Allowed gap between a recomputed and a printed improvement, in
/// percentage points. Inputs are printed to 4 decimals, so small baselines
/// carry a large relative rounding error.
pub fn improvement_tolerance(o: f64) -> f64 {
    if o >= 0.1 {
        0.1
    } else {
        1.5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellCheck {
    pub metric: PublishedMetric,
    pub sequence: String,
    pub statistic: &'static str,
    pub baseline: f64,
    pub published: f64,
    pub recomputed: f64,
    pub deviation: f64,
    pub tolerance: f64,
}

impl CellCheck {
    pub fn within_tolerance(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

/// Recomputes every improvement cell of the bundled published tables.
pub fn reproduce_tables() -> Result<Vec<CellCheck>> {
    let rows = parse_published_tables(PUBLISHED_TABLES, Path::new("published_tables.tsv"))?;
    let mut out = Vec::new();
    for r in rows {
        let o = r.row.baseline.as_array();
        let f = r.row.filtered.as_array();
        for k in 0..4 {
            let recomputed = improvement_percent(o[k], f[k])?;
            out.push(CellCheck {
                metric: r.metric,
                sequence: r.row.sequence.clone(),
                statistic: STAT_NAMES[k],
                baseline: o[k],
                published: r.published[k],
                recomputed,
                deviation: (recomputed - r.published[k]).abs(),
                tolerance: improvement_tolerance(o[k]),
            });
        }
    }
    Ok(out)
}

pub fn format_cell_checks(checks: &[CellCheck]) -> String {
    let mut out = String::from("table\tsequence\tstat\tpublished\trecomputed\tdeviation_pp\ttolerance_pp\tstatus\n");
    for c in checks {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.2}%\t{:.2}%\t{:.3}\t{:.1}\t{}",
            c.metric.key(),
            c.sequence,
            c.statistic,
            c.published,
            c.recomputed,
            c.deviation,
            c.tolerance,
            if c.within_tolerance() { "ok" } else { "MISMATCH" }
        );
    }
    out
}
