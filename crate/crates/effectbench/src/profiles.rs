//! Performance ratios and cumulative performance-profile curves.
//!
//! For each simulation, every model's error is divided by the best error in
//! that simulation. A model's profile curve p(a) is the fraction of
//! simulations where its ratio is within a factor `a` of the best model.
//! Curves are right-continuous step functions; plotting them side by side
//! shows efficiency (value at a = 1) and robustness (how fast the curve
//! reaches 1) at once, without letting a handful of hard simulations
//! dominate the comparison.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ErrorMatrix;

/// Sentinel ratio for models that did not achieve the best-possible error in
/// a simulation whose best error is exactly zero. Treated as r = infinity:
/// such entries are never counted by any profile curve.
pub const FAILED: f64 = f64::INFINITY;

/// Per-simulation performance ratios, same shape and ordering as the source
/// `ErrorMatrix`. Finite entries are >= 1; failures are [`FAILED`].
#[derive(Debug, Clone, PartialEq)]
pub struct RatioMatrix {
    models: Vec<String>,
    sims: Vec<u64>,
    values: Vec<Vec<f64>>,
}

impl RatioMatrix {
    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn sims(&self) -> &[u64] {
        &self.sims
    }

    pub fn n_sims(&self) -> usize {
        self.sims.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, sim: usize, model: usize) -> f64 {
        self.values[sim][model]
    }

    pub fn model_index(&self, model: &str) -> Result<usize> {
        self.models
            .iter()
            .position(|m| m == model)
            .ok_or_else(|| Error::UnknownModel(model.to_string()))
    }
}

/// Compute performance ratios r = error / row minimum.
///
/// Rows whose minimum is zero keep "best" semantics without dividing by
/// zero: models that also achieved zero get ratio 1, the rest are marked
/// [`FAILED`]. Errors are used exactly as given; no epsilon smoothing.
pub fn performance_ratios(errors: &ErrorMatrix) -> RatioMatrix {
    let values = errors
        .rows()
        .iter()
        .map(|row| {
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            row.iter()
                .map(|&a| {
                    if min > 0.0 {
                        a / min
                    } else if a == 0.0 {
                        1.0
                    } else {
                        FAILED
                    }
                })
                .collect()
        })
        .collect();
    RatioMatrix {
        models: errors.models().to_vec(),
        sims: errors.sims().to_vec(),
        values,
    }
}

/// One model's cumulative performance profile: a right-continuous step
/// function given by its breakpoints `(ratio, fraction)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub model: String,
    /// Distinct finite ratios of this model, sorted ascending, with the
    /// cumulative fraction of simulations at or below each.
    pub breakpoints: Vec<(f64, f64)>,
    /// Denominator used for fractions (total simulations, including failed).
    pub n_sims: usize,
}

impl ProfileCurve {
    /// Validate the step-function invariants.
    pub fn new(model: impl Into<String>, breakpoints: Vec<(f64, f64)>, n_sims: usize) -> Result<Self> {
        if n_sims == 0 {
            return Err(Error::Validation("profile curve needs n_sims >= 1".into()));
        }
        let mut prev_a = 1.0;
        let mut prev_p = 0.0;
        for &(a, p) in &breakpoints {
            if a < prev_a {
                return Err(Error::Validation(format!(
                    "breakpoint ratio {a} below {prev_a}; ratios must be >= 1 and sorted"
                )));
            }
            if !(0.0..=1.0).contains(&p) || p < prev_p {
                return Err(Error::Validation(format!(
                    "breakpoint fraction {p} must be non-decreasing within [0, 1]"
                )));
            }
            prev_a = a;
            prev_p = p;
        }
        Ok(Self {
            model: model.into(),
            breakpoints,
            n_sims,
        })
    }
}

/// Build the profile curve for one model of a ratio matrix.
///
/// Breakpoints are exactly the distinct finite ratios of that model;
/// [`FAILED`] entries are never counted, so a model with failures never
/// reaches fraction 1.
pub fn profile_curve(ratios: &RatioMatrix, model: &str) -> Result<ProfileCurve> {
    let col = ratios.model_index(model)?;
    let mut finite: Vec<f64> = ratios
        .rows()
        .iter()
        .map(|row| row[col])
        .filter(|r| r.is_finite())
        .collect();
    finite.sort_by(|a, b| a.partial_cmp(b).expect("ratios are never NaN"));

    let n = ratios.n_sims();
    let mut breakpoints = Vec::new();
    let mut count = 0usize;
    let mut i = 0;
    while i < finite.len() {
        let a = finite[i];
        let mut j = i;
        while j < finite.len() && finite[j] == a {
            j += 1;
        }
        count += j - i;
        breakpoints.push((a, count as f64 / n as f64));
        i = j;
    }
    Ok(ProfileCurve {
        model: model.to_string(),
        breakpoints,
        n_sims: n,
    })
}

/// Evaluate a profile curve at `a >= 1` (right-continuous step evaluation).
pub fn profile_value(curve: &ProfileCurve, a: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(Error::Domain(format!(
            "profile curves are defined for a >= 1, got {a}"
        )));
    }
    let mut value = 0.0;
    for &(ratio, fraction) in &curve.breakpoints {
        if ratio <= a {
            value = fraction;
        } else {
            break;
        }
    }
    Ok(value)
}

/// Horizontal axis scaling for exported profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log10,
}

impl Scale {
    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log10 => "log10",
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Scale::Linear),
            "log10" => Ok(Scale::Log10),
            other => Err(Error::Validation(format!(
                "unknown scale `{other}` (expected `linear` or `log10`)"
            ))),
        }
    }
}

/// Write curves as a step-point CSV and a standalone SVG plot.
///
/// The CSV lists one row per breakpoint (`model,ratio[,log10_ratio],fraction`)
/// so the curves can be reconstructed exactly. The SVG draws the true step
/// functions from the breakpoints without resampling.
pub fn export_profiles(
    curves: &[ProfileCurve],
    scale: Scale,
    title: &str,
    csv_path: &Path,
    svg_path: &Path,
) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::Validation("no profile curves to export".into()));
    }
    let n = curves[0].n_sims;
    if let Some(c) = curves.iter().find(|c| c.n_sims != n) {
        return Err(Error::Validation(format!(
            "curve `{}` has n_sims = {} but `{}` has {}",
            c.model, c.n_sims, curves[0].model, n
        )));
    }

    let mut writer = csv::Writer::from_path(csv_path)?;
    match scale {
        Scale::Linear => writer.write_record(["model", "ratio", "fraction"])?,
        Scale::Log10 => writer.write_record(["model", "ratio", "log10_ratio", "fraction"])?,
    }
    for curve in curves {
        for &(ratio, fraction) in &curve.breakpoints {
            match scale {
                Scale::Linear => writer.write_record([
                    curve.model.clone(),
                    ratio.to_string(),
                    fraction.to_string(),
                ])?,
                Scale::Log10 => writer.write_record([
                    curve.model.clone(),
                    ratio.to_string(),
                    ratio.log10().to_string(),
                    fraction.to_string(),
                ])?,
            }
        }
    }
    writer.flush()?;

    std::fs::write(svg_path, render_svg(curves, scale, title))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

const PALETTE: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22",
];

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 630.0;
const TOP: f64 = 45.0;
const BOTTOM: f64 = 440.0;

/// Render the curves as a static SVG 1.1 document.
pub fn render_svg(curves: &[ProfileCurve], scale: Scale, title: &str) -> String {
    let max_ratio = curves
        .iter()
        .flat_map(|c| c.breakpoints.iter().map(|&(a, _)| a))
        .fold(1.0, f64::max);
    // Default x-range is [1, max finite ratio]; widen degenerate ranges.
    let max_ratio = if max_ratio > 1.0 { max_ratio } else { 10.0 };
    let (u_min, u_max) = match scale {
        Scale::Linear => (1.0, max_ratio),
        Scale::Log10 => (0.0, max_ratio.log10()),
    };
    let u = |a: f64| match scale {
        Scale::Linear => a,
        Scale::Log10 => a.log10(),
    };
    let x = |a: f64| LEFT + (u(a) - u_min) / (u_max - u_min) * (RIGHT - LEFT);
    let y = |p: f64| BOTTOM - p * (BOTTOM - TOP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        escape_xml(title)
    ));

    // Gridlines and ticks.
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let xv = LEFT + frac * (RIGHT - LEFT);
        let uv = u_min + frac * (u_max - u_min);
        svg.push_str(&format!(
            "<line x1=\"{xv:.2}\" y1=\"{TOP}\" x2=\"{xv:.2}\" y2=\"{BOTTOM}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{xv:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{:.2}</text>\n",
            BOTTOM + 18.0,
            uv
        ));
        let pv = frac;
        let yv = y(pv);
        svg.push_str(&format!(
            "<line x1=\"{LEFT}\" y1=\"{yv:.2}\" x2=\"{RIGHT}\" y2=\"{yv:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{pv:.1}</text>\n",
            LEFT - 8.0,
            yv + 4.0
        ));
    }

    // Axis labels.
    let x_label = match scale {
        Scale::Linear => "performance ratio",
        Scale::Log10 => "log10(performance ratio)",
    };
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>\n",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 42.0
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">fraction of simulations</text>\n",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    ));

    // Plot frame.
    svg.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
        RIGHT - LEFT,
        BOTTOM - TOP
    ));

    // Step curves, drawn exactly from breakpoints.
    for (idx, curve) in curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = vec![(x(1.0), y(0.0))];
        let mut prev_p = 0.0;
        for &(a, p) in &curve.breakpoints {
            points.push((x(a), y(prev_p)));
            points.push((x(a), y(p)));
            prev_p = p;
        }
        points.push((RIGHT, y(prev_p)));
        let attr: Vec<String> = points
            .iter()
            .map(|(px, py)| format!("{px:.2},{py:.2}"))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            attr.join(" ")
        ));

        // Legend.
        let ly = TOP + 10.0 + idx as f64 * 22.0;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            RIGHT + 16.0,
            RIGHT + 44.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            RIGHT + 50.0,
            ly + 4.0,
            escape_xml(&curve.model)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Metric;
    use proptest::prelude::*;

    fn matrix(rows: Vec<Vec<f64>>) -> ErrorMatrix {
        let k = rows[0].len();
        let models = (0..k).map(|i| format!("m{i}")).collect();
        let sims = (0..rows.len() as u64).collect();
        ErrorMatrix::new(Metric::AteAbs, models, sims, rows).unwrap()
    }

    #[test]
    fn ratios_divide_by_row_minimum() {
        let r = performance_ratios(&matrix(vec![vec![2.0, 4.0, 8.0]]));
        assert_eq!(r.rows()[0], vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn all_tied_row_is_all_ones() {
        let r = performance_ratios(&matrix(vec![vec![5.0, 5.0, 5.0]]));
        assert_eq!(r.rows()[0], vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_minimum_marks_positive_entries_failed() {
        let r = performance_ratios(&matrix(vec![vec![0.0, 3.0]]));
        assert_eq!(r.value(0, 0), 1.0);
        assert_eq!(r.value(0, 1), FAILED);
    }

    #[test]
    fn every_row_has_a_unit_entry() {
        let r = performance_ratios(&matrix(vec![
            vec![0.5, 0.25, 1.0],
            vec![0.0, 0.0, 2.0],
            vec![3.0, 3.0, 3.0],
        ]));
        for row in r.rows() {
            assert!(row.iter().any(|&v| v == 1.0));
            assert!(row.iter().all(|&v| v >= 1.0));
        }
    }

    #[test]
    fn curve_counts_cumulatively() {
        let r = performance_ratios(&matrix(vec![vec![1.0, 2.0], vec![2.0, 1.0]]));
        let c = profile_curve(&r, "m0").unwrap();
        assert_eq!(c.breakpoints, vec![(1.0, 0.5), (2.0, 1.0)]);
        assert_eq!(c.n_sims, 2);
    }

    #[test]
    fn dominant_model_has_single_breakpoint() {
        let r = performance_ratios(&matrix(vec![vec![1.0, 2.0], vec![3.0, 4.0]]));
        let c = profile_curve(&r, "m0").unwrap();
        assert_eq!(c.breakpoints, vec![(1.0, 1.0)]);
    }

    #[test]
    fn all_failed_column_gives_empty_curve() {
        let r = performance_ratios(&matrix(vec![vec![0.0, 3.0], vec![0.0, 5.0]]));
        let c = profile_curve(&r, "m1").unwrap();
        assert!(c.breakpoints.is_empty());
        assert_eq!(profile_value(&c, 1.0).unwrap(), 0.0);
        assert_eq!(profile_value(&c, 1e6).unwrap(), 0.0);
    }

    #[test]
    fn unknown_model_is_lookup_error() {
        let r = performance_ratios(&matrix(vec![vec![1.0, 2.0]]));
        assert!(matches!(
            profile_curve(&r, "nope"),
            Err(Error::UnknownModel(_))
        ));
    }

    #[test]
    fn step_evaluation_is_right_continuous() {
        let c = ProfileCurve::new("m", vec![(1.0, 0.5), (2.0, 1.0)], 2).unwrap();
        assert_eq!(profile_value(&c, 1.5).unwrap(), 0.5);
        assert_eq!(profile_value(&c, 1.0).unwrap(), 0.5);
        assert_eq!(profile_value(&c, 2.0).unwrap(), 1.0);
        assert_eq!(profile_value(&c, 1e6).unwrap(), 1.0);
        let first = ProfileCurve::new("m", vec![(1.0, 0.23), (3.0, 1.0)], 100).unwrap();
        assert_eq!(profile_value(&first, 1.0).unwrap(), 0.23);
        assert!(matches!(
            profile_value(&c, 0.999),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn export_writes_step_points_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("profiles.csv");
        let svg_path = dir.path().join("profiles.svg");
        let e = matrix(vec![vec![1.0, 2.0], vec![4.0, 2.0]]);
        let r = performance_ratios(&e);
        let curves: Vec<ProfileCurve> = e
            .models()
            .iter()
            .map(|m| profile_curve(&r, m).unwrap())
            .collect();
        export_profiles(&curves, Scale::Log10, "profiles", &csv_path, &svg_path).unwrap();

        let text = std::fs::read_to_string(&csv_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "model,ratio,log10_ratio,fraction");
        // m0 ratios: [1, 2]; m1 ratios: [2, 1].
        assert_eq!(lines.next().unwrap(), "m0,1,0,0.5");
        assert_eq!(
            lines.next().unwrap(),
            format!("m0,2,{},1", 2f64.log10())
        );
        assert_eq!(lines.next().unwrap(), "m1,1,0,0.5");
        assert_eq!(
            lines.next().unwrap(),
            format!("m1,2,{},1", 2f64.log10())
        );

        let svg = std::fs::read_to_string(&svg_path).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn degenerate_curve_renders_horizontal_line_at_one() {
        let c = ProfileCurve::new("only", vec![(1.0, 1.0)], 5).unwrap();
        let svg = render_svg(std::slice::from_ref(&c), Scale::Linear, "t");
        let points_attr = svg
            .split("points=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .expect("polyline present");
        let pts: Vec<(f64, f64)> = points_attr
            .split(' ')
            .map(|p| {
                let (a, b) = p.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        // Final segment is horizontal at the top of the plot (fraction 1).
        let last = pts[pts.len() - 1];
        let prev = pts[pts.len() - 2];
        assert_eq!(last.1, prev.1);
        assert!(last.0 > prev.0);
        let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert_eq!(last.1, min_y);
    }

    #[test]
    fn export_rejects_empty_and_mismatched_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("p.csv");
        let svg_path = dir.path().join("p.svg");
        assert!(export_profiles(&[], Scale::Linear, "t", &csv_path, &svg_path).is_err());
        let a = ProfileCurve::new("a", vec![(1.0, 1.0)], 5).unwrap();
        let b = ProfileCurve::new("b", vec![(1.0, 1.0)], 6).unwrap();
        assert!(export_profiles(&[a, b], Scale::Linear, "t", &csv_path, &svg_path).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = ErrorMatrix> {
        (2usize..6, 1usize..20).prop_flat_map(|(k, n)| {
            proptest::collection::vec(proptest::collection::vec(0.0f64..100.0, k), n)
                .prop_map(move |rows| matrix(rows))
        })
    }

    proptest! {
        #[test]
        fn curves_are_monotone_step_functions(m in arb_matrix()) {
            let r = performance_ratios(&m);
            for model in m.models() {
                let c = profile_curve(&r, model).unwrap();
                let mut prev_a = 1.0;
                let mut prev_p = 0.0;
                for &(a, p) in &c.breakpoints {
                    prop_assert!(a >= prev_a);
                    prop_assert!((0.0..=1.0).contains(&p));
                    prop_assert!(p >= prev_p);
                    prev_a = a;
                    prev_p = p;
                }
            }
        }

        #[test]
        fn scaling_errors_leaves_curves_unchanged(m in arb_matrix(), c_exp in -6i32..7) {
            let c = 10f64.powi(c_exp);
            let scaled = ErrorMatrix::new(
                m.metric(),
                m.models().to_vec(),
                m.sims().to_vec(),
                m.rows().iter().map(|r| r.iter().map(|v| v * c).collect()).collect(),
            ).unwrap();
            let r1 = performance_ratios(&m);
            let r2 = performance_ratios(&scaled);
            for model in m.models() {
                let c1 = profile_curve(&r1, model).unwrap();
                let c2 = profile_curve(&r2, model).unwrap();
                prop_assert_eq!(c1.breakpoints.len(), c2.breakpoints.len());
                for (&(a1, p1), &(a2, p2)) in c1.breakpoints.iter().zip(&c2.breakpoints) {
                    prop_assert!((a1 - a2).abs() <= 1e-12 * a1.max(1.0));
                    prop_assert_eq!(p1, p2);
                }
            }
        }

        #[test]
        fn permuting_models_permutes_curves(m in arb_matrix()) {
            let k = m.n_models();
            let perm: Vec<usize> = (0..k).rev().collect();
            let permuted = ErrorMatrix::new(
                m.metric(),
                perm.iter().map(|&i| m.models()[i].clone()).collect(),
                m.sims().to_vec(),
                m.rows().iter().map(|r| perm.iter().map(|&i| r[i]).collect()).collect(),
            ).unwrap();
            let r1 = performance_ratios(&m);
            let r2 = performance_ratios(&permuted);
            for model in m.models() {
                let c1 = profile_curve(&r1, model).unwrap();
                let c2 = profile_curve(&r2, model).unwrap();
                prop_assert_eq!(c1, c2);
            }
        }
    }
}
