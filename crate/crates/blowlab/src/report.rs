//! `report.json`, `scaling.csv` and `scaling.svg`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use blowlab_core::critcurve::LifespanLaw;
use blowlab_core::harness::{BoundednessCheck, FitModel, MonotonicityCheck, ScalingFit, SweepTable};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "scaling.csv";
pub const SVG_FILE: &str = "scaling.svg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub monotone: MonotonicityCheck,
    /// Subcritical sweeps only.
    pub bounded: Option<BoundednessCheck>,
}

impl Invariants {
    pub fn of(table: &SweepTable) -> Self {
        let bounded = blowlab_core::harness::check_boundedness(table).ok();
        Self { monotone: blowlab_core::harness::check_monotone(table), bounded }
    }

    pub fn pass(&self) -> bool {
        self.monotone.pass && self.bounded.as_ref().map_or(true, |b| b.pass)
    }
}

/// One named audit result, serialized as-is into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedAudit {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSection {
    pub present: bool,
    pub items: Vec<NamedAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub engine: String,
    pub regime: String,
    pub upsilon: f64,
    pub predicted: Option<LifespanLaw>,
    pub predicted_formula: Option<String>,
    pub fit: Option<ScalingFit>,
    pub fit_error: Option<String>,
    pub invariants: Invariants,
    pub audits: AuditSection,
    pub pass: bool,
}

pub fn build_report(table: &SweepTable, fit: Result<&ScalingFit, String>, invariants: Invariants, audits: Vec<NamedAudit>) -> Report {
    let law = blowlab_core::critcurve::predicted_lifespan_exponent(&table.regime, table.n, table.p, table.q).ok();
    let audits = AuditSection { present: !audits.is_empty(), items: audits };
    let pass = invariants.pass() && audits.items.iter().all(|a| a.pass);
    let (fit, fit_error) = match fit {
        Ok(f) => (Some(f.clone()), None),
        Err(e) => (None, Some(e)),
    };
    Report {
        n: table.n,
        p: table.p,
        q: table.q,
        engine: table.engine.clone(),
        regime: table.regime.tag.as_str().to_string(),
        upsilon: table.regime.upsilon,
        predicted: law,
        predicted_formula: law.map(|l| l.formula()),
        fit,
        fit_error,
        invariants,
        audits,
        pass,
    }
}

pub fn scaling_csv(table: &SweepTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eps", "t", "ln_t", "ln_t_lo", "ln_t_hi", "censored", "unconverged"])?;
    for p in &table.points {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            p.eps.to_string(),
            opt(p.t()),
            opt(p.ln_t),
            p.ln_bracket.0.to_string(),
            p.ln_bracket.1.to_string(),
            p.censored.to_string(),
            p.unconverged.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    (lo - pad, hi + pad)
}

/// Abscissa of a sweep point: `ln ε` for power laws, `ε^k` for exp-power laws.
fn abscissa(model: FitModel, k: f64, eps: f64) -> f64 {
    match model {
        FitModel::PowerLaw => eps.ln(),
        FitModel::ExpPower => eps.powf(k),
    }
}

/// Scatter of `ln T` against the fit abscissa. Uncensored points are filled,
/// censored ones open at their lower bound. With a fit, draws one line of
/// class `fit` and one of class `predicted`: the predicted power law passes
/// through the centroid of the fitted points, the exp-power prediction (whose
/// constant is unknown) through the first and last fitted points.
pub fn scaling_svg(table: &SweepTable, fit: Option<&ScalingFit>) -> String {
    let law = blowlab_core::critcurve::predicted_lifespan_exponent(&table.regime, table.n, table.p, table.q).ok();
    let (model, k) = match (fit, law) {
        (Some(f), _) => (f.model, f.abscissa_exponent),
        (None, Some(LifespanLaw::ExpPower { rate_exponent })) => (FitModel::ExpPower, rate_exponent),
        _ => (FitModel::PowerLaw, 0.0),
    };
    let pts: Vec<(f64, f64, bool)> = table
        .points
        .iter()
        .map(|p| (abscissa(model, k, p.eps), p.ln_t.unwrap_or(p.ln_bracket.0), p.censored))
        .filter(|(x, y, _)| x.is_finite() && y.is_finite())
        .collect();
    let fr = {
        let (x0, x1) = span(pts.iter().map(|p| p.0));
        let (y0, y1) = span(pts.iter().map(|p| p.1));
        Frame { x0, x1, y0, y1 }
    };
    let xlabel = match model {
        FitModel::PowerLaw => "ln eps".to_string(),
        FitModel::ExpPower => format!("eps^({k})"),
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect class="background" x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M {PAD} {PAD} L {PAD} {b} L {r} {b}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 16.0);
    let _ = writeln!(s, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">ln T</text>"#, H / 2.0, H / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle">n={} p={} q={} ({}, {})</text>"#,
        W / 2.0,
        table.n,
        table.p,
        table.q,
        table.regime.tag.as_str(),
        table.engine
    );
    if let Some(f) = fit {
        let line = |class: &str, colour: &str, a: (f64, f64), b: (f64, f64), s: &mut String| {
            let _ = writeln!(
                s,
                r#"<line class="{class}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{colour}" stroke-width="1.5"/>"#,
                fr.px(a.0),
                fr.py(a.1),
                fr.px(b.0),
                fr.py(b.1)
            );
        };
        let (xa, xb) = (
            f.x.iter().cloned().fold(f64::INFINITY, f64::min),
            f.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        line("fit", "steelblue", (xa, f.slope * xa + f.intercept), (xb, f.slope * xb + f.intercept), &mut s);
        let predicted = match f.predicted {
            LifespanLaw::PowerLaw { exponent } => {
                let m = f.x.len() as f64;
                let (cx, cy) = (f.x.iter().sum::<f64>() / m, f.y.iter().sum::<f64>() / m);
                ((xa, cy + exponent * (xa - cx)), (xb, cy + exponent * (xb - cx)))
            }
            LifespanLaw::ExpPower { .. } => {
                let (i, j) = (argext(&f.x, f64::lt), argext(&f.x, f64::gt));
                ((f.x[i], f.y[i]), (f.x[j], f.y[j]))
            }
        };
        line("predicted", "firebrick", predicted.0, predicted.1, &mut s);
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="steelblue">fit slope {:.4}, R2 {:.5}</text>"#, PAD + 8.0, PAD + 14.0, f.slope, f.r2);
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="firebrick">predicted {}</text>"#, PAD + 8.0, PAD + 30.0, f.predicted.formula());
    }
    for (x, y, censored) in &pts {
        let fill = if *censored { "none" } else { "black" };
        let class = if *censored { "point censored" } else { "point" };
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{:.3}" cy="{:.3}" r="4" fill="{fill}" stroke="black"/>"#,
            fr.px(*x),
            fr.py(*y)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn argext(v: &[f64], better: fn(&f64, &f64) -> bool) -> usize {
    let mut k = 0;
    for i in 1..v.len() {
        if better(&v[i], &v[k]) {
            k = i;
        }
    }
    k
}

/// Write the three report files into `dir`.
pub fn emit_report(dir: &Path, table: &SweepTable, fit: Option<&ScalingFit>, report: &Report) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    crate::io::write_json(&dir.join(REPORT_FILE), report)?;
    std::fs::write(dir.join(CSV_FILE), scaling_csv(table)?)?;
    std::fs::write(dir.join(SVG_FILE), scaling_svg(table, fit))?;
    Ok(())
}
