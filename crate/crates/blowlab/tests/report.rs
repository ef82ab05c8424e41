use blowlab::report::{build_report, emit_report, scaling_csv, scaling_svg, Invariants, NamedAudit, CSV_FILE, REPORT_FILE, SVG_FILE};
use blowlab_core::critcurve::classify;
use blowlab_core::harness::{fit_scaling, SweepPoint, SweepTable};

/// Exact `T = ε^{-2}` for (2,2,2), with the smallest ε censored at `ln 50`.
fn table() -> SweepTable {
    let mut points: Vec<SweepPoint> = [0.5f64, 0.3, 0.2, 0.1, 0.05]
        .iter()
        .map(|&e| {
            let l = -2.0 * e.ln();
            SweepPoint { eps: e, ln_t: Some(l), ln_bracket: (l - 1e-3, l + 1e-3), censored: false, unconverged: false }
        })
        .collect();
    points.push(SweepPoint { eps: 0.01, ln_t: None, ln_bracket: (50f64.ln(), f64::INFINITY), censored: true, unconverged: false });
    SweepTable { n: 2, p: 2.0, q: 2.0, engine: "frame".into(), regime: classify(2, 2.0, 2.0).unwrap(), points }
}

#[test]
fn svg_has_one_fit_and_one_predicted_line() {
    let t = table();
    let fit = fit_scaling(&t, &t.regime).unwrap();
    let svg = scaling_svg(&t, Some(&fit));
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<line class=\"fit\"").count(), 1);
    assert_eq!(svg.matches("<line class=\"predicted\"").count(), 1);
    assert_eq!(svg.matches("class=\"point\"").count(), 5);
    let censored: Vec<&str> = svg.lines().filter(|l| l.contains("point censored")).collect();
    assert_eq!(censored.len(), 1);
    assert!(censored[0].contains("fill=\"none\""));
}

#[test]
fn censored_points_are_excluded_from_the_fit() {
    let t = table();
    let fit = fit_scaling(&t, &t.regime).unwrap();
    assert_eq!((fit.points_used, fit.censored), (5, 1));
    assert!((fit.slope + 2.0).abs() < 1e-12, "{}", fit.slope);
    // the censored ln T would pull the slope well away from -2
    assert!(fit.r2 > 1.0 - 1e-12);
}

#[test]
fn report_without_audits_marks_section_absent() {
    let t = table();
    let fit = fit_scaling(&t, &t.regime).unwrap();
    let rep = build_report(&t, Ok(&fit), Invariants::of(&t), Vec::new());
    assert!(!rep.audits.present);
    assert!(rep.pass);
    assert_eq!(rep.regime, "subcritical");
    assert!(rep.predicted_formula.is_some());

    let failing = NamedAudit { name: "eps=0.5".into(), pass: false, detail: serde_json::Value::Null };
    let rep = build_report(&t, Err("no fit".into()), Invariants::of(&t), vec![failing]);
    assert!(rep.audits.present && !rep.pass);
    assert_eq!(rep.fit_error.as_deref(), Some("no fit"));
}

#[test]
fn emitted_files_round_trip() {
    let t = table();
    let fit = fit_scaling(&t, &t.regime).unwrap();
    let rep = build_report(&t, Ok(&fit), Invariants::of(&t), Vec::new());
    let dir = tempfile::tempdir().unwrap();
    emit_report(dir.path(), &t, Some(&fit), &rep).unwrap();
    let back: blowlab::report::Report = serde_json::from_str(&std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(back, rep);
    let csv = std::fs::read_to_string(dir.path().join(CSV_FILE)).unwrap();
    assert_eq!(csv, scaling_csv(&t).unwrap());
    assert_eq!(csv.lines().count(), 1 + t.points.len());
    assert!(dir.path().join(SVG_FILE).exists());
}
