use crate::output::{fmt_f64, Artifacts};
use anyhow::Result;
use fracmon::config::{DiscriminantBlock, ExperimentConfig, ValidateBlock};
use fracmon::discriminant::{discriminant_locus, principal_part};
use fracmon::integrals::{
    oval_endpoint_separation, oval_integral, pole_cycle_sum, real_curve, residue_at_pole, theta_on, CycleChain, IntegrandForm, ThetaMode,
    YNormalization,
};
use fracmon::monodromy::{bezout_uv, monodromy_complex, monodromy_real, MonodromySettings};
use fracmon::quad::QuadOptions;
use fracmon::resonance::{require_admitted, validate_system, Chart, ResonantSystem};
use fracmon::roots::{all_roots_poly, end_permutation, min_pairwise_gap, track_roots, ParameterPath, TrackOptions};
use fracmon::spectrum::{joint_spectrum, transport_cell, Side};
use fracmon::transport::{transport_cycle, LocalBasis, TransportOptions};
use fracmon::{Complex64, Error};
use serde_json::json;

pub struct Context {
    pub config: ExperimentConfig,
    pub system: ResonantSystem,
    pub quad: QuadOptions,
    pub seed: u64,
}

impl Context {
    fn header(&self, command: &str) -> serde_json::Value {
        json!({
            "schemaVersion": fracmon::config::SCHEMA_VERSION,
            "command": command,
            "name": self.config.name,
            "seed": self.seed,
            "system": self.config.system,
        })
    }
}

fn merge(mut a: serde_json::Value, b: serde_json::Value) -> serde_json::Value {
    if let (Some(a), serde_json::Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Outcome of a command: the summary printed on stdout and whether the run
/// should exit with the validation-failure code.
pub struct Outcome {
    pub summary: serde_json::Value,
    pub validation_failed: bool,
}

fn ok(summary: serde_json::Value) -> Outcome {
    Outcome { summary, validation_failed: false }
}

pub fn validate(cx: &Context, out: &mut Artifacts) -> Result<Outcome> {
    let report = validate_system(&cx.system);
    let block = cx.config.validate.clone().unwrap_or_else(ValidateBlock::default);
    let mut samples = Vec::new();
    for &(h, j) in &block.samples {
        let v = match oval_endpoint_separation(&cx.system, h, j) {
            Ok(gap) => json!({ "h": h, "j": j, "separation": gap, "simple": gap > 1e-8 }),
            Err(e) => json!({ "h": h, "j": j, "error": e.to_string(), "simple": false }),
        };
        samples.push(v);
    }
    let all_simple = samples.iter().all(|s| s["simple"] == json!(true));
    let body = merge(
        cx.header("validate"),
        json!({
            "violations": report.violations,
            "escapeHatchUsed": report.escape_hatch_used,
            "admitted": report.admitted(),
            "degree": cx.system.degree(),
            "simpleRootSamples": samples,
        }),
    );
    out.json("validate.json", &body)?;
    Ok(Outcome { validation_failed: !report.admitted() || !all_simple, summary: body })
}

pub fn discriminant(cx: &Context, out: &mut Artifacts) -> Result<Outcome> {
    require_admitted(&cx.system)?;
    let block = cx.config.discriminant.clone().unwrap_or_else(DiscriminantBlock::default);
    let loc = discriminant_locus(&cx.system);
    let qn = principal_part(&cx.system);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &j in &block.j_values {
        for (b, h) in loc.branches(c(j)).into_iter().enumerate() {
            let roots = all_roots_poly(&qn.to_poly(h, c(j)))?;
            let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
            let gap = if scale > 0.0 { min_pairwise_gap(&roots) / scale } else { 0.0 };
            worst = worst.max(gap);
            rows.push(vec![fmt_f64(j), b.to_string(), fmt_f64(h.re), fmt_f64(h.im), fmt_f64(gap)]);
        }
    }
    out.csv("discriminant.csv", &["j", "branch", "h_re", "h_im", "relative_min_gap"], rows)?;
    out.plot("discriminant.csv", "discriminant locus of the principal part", "j", "h_re", &["branch"]);
    let terms: Vec<_> = qn.terms.iter().map(|(&(a, b, e), &v)| json!({ "x": a, "j": b, "h": e, "coeff": v })).collect();
    let body = merge(
        cx.header("discriminant"),
        json!({ "validity": loc.validity, "principalPart": terms, "worstRelativeGap": worst }),
    );
    out.json("discriminant.json", &body)?;
    Ok(ok(body))
}

fn start_chart(path: &ParameterPath) -> Chart {
    let (_, j) = path.eval(0.0);
    Chart::for_j(j.re)
}

pub fn roots_track(cx: &Context, out: &mut Artifacts) -> Result<Outcome> {
    require_admitted(&cx.system)?;
    let block = ExperimentConfig::require(&cx.config.roots_track, "rootsTrack")?;
    let chart = block.chart.unwrap_or_else(|| start_chart(&block.path));
    let traj = track_roots(&cx.system, &block.path, &TrackOptions::new(chart))?;
    let perm = end_permutation(&traj)?;
    let thin = traj.decimated(block.max_samples);
    let mut rows = Vec::new();
    for (k, t) in thin.t.iter().enumerate() {
        for (label, r) in thin.roots[k].iter().enumerate() {
            rows.push(vec![
                fmt_f64(*t),
                fmt_f64(thin.h[k].re),
                fmt_f64(thin.h[k].im),
                fmt_f64(thin.j[k].re),
                fmt_f64(thin.j[k].im),
                label.to_string(),
                fmt_f64(r.re),
                fmt_f64(r.im),
            ]);
        }
    }
    out.csv("trajectory.csv", &["t", "h_re", "h_im", "j_re", "j_im", "label", "root_re", "root_im"], rows)?;
    out.plot("trajectory.csv", "root trajectories", "root_re", "root_im", &["label"]);
    let worst = traj.diagnostics.iter().map(|d| d.max_residual).fold(0.0, f64::max);
    let body = merge(
        cx.header("roots-track"),
        json!({
            "chart": chart,
            "samples": traj.t.len(),
            "permutation": perm,
            "cycles": perm.cycles(),
            "maxResidual": worst,
        }),
    );
    out.json("permutation.json", &body)?;
    Ok(ok(body))
}

pub fn period_scan(cx: &Context, out: &mut Artifacts) -> Result<Outcome> {
    require_admitted(&cx.system)?;
    let block = ExperimentConfig::require(&cx.config.period_scan, "periodScan")?;
    let uv = bezout_uv(cx.system.m, cx.system.n, block.bezout_k)?.uv();
    let mode = if block.full_theta { ThetaMode::Full } else { ThetaMode::SingularPart };
    let points: Vec<(f64, f64)> = block.j_values.iter().flat_map(|&j| block.h_values.iter().map(move |&h| (h, j))).collect();
    let s = &cx.system;
    let q = cx.quad;
    use rayon::prelude::*;
    let values: Vec<_> = points
        .par_iter()
        .map(|&(h, j)| -> fracmon::Result<[Complex64; 3]> {
            let curve = real_curve(s, h, j)?;
            Ok([
                theta_on(&curve, mode, uv, &q)?,
                oval_integral(&curve, IntegrandForm::Tau, &q)?,
                oval_integral(&curve, IntegrandForm::ReturnTime, &q)?,
            ])
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = 0;
    for (&(h, j), v) in points.iter().zip(values) {
        let mut row = vec![fmt_f64(h), fmt_f64(j)];
        match v {
            Ok(v) => {
                for z in v {
                    row.push(fmt_f64(z.re));
                    row.push(fmt_f64(z.im));
                }
                row.push("ok".into());
            }
            Err(e) => {
                failures += 1;
                row.extend(std::iter::repeat(String::new()).take(6));
                row.push(e.kind().into());
            }
        }
        rows.push(row);
    }
    out.csv("periods.csv", &["h", "j", "theta_re", "theta_im", "tau_re", "tau_im", "T_re", "T_im", "status"], rows)?;
    for y in ["theta_re", "tau_re", "T_re"] {
        out.plot("periods.csv", "period functions", "h", y, &["j"]);
    }
    let body = merge(
        cx.header("period-scan"),
        json!({ "uv": uv, "thetaMode": mode, "points": points.len(), "failures": failures }),
    );
    out.json("period_scan.json", &body)?;
    Ok(ok(body))
}

pub fn residue(cx: &Context, out: &mut Artifacts) -> Result<Outcome> {
    require_admitted(&cx.system)?;
    let block = ExperimentConfig::require(&cx.config.residue, "residue")?;
    let mut entries = Vec::new();
    for &(h0, j0) in &block.points {
        let curve = real_curve(&cx.system, h0, j0)?;
        let raw = residue_at_pole(&curve, IntegrandForm::Holomorphic, YNormalization::Raw, 1.0)?;
        let monic = residue_at_pole(&curve, IntegrandForm::Holomorphic, YNormalization::Monic, 1.0)?;
        let sum = pole_cycle_sum(&cx.system, h0, j0)?;
        entries.push(json!({
            "h0": h0,
            "j0": j0,
            "residueRaw": raw,
            "residueMonic": monic,
            "poleCycleSum": sum,
            "deviationFromTwoPi": (sum - c(2.0 * std::f64::consts::PI)).norm(),
        }));
    }
    let body = merge(cx.header("residue"), json!({ "points": entries }));
    out.json("residue.json", &body)?;
    Ok(ok(body))
}

pub fn monodromy(cx: &Context, out: &mut Artifacts, complex: bool) -> Result<Outcome> {
    let settings = cx.config.monodromy.clone().unwrap_or_else(MonodromySettings::default);
    let report = if complex {
        monodromy_complex(&cx.system, &settings, &cx.quad)?
    } else {
        monodromy_real(&cx.system, &settings, &cx.quad)?
    };
    let command = if complex { "monodromy-complex" } else { "monodromy-real" };
    let body = merge(cx.header(command), json!({ "settings": settings, "report": report }));
    out.json("monodromy.json", &body)?;
    let mut rows = Vec::new();
    for e in &report.extrapolation {
        for &(h, y) in &e.fit.samples {
            rows.push(vec![e.name.clone(), fmt_f64(h), fmt_f64(y)]);
        }
    }
    out.csv("extrapolation.csv", &["series", "h0", "value"], rows)?;
    out.plot("extrapolation.csv", "limit sequences", "h0", "value", &["series"]);
    Ok(ok(json!({
        "schemaVersion": fracmon::config::SCHEMA_VERSION,
        "command": command,
        "matrix": report.matrix,
        "sublatticeMatrix": report.sublattice_matrix,
        "deltaThetaGamma": report.delta_theta_gamma,
        "deltaTauGamma": report.delta_tau_gamma,
    })))
}

const TRANSPORT_FORMS: [IntegrandForm; 3] = [IntegrandForm::Theta { u: 1, v: 0 }, IntegrandForm::Tau, IntegrandForm::Holomorphic];

pub fn transport(cx: &Context, out: &mut Artifacts) -> Result<Outcome> {
    require_admitted(&cx.system)?;
    let block = ExperimentConfig::require(&cx.config.transport, "transport")?;
    let chart = Chart::for_j(block.j0);
    let start = fracmon::integrals::Curve::new(&cx.system, c(block.h0), c(block.j0), chart)?;
    let chain = CycleChain::single(LocalBasis::at(&start)?.oval);
    let path = ParameterPath::semicircles(block.j0, block.h0, block.semicircles);
    let mut opts = TransportOptions::new(chart);
    opts.quad = cx.quad;
    let r = transport_cycle(&cx.system, &chain, &path, &TRANSPORT_FORMS, &opts)?;
    let body = merge(cx.header("transport"), json!({ "path": path, "result": r }));
    out.json("transport.json", &body)?;
    let mut rows = Vec::new();
    for sr in &r.continued_integrals {
        for (t, v) in sr.t.iter().zip(&sr.values) {
            rows.push(vec![format!("{:?}", sr.form), fmt_f64(*t), fmt_f64(v.re), fmt_f64(v.im)]);
        }
    }
    out.csv("continued_integrals.csv", &["form", "t", "re", "im"], rows)?;
    out.plot("continued_integrals.csv", "integrals along the path", "t", "re", &["form"]);
    Ok(ok(json!({
        "schemaVersion": fracmon::config::SCHEMA_VERSION,
        "command": "transport",
        "initial": r.initial_local,
        "final": r.final_local,
        "maxDiscrepancy": r.max_discrepancy,
    })))
}

pub fn spectrum(cx: &Context, out: &mut Artifacts) -> Result<Outcome> {
    require_admitted(&cx.system)?;
    let block = ExperimentConfig::require(&cx.config.spectrum, "spectrum")?;
    let lattice = joint_spectrum(&cx.system, &block.lattice)?;
    let k = block.cell_multiplier.unwrap_or((cx.system.m * cx.system.n) as i64);
    let rows = lattice
        .points
        .iter()
        .map(|p| {
            let side = match p.side {
                Side::Upper => "upper",
                Side::Lower => "lower",
            };
            vec![fmt_f64(p.h), fmt_f64(p.j), p.n1.to_string(), p.n2.to_string(), side.into()]
        })
        .collect();
    out.csv("lattice.csv", &["h", "j", "n1", "n2", "side"], rows)?;
    out.plot("lattice.csv", "semiclassical joint spectrum", "j", "h", &["side"]);
    let t = transport_cell(&cx.system, &lattice, &block.cell_loop, k)?;
    let body = merge(
        cx.header("spectrum"),
        json!({
            "lattice": block.lattice,
            "uv": lattice.uv,
            "points": lattice.points.len(),
            "lines": lattice.lines.len(),
            "cells": lattice.cells.len(),
            "cellTransport": t,
        }),
    );
    out.json("cell_transport.json", &body)?;
    Ok(ok(json!({
        "schemaVersion": fracmon::config::SCHEMA_VERSION,
        "command": "spectrum",
        "points": lattice.points.len(),
        "matrix": t.matrix,
        "w1Final": t.w1_final,
        "w2Final": t.w2_final,
    })))
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}
